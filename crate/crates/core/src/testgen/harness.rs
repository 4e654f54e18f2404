use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::Value as Json;

use crate::frontend::{pretty_print, Program, Type};
use crate::memmodel::leaves;

use super::{Expected, TestCase};

fn literal(v: i64) -> String {
    if v == i32::MIN as i64 {
        "(-2147483647 - 1)".into()
    } else {
        v.to_string()
    }
}

/// Assignable leaf paths of each parameter and global, keyed by input name.
fn lvalues(program: &Program, func: usize, backing: u32) -> BTreeMap<String, String> {
    let f = &program.functions[func];
    let recs = &program.records;
    let mut out = BTreeMap::new();
    let mut add = |name: &str, storage: &str, ty: &Type| {
        for l in leaves(ty, recs) {
            out.insert(format!("{name}{}", l.path), format!("{storage}{}", l.path));
        }
    };
    for p in &f.params {
        match &p.ty {
            Type::Pointer(e) if **e != Type::Void => {
                add(&p.name, &format!("{}_buf", p.name), &Type::Array(e.clone(), backing))
            }
            t => add(&p.name, &p.name, t),
        }
    }
    for &g in &f.globals_used {
        let g = &program.globals[g];
        add(&g.name, &g.name, &g.ty);
    }
    out
}

/// A dialect source file holding the program and one driver per case.
pub fn emit_harness(program: &Program, function: &str, cases: &[TestCase], backing: u32) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "/* tests for {function} */");
    out.push_str(&pretty_print(program));
    let Some(fi) = program.function_index(function) else {
        return out;
    };
    let f = &program.functions[fi];
    let recs = &program.records;
    let slots = lvalues(program, fi, backing);
    let taken = |n: &str| f.params.iter().any(|p| p.name == n) || program.globals.iter().any(|g| g.name == n);
    let mut result = String::from("r");
    while taken(&result) {
        result.push('_');
    }
    for c in cases.iter().filter(|c| c.function == function) {
        let _ = writeln!(out, "\nint test_{}(void)\n{{", c.id);
        for p in &f.params {
            match &p.ty {
                Type::Pointer(e) if **e != Type::Void => {
                    let buf = format!("{}_buf", p.name);
                    let _ = writeln!(out, "    {};", Type::Array(e.clone(), backing).render(&buf, recs));
                    let _ = writeln!(out, "    {} = {buf};", p.ty.render(&p.name, recs));
                }
                Type::Int(_) => {
                    let v = c.inputs.get(&p.name).copied().unwrap_or(0);
                    let _ = writeln!(out, "    {} = {};", p.ty.render(&p.name, recs), literal(v));
                }
                t => {
                    let _ = writeln!(out, "    {};", t.render(&p.name, recs));
                }
            }
        }
        // unread slots pinned to 0
        for (name, lv) in &slots {
            if f.params.iter().any(|p| &p.name == name && p.ty.is_integer()) {
                continue;
            }
            let v = c.inputs.get(name).copied().unwrap_or(0);
            let _ = writeln!(out, "    {lv} = {};", literal(v));
        }
        for (name, v) in c.inputs.iter().filter(|(n, _)| !slots.contains_key(*n)) {
            let _ = writeln!(out, "    /* {name} = {} */", literal(*v));
        }
        let args: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
        let call = format!("{}({})", f.name, args.join(", "));
        match &c.expected {
            Expected::Exception(e) => {
                let _ = writeln!(out, "    /* expect {} at {} */", e.category, e.site);
                let _ = writeln!(out, "    {call};");
            }
            Expected::Return(Json::Number(n)) if f.ret.is_integer() => {
                let _ = writeln!(out, "    {} = {call};", f.ret.render(&result, recs));
                let _ = writeln!(out, "    assert({result} == {});", literal(n.as_i64().unwrap_or(0)));
            }
            Expected::Return(r) => {
                let _ = writeln!(out, "    {call};");
                if !r.is_null() {
                    let _ = writeln!(out, "    /* returns {r} */");
                }
            }
        }
        if !matches!(c.expected, Expected::Exception(_)) {
            for (g, v) in &c.globals {
                match v.as_i64() {
                    Some(n) => {
                        let _ = writeln!(out, "    assert({g} == {});", literal(n));
                    }
                    None => {
                        let _ = writeln!(out, "    /* {g} == {v} */");
                    }
                }
            }
        }
        out.push_str("    return 0;\n}\n");
    }
    out
}
