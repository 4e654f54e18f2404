//! Canonical source rendering. Re-parsing the output and printing again
//! yields the same text.

use std::fmt::Write;

use super::ast::*;
use crate::solver::{BinOp, Ty};

const INDENT: &str = "    ";

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    let recs = &p.records;
    for r in recs {
        let kw = if r.is_union { "union" } else { "struct" };
        let _ = writeln!(out, "{kw} {};", r.name);
    }
    for r in recs.iter().filter(|r| r.complete) {
        let kw = if r.is_union { "union" } else { "struct" };
        let _ = writeln!(out, "{kw} {} {{", r.name);
        for m in &r.members {
            let _ = writeln!(out, "{INDENT}{};", m.ty.render(&m.name, recs));
        }
        out.push_str("};\n");
    }
    for e in &p.enums {
        let items: Vec<String> = e.items.iter().map(|(n, v)| format!("{n} = {}", int_text(*v as u32, Ty::I32))).collect();
        match &e.name {
            Some(n) => {
                let _ = writeln!(out, "enum {n} {{ {} }};", items.join(", "));
            }
            None => {
                let _ = writeln!(out, "enum {{ {} }};", items.join(", "));
            }
        }
    }
    for x in &p.externs {
        let params: Vec<String> = x.params.iter().map(|t| t.render("", recs)).collect();
        let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
        let _ = writeln!(out, "{}({params});", x.ret.render(&x.name, recs));
    }
    for g in &p.globals {
        let _ = writeln!(out, "{};", decl_text(g, recs));
    }
    for f in &p.functions {
        out.push('\n');
        let params: Vec<String> = f.params.iter().map(|q| q.ty.render(&q.name, recs)).collect();
        let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
        let _ = writeln!(out, "{}({params})", f.ret.render(&f.name, recs));
        block(&f.body, 0, recs, &mut out);
        out.push('\n');
    }
    out
}

pub fn pretty_stmt(s: &Stmt, records: &[RecordDecl]) -> String {
    let mut out = String::new();
    stmt(s, 0, records, &mut out);
    out
}

pub fn pretty_expr(e: &Expr, records: &[RecordDecl]) -> String {
    expr(e, 0, records)
}

fn pad(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn block(body: &[Stmt], depth: usize, recs: &[RecordDecl], out: &mut String) {
    pad(depth, out);
    out.push_str("{\n");
    for s in body {
        stmt(s, depth + 1, recs, out);
    }
    pad(depth, out);
    out.push('}');
}

/// Body of a control statement: blocks stay on their own lines.
fn body(s: &Stmt, depth: usize, recs: &[RecordDecl], out: &mut String) {
    match &s.kind {
        StmtKind::Block(b) => {
            out.push('\n');
            block(b, depth, recs, out);
            out.push('\n');
        }
        _ => {
            out.push('\n');
            stmt(s, depth + 1, recs, out);
        }
    }
}

fn stmt(s: &Stmt, depth: usize, recs: &[RecordDecl], out: &mut String) {
    match &s.kind {
        StmtKind::Block(b) => {
            block(b, depth, recs, out);
            out.push('\n');
        }
        StmtKind::If { cond, then, els } => {
            pad(depth, out);
            if_chain(cond, then, els.as_deref(), depth, recs, out);
        }
        StmtKind::While { cond, body: b } => {
            pad(depth, out);
            let _ = write!(out, "while ({})", expr(cond, 0, recs));
            body(b, depth, recs, out);
        }
        StmtKind::For {
            init,
            cond,
            step,
            body: b,
        } => {
            pad(depth, out);
            let init = init.as_ref().map(|s| simple(s, recs)).unwrap_or_default();
            let cond = cond.as_ref().map(|c| expr(c, 0, recs)).unwrap_or_default();
            let step = step.as_ref().map(|s| simple(s, recs)).unwrap_or_default();
            let _ = write!(out, "for ({init}; {cond}; {step})");
            body(b, depth, recs, out);
        }
        StmtKind::Switch { scrutinee, arms } => {
            pad(depth, out);
            let _ = writeln!(out, "switch ({}) {{", expr(scrutinee, 0, recs));
            for a in arms {
                for l in &a.labels {
                    pad(depth, out);
                    match l {
                        CaseLabel::Case(v) => {
                            let _ = writeln!(out, "case {}:", int_text(*v as u32, Ty::I32));
                        }
                        CaseLabel::Default => out.push_str("default:\n"),
                    }
                }
                for s in &a.body {
                    stmt(s, depth + 1, recs, out);
                }
            }
            pad(depth, out);
            out.push_str("}\n");
        }
        _ => {
            pad(depth, out);
            out.push_str(&simple(s, recs));
            out.push_str(";\n");
        }
    }
}

fn if_chain(cond: &Expr, then: &Stmt, els: Option<&Stmt>, depth: usize, recs: &[RecordDecl], out: &mut String) {
    let _ = write!(out, "if ({})", expr(cond, 0, recs));
    match (&then.kind, els) {
        (StmtKind::Block(_), _) | (_, None) => body(then, depth, recs, out),
        // braces keep a trailing `else` bound to this `if`
        (_, Some(_)) => {
            out.push('\n');
            block(std::slice::from_ref(then), depth, recs, out);
            out.push('\n');
        }
    }
    if let Some(e) = els {
        pad(depth, out);
        out.push_str("else");
        match &e.kind {
            StmtKind::If { cond, then, els } => {
                out.push(' ');
                if_chain(cond, then, els.as_deref(), depth, recs, out);
            }
            _ => body(e, depth, recs, out),
        }
    }
}

/// Simple statement text without the trailing `;`.
fn simple(s: &Stmt, recs: &[RecordDecl]) -> String {
    match &s.kind {
        StmtKind::Decl(d) => decl_text(d, recs),
        StmtKind::Assign { lhs, op, rhs } => {
            let sym = op.map(|o| o.symbol()).unwrap_or("");
            format!("{} {sym}= {}", expr(lhs, 0, recs), expr(rhs, 0, recs))
        }
        StmtKind::Expr(e) => expr(e, 0, recs),
        StmtKind::Return(None) => "return".into(),
        StmtKind::Return(Some(e)) => format!("return {}", expr(e, 0, recs)),
        StmtKind::Break => "break".into(),
        StmtKind::Continue => "continue".into(),
        StmtKind::Empty => String::new(),
        _ => {
            let mut out = String::new();
            stmt(s, 0, recs, &mut out);
            out
        }
    }
}

fn decl_text(d: &VarDecl, recs: &[RecordDecl]) -> String {
    let mut s = d.ty.render(&d.name, recs);
    if let Some(i) = &d.init {
        s.push_str(" = ");
        s.push_str(&init_text(i, recs));
    }
    s
}

fn init_text(i: &Init, recs: &[RecordDecl]) -> String {
    match i {
        Init::Expr(e) => expr(e, 0, recs),
        Init::List(items) => {
            let parts: Vec<String> = items.iter().map(|i| init_text(i, recs)).collect();
            format!("{{ {} }}", parts.join(", "))
        }
    }
}

fn int_text(v: u32, ty: Ty) -> String {
    match ty {
        Ty::U32 if v <= i32::MAX as u32 => format!("{v}u"),
        Ty::U32 => v.to_string(),
        _ => (v as i32).to_string(),
    }
}

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::LOr => 1,
        BinOp::LAnd => 2,
        BinOp::BitOr => 3,
        BinOp::BitXor => 4,
        BinOp::BitAnd => 5,
        BinOp::Eq | BinOp::Ne => 6,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
        BinOp::Shl | BinOp::Shr => 8,
        BinOp::Add | BinOp::Sub => 9,
        _ => 10,
    }
}

const UNARY: u8 = 11;
const POSTFIX: u8 = 12;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, ..) => prec(*op),
        ExprKind::Unary(..) | ExprKind::Cast(..) | ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => UNARY,
        ExprKind::Int(v, Ty::I32) if (*v as i32) < 0 => UNARY,
        _ => POSTFIX,
    }
}

/// Renders `e`, parenthesized when its level is below `min`.
fn expr(e: &Expr, min: u8, recs: &[RecordDecl]) -> String {
    let text = match &e.kind {
        ExprKind::Int(v, t) => int_text(*v, *t),
        ExprKind::Var(n, _) => n.clone(),
        ExprKind::Unary(op, a) => {
            let inner = expr(a, UNARY, recs);
            // avoid `- -x` lexing as `--x`
            if inner.starts_with(op.symbol()) && matches!(op, UnaryOp::Neg | UnaryOp::AddrOf) {
                format!("{}({inner})", op.symbol())
            } else {
                format!("{}{inner}", op.symbol())
            }
        }
        ExprKind::Binary(op, a, b) => {
            let p = prec(*op);
            format!("{} {} {}", expr(a, p, recs), op.symbol(), expr(b, p + 1, recs))
        }
        ExprKind::Index(a, i) => format!("{}[{}]", expr(a, POSTFIX, recs), expr(i, 0, recs)),
        ExprKind::Member(a, m, arrow) => {
            format!("{}{}{m}", expr(a, POSTFIX, recs), if *arrow { "->" } else { "." })
        }
        ExprKind::Cast(t, a) => format!("({}){}", t.render("", recs), expr(a, UNARY, recs)),
        ExprKind::SizeofType(t) => format!("sizeof({})", t.render("", recs)),
        ExprKind::SizeofExpr(a) => format!("sizeof({})", expr(a, 0, recs)),
        ExprKind::Call(n, args) => {
            let args: Vec<String> = args.iter().map(|a| expr(a, 0, recs)).collect();
            format!("{n}({})", args.join(", "))
        }
    };
    if level(e) < min {
        format!("({text})")
    } else {
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_translation_unit;

    fn round(src: &str) -> String {
        pretty_print(&parse_translation_unit(src).unwrap())
    }

    #[test]
    fn printing_is_idempotent() {
        let src = r#"
            struct P { int x; char tag; struct P *next; };
            enum E { A, B = 7 };
            int ext(int, char *);
            int g[3] = {1, 2};
            int f(int a, int *p, struct P *q) {
                int i;
                unsigned u = 3000000000;
                for (i = 0; i < a; i++) { if (p[i] == -1) break; else if (q->x) continue; }
                switch (a) { case 1: case 2: a = a - (a - 1); break; default: a <<= 2; }
                if (a) if (u) return 1; else return 2;
                while (!(a && (i || *p))) a--;
                return -(-a) + (a % (i - 3)) * sizeof(struct P) + ext(a, (char *)p);
            }
        "#;
        let once = round(src);
        assert_eq!(round(&once), once);
    }

    #[test]
    fn precedence_survives() {
        let p = parse_translation_unit("int f(int a,int b,int c){ return (a+b)*c - (a-(b-c)); }").unwrap();
        let text = pretty_print(&p);
        assert!(text.contains("return (a + b) * c - (a - (b - c));"), "{text}");
        assert_eq!(parse_translation_unit(&text).unwrap().functions[0].body, p.functions[0].body);
    }
}
