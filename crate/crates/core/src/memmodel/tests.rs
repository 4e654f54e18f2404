use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::frontend::load_program;
use crate::solver::{eval_concrete, Model, SymVar};

fn mem() -> SymMemory {
    SymMemory::new(Arc::from(Vec::new()))
}

fn int() -> Type {
    Type::int()
}

fn chr() -> Type {
    Type::Int(Ty::I8)
}

fn at(id: ObjId, base: i64) -> PointerValue {
    PointerValue {
        target: PtrTarget::Object(id),
        base,
        index: None,
    }
}

fn konst(v: &Value) -> i64 {
    let t = v.as_term().unwrap();
    let bits = t.as_const().unwrap_or_else(|| panic!("not constant: {t}"));
    match t.ty() {
        Ty::U32 => bits as i64,
        _ => bits as i32 as i64,
    }
}

#[test]
fn param_reads_as_named_symbol() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Param, Fresh::Input("x".into()));
    assert_eq!(m.object(x).size, 4);
    assert_eq!(m.load(&at(x, 0), &int()).unwrap(), Value::Int(Term::var("x", Ty::I32)));
}

#[test]
fn object_sizes() {
    let p = load_program("struct S { int a; char b; }; void f(){ char buf[16]; struct S s; }").unwrap();
    let mut m = SymMemory::new(Arc::from(p.records.clone()));
    let buf = m.alloc("buf", Type::Array(Box::new(chr()), 16), Origin::Local, Fresh::Uninit);
    assert_eq!(m.object(buf).size, 16);
    let s = m.alloc("s", Type::Record(0), Origin::Param, Fresh::Input("s".into()));
    assert_eq!(m.object(s).size, 5);
    assert_eq!(m.load(&at(s, 4), &chr()).unwrap(), Value::Int(Term::var("s.b", Ty::I8)));
}

#[test]
fn bounds_on_byte_buffer() {
    let mut m = mem();
    let buf = m.alloc("buf", Type::Array(Box::new(chr()), 16), Origin::Param, Fresh::Input("buf".into()));
    assert_eq!(m.load(&at(buf, 4), &chr()).unwrap(), Value::Int(Term::var("buf[4]", Ty::I8)));
    assert!(matches!(m.load(&at(buf, 16), &chr()), Err(MemError::OutOfBounds { .. })));
    assert_eq!(m.check_bounds(&at(buf, 16), 1).unwrap(), Bounds::Always);
    assert_eq!(m.check_bounds(&at(buf, 15), 1).unwrap(), Bounds::InBounds);
    assert!(matches!(
        m.store(&at(buf, -1), &chr(), Value::Int(Term::int(0))),
        Err(MemError::OutOfBounds { .. })
    ));
}

#[test]
fn fixed_address_is_never_read() {
    let mut m = mem();
    let p = PointerValue::from_int(Term::constant(0x52, Ty::U32));
    assert_eq!(m.load(&p, &int()), Err(MemError::FixedAddressDeref("0x00000052".into())));
    assert_eq!(m.load(&PointerValue::from_int(Term::int(0)), &int()), Err(MemError::NullDeref));
}

#[test]
fn read_your_write() {
    let mut m = mem();
    let buf = m.alloc("buf", Type::Array(Box::new(int()), 4), Origin::Local, Fresh::Uninit);
    m.store(&at(buf, 0), &int(), Value::Int(Term::int(7))).unwrap();
    assert_eq!(konst(&m.load(&at(buf, 0), &int()).unwrap()), 7);
}

#[test]
fn union_bytes_are_little_endian() {
    let p = load_program("union U { int i; char c; }; void f(){ }").unwrap();
    let mut m = SymMemory::new(Arc::from(p.records.clone()));
    let u = m.alloc("u", Type::Record(0), Origin::Local, Fresh::Uninit);
    m.store(&at(u, 0), &int(), Value::Int(Term::int(0x01020304))).unwrap();
    assert_eq!(konst(&m.load(&at(u, 0), &chr()).unwrap()), 4);
    assert_eq!(konst(&m.load(&at(u, 3), &chr()).unwrap()), 1);
}

#[test]
fn partial_overwrite_keeps_other_bytes() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Local, Fresh::Uninit);
    m.store(&at(x, 0), &int(), Value::Int(Term::int(0x11223344))).unwrap();
    m.store(&at(x, 1), &chr(), Value::Int(Term::int(0x55))).unwrap();
    assert_eq!(konst(&m.load(&at(x, 0), &int()).unwrap()), 0x11225544);
}

#[test]
fn negative_char_byte_round_trip() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Local, Fresh::Uninit);
    m.store(&at(x, 0), &int(), Value::Int(Term::int(-1))).unwrap();
    assert_eq!(konst(&m.load(&at(x, 2), &chr()).unwrap()), -1);
    assert_eq!(konst(&m.load(&at(x, 0), &Type::Int(Ty::U32)).unwrap()), u32::MAX as i64);
}

#[test]
fn pointer_arithmetic() {
    let mut m = mem();
    let buf = m.alloc("buf", Type::Array(Box::new(chr()), 16), Origin::Local, Fresh::Uninit);
    let p = m.pointer_add(&at(buf, 0), &Term::int(3), 1).unwrap();
    assert_eq!(p.base, 3);
    let end = m.pointer_add(&at(buf, 0), &Term::int(16), 1).unwrap();
    assert_eq!(m.check_bounds(&end, 1).unwrap(), Bounds::Always);
    assert_eq!(
        m.pointer_add(&PointerValue::null(), &Term::int(1), 4),
        Err(MemError::NullPointerArithmetic)
    );
    assert!(m.pointer_add(&PointerValue::null(), &Term::int(0), 4).unwrap().is_null());
}

#[test]
fn symbolic_index_bounds_and_select() {
    let mut m = mem();
    let a = m.alloc("a", Type::Array(Box::new(int()), 4), Origin::Param, Fresh::Input("a".into()));
    let i = Term::var("i", Ty::I32);
    let p = m.pointer_add(&at(a, 0), &i, 4).unwrap();
    let Bounds::FaultWhen(c) = m.check_bounds(&p, 4).unwrap() else { panic!() };
    let ev = |iv: i32| {
        let mut md = Model::new();
        md.set(&SymVar::new("i", Ty::I32), iv as u32);
        eval_concrete(&c, &md).unwrap()
    };
    assert_eq!((ev(-1), ev(0), ev(3), ev(4), ev(i32::MAX)), (1, 0, 0, 1, 1));
    let v = m.load(&p, &int()).unwrap();
    let mut md = Model::new();
    md.set(&SymVar::new("i", Ty::I32), 2);
    md.set(&SymVar::new("a[2]", Ty::I32), 99);
    assert_eq!(eval_concrete(v.as_term().unwrap(), &md).unwrap(), 99);

    m.store(&p, &int(), Value::Int(Term::int(5))).unwrap();
    let q = at(a, 8);
    let after = m.load(&q, &int()).unwrap();
    assert_eq!(eval_concrete(after.as_term().unwrap(), &md).unwrap(), 5);
    md.set(&SymVar::new("i", Ty::I32), 1);
    assert_eq!(eval_concrete(after.as_term().unwrap(), &md).unwrap(), 99);
}

#[test]
fn unsigned_index_has_no_lower_bound() {
    let mut m = mem();
    let a = m.alloc("a", Type::Array(Box::new(int()), 4), Origin::Param, Fresh::Input("a".into()));
    let p = m.pointer_add(&at(a, 0), &Term::var("u", Ty::U32), 4).unwrap();
    let Bounds::FaultWhen(c) = m.check_bounds(&p, 4).unwrap() else { panic!() };
    assert_eq!(c.to_string().matches("u").count(), 1, "{c}");
}

#[test]
fn void_alias() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Local, Fresh::Uninit);
    let y = m.alloc("y", int(), Origin::Local, Fresh::Uninit);
    m.store(&at(x, 0), &int(), Value::Int(Term::int(1))).unwrap();
    m.store(&at(y, 0), &int(), Value::Int(Term::int(2))).unwrap();
    let vp = m.alloc("p", Type::VoidPtr, Origin::Local, Fresh::Uninit);
    m.store(&at(vp, 0), &Type::VoidPtr, Value::Ptr(at(x, 0))).unwrap();
    let Value::Ptr(p) = m.load(&at(vp, 0), &Type::VoidPtr).unwrap() else { panic!() };
    assert_eq!(konst(&m.load(&p, &int()).unwrap()), 1);
    m.store(&at(vp, 0), &Type::VoidPtr, Value::Ptr(at(y, 0))).unwrap();
    let Value::Ptr(p) = m.load(&at(vp, 0), &Type::VoidPtr).unwrap() else { panic!() };
    assert_eq!(konst(&m.load(&p, &int()).unwrap()), 2);
    assert_eq!(m.load(&PointerValue::unbound(), &int()), Err(MemError::UnresolvedVoidAlias));
}

#[test]
fn void_pointer_input_is_unbound() {
    let mut m = mem();
    let vp = m.alloc("p", Type::VoidPtr, Origin::Param, Fresh::Input("p".into()));
    let Value::Ptr(p) = m.load(&at(vp, 0), &Type::VoidPtr).unwrap() else { panic!() };
    assert_eq!(p.target, PtrTarget::Unbound);
}

#[test]
fn pointer_input_gets_backing() {
    let p = load_program("struct N { int v; struct N *next; }; void f(){ }").unwrap();
    let mut m = SymMemory::new(Arc::from(p.records.clone()));
    let pty = Type::Pointer(Box::new(Type::Record(0)));
    let pp = m.alloc("p", pty.clone(), Origin::Param, Fresh::Input("p".into()));
    let Value::Ptr(q) = m.load(&at(pp, 0), &pty).unwrap() else { panic!() };
    let b = match q.target {
        PtrTarget::Object(b) => b,
        _ => panic!(),
    };
    assert_eq!(m.object(b).size, 8 * DEFAULT_BACKING_LEN);
    assert_eq!(m.load(&at(b, 8), &int()).unwrap(), Value::Int(Term::var("p[1].v", Ty::I32)));
    let Value::Ptr(n) = m.load(&at(b, 4), &pty).unwrap() else { panic!() };
    let PtrTarget::Object(nb) = n.target else { panic!() };
    assert_eq!(m.load(&at(nb, 0), &int()).unwrap(), Value::Int(Term::var("p[0].next[0].v", Ty::I32)));
}

#[test]
fn uninit_reads_are_fresh_and_stable() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Local, Fresh::Uninit);
    let a = m.load(&at(x, 0), &int()).unwrap();
    let b = m.load(&at(x, 0), &int()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, Value::Int(Term::var("__uninit_0", Ty::I32)));
}

#[test]
fn havoc_names_stub_outputs() {
    let mut m = mem();
    let buf = m.alloc("errbuf", Type::Array(Box::new(chr()), 8), Origin::Local, Fresh::Uninit);
    m.store(&at(buf, 0), &chr(), Value::Int(Term::int(1))).unwrap();
    m.havoc(&at(buf, 2), "__stub_g_0_arg1").unwrap();
    assert_eq!(konst(&m.load(&at(buf, 0), &chr()).unwrap()), 1);
    assert_eq!(m.load(&at(buf, 3), &chr()).unwrap(), Value::Int(Term::var("__stub_g_0_arg1[3]", Ty::I8)));
}

#[test]
fn forked_snapshots_diverge() {
    let mut m = mem();
    let x = m.alloc("x", int(), Origin::Param, Fresh::Input("x".into()));
    m.store(&at(x, 0), &int(), Value::Int(Term::int(3))).unwrap();
    let before = m.clone();
    let mut child = m.clone();
    child.store(&at(x, 0), &int(), Value::Int(Term::int(4))).unwrap();
    assert_eq!(m, before);
    assert_eq!(m.dump(), before.dump());
    assert_ne!(child.dump(), before.dump());
}

#[test]
fn leaf_enumeration() {
    let p = load_program("struct P { int x; char t[2]; }; union U { char c; int i; }; void f(){ }").unwrap();
    let paths: Vec<String> = leaves(&Type::Array(Box::new(Type::Record(0)), 2), &p.records)
        .into_iter()
        .map(|l| l.path)
        .collect();
    assert_eq!(paths, ["[0].x", "[0].t[0]", "[0].t[1]", "[1].x", "[1].t[0]", "[1].t[1]"]);
    let u: Vec<String> = leaves(&Type::Record(1), &p.records).into_iter().map(|l| l.path).collect();
    assert_eq!(u, [".i"]);
}

#[derive(Clone, Debug)]
struct Write {
    off: u32,
    wide: bool,
    val: i32,
}

fn arb_write() -> impl Strategy<Value = Write> {
    (0u32..29, any::<bool>(), any::<i32>()).prop_map(|(off, wide, val)| Write { off, wide, val })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Concrete stores and loads agree with a little-endian byte array.
    #[test]
    fn byte_array_oracle(writes in prop::collection::vec(arb_write(), 1..12), probe in arb_write()) {
        let mut m = mem();
        let buf = m.alloc("b", Type::Array(Box::new(chr()), 32), Origin::Local, Fresh::Uninit);
        let mut oracle = [0u8; 32];
        for o in (0..32).step_by(4) {
            m.store(&at(buf, o), &int(), Value::Int(Term::int(0))).unwrap();
        }
        for w in &writes {
            let (ty, n) = if w.wide { (int(), 4) } else { (chr(), 1) };
            m.store(&at(buf, w.off as i64), &ty, Value::Int(Term::int(w.val))).unwrap();
            oracle[w.off as usize..w.off as usize + n].copy_from_slice(&w.val.to_le_bytes()[..n]);
        }
        let got = if probe.wide {
            konst(&m.load(&at(buf, probe.off as i64), &int()).unwrap())
        } else {
            konst(&m.load(&at(buf, probe.off as i64), &chr()).unwrap())
        };
        let o = probe.off as usize;
        let want = if probe.wide {
            i32::from_le_bytes(oracle[o..o + 4].try_into().unwrap()) as i64
        } else {
            oracle[o] as i8 as i64
        };
        prop_assert_eq!(got, want);
    }

    /// load(store(m, p, v), p) = v for symbolic v.
    #[test]
    fn store_load_round_trip(writes in prop::collection::vec(arb_write(), 0..8), off in 0u32..29, wide in any::<bool>()) {
        let mut m = mem();
        let buf = m.alloc("b", Type::Array(Box::new(chr()), 32), Origin::Param, Fresh::Input("b".into()));
        for w in &writes {
            let ty = if w.wide { int() } else { chr() };
            m.store(&at(buf, w.off as i64), &ty, Value::Int(Term::int(w.val))).unwrap();
        }
        let (ty, v) = if wide { (int(), Term::var("v", Ty::I32)) } else { (chr(), Term::var("v", Ty::I8)) };
        m.store(&at(buf, off as i64), &ty, Value::Int(v.clone())).unwrap();
        prop_assert_eq!(m.load(&at(buf, off as i64), &ty).unwrap(), Value::Int(v));
    }
}
