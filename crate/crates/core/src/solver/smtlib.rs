//! SMT-LIB v2 (QF_BV) rendering of path conditions.

use std::fmt::Write;

use super::term::{BinOp, Node, PathCondition, Term, Ty, UnOp};

/// Renders `pc` as a self-contained QF_BV script over 32-bit bitvectors.
pub fn export_smtlib2(pc: &PathCondition) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_BV)\n");
    for v in pc.free_vars() {
        let name = quote(&v.name);
        let _ = writeln!(out, "(declare-fun {name} () (_ BitVec 32))");
        if v.ty == Ty::I8 {
            let _ = writeln!(
                out,
                "(assert (and (bvsge {name} #xffffff80) (bvsle {name} #x0000007f)))"
            );
        }
    }
    if pc.is_empty() {
        out.push_str("(assert true)\n");
    }
    for c in &pc.conjuncts {
        let _ = writeln!(out, "(assert {})", as_bool(c));
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

fn quote(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace('|', "_"))
    }
}

fn hex(bits: u32) -> String {
    format!("#x{bits:08x}")
}

/// Boolean-sorted rendering of a term used in a truth context.
fn as_bool(t: &Term) -> String {
    if let Some(node) = t.node() {
        match node {
            Node::Binary(op, a, b) if op.is_comparison() => {
                let (x, y) = (as_bv(a), as_bv(b));
                let signed = Ty::usual(a.ty(), b.ty()).is_signed();
                let f = match (op, signed) {
                    (BinOp::Eq, _) => return format!("(= {x} {y})"),
                    (BinOp::Ne, _) => return format!("(not (= {x} {y}))"),
                    (BinOp::Lt, true) => "bvslt",
                    (BinOp::Le, true) => "bvsle",
                    (BinOp::Gt, true) => "bvsgt",
                    (BinOp::Ge, true) => "bvsge",
                    (BinOp::Lt, false) => "bvult",
                    (BinOp::Le, false) => "bvule",
                    (BinOp::Gt, false) => "bvugt",
                    (BinOp::Ge, false) => "bvuge",
                    _ => unreachable!(),
                };
                return format!("({f} {x} {y})");
            }
            Node::Binary(BinOp::LAnd, a, b) => return format!("(and {} {})", as_bool(a), as_bool(b)),
            Node::Binary(BinOp::LOr, a, b) => return format!("(or {} {})", as_bool(a), as_bool(b)),
            Node::Unary(UnOp::Not, a) => return format!("(not {})", as_bool(a)),
            _ => {}
        }
    }
    if let Term::Const(b, _) = t {
        return if *b != 0 { "true".into() } else { "false".into() };
    }
    format!("(not (= {} {}))", as_bv(t), hex(0))
}

/// Bitvector-sorted rendering.
fn as_bv(t: &Term) -> String {
    match t {
        Term::Const(b, _) => hex(*b),
        Term::Var(v) => quote(&v.name),
        Term::Op(n) => match &n.node {
            Node::Binary(op, _, _) if op.is_comparison() || op.is_logical() => {
                format!("(ite {} {} {})", as_bool(t), hex(1), hex(0))
            }
            Node::Unary(UnOp::Not, _) => format!("(ite {} {} {})", as_bool(t), hex(1), hex(0)),
            Node::Unary(UnOp::Neg, a) => format!("(bvneg {})", as_bv(a)),
            Node::Unary(UnOp::BitNot, a) => format!("(bvnot {})", as_bv(a)),
            Node::Cast(Ty::I8, a) => {
                format!("((_ sign_extend 24) ((_ extract 7 0) {}))", as_bv(a))
            }
            Node::Cast(_, a) => as_bv(a),
            Node::Binary(op, a, b) => {
                let signed = n.ty.is_signed();
                let (x, y) = (as_bv(a), as_bv(b));
                let f = match op {
                    BinOp::Add => "bvadd",
                    BinOp::Sub => "bvsub",
                    BinOp::Mul => "bvmul",
                    BinOp::Div if signed => "bvsdiv",
                    BinOp::Div => "bvudiv",
                    BinOp::Rem if signed => "bvsrem",
                    BinOp::Rem => "bvurem",
                    BinOp::BitAnd => "bvand",
                    BinOp::BitOr => "bvor",
                    BinOp::BitXor => "bvxor",
                    BinOp::Shl => return format!("(bvshl {x} (bvand {y} #x0000001f))"),
                    BinOp::Shr if signed => return format!("(bvashr {x} (bvand {y} #x0000001f))"),
                    BinOp::Shr => return format!("(bvlshr {x} (bvand {y} #x0000001f))"),
                    _ => unreachable!("comparison handled above"),
                };
                format!("({f} {x} {y})")
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::mk_binary;

    #[test]
    fn signed_greater_than_maps_to_bvsgt() {
        let x = Term::var("x", Ty::I32);
        let pc = PathCondition::from_terms(vec![mk_binary(BinOp::Gt, x, Term::int(5))]);
        let s = export_smtlib2(&pc);
        assert!(s.contains("(assert (bvsgt x #x00000005))"), "{s}");
        assert!(s.contains("(check-sat)"));
    }

    #[test]
    fn empty_condition_asserts_true() {
        let s = export_smtlib2(&PathCondition::new());
        assert!(s.contains("(assert true)"));
        assert!(s.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn odd_names_are_quoted() {
        let t = mk_binary(BinOp::Eq, Term::var("a[0]", Ty::I32), Term::int(1));
        let s = export_smtlib2(&PathCondition::from_terms(vec![t]));
        assert!(s.contains("|a[0]|"));
    }
}
