//! Simplifying term constructors.
//!
//! All rewrites preserve the value of the term under every assignment,
//! including which arithmetic fault is raised first. Rewrites that would
//! discard a subterm are only applied when that subterm cannot fault.

use std::collections::{BTreeMap, HashMap};

use super::eval::{apply_binary, apply_unary};
use super::term::{BinOp, Node, OpNode, Term, Ty, UnOp};

/// Re-types a term without changing its bits.
pub fn retype(t: Term, ty: Ty) -> Term {
    if t.ty() == ty {
        t
    } else {
        mk_cast(ty, t)
    }
}

pub fn mk_cast(ty: Ty, a: Term) -> Term {
    if let Term::Const(b, _) = a {
        return Term::constant(b, ty);
    }
    if a.ty() == ty {
        return a;
    }
    if let Some(Node::Cast(inner_ty, x)) = a.node() {
        // Casts between 32-bit types preserve bits, so only the outer one matters.
        if *inner_ty != Ty::I8 || ty == Ty::I8 {
            return mk_cast(ty, x.clone());
        }
    }
    Term::raw(Node::Cast(ty, a))
}

/// `t != 0` as a 0/1 term, reusing `t` when it is already boolean.
pub fn mk_truth(t: Term) -> Term {
    if t.is_boolean() && t.ty() == Ty::I32 {
        t
    } else {
        mk_binary(BinOp::Ne, t, Term::int(0))
    }
}

pub fn mk_not(t: Term) -> Term {
    mk_unary(UnOp::Not, t)
}

pub fn mk_unary(op: UnOp, a: Term) -> Term {
    if let Term::Const(b, t) = a {
        let ty = if op == UnOp::Not { Ty::I32 } else { t.promote() };
        return Term::constant(apply_unary(op, b), ty);
    }
    match (op, a.node()) {
        (UnOp::Not, Some(Node::Unary(UnOp::Not, x))) => return mk_truth(x.clone()),
        (UnOp::Not, Some(Node::Binary(cmp, x, y))) if cmp.is_comparison() => {
            let neg = cmp.negated_comparison().expect("comparison");
            return mk_binary(neg, x.clone(), y.clone());
        }
        (UnOp::Neg, Some(Node::Unary(UnOp::Neg, x)))
        | (UnOp::BitNot, Some(Node::Unary(UnOp::BitNot, x))) => {
            let ty = a.ty();
            return retype(x.clone(), ty);
        }
        _ => {}
    }
    Term::raw(Node::Unary(op, a))
}

fn result_ty(op: BinOp, a: &Term, b: &Term) -> Ty {
    if op.is_comparison() || op.is_logical() {
        Ty::I32
    } else if matches!(op, BinOp::Shl | BinOp::Shr) {
        a.ty().promote()
    } else {
        Ty::usual(a.ty(), b.ty())
    }
}

pub fn mk_binary(op: BinOp, a: Term, b: Term) -> Term {
    let rty = result_ty(op, &a, &b);
    if let (Term::Const(x, _), Term::Const(y, _)) = (&a, &b) {
        let opty = if op.is_comparison() {
            Ty::usual(a.ty(), b.ty())
        } else {
            rty
        };
        if let Ok(v) = apply_binary(op, opty, *x, *y) {
            return Term::constant(v, rty);
        }
        return Term::raw(Node::Binary(op, a, b));
    }
    let ca = a.as_const();
    let cb = b.as_const();
    match op {
        BinOp::LAnd => {
            if let Some(x) = ca {
                return if x == 0 { Term::int(0) } else { mk_truth(b) };
            }
            if let Some(y) = cb {
                if y != 0 {
                    return mk_truth(a);
                }
                if !a.may_fault() {
                    return Term::int(0);
                }
            }
        }
        BinOp::LOr => {
            if let Some(x) = ca {
                return if x != 0 { Term::int(1) } else { mk_truth(b) };
            }
            if let Some(y) = cb {
                if y == 0 {
                    return mk_truth(a);
                }
                if !a.may_fault() {
                    return Term::int(1);
                }
            }
        }
        BinOp::Add => {
            if cb == Some(0) {
                return retype(a, rty);
            }
            if ca == Some(0) {
                return retype(b, rty);
            }
            if let Some(c2) = cb {
                // (x + c1) + c2 => x + (c1 + c2)
                if let Some(Node::Binary(BinOp::Add, x, Term::Const(c1, _))) = a.node() {
                    if a.ty() == rty {
                        return mk_binary(
                            BinOp::Add,
                            x.clone(),
                            Term::constant(c1.wrapping_add(c2), rty),
                        );
                    }
                }
            }
            if ca.is_some() && cb.is_none() {
                return mk_binary(BinOp::Add, b, a);
            }
        }
        BinOp::Sub => {
            if cb == Some(0) {
                return retype(a, rty);
            }
            if let Some(c) = cb {
                return mk_binary(BinOp::Add, a, Term::constant(c.wrapping_neg(), rty));
            }
            if a == b && !a.may_fault() {
                return Term::constant(0, rty);
            }
        }
        BinOp::Mul => {
            if cb == Some(1) {
                return retype(a, rty);
            }
            if ca == Some(1) {
                return retype(b, rty);
            }
            if (cb == Some(0) && !a.may_fault()) || (ca == Some(0) && !b.may_fault()) {
                return Term::constant(0, rty);
            }
        }
        BinOp::Div => {
            if cb == Some(1) {
                return retype(a, rty);
            }
        }
        BinOp::Rem => {
            if cb == Some(1) && !a.may_fault() {
                return Term::constant(0, rty);
            }
        }
        BinOp::BitAnd => {
            if (cb == Some(0) && !a.may_fault()) || (ca == Some(0) && !b.may_fault()) {
                return Term::constant(0, rty);
            }
            if cb == Some(u32::MAX) {
                return retype(a, rty);
            }
            if ca == Some(u32::MAX) {
                return retype(b, rty);
            }
        }
        BinOp::BitOr | BinOp::BitXor => {
            if cb == Some(0) {
                return retype(a, rty);
            }
            if ca == Some(0) {
                return retype(b, rty);
            }
        }
        BinOp::Shl | BinOp::Shr => {
            if let Some(c) = cb {
                if c & 31 == 0 {
                    return retype(a, rty);
                }
            }
        }
        BinOp::Eq | BinOp::Ne => {
            // (cmp) == 0  =>  !cmp ;  (cmp) != 0  =>  cmp
            if cb == Some(0) && a.is_boolean() && !a.is_const() {
                return if op == BinOp::Eq { mk_not(a) } else { a };
            }
            if a == b && !a.may_fault() {
                return Term::int((op == BinOp::Eq) as i32);
            }
        }
        BinOp::Lt | BinOp::Gt => {
            if a == b && !a.may_fault() {
                return Term::int(0);
            }
        }
        BinOp::Le | BinOp::Ge => {
            if a == b && !a.may_fault() {
                return Term::int(1);
            }
        }
    }
    Term::raw(Node::Binary(op, a, b))
}

/// Rebuilds `t` bottom-up through the simplifying constructors.
pub fn simplify(t: &Term) -> Term {
    let mut memo = HashMap::new();
    rebuild(t, &mut memo, &|_| None)
}

/// Replaces variables bound in `bindings` by constants and simplifies.
pub fn substitute(t: &Term, bindings: &BTreeMap<String, u32>) -> Term {
    let mut memo = HashMap::new();
    rebuild(t, &mut memo, &|t| match t {
        Term::Var(v) => bindings
            .get(&v.name)
            .map(|b| Term::constant(*b, v.ty)),
        _ => None,
    })
}

fn rebuild(
    t: &Term,
    memo: &mut HashMap<*const OpNode, Term>,
    leaf: &dyn Fn(&Term) -> Option<Term>,
) -> Term {
    match t {
        Term::Const(..) => t.clone(),
        Term::Var(_) => leaf(t).unwrap_or_else(|| t.clone()),
        Term::Op(n) => {
            let key = std::sync::Arc::as_ptr(n);
            if let Some(r) = memo.get(&key) {
                return r.clone();
            }
            let r = match &n.node {
                Node::Unary(op, a) => mk_unary(*op, rebuild(a, memo, leaf)),
                Node::Cast(ty, a) => mk_cast(*ty, rebuild(a, memo, leaf)),
                Node::Binary(op, a, b) => {
                    let a = rebuild(a, memo, leaf);
                    let b = rebuild(b, memo, leaf);
                    mk_binary(*op, a, b)
                }
            };
            memo.insert(key, r.clone());
            r
        }
    }
}

/// `if c then a else b` over 0/1 valued `c`, encoded with masks.
pub fn mk_select(c: Term, a: Term, b: Term) -> Term {
    match c.as_const() {
        Some(0) => return b,
        Some(_) => return a,
        None => {}
    }
    if a == b {
        return a;
    }
    let ty = a.ty();
    let mask = mk_unary(UnOp::Neg, mk_truth(c));
    let hi = mk_binary(BinOp::BitAnd, a, mask.clone());
    let lo = mk_binary(BinOp::BitAnd, b, mk_unary(UnOp::BitNot, mask));
    retype(mk_binary(BinOp::BitOr, hi, lo), ty)
}
