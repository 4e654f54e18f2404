//! Concrete evaluation with C integer semantics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::term::{BinOp, Node, OpNode, SymVar, Term, Ty, UnOp};

/// Arithmetic faults are values, not panics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithFault {
    DivideByZero,
    DivideOverflow,
}

impl fmt::Display for ArithFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithFault::DivideByZero => write!(f, "divide-by-zero"),
            ArithFault::DivideOverflow => write!(f, "divide-overflow"),
        }
    }
}

/// Source of concrete values for symbolic variables.
pub trait Valuation {
    fn value_of(&self, var: &SymVar) -> u32;
}

/// A concrete assignment of symbolic variables. Absent variables read as 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub assignment: BTreeMap<String, u32>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: &SymVar, bits: u32) {
        self.assignment
            .insert(var.name.clone(), var.ty.normalize(bits));
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.assignment.get(name).copied()
    }

    pub fn merge(&mut self, other: &Model) {
        for (k, v) in &other.assignment {
            self.assignment.insert(k.clone(), *v);
        }
    }
}

impl Valuation for Model {
    fn value_of(&self, var: &SymVar) -> u32 {
        var.ty
            .normalize(self.assignment.get(&var.name).copied().unwrap_or(0))
    }
}

impl<V: Valuation + ?Sized> Valuation for &V {
    fn value_of(&self, var: &SymVar) -> u32 {
        (**self).value_of(var)
    }
}

/// Evaluates `t` under `model` with exact C semantics.
pub fn eval_concrete(t: &Term, model: &dyn Valuation) -> Result<u32, ArithFault> {
    if t.size() > 64 {
        let mut memo = HashMap::new();
        eval_memo(t, model, &mut Some(&mut memo))
    } else {
        eval_memo(t, model, &mut None)
    }
}

/// Evaluates a boolean-context term: nonzero is true.
pub fn eval_bool(t: &Term, model: &dyn Valuation) -> Result<bool, ArithFault> {
    eval_concrete(t, model).map(|v| v != 0)
}

type Memo<'a> = Option<&'a mut HashMap<*const OpNode, Result<u32, ArithFault>>>;

fn eval_memo(t: &Term, model: &dyn Valuation, memo: &mut Memo<'_>) -> Result<u32, ArithFault> {
    match t {
        Term::Const(b, _) => Ok(*b),
        Term::Var(v) => Ok(model.value_of(v)),
        Term::Op(n) => {
            let key = std::sync::Arc::as_ptr(n);
            if let Some(m) = memo.as_ref() {
                if let Some(r) = m.get(&key) {
                    return *r;
                }
            }
            let r = eval_node(&n.node, n.ty, model, memo);
            if let Some(m) = memo.as_mut() {
                m.insert(key, r);
            }
            r
        }
    }
}

fn eval_node(
    node: &Node,
    ty: Ty,
    model: &dyn Valuation,
    memo: &mut Memo<'_>,
) -> Result<u32, ArithFault> {
    match node {
        Node::Unary(op, a) => {
            let v = eval_memo(a, model, memo)?;
            Ok(apply_unary(*op, v))
        }
        Node::Cast(t, a) => {
            let v = eval_memo(a, model, memo)?;
            Ok(t.normalize(v))
        }
        Node::Binary(BinOp::LAnd, a, b) => {
            if eval_memo(a, model, memo)? == 0 {
                return Ok(0);
            }
            Ok((eval_memo(b, model, memo)? != 0) as u32)
        }
        Node::Binary(BinOp::LOr, a, b) => {
            if eval_memo(a, model, memo)? != 0 {
                return Ok(1);
            }
            Ok((eval_memo(b, model, memo)? != 0) as u32)
        }
        Node::Binary(op, a, b) => {
            let x = eval_memo(a, model, memo)?;
            let y = eval_memo(b, model, memo)?;
            let opty = if op.is_comparison() {
                Ty::usual(a.ty(), b.ty())
            } else {
                ty
            };
            apply_binary(*op, opty, x, y)
        }
    }
}

pub fn apply_unary(op: UnOp, v: u32) -> u32 {
    match op {
        UnOp::Neg => v.wrapping_neg(),
        UnOp::Not => (v == 0) as u32,
        UnOp::BitNot => !v,
    }
}

/// Applies a non-short-circuit binary operator. `ty` is the operation type:
/// the result type for arithmetic, the operand type for comparisons.
pub fn apply_binary(op: BinOp, ty: Ty, x: u32, y: u32) -> Result<u32, ArithFault> {
    let signed = ty.is_signed();
    let (sx, sy) = (x as i32, y as i32);
    let r = match op {
        BinOp::Add => x.wrapping_add(y),
        BinOp::Sub => x.wrapping_sub(y),
        BinOp::Mul => x.wrapping_mul(y),
        BinOp::Div | BinOp::Rem => {
            if y == 0 {
                return Err(ArithFault::DivideByZero);
            }
            if signed {
                if sx == i32::MIN && sy == -1 {
                    return Err(ArithFault::DivideOverflow);
                }
                if op == BinOp::Div {
                    (sx / sy) as u32
                } else {
                    (sx % sy) as u32
                }
            } else if op == BinOp::Div {
                x / y
            } else {
                x % y
            }
        }
        BinOp::Lt => (if signed { sx < sy } else { x < y }) as u32,
        BinOp::Le => (if signed { sx <= sy } else { x <= y }) as u32,
        BinOp::Gt => (if signed { sx > sy } else { x > y }) as u32,
        BinOp::Ge => (if signed { sx >= sy } else { x >= y }) as u32,
        BinOp::Eq => (x == y) as u32,
        BinOp::Ne => (x != y) as u32,
        BinOp::LAnd => (x != 0 && y != 0) as u32,
        BinOp::LOr => (x != 0 || y != 0) as u32,
        BinOp::BitAnd => x & y,
        BinOp::BitOr => x | y,
        BinOp::BitXor => x ^ y,
        BinOp::Shl => x.wrapping_shl(y & 31),
        BinOp::Shr => {
            if signed {
                (sx >> (y & 31)) as u32
            } else {
                x >> (y & 31)
            }
        }
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::term::Node;

    fn bin(op: BinOp, a: Term, b: Term) -> Term {
        Term::raw(Node::Binary(op, a, b))
    }

    #[test]
    fn c_truncating_division() {
        let m = Model::new();
        let q = bin(BinOp::Div, Term::int(7), Term::int(2));
        let r = bin(BinOp::Rem, Term::int(7), Term::int(2));
        assert_eq!(eval_concrete(&q, &m).unwrap() as i32, 3);
        assert_eq!(eval_concrete(&r, &m).unwrap() as i32, 1);
        let q = bin(BinOp::Div, Term::int(-7), Term::int(2));
        let r = bin(BinOp::Rem, Term::int(-7), Term::int(2));
        assert_eq!(eval_concrete(&q, &m).unwrap() as i32, -3);
        assert_eq!(eval_concrete(&r, &m).unwrap() as i32, -1);
    }

    #[test]
    fn modulo_by_zero_divisor_faults() {
        // x % (nUsable - 4) with nUsable = 4
        let mut m = Model::new();
        let n = SymVar::new("nUsable", Ty::I32);
        m.set(&n, 4);
        m.set(&SymVar::new("x", Ty::I32), 17);
        let t = bin(
            BinOp::Rem,
            Term::var("x", Ty::I32),
            bin(BinOp::Sub, Term::var("nUsable", Ty::I32), Term::int(4)),
        );
        assert_eq!(eval_concrete(&t, &m), Err(ArithFault::DivideByZero));
    }

    #[test]
    fn int_min_div_minus_one_overflows() {
        let t = bin(BinOp::Div, Term::int(i32::MIN), Term::int(-1));
        assert_eq!(
            eval_concrete(&t, &Model::new()),
            Err(ArithFault::DivideOverflow)
        );
    }

    #[test]
    fn short_circuit_skips_faulting_operand() {
        let m = Model::new();
        let y = Term::var("y", Ty::I32);
        let guard = bin(BinOp::Ne, y.clone(), Term::int(0));
        let div = bin(BinOp::Div, Term::int(1), y);
        let t = bin(BinOp::LAnd, guard, div);
        assert_eq!(eval_concrete(&t, &m), Ok(0));
    }

    #[test]
    fn shifts_mask_amount() {
        let t = bin(BinOp::Shl, Term::int(1), Term::int(33));
        assert_eq!(eval_concrete(&t, &Model::new()), Ok(2));
        let t = bin(BinOp::Shr, Term::int(-8), Term::int(1));
        assert_eq!(eval_concrete(&t, &Model::new()).unwrap() as i32, -4);
        let t = bin(BinOp::Shr, Term::constant(0x8000_0000, Ty::U32), Term::int(31));
        assert_eq!(eval_concrete(&t, &Model::new()), Ok(1));
    }

    #[test]
    fn unsigned_comparison() {
        let t = bin(BinOp::Lt, Term::constant(u32::MAX, Ty::U32), Term::int(0));
        assert_eq!(eval_concrete(&t, &Model::new()), Ok(0));
        let t = bin(BinOp::Lt, Term::int(-1), Term::int(0));
        assert_eq!(eval_concrete(&t, &Model::new()), Ok(1));
    }

    #[test]
    fn char_cast_sign_extends() {
        let t = Term::raw(Node::Cast(Ty::I8, Term::int(0x1ff)));
        assert_eq!(eval_concrete(&t, &Model::new()).unwrap() as i32, -1);
    }
}
