//! Terms over 32-bit two's-complement machine integers.
//!
//! Every value is carried as a `u32` bit pattern; the [`Ty`] attached to a
//! term decides how the bits are interpreted (signed, unsigned, or a
//! sign-extended `char`). Comparisons and logical operators produce `0`/`1`
//! of type [`Ty::I32`], as in C.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Scalar machine type of a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    I32,
    U32,
    /// `char`: stored sign-extended to 32 bits.
    I8,
}

impl Ty {
    /// Integer promotion: `char` promotes to `int`.
    pub fn promote(self) -> Ty {
        match self {
            Ty::I8 => Ty::I32,
            t => t,
        }
    }

    /// Usual arithmetic conversion of two operand types.
    pub fn usual(a: Ty, b: Ty) -> Ty {
        if a == Ty::U32 || b == Ty::U32 {
            Ty::U32
        } else {
            Ty::I32
        }
    }

    pub fn is_signed(self) -> bool {
        self != Ty::U32
    }

    /// Normalizes raw bits to a canonical value of this type.
    pub fn normalize(self, bits: u32) -> u32 {
        match self {
            Ty::I8 => bits as u8 as i8 as i32 as u32,
            _ => bits,
        }
    }

    pub fn min_bits(self) -> u32 {
        match self {
            Ty::I32 => i32::MIN as u32,
            Ty::U32 => 0,
            Ty::I8 => i8::MIN as i32 as u32,
        }
    }

    pub fn max_bits(self) -> u32 {
        match self {
            Ty::I32 => i32::MAX as u32,
            Ty::U32 => u32::MAX,
            Ty::I8 => i8::MAX as i32 as u32,
        }
    }

    /// Renders bits as the integer this type denotes.
    pub fn as_i64(self, bits: u32) -> i64 {
        match self {
            Ty::U32 => bits as i64,
            _ => bits as i32 as i64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ty::I32 => "int",
            Ty::U32 => "unsigned",
            Ty::I8 => "char",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LAnd,
    LOr,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LAnd | BinOp::LOr)
    }

    pub fn is_division(self) -> bool {
        matches!(self, BinOp::Div | BinOp::Rem)
    }

    /// The comparison `!(a op b)` is equivalent to `a op' b`.
    pub fn negated_comparison(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::LAnd => "&&",
            BinOp::LOr => "||",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
        }
    }
}

/// A named symbolic input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymVar {
    pub name: String,
    pub ty: Ty,
}

impl SymVar {
    pub fn new(name: impl Into<String>, ty: Ty) -> Self {
        SymVar {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Unary(UnOp, Term),
    Binary(BinOp, Term, Term),
    Cast(Ty, Term),
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpNode {
    pub node: Node,
    pub ty: Ty,
    /// Tree size, saturating.
    pub size: u32,
    /// Whether evaluation can raise an arithmetic fault.
    pub may_fault: bool,
}

/// A symbolic 32-bit term. Cloning is cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(u32, Ty),
    Var(Arc<SymVar>),
    Op(Arc<OpNode>),
}

impl Term {
    pub fn int(v: i32) -> Term {
        Term::Const(v as u32, Ty::I32)
    }

    pub fn constant(bits: u32, ty: Ty) -> Term {
        Term::Const(ty.normalize(bits), ty)
    }

    pub fn var(name: impl Into<String>, ty: Ty) -> Term {
        Term::Var(Arc::new(SymVar::new(name, ty)))
    }

    pub fn ty(&self) -> Ty {
        match self {
            Term::Const(_, t) => *t,
            Term::Var(v) => v.ty,
            Term::Op(n) => n.ty,
        }
    }

    pub fn size(&self) -> u32 {
        match self {
            Term::Op(n) => n.size,
            _ => 1,
        }
    }

    pub fn may_fault(&self) -> bool {
        match self {
            Term::Op(n) => n.may_fault,
            _ => false,
        }
    }

    pub fn as_const(&self) -> Option<u32> {
        match self {
            Term::Const(b, _) => Some(*b),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(..))
    }

    /// True for terms whose value is always 0 or 1.
    pub fn is_boolean(&self) -> bool {
        match self {
            Term::Op(n) => match &n.node {
                Node::Binary(op, _, _) => op.is_comparison() || op.is_logical(),
                Node::Unary(UnOp::Not, _) => true,
                _ => false,
            },
            Term::Const(b, _) => *b <= 1,
            Term::Var(_) => false,
        }
    }

    /// Raw node construction without simplification.
    pub fn raw(node: Node) -> Term {
        let (ty, size, may_fault) = match &node {
            Node::Unary(op, a) => {
                let ty = match op {
                    UnOp::Not => Ty::I32,
                    _ => a.ty().promote(),
                };
                (ty, a.size().saturating_add(1), a.may_fault())
            }
            Node::Binary(op, a, b) => {
                let ty = if op.is_comparison() || op.is_logical() {
                    Ty::I32
                } else if matches!(op, BinOp::Shl | BinOp::Shr) {
                    a.ty().promote()
                } else {
                    Ty::usual(a.ty(), b.ty())
                };
                (
                    ty,
                    a.size().saturating_add(b.size()).saturating_add(1),
                    op.is_division() || a.may_fault() || b.may_fault(),
                )
            }
            Node::Cast(t, a) => (*t, a.size().saturating_add(1), a.may_fault()),
        };
        Term::Op(Arc::new(OpNode {
            node,
            ty,
            size,
            may_fault,
        }))
    }

    pub fn node(&self) -> Option<&Node> {
        match self {
            Term::Op(n) => Some(&n.node),
            _ => None,
        }
    }

    /// Free symbolic variables, in name order.
    pub fn free_vars(&self) -> BTreeSet<SymVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<SymVar>) {
        let mut stack = vec![self];
        let mut seen = std::collections::HashSet::new();
        while let Some(t) = stack.pop() {
            match t {
                Term::Const(..) => {}
                Term::Var(v) => {
                    if !out.contains(v.as_ref()) {
                        out.insert(v.as_ref().clone());
                    }
                }
                Term::Op(n) => {
                    if n.size > 16 && !seen.insert(Arc::as_ptr(n)) {
                        continue;
                    }
                    match &n.node {
                        Node::Unary(_, a) | Node::Cast(_, a) => stack.push(a),
                        Node::Binary(_, a, b) => {
                            stack.push(a);
                            stack.push(b);
                        }
                    }
                }
            }
        }
    }

    /// Collects every constant literal appearing in the term.
    pub fn collect_consts(&self, out: &mut BTreeSet<i64>) {
        match self {
            Term::Const(b, t) => {
                out.insert(t.as_i64(*b));
            }
            Term::Var(_) => {}
            Term::Op(n) => match &n.node {
                Node::Unary(_, a) | Node::Cast(_, a) => a.collect_consts(out),
                Node::Binary(_, a, b) => {
                    a.collect_consts(out);
                    b.collect_consts(out);
                }
            },
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(b, t) => write!(f, "{}", t.as_i64(*b)),
            Term::Var(v) => write!(f, "{}", v.name),
            Term::Op(n) => match &n.node {
                Node::Unary(op, a) => {
                    let s = match op {
                        UnOp::Neg => "-",
                        UnOp::Not => "!",
                        UnOp::BitNot => "~",
                    };
                    write!(f, "{s}({a})")
                }
                Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
                Node::Cast(t, a) => write!(f, "({}){a}", t.name()),
            },
        }
    }
}

/// An ordered conjunction of boolean terms collected along a path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathCondition {
    pub conjuncts: Vec<Term>,
}

impl PathCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(conjuncts: Vec<Term>) -> Self {
        PathCondition { conjuncts }
    }

    pub fn push(&mut self, t: Term) {
        self.conjuncts.push(t);
    }

    pub fn with(&self, t: Term) -> PathCondition {
        let mut pc = self.clone();
        pc.push(t);
        pc
    }

    pub fn free_vars(&self) -> BTreeSet<SymVar> {
        let mut out = BTreeSet::new();
        for c in &self.conjuncts {
            c.collect_vars(&mut out);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }
}

impl fmt::Display for PathCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return write!(f, "true");
        }
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
