//! Syntax tree for the dialect.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::solver::{BinOp, Ty};

/// Start position of a construct, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Resolved type. Records are referenced by index into [`Program::records`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Void,
    Int(Ty),
    Array(Box<Type>, u32),
    Pointer(Box<Type>),
    VoidPtr,
    Record(usize),
}

pub const POINTER_SIZE: u32 = 4;

impl Type {
    pub fn int() -> Type {
        Type::Int(Ty::I32)
    }

    pub fn size(&self, records: &[RecordDecl]) -> u32 {
        match self {
            Type::Void => 0,
            Type::Int(Ty::I8) => 1,
            Type::Int(_) => 4,
            Type::Array(e, n) => e.size(records).saturating_mul(*n),
            Type::Pointer(_) | Type::VoidPtr => POINTER_SIZE,
            Type::Record(id) => records[*id].size,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Type::Int(_))
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Type::Pointer(_) | Type::VoidPtr)
    }

    pub fn is_scalar(&self) -> bool {
        self.is_integer() || self.is_pointer()
    }

    pub fn as_int(&self) -> Option<Ty> {
        match self {
            Type::Int(t) => Some(*t),
            _ => None,
        }
    }

    /// Array-to-pointer decay.
    pub fn decayed(&self) -> Type {
        match self {
            Type::Array(e, _) => Type::Pointer(e.clone()),
            t => t.clone(),
        }
    }

    /// Element type reached by indexing or dereferencing.
    pub fn pointee(&self) -> Option<&Type> {
        match self {
            Type::Array(e, _) | Type::Pointer(e) => Some(e),
            _ => None,
        }
    }

    /// Renders the type around a declarator name, e.g. `int x[3]`.
    pub fn render(&self, name: &str, records: &[RecordDecl]) -> String {
        let mut base = self;
        let mut suffix = String::new();
        while let Type::Array(e, n) = base {
            suffix.push_str(&format!("[{n}]"));
            base = e;
        }
        let mut stars = String::new();
        let mut core = base;
        while let Type::Pointer(p) = core {
            stars.push('*');
            core = p;
        }
        let head = match core {
            Type::Void => "void".to_string(),
            Type::VoidPtr => {
                stars.push('*');
                "void".to_string()
            }
            Type::Int(t) => t.name().to_string(),
            Type::Record(id) => {
                let r = &records[*id];
                format!("{} {}", if r.is_union { "union" } else { "struct" }, r.name)
            }
            Type::Array(..) | Type::Pointer(_) => "int".to_string(),
        };
        let sep = if name.is_empty() && stars.is_empty() { "" } else { " " };
        format!("{head}{sep}{stars}{name}{suffix}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    pub name: String,
    pub ty: Type,
    pub offset: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordDecl {
    pub name: String,
    pub is_union: bool,
    pub members: Vec<Member>,
    pub size: u32,
    /// False while only forward-declared.
    pub complete: bool,
    pub span: Span,
}

impl RecordDecl {
    pub fn member(&self, name: &str) -> Option<(usize, &Member)> {
        self.members.iter().enumerate().find(|(_, m)| m.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: Option<String>,
    pub items: Vec<(String, i32)>,
    pub span: Span,
}

/// What a name refers to after resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Unresolved,
    Local(usize),
    Global(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
    Deref,
    AddrOf,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled in by the checker.
    pub ty: Option<Type>,
}

/// Structural equality ignores spans and annotations.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(u32, Ty),
    Var(String, VarRef),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    /// `base.name` or `base->name`.
    Member(Box<Expr>, String, bool),
    Cast(Type, Box<Expr>),
    SizeofType(Type),
    SizeofExpr(Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn int(v: i32, span: Span) -> Self {
        Expr::new(ExprKind::Int(v as u32, Ty::I32), span)
    }

    pub fn ty(&self) -> &Type {
        self.ty.as_ref().expect("expression not type-checked")
    }

    /// Visits this expression and all subexpressions, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Int(..) | ExprKind::Var(..) | ExprKind::SizeofType(_) => {}
            ExprKind::Unary(_, a) | ExprKind::Cast(_, a) | ExprKind::SizeofExpr(a) => a.walk(f),
            ExprKind::Member(a, _, _) => a.walk(f),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e.kind, ExprKind::Call(..)));
        found
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Expr(Expr),
    List(Vec<Init>),
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Init>,
    pub span: Span,
    /// Local slot, assigned by the checker.
    pub slot: Option<usize>,
}

impl PartialEq for VarDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty && self.init == other.init
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    Case(i32),
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchArm {
    pub labels: Vec<CaseLabel>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl(VarDecl),
    /// `lhs = rhs` or compound `lhs op= rhs`; `x++` is `x += 1`.
    Assign {
        lhs: Expr,
        op: Option<BinOp>,
        rhs: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Box<Stmt>,
    },
    Switch {
        scrutinee: Expr,
        arms: Vec<SwitchArm>,
    },
    Break,
    Continue,
    Return(Option<Expr>),
    Block(Vec<Stmt>),
    Empty,
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    /// Simple statements live inside sequential CFG nodes.
    pub fn is_simple(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::Decl(_) | StmtKind::Assign { .. } | StmtKind::Expr(_) | StmtKind::Return(_)
        )
    }

    /// Visits every expression directly owned by this statement (not nested statements).
    pub fn exprs(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        match &self.kind {
            StmtKind::Decl(d) => {
                fn init_exprs<'a>(i: &'a Init, out: &mut Vec<&'a Expr>) {
                    match i {
                        Init::Expr(e) => out.push(e),
                        Init::List(l) => l.iter().for_each(|i| init_exprs(i, out)),
                    }
                }
                if let Some(i) = &d.init {
                    init_exprs(i, &mut out);
                }
            }
            StmtKind::Assign { lhs, rhs, .. } => {
                out.push(lhs);
                out.push(rhs);
            }
            StmtKind::Expr(e) => out.push(e),
            StmtKind::Return(Some(e)) => out.push(e),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => out.push(cond),
            StmtKind::For { cond: Some(c), .. } => out.push(c),
            StmtKind::Switch { scrutinee, .. } => out.push(scrutinee),
            _ => {}
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

/// A local variable slot (parameters first).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalInfo {
    pub name: String,
    pub ty: Type,
    pub is_param: bool,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub span: Span,
    /// Filled in by the checker.
    pub locals: Vec<LocalInfo>,
    pub externs_called: BTreeSet<String>,
    pub callees: BTreeSet<String>,
    /// Globals read or written, including through callees.
    pub globals_used: BTreeSet<usize>,
    pub globals_written: BTreeSet<usize>,
}

impl PartialEq for FunctionDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.ret == other.ret
            && self.body == other.body
    }
}

impl FunctionDef {
    pub fn new(name: String, params: Vec<Param>, ret: Type, body: Vec<Stmt>, span: Span) -> Self {
        FunctionDef {
            name,
            params,
            ret,
            body,
            span,
            locals: Vec::new(),
            externs_called: BTreeSet::new(),
            callees: BTreeSet::new(),
            globals_used: BTreeSet::new(),
            globals_written: BTreeSet::new(),
        }
    }
}

/// A function declared without a body. Calls to it become stubs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternDecl {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Type>,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub globals: Vec<VarDecl>,
    pub records: Vec<RecordDecl>,
    pub enums: Vec<EnumDecl>,
    pub externs: Vec<ExternDecl>,
    /// Functions dropped because they use constructs outside the dialect.
    pub skipped: Vec<crate::frontend::FrontendError>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn extern_decl(&self, name: &str) -> Option<&ExternDecl> {
        self.externs.iter().find(|f| f.name == name)
    }

    pub fn size_of(&self, ty: &Type) -> u32 {
        ty.size(&self.records)
    }

    pub fn render_type(&self, ty: &Type, name: &str) -> String {
        ty.render(name, &self.records)
    }
}
