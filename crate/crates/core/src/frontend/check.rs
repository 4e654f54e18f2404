//! Name resolution, typing, and constant folding.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::FrontendError;
use crate::solver::{BinOp, Ty};

type CResult<T> = Result<T, FrontendError>;

/// Resolves names to slots, annotates every expression with its type, folds
/// `sizeof` and enumerators into literals, and records call information.
///
/// Functions using constructs outside the dialect are moved to
/// [`Program::skipped`]; calls to them are treated as calls to externs.
pub fn check_and_fold(mut p: Program) -> CResult<Program> {
    let mut seen = BTreeSet::new();
    for f in &p.functions {
        if !seen.insert(f.name.clone()) {
            return Err(FrontendError::type_error(f.span, format!("function `{}` redefined", f.name)));
        }
    }
    let mut gseen = BTreeSet::new();
    for g in &p.globals {
        if !gseen.insert(g.name.clone()) {
            return Err(FrontendError::type_error(g.span, format!("global `{}` redefined", g.name)));
        }
        check_complete(&p.records, &g.ty, g.span)?;
    }
    let enum_consts: HashMap<String, i32> = p
        .enums
        .iter()
        .flat_map(|e| e.items.iter().cloned())
        .collect();

    let mut functions = std::mem::take(&mut p.functions);
    loop {
        let sigs: HashMap<String, (Vec<Type>, Type)> = functions
            .iter()
            .map(|f| (f.name.clone(), (f.params.iter().map(|p| p.ty.clone()).collect(), f.ret.clone())))
            .collect();
        let mut checked = Vec::with_capacity(functions.len());
        let mut dropped = false;
        for mut f in functions {
            let mut c = Checker {
                records: &p.records,
                globals: &p.globals,
                sigs: &sigs,
                externs: &p.externs,
                enum_consts: &enum_consts,
                scopes: Vec::new(),
                locals: Vec::new(),
                loops: 0,
                switches: 0,
                ret: f.ret.clone(),
                externs_called: BTreeSet::new(),
                callees: BTreeSet::new(),
                globals_used: BTreeSet::new(),
                globals_written: BTreeSet::new(),
            };
            match c.function(&mut f) {
                Ok(()) => {
                    f.locals = c.locals;
                    f.externs_called = c.externs_called;
                    f.callees = c.callees;
                    f.globals_used = c.globals_used;
                    f.globals_written = c.globals_written;
                    checked.push(f);
                }
                Err(FrontendError::Unsupported { span, construct, .. }) => {
                    let e = FrontendError::Unsupported {
                        span,
                        construct,
                        function: Some(f.name.clone()),
                    };
                    log::warn!("{e}");
                    p.skipped.push(e);
                    p.externs.push(ExternDecl {
                        name: f.name.clone(),
                        ret: f.ret.clone(),
                        params: f.params.iter().map(|q| q.ty.decayed()).collect(),
                        span: f.span,
                    });
                    dropped = true;
                }
                Err(e) => return Err(e),
            }
        }
        functions = checked;
        if !dropped {
            break;
        }
        // re-check so that calls to dropped functions become extern calls
    }

    // transitive global effects through callees
    loop {
        let mut changed = false;
        for i in 0..functions.len() {
            let callees: Vec<String> = functions[i].callees.iter().cloned().collect();
            for c in callees {
                let Some(j) = functions.iter().position(|f| f.name == c) else { continue };
                let (u, w) = (functions[j].globals_used.clone(), functions[j].globals_written.clone());
                let f = &mut functions[i];
                let before = f.globals_used.len() + f.globals_written.len();
                f.globals_used.extend(u);
                f.globals_written.extend(w);
                let written: Vec<usize> = f.globals_written.iter().copied().collect();
                f.globals_used.extend(written);
                changed |= f.globals_used.len() + f.globals_written.len() != before;
            }
        }
        if !changed {
            break;
        }
    }
    p.functions = functions;
    Ok(p)
}

fn check_complete(records: &[RecordDecl], ty: &Type, span: Span) -> CResult<()> {
    match ty {
        Type::Record(r) if !records[*r].complete => {
            Err(FrontendError::type_error(span, format!("incomplete type `struct {}`", records[*r].name)))
        }
        Type::Array(e, _) => check_complete(records, e, span),
        _ => Ok(()),
    }
}

struct Checker<'a> {
    records: &'a [RecordDecl],
    globals: &'a [VarDecl],
    sigs: &'a HashMap<String, (Vec<Type>, Type)>,
    externs: &'a [ExternDecl],
    enum_consts: &'a HashMap<String, i32>,
    scopes: Vec<HashMap<String, usize>>,
    locals: Vec<LocalInfo>,
    loops: u32,
    switches: u32,
    ret: Type,
    externs_called: BTreeSet<String>,
    callees: BTreeSet<String>,
    globals_used: BTreeSet<usize>,
    globals_written: BTreeSet<usize>,
}

/// Where an expression sits, for the call-placement rules.
#[derive(Clone, Copy, PartialEq)]
enum Pos {
    /// Top of a statement where a call to a defined function may appear.
    CallSite,
    Nested,
}

impl Checker<'_> {
    fn function(&mut self, f: &mut FunctionDef) -> CResult<()> {
        if matches!(f.ret, Type::Array(..) | Type::Record(_)) {
            return Err(FrontendError::unsupported(f.span, "aggregate return type"));
        }
        self.scopes.push(HashMap::new());
        for p in &f.params {
            check_complete(self.records, &p.ty, p.span)?;
            if matches!(p.ty, Type::Record(_)) {
                return Err(FrontendError::unsupported(p.span, "record passed by value"));
            }
            if self.scopes[0].contains_key(&p.name) {
                return Err(FrontendError::type_error(p.span, format!("duplicate parameter `{}`", p.name)));
            }
            let slot = self.locals.len();
            self.locals.push(LocalInfo {
                name: p.name.clone(),
                ty: p.ty.clone(),
                is_param: true,
                span: p.span,
            });
            self.scopes[0].insert(p.name.clone(), slot);
        }
        self.block(&mut f.body)?;
        self.scopes.pop();
        Ok(())
    }

    fn block(&mut self, stmts: &mut [Stmt]) -> CResult<()> {
        self.scopes.push(HashMap::new());
        for s in stmts.iter_mut() {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> CResult<()> {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl(d) => self.decl(d),
            StmtKind::Assign { lhs, op, rhs } => {
                self.expr(lhs, Pos::Nested)?;
                let rpos = if op.is_none() { Pos::CallSite } else { Pos::Nested };
                self.expr(rhs, rpos)?;
                self.lvalue(lhs)?;
                self.note_write(lhs);
                let lt = lhs.ty().clone();
                match op {
                    None => self.assignable(&lt, rhs, span),
                    Some(o) => {
                        let rt = rhs.ty().decayed();
                        let ok = match (&lt, &rt) {
                            (Type::Int(_), Type::Int(_)) => true,
                            (Type::Pointer(_), Type::Int(_)) => matches!(o, BinOp::Add | BinOp::Sub),
                            _ => false,
                        };
                        if ok {
                            Ok(())
                        } else {
                            Err(FrontendError::type_error(span, "invalid operands to compound assignment"))
                        }
                    }
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e, Pos::CallSite)?;
                Ok(())
            }
            StmtKind::If { cond, then, els } => {
                self.condition(cond)?;
                self.scoped(then)?;
                if let Some(e) = els {
                    self.scoped(e)?;
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                self.condition(cond)?;
                self.loops += 1;
                self.scoped(body)?;
                self.loops -= 1;
                Ok(())
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                if let Some(c) = cond {
                    self.condition(c)?;
                }
                if let Some(st) = step {
                    self.stmt(st)?;
                }
                self.loops += 1;
                self.scoped(body)?;
                self.loops -= 1;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::Switch { scrutinee, arms } => {
                self.expr(scrutinee, Pos::Nested)?;
                if !scrutinee.ty().is_integer() {
                    return Err(FrontendError::type_error(scrutinee.span, "switch on non-integer"));
                }
                self.switches += 1;
                self.scopes.push(HashMap::new());
                for a in arms.iter_mut() {
                    for s in a.body.iter_mut() {
                        self.stmt(s)?;
                    }
                }
                self.scopes.pop();
                self.switches -= 1;
                Ok(())
            }
            StmtKind::Break => {
                if self.loops == 0 && self.switches == 0 {
                    return Err(FrontendError::type_error(span, "`break` outside loop or switch"));
                }
                Ok(())
            }
            StmtKind::Continue => {
                if self.loops == 0 {
                    return Err(FrontendError::type_error(span, "`continue` outside loop"));
                }
                Ok(())
            }
            StmtKind::Return(e) => match (e, &self.ret) {
                (None, Type::Void) => Ok(()),
                (None, _) => Err(FrontendError::type_error(span, "missing return value")),
                (Some(_), Type::Void) => Err(FrontendError::type_error(span, "return value in void function")),
                (Some(e), rt) => {
                    let rt = rt.clone();
                    self.expr(e, Pos::CallSite)?;
                    self.assignable(&rt, e, span)
                }
            },
            StmtKind::Block(b) => self.block(b),
            StmtKind::Empty => Ok(()),
        }
    }

    fn scoped(&mut self, s: &mut Stmt) -> CResult<()> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r
    }

    fn condition(&mut self, e: &mut Expr) -> CResult<()> {
        self.expr_in(e, Pos::Nested, true)?;
        if !e.ty().decayed().is_scalar() {
            return Err(FrontendError::type_error(e.span, "condition is not scalar"));
        }
        Ok(())
    }

    fn decl(&mut self, d: &mut VarDecl) -> CResult<()> {
        check_complete(self.records, &d.ty, d.span)?;
        if let Some(init) = &mut d.init {
            let ty = d.ty.clone();
            self.init(&ty, init, d.span, true)?;
        }
        let scope = self.scopes.last_mut().expect("scope");
        if scope.contains_key(&d.name) {
            return Err(FrontendError::type_error(d.span, format!("`{}` redeclared", d.name)));
        }
        let slot = self.locals.len();
        self.locals.push(LocalInfo {
            name: d.name.clone(),
            ty: d.ty.clone(),
            is_param: false,
            span: d.span,
        });
        self.scopes.last_mut().unwrap().insert(d.name.clone(), slot);
        d.slot = Some(slot);
        Ok(())
    }

    fn init(&mut self, ty: &Type, init: &mut Init, span: Span, top: bool) -> CResult<()> {
        match (ty, init) {
            (Type::Array(e, n), Init::List(items)) => {
                if items.len() > *n as usize {
                    return Err(FrontendError::type_error(span, "too many initializers"));
                }
                for i in items {
                    self.init(e, i, span, false)?;
                }
                Ok(())
            }
            (Type::Record(r), Init::List(items)) => {
                let members: Vec<Type> = self.records[*r].members.iter().map(|m| m.ty.clone()).collect();
                let limit = if self.records[*r].is_union { 1 } else { members.len() };
                if items.len() > limit {
                    return Err(FrontendError::type_error(span, "too many initializers"));
                }
                for (i, t) in items.iter_mut().zip(&members) {
                    self.init(t, i, span, false)?;
                }
                Ok(())
            }
            (t, Init::Expr(e)) if t.is_scalar() => {
                self.expr(e, if top { Pos::CallSite } else { Pos::Nested })?;
                self.assignable(t, e, span)
            }
            (Type::Array(..), _) | (Type::Record(_), _) => {
                Err(FrontendError::type_error(span, "aggregate needs a brace initializer"))
            }
            _ => Err(FrontendError::type_error(span, "braces around scalar initializer")),
        }
    }

    fn assignable(&self, lt: &Type, rhs: &Expr, span: Span) -> CResult<()> {
        let rt = rhs.ty().decayed();
        let null = matches!(rhs.kind, ExprKind::Int(0, _));
        let ok = match (lt, &rt) {
            (Type::Int(_), Type::Int(_)) => true,
            (Type::Pointer(a), Type::Pointer(b)) => a == b,
            (Type::Pointer(_), Type::VoidPtr) | (Type::VoidPtr, Type::Pointer(_)) => true,
            (Type::VoidPtr, Type::VoidPtr) => true,
            (Type::Pointer(_) | Type::VoidPtr, Type::Int(_)) => null,
            (Type::Record(_), _) => {
                return Err(FrontendError::type_error(span, "assignment of record values is not supported"))
            }
            (Type::Array(..), _) => return Err(FrontendError::type_error(span, "array is not assignable")),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(FrontendError::type_error(
                span,
                format!(
                    "cannot assign `{}` to `{}`",
                    rt.render("", self.records),
                    lt.render("", self.records)
                ),
            ))
        }
    }

    fn lvalue(&self, e: &Expr) -> CResult<()> {
        let ok = match &e.kind {
            ExprKind::Var(..) | ExprKind::Index(..) | ExprKind::Member(..) => true,
            ExprKind::Unary(UnaryOp::Deref, _) => true,
            _ => false,
        };
        if !ok {
            return Err(FrontendError::type_error(e.span, "expression is not assignable"));
        }
        Ok(())
    }

    /// Records a global written through `e` without a pointer indirection.
    fn note_write(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Var(_, VarRef::Global(g)) => {
                self.globals_written.insert(*g);
            }
            ExprKind::Member(b, _, false) => self.note_write(b),
            ExprKind::Index(b, _) if matches!(b.ty(), Type::Array(..)) => self.note_write(b),
            _ => {}
        }
    }

    fn lookup(&self, name: &str) -> Option<VarRef> {
        for s in self.scopes.iter().rev() {
            if let Some(&slot) = s.get(name) {
                return Some(VarRef::Local(slot));
            }
        }
        self.globals
            .iter()
            .position(|g| g.name == name)
            .map(VarRef::Global)
    }

    fn expr(&mut self, e: &mut Expr, pos: Pos) -> CResult<()> {
        self.expr_in(e, pos, false)
    }

    /// `decision` is true inside branch conditions, where short-circuit
    /// operands are evaluated with real control flow.
    fn expr_in(&mut self, e: &mut Expr, pos: Pos, decision: bool) -> CResult<()> {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Int(_, t) => Type::Int(*t),
            ExprKind::Var(name, r) => match self.lookup(name) {
                Some(v) => {
                    *r = v;
                    match v {
                        VarRef::Local(s) => self.locals[s].ty.clone(),
                        VarRef::Global(g) => {
                            self.globals_used.insert(g);
                            self.globals[g].ty.clone()
                        }
                        VarRef::Unresolved => unreachable!(),
                    }
                }
                None => match self.enum_consts.get(name.as_str()) {
                    Some(&v) => {
                        e.kind = ExprKind::Int(v as u32, Ty::I32);
                        Type::int()
                    }
                    None => {
                        return Err(FrontendError::type_error(span, format!("undeclared identifier `{name}`")))
                    }
                },
            },
            ExprKind::Unary(op, a) => {
                let op = *op;
                self.expr_in(a, Pos::Nested, decision && op == UnaryOp::Not)?;
                let at = a.ty().decayed();
                match op {
                    UnaryOp::Neg | UnaryOp::BitNot => match at {
                        Type::Int(t) => Type::Int(t.promote()),
                        _ => return Err(FrontendError::type_error(span, "arithmetic on non-integer")),
                    },
                    UnaryOp::Not => {
                        if !at.is_scalar() {
                            return Err(FrontendError::type_error(span, "`!` on non-scalar"));
                        }
                        Type::int()
                    }
                    UnaryOp::Deref => match at {
                        Type::Pointer(t) => {
                            if *t == Type::Void {
                                return Err(FrontendError::type_error(span, "dereferencing void pointer"));
                            }
                            *t
                        }
                        Type::VoidPtr => return Err(FrontendError::type_error(span, "dereferencing void pointer")),
                        _ => return Err(FrontendError::type_error(span, "dereferencing non-pointer")),
                    },
                    UnaryOp::AddrOf => {
                        self.lvalue(a)?;
                        self.note_write(a);
                        Type::Pointer(Box::new(a.ty().clone()))
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let op = *op;
                let logical = op.is_logical();
                self.expr_in(a, Pos::Nested, decision && logical)?;
                self.expr_in(b, Pos::Nested, decision && logical)?;
                if logical && !decision && b.contains_call() {
                    return Err(FrontendError::unsupported(b.span, "call in short-circuit operand"));
                }
                self.binary_type(op, a, b, span)?
            }
            ExprKind::Index(a, i) => {
                self.expr(a, Pos::Nested)?;
                self.expr(i, Pos::Nested)?;
                if !i.ty().is_integer() {
                    return Err(FrontendError::type_error(i.span, "array index is not an integer"));
                }
                match a.ty().decayed() {
                    Type::Pointer(t) if *t != Type::Void => *t,
                    _ => return Err(FrontendError::type_error(span, "subscript of non-array")),
                }
            }
            ExprKind::Member(a, m, arrow) => {
                self.expr(a, Pos::Nested)?;
                let rec = match (a.ty(), *arrow) {
                    (Type::Record(r), false) => *r,
                    (Type::Pointer(t), true) => match t.as_ref() {
                        Type::Record(r) => *r,
                        _ => return Err(FrontendError::type_error(span, "`->` on non-record pointer")),
                    },
                    _ => return Err(FrontendError::type_error(span, "member access on non-record")),
                };
                match self.records[rec].member(m) {
                    Some((_, mem)) => mem.ty.clone(),
                    None => {
                        return Err(FrontendError::type_error(
                            span,
                            format!("no member `{m}` in `{}`", self.records[rec].name),
                        ))
                    }
                }
            }
            ExprKind::Cast(t, a) => {
                let t = t.clone();
                self.expr(a, Pos::Nested)?;
                check_complete(self.records, &t, span)?;
                let from = a.ty().decayed();
                let ok = t == Type::Void || (t.is_scalar() && from.is_scalar());
                if !ok {
                    return Err(FrontendError::type_error(span, "invalid cast"));
                }
                t
            }
            ExprKind::SizeofType(t) => {
                check_complete(self.records, t, span)?;
                let n = t.size(self.records);
                e.kind = ExprKind::Int(n, Ty::U32);
                Type::Int(Ty::U32)
            }
            ExprKind::SizeofExpr(a) => {
                // sizeof does not evaluate its operand
                let saved = (self.globals_used.clone(), self.callees.clone(), self.externs_called.clone());
                self.expr(a, Pos::Nested)?;
                (self.globals_used, self.callees, self.externs_called) = saved;
                let n = match &a.kind {
                    ExprKind::Var(_, VarRef::Local(s)) if self.locals[*s].is_param => {
                        a.ty().decayed().size(self.records)
                    }
                    _ => a.ty().size(self.records),
                };
                e.kind = ExprKind::Int(n, Ty::U32);
                Type::Int(Ty::U32)
            }
            ExprKind::Call(name, args) => {
                for a in args.iter_mut() {
                    self.expr(a, Pos::Nested)?;
                }
                if let Some((params, ret)) = self.sigs.get(name.as_str()) {
                    if pos != Pos::CallSite {
                        return Err(FrontendError::unsupported(span, format!("call to `{name}` inside expression")));
                    }
                    if params.len() != args.len() {
                        return Err(FrontendError::type_error(span, format!("wrong number of arguments to `{name}`")));
                    }
                    for (p, a) in params.iter().zip(args.iter()) {
                        self.assignable(&p.decayed(), a, a.span)?;
                        if let ExprKind::Unary(UnaryOp::AddrOf, _) = a.kind {
                            // callee may write through it
                        }
                    }
                    self.callees.insert(name.clone());
                    ret.clone()
                } else {
                    let decl = self.externs.iter().find(|x| &x.name == name);
                    if let Some(d) = decl {
                        if d.params.len() != args.len() {
                            return Err(FrontendError::type_error(span, format!("wrong number of arguments to `{name}`")));
                        }
                    }
                    for a in args.iter() {
                        if matches!(a.ty(), Type::Record(_)) {
                            return Err(FrontendError::unsupported(a.span, "record passed by value"));
                        }
                    }
                    self.externs_called.insert(name.clone());
                    decl.map(|d| d.ret.clone()).unwrap_or_else(Type::int)
                }
            }
        };
        e.ty = Some(ty);
        Ok(())
    }

    fn binary_type(&self, op: BinOp, a: &Expr, b: &Expr, span: Span) -> CResult<Type> {
        let (at, bt) = (a.ty().decayed(), b.ty().decayed());
        let bad = || FrontendError::type_error(span, format!("invalid operands to `{}`", op.symbol()));
        Ok(match op {
            BinOp::LAnd | BinOp::LOr => {
                if !at.is_scalar() || !bt.is_scalar() {
                    return Err(bad());
                }
                Type::int()
            }
            BinOp::Add => match (&at, &bt) {
                (Type::Int(x), Type::Int(y)) => Type::Int(Ty::usual(*x, *y)),
                (Type::Pointer(_), Type::Int(_)) => at.clone(),
                (Type::Int(_), Type::Pointer(_)) => bt.clone(),
                _ => return Err(bad()),
            },
            BinOp::Sub => match (&at, &bt) {
                (Type::Int(x), Type::Int(y)) => Type::Int(Ty::usual(*x, *y)),
                (Type::Pointer(_), Type::Int(_)) => at.clone(),
                (Type::Pointer(x), Type::Pointer(y)) if x == y => Type::int(),
                _ => return Err(bad()),
            },
            BinOp::Shl | BinOp::Shr => match (&at, &bt) {
                (Type::Int(x), Type::Int(_)) => Type::Int(x.promote()),
                _ => return Err(bad()),
            },
            o if o.is_comparison() => {
                let ok = match (&at, &bt) {
                    (Type::Int(_), Type::Int(_)) => true,
                    (Type::Pointer(x), Type::Pointer(y)) => x == y,
                    (Type::VoidPtr, Type::VoidPtr)
                    | (Type::VoidPtr, Type::Pointer(_))
                    | (Type::Pointer(_), Type::VoidPtr) => matches!(o, BinOp::Eq | BinOp::Ne),
                    (Type::Pointer(_) | Type::VoidPtr, Type::Int(_)) => matches!(b.kind, ExprKind::Int(0, _)),
                    (Type::Int(_), Type::Pointer(_) | Type::VoidPtr) => matches!(a.kind, ExprKind::Int(0, _)),
                    _ => false,
                };
                if !ok {
                    return Err(bad());
                }
                Type::int()
            }
            _ => match (&at, &bt) {
                (Type::Int(x), Type::Int(y)) => Type::Int(Ty::usual(*x, *y)),
                _ => return Err(bad()),
            },
        })
    }
}
