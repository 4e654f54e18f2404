use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};

use log::trace;

use crate::cfg::{EdgeId, NodeKind, Outcome};
use crate::frontend::{Expr, ExprKind, Init, Span, Stmt, StmtKind, Type, UnaryOp, VarRef};
use crate::memmodel::{leaves, Bounds, Fresh, MemError, Origin, PointerValue, PtrTarget, SymMemory, Value};
use crate::solver::{
    eval_bool, eval_concrete, mk_binary, mk_cast, mk_not, mk_truth, mk_unary, solve_with_hint, BinOp, Model,
    PathCondition, SolveOutcome, Term, Ty, UnOp,
};

use super::state::{Frame, SymState};
use super::{DecisionEval, EngineConfig, ExceptionCategory, ExceptionRecord, Site, StuckReason, Subject};

#[derive(Clone, Copy, Debug)]
pub enum Mode<'m> {
    Symbolic,
    /// Every symbol takes its value from the model; absent symbols are 0.
    Concrete(&'m Model),
}

/// A successor of a branch, already probed for feasibility.
#[derive(Clone, Debug)]
pub struct Child {
    pub state: SymState,
    /// Edge taken, in the CFG of the frame that branched.
    pub edge: EdgeId,
    /// Whether the branch is in the outermost frame.
    pub top: bool,
    pub eval: Option<DecisionEval>,
}

/// A state that will not be advanced further.
#[derive(Clone, Debug)]
pub enum End {
    Exit(SymState),
    Fault(SymState, ExceptionRecord),
    Stuck(SymState, StuckReason),
    /// Dropped at an unroll or call-depth bound.
    Pruned(StuckReason),
    /// The solver could not decide the state's path condition.
    Unknown(SymState),
}

/// Result of advancing one state to its next branch.
#[derive(Clone, Debug, Default)]
pub struct Advance {
    pub children: Vec<Child>,
    pub ends: Vec<End>,
}

enum Halt {
    Fault(ExceptionRecord),
    Stuck(StuckReason),
    /// A callee frame was pushed; re-run the statement once it returns.
    Pushed,
}

type R<T> = Result<T, Halt>;

enum Flow {
    Next,
    Return,
}

enum Feasible {
    Sat,
    Unsat,
    Unknown,
}

/// Per-evaluation context: fault forks produced so far and the guards of
/// enclosing short-circuit operands.
struct Ctx {
    forks: Vec<End>,
    guards: Vec<Term>,
}

pub struct Executor<'s> {
    pub subject: &'s Subject,
    pub config: &'s EngineConfig,
    mode: Mode<'s>,
    next_id: Cell<usize>,
}

impl<'s> Executor<'s> {
    pub fn new(subject: &'s Subject, config: &'s EngineConfig, mode: Mode<'s>) -> Self {
        Executor {
            subject,
            config,
            mode,
            next_id: Cell::new(0),
        }
    }

    pub fn is_concrete(&self) -> bool {
        matches!(self.mode, Mode::Concrete(_))
    }

    fn fresh_id(&self) -> usize {
        let id = self.next_id.get();
        self.next_id.set(id + 1);
        id
    }

    /// Initial state of function `func`: parameters and globals are symbolic inputs.
    pub fn initial_state(&self, func: usize) -> SymState {
        let prog = &self.subject.program;
        let f = &prog.functions[func];
        let mut mem = SymMemory::new(self.subject.records.clone()).with_backing_len(self.config.backing_len);
        let globals = prog
            .globals
            .iter()
            .map(|g| mem.alloc(g.name.clone(), g.ty.clone(), Origin::Global, Fresh::Input(g.name.clone())))
            .collect();
        let mut locals = vec![None; f.locals.len()];
        for (i, p) in f.params.iter().enumerate() {
            let slot = match &p.ty {
                Type::Array(e, _) => {
                    let arr = mem.alloc(p.name.clone(), p.ty.clone(), Origin::Param, Fresh::Input(p.name.clone()));
                    let ptr_ty = Type::Pointer(e.clone());
                    let slot = mem.alloc(p.name.clone(), ptr_ty.clone(), Origin::Param, Fresh::Uninit);
                    mem.store(&PointerValue::to_object(slot), &ptr_ty, Value::Ptr(PointerValue::to_object(arr)))
                        .expect("fresh pointer slot");
                    slot
                }
                t => mem.alloc(p.name.clone(), t.clone(), Origin::Param, Fresh::Input(p.name.clone())),
            };
            locals[i] = Some(slot);
        }
        let cfg = &self.subject.cfgs[func];
        SymState {
            id: self.fresh_id(),
            frames: vec![Frame {
                func,
                node: cfg.entry,
                stmt: 0,
                locals,
                ret: None,
                call_result: None,
            }],
            pc: PathCondition::new(),
            mem,
            globals,
            trace: Vec::new(),
            stmts: Vec::new(),
            decisions: Vec::new(),
            loop_counts: BTreeMap::new(),
            stub_counts: BTreeMap::new(),
            steps: 0,
            hint: Some(Model::new()),
            hint_ok: 0,
            returned: None,
        }
    }

    /// Runs `st` until it reaches a branch, the exit, or a fault. In concrete
    /// mode branches are resolved internally and exactly one end results.
    pub fn advance(&self, mut st: SymState) -> Advance {
        let mut ctx = Ctx {
            forks: Vec::new(),
            guards: Vec::new(),
        };
        loop {
            st.steps += 1;
            if st.steps > self.config.max_steps {
                ctx.forks
                    .push(End::Stuck(st, StuckReason::BudgetExceeded("step limit".into())));
                return Advance {
                    children: Vec::new(),
                    ends: ctx.forks,
                };
            }
            let frame = st.top();
            let cfg = &self.subject.cfgs[frame.func];
            let node = cfg.node(frame.node);
            let res = match node.kind {
                NodeKind::Entry => {
                    let e = node.succs[0];
                    self.take_edge(&mut st, e)
                }
                NodeKind::Exit => {
                    let done = st.frames.pop().expect("frame");
                    let depth = st.frames.len();
                    st.loop_counts.retain(|(d, _), _| *d < depth);
                    match st.frames.last_mut() {
                        None => {
                            st.returned = Some(done.ret);
                            ctx.forks.push(End::Exit(st));
                            return Advance {
                                children: Vec::new(),
                                ends: ctx.forks,
                            };
                        }
                        Some(caller) => {
                            caller.call_result = Some(done.ret);
                            Ok(())
                        }
                    }
                }
                NodeKind::Sequential => self.run_sequential(&mut st, &mut ctx),
                NodeKind::Branch => {
                    let children = self.branch(st, &mut ctx);
                    if self.is_concrete() {
                        if let Some(c) = children.into_iter().next() {
                            st = c.state;
                            continue;
                        }
                        return Advance {
                            children: Vec::new(),
                            ends: ctx.forks,
                        };
                    }
                    return Advance {
                        children,
                        ends: ctx.forks,
                    };
                }
            };
            match res {
                Ok(()) | Err(Halt::Pushed) => {}
                Err(h) => {
                    ctx.forks.push(end_of(st, h));
                    return Advance {
                        children: Vec::new(),
                        ends: ctx.forks,
                    };
                }
            }
        }
    }

    fn take_edge(&self, st: &mut SymState, e: EdgeId) -> R<()> {
        let depth = st.frames.len() - 1;
        let cfg = &self.subject.cfgs[st.top().func];
        for b in &self.subject.loop_exits[st.top().func][e] {
            st.loop_counts.remove(&(depth, *b));
        }
        if depth == 0 {
            st.trace.push(e);
        }
        let f = st.top_mut();
        f.node = cfg.edge(e).to;
        f.stmt = 0;
        Ok(())
    }

    fn run_sequential(&self, st: &mut SymState, ctx: &mut Ctx) -> R<()> {
        let (func, n) = (st.top().func, st.top().node);
        let cfg = &self.subject.cfgs[func];
        let node = cfg.node(n);
        while st.top().stmt < node.statements.len() {
            let i = st.top().stmt;
            if st.frames.len() == 1 && st.top().call_result.is_none() {
                st.stmts.push((n, i));
            }
            st.steps += 1;
            match self.exec_stmt(st, &node.statements[i], ctx)? {
                Flow::Next => st.top_mut().stmt += 1,
                Flow::Return => break,
            }
        }
        let e = node.succs[0];
        self.take_edge(st, e)
    }

    // ---------------------------------------------------------------------
    // statements

    fn exec_stmt(&self, st: &mut SymState, s: &Stmt, ctx: &mut Ctx) -> R<Flow> {
        let r = match &s.kind {
            StmtKind::Decl(d) => {
                let slot = d.slot.expect("checked declaration");
                let func = st.top().func;
                let name = self.subject.program.functions[func].locals[slot].name.clone();
                let init = match &d.init {
                    Some(Init::Expr(e)) if !matches!(d.ty, Type::Array(..)) => Some(self.eval(st, e, ctx)?),
                    _ => None,
                };
                let obj = st.mem.alloc(name, d.ty.clone(), Origin::Local, Fresh::Uninit);
                st.top_mut().locals[slot] = Some(obj);
                let base = PointerValue::to_object(obj);
                match (&d.init, init) {
                    (_, Some(v)) => {
                        let v = self.convert(v, &d.ty)?;
                        self.store(st, &base, &d.ty, v, s.span, ctx)?;
                    }
                    (Some(i @ Init::List(_)), None) | (Some(i @ Init::Expr(_)), None) => {
                        for leaf in leaves(&d.ty, &self.subject.program.records) {
                            let p = PointerValue { base: leaf.offset as i64, ..base.clone() };
                            let zero = self.convert(Value::Int(Term::int(0)), &leaf.ty)?;
                            self.store(st, &p, &leaf.ty, zero, s.span, ctx)?;
                        }
                        self.init_list(st, &base, &d.ty, i, ctx)?;
                    }
                    (None, None) => {}
                }
                Flow::Next
            }
            StmtKind::Assign { lhs, op, rhs } => {
                let v = self.eval(st, rhs, ctx)?;
                let p = self.lvalue(st, lhs, ctx)?;
                let ty = lhs.ty().clone();
                let v = match op {
                    None => v,
                    Some(op) => {
                        let old = self.load(st, &p, &ty, lhs.span, ctx)?;
                        self.binary_values(st, *op, old, &ty, v, rhs.ty(), s.span, ctx)?
                    }
                };
                let v = self.convert(v, &ty)?;
                self.store(st, &p, &ty, v, lhs.span, ctx)?;
                Flow::Next
            }
            StmtKind::Expr(e) => {
                self.eval(st, e, ctx)?;
                Flow::Next
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => {
                        let v = self.eval(st, e, ctx)?;
                        let func = st.top().func;
                        let ret = self.subject.program.functions[func].ret.clone();
                        Some(self.convert(v, &ret)?)
                    }
                    None => None,
                };
                st.top_mut().ret = v;
                Flow::Return
            }
            _ => unreachable!("only simple statements live in sequential nodes"),
        };
        Ok(r)
    }

    fn init_list(&self, st: &mut SymState, at: &PointerValue, ty: &Type, init: &Init, ctx: &mut Ctx) -> R<()> {
        let records = &self.subject.program.records;
        match (init, ty) {
            (Init::Expr(e), _) if ty.is_scalar() => {
                let v = self.eval(st, e, ctx)?;
                let v = self.convert(v, ty)?;
                self.store(st, at, ty, v, e.span, ctx)
            }
            (Init::List(items), Type::Array(elem, _)) => {
                let es = elem.size(records) as i64;
                for (k, item) in items.iter().enumerate() {
                    let p = PointerValue { base: at.base + k as i64 * es, ..at.clone() };
                    self.init_list(st, &p, elem, item, ctx)?;
                }
                Ok(())
            }
            (Init::List(items), Type::Record(r)) => {
                let members = records[*r].members.clone();
                for (m, item) in members.iter().zip(items) {
                    let p = PointerValue { base: at.base + m.offset as i64, ..at.clone() };
                    self.init_list(st, &p, &m.ty, item, ctx)?;
                }
                Ok(())
            }
            (Init::List(items), _) if items.len() == 1 => self.init_list(st, at, ty, &items[0], ctx),
            _ => Err(Halt::Stuck(StuckReason::Unsupported("initializer shape".into()))),
        }
    }

    // ---------------------------------------------------------------------
    // branches

    fn branch(&self, mut st: SymState, ctx: &mut Ctx) -> Vec<Child> {
        let (func, n) = (st.top().func, st.top().node);
        let cfg = &self.subject.cfgs[func];
        let node = cfg.node(n);
        let d = cfg.decision_at(n).expect("branch node has a decision");
        let top = st.frames.len() == 1;
        if top {
            st.stmts.push((n, 0));
        }
        // (state, condition vector, outcome)
        let mut done: Vec<(SymState, Vec<Option<bool>>, Outcome)> = Vec::new();
        if d.is_switch {
            let t = match self.eval(&mut st, &d.expr, ctx).and_then(|v| self.int_of(v)) {
                Ok(t) => t,
                Err(h) => {
                    ctx.forks.push(end_of(st, h));
                    return Vec::new();
                }
            };
            let cases: Vec<i32> = node
                .succs
                .iter()
                .filter_map(|&e| match cfg.edge(e).label.map(|l| l.outcome) {
                    Some(Outcome::Case(k)) => Some(k),
                    _ => None,
                })
                .collect();
            for &e in &node.succs {
                let outcome = cfg.edge(e).label.expect("labeled").outcome;
                let cond = match outcome {
                    Outcome::Case(k) => mk_binary(BinOp::Eq, t.clone(), Term::int(k)),
                    _ => cases.iter().fold(Term::int(1), |acc, &k| {
                        mk_binary(BinOp::LAnd, acc, mk_binary(BinOp::Ne, t.clone(), Term::int(k)))
                    }),
                };
                if let Some(s) = self.assume(&st, cond) {
                    done.push((s, Vec::new(), outcome));
                }
            }
        } else {
            let k = d.conditions.len();
            let mut work = VecDeque::from([(st, vec![None; k])]);
            while let Some((mut s, vals)) = work.pop_front() {
                if let Some(out) = d.tree.eval(&vals) {
                    let o = if out { Outcome::True } else { Outcome::False };
                    done.push((s, vals, o));
                    continue;
                }
                let i = d.tree.next_needed(&vals).expect("undecided tree has a pending condition");
                let t = match self.eval(&mut s, &d.conditions[i], ctx).and_then(|v| self.truth(&v)) {
                    Ok(t) => t,
                    Err(h) => {
                        ctx.forks.push(end_of(s, h));
                        continue;
                    }
                };
                for b in [true, false] {
                    let c = if b { t.clone() } else { mk_not(t.clone()) };
                    if let Some(ns) = self.assume(&s, c) {
                        let mut nv = vals.clone();
                        nv[i] = Some(b);
                        work.push_back((ns, nv));
                    }
                }
            }
        }
        // only iterations entered on a symbolic guard count toward the unroll bound
        let guard = (done.len() > 1 && !self.is_concrete())
            .then(|| cfg.back_edges().find(|b| b.to == n).map(|b| b.id))
            .flatten();
        let mut children = Vec::new();
        for (mut s, vals, outcome) in done {
            let e = cfg.edge_for(n, outcome).expect("edge for outcome");
            match self.probe(&mut s) {
                Feasible::Unsat => continue,
                Feasible::Unknown => {
                    ctx.forks.push(End::Unknown(s));
                    continue;
                }
                Feasible::Sat => {}
            }
            if let Some(b) = guard.filter(|b| !self.subject.loop_exits[func][e].contains(b)) {
                let depth = s.frames.len() - 1;
                let c = s.loop_counts.entry((depth, b)).or_insert(0);
                *c += 1;
                if *c > self.config.unroll_bound {
                    ctx.forks.push(End::Pruned(StuckReason::BudgetExceeded("unroll bound".into())));
                    continue;
                }
            }
            let eval = DecisionEval {
                decision: d.id,
                vector: vals,
                outcome,
            };
            if top {
                s.decisions.push(eval.clone());
            }
            match self.take_edge(&mut s, e) {
                Ok(()) => {}
                Err(Halt::Stuck(r)) => {
                    ctx.forks.push(End::Pruned(r));
                    continue;
                }
                Err(_) => unreachable!(),
            }
            s.id = self.fresh_id();
            children.push(Child {
                state: s,
                edge: e,
                top,
                eval: top.then_some(eval),
            });
        }
        let order = |e: EdgeId| node.succs.iter().position(|&x| x == e);
        children.sort_by_key(|c| order(c.edge));
        trace!("branch at {}:{} -> {} children", cfg.function, n, children.len());
        children
    }

    /// `st` with `c` assumed, or `None` when `c` is known false.
    fn assume(&self, st: &SymState, c: Term) -> Option<SymState> {
        match self.mode {
            Mode::Concrete(m) => match eval_bool(&c, m) {
                Ok(true) => Some(st.clone()),
                _ => None,
            },
            Mode::Symbolic => match c.as_const() {
                Some(0) => None,
                Some(_) => Some(st.clone()),
                None => {
                    let mut s = st.clone();
                    s.pc.push(c);
                    Some(s)
                }
            },
        }
    }

    fn probe(&self, s: &mut SymState) -> Feasible {
        if self.is_concrete() {
            return Feasible::Sat;
        }
        if let Some(h) = &s.hint {
            if s.pc.conjuncts[s.hint_ok..].iter().all(|c| eval_bool(c, h) == Ok(true)) {
                s.hint_ok = s.pc.len();
                return Feasible::Sat;
            }
        }
        let budget = self.config.solver.probe();
        let out = match solve_with_hint(&s.pc, &[], &budget, s.hint.as_ref()) {
            SolveOutcome::UnknownWithinBudget(_) => solve_with_hint(&s.pc, &[], &self.config.solver, s.hint.as_ref()),
            o => o,
        };
        match out {
            SolveOutcome::Sat(m) => {
                let mut h = s.hint.take().unwrap_or_default();
                h.merge(&m);
                s.hint = Some(h);
                s.hint_ok = s.pc.len();
                Feasible::Sat
            }
            SolveOutcome::Unsat(_) => Feasible::Unsat,
            SolveOutcome::UnknownWithinBudget(_) => Feasible::Unknown,
        }
    }

    /// Full solve of a finished state's path condition.
    pub fn solve_state(&self, s: &SymState) -> SolveOutcome {
        if let Some(h) = &s.hint {
            if s.pc.conjuncts[s.hint_ok..].iter().all(|c| eval_bool(c, h) == Ok(true)) {
                let mut m = Model::new();
                for v in s.pc.free_vars() {
                    m.set(&v, h.get(&v.name).unwrap_or(0));
                }
                return SolveOutcome::Sat(m);
            }
        }
        solve_with_hint(&s.pc, &[], &self.config.solver, s.hint.as_ref())
    }

    // ---------------------------------------------------------------------
    // hazards

    fn hazard(
        &self,
        st: &mut SymState,
        cond: Term,
        category: ExceptionCategory,
        site: Span,
        detail: String,
        ctx: &mut Ctx,
    ) -> R<()> {
        let c = ctx
            .guards
            .iter()
            .rev()
            .fold(cond, |acc, g| mk_binary(BinOp::LAnd, g.clone(), acc));
        let func = &self.subject.program.functions[st.top().func].name;
        let rec = ExceptionRecord {
            category,
            site: Site::new(func, site),
            detail,
        };
        match self.mode {
            Mode::Concrete(m) => match eval_bool(&c, m) {
                Ok(false) => Ok(()),
                _ => Err(Halt::Fault(rec)),
            },
            Mode::Symbolic => match c.as_const() {
                Some(0) => Ok(()),
                Some(_) => Err(Halt::Fault(rec)),
                None => {
                    let mut f = st.clone();
                    f.pc.push(c.clone());
                    ctx.forks.push(End::Fault(f, rec));
                    st.pc.push(mk_not(c));
                    Ok(())
                }
            },
        }
    }

    /// Narrows `st` so that `cond` does not hold, without reporting anything.
    fn exclude(&self, st: &mut SymState, cond: Term, what: &str, ctx: &Ctx) -> R<()> {
        let c = ctx
            .guards
            .iter()
            .rev()
            .fold(cond, |acc, g| mk_binary(BinOp::LAnd, g.clone(), acc));
        let hit = match self.mode {
            Mode::Concrete(m) => eval_bool(&c, m).unwrap_or(true),
            Mode::Symbolic => match c.as_const() {
                Some(v) => v != 0,
                None => {
                    st.pc.push(mk_not(c));
                    false
                }
            },
        };
        if hit {
            Err(Halt::Stuck(StuckReason::Unsupported(what.to_string())))
        } else {
            Ok(())
        }
    }

    fn check_access(&self, st: &mut SymState, p: &PointerValue, size: u32, site: Span, ctx: &mut Ctx) -> R<()> {
        let name = |st: &SymState| match &p.target {
            PtrTarget::Object(id) => st.mem.object(*id).name.clone(),
            _ => String::new(),
        };
        match st.mem.check_bounds(p, size) {
            Ok(Bounds::InBounds) => Ok(()),
            Ok(Bounds::Always) => {
                let d = format!("access outside `{}`", name(st));
                self.hazard(st, Term::int(1), ExceptionCategory::ArrayIndexOutOfBounds, site, d, ctx)
            }
            Ok(Bounds::FaultWhen(c)) => {
                let d = format!("index outside `{}`", name(st));
                self.hazard(st, c, ExceptionCategory::ArrayIndexOutOfBounds, site, d, ctx)
            }
            Err(e @ (MemError::NullDeref | MemError::FixedAddressDeref(_))) => {
                self.hazard(st, Term::int(1), ExceptionCategory::FixedMemoryAddress, site, e.to_string(), ctx)
            }
            Err(e) => Err(Halt::Stuck(StuckReason::Unsupported(e.to_string()))),
        }
    }

    /// Replaces a wide symbolic index by one feasible value.
    fn concretize(&self, st: &mut SymState, p: &PointerValue) -> R<PointerValue> {
        let (i, stride) = p.index.clone().expect("symbolic index");
        let v = match self.mode {
            Mode::Concrete(m) => eval_concrete(&i, m).map_err(|_| Halt::Stuck(StuckReason::Solver("index".into())))?,
            Mode::Symbolic => {
                let m = match self.solve_state(st) {
                    SolveOutcome::Sat(m) => m,
                    o => return Err(Halt::Stuck(StuckReason::Solver(format!("concretizing index: {o:?}")))),
                };
                eval_concrete(&i, &m).map_err(|_| Halt::Stuck(StuckReason::Solver("index".into())))?
            }
        };
        let k = i.ty().promote().as_i64(v);
        if !self.is_concrete() {
            st.pc.push(mk_binary(BinOp::Eq, i.clone(), Term::constant(v, i.ty())));
        }
        Ok(PointerValue {
            target: p.target.clone(),
            base: p.base + k * stride as i64,
            index: None,
        })
    }

    fn load(&self, st: &mut SymState, p: &PointerValue, ty: &Type, site: Span, ctx: &mut Ctx) -> R<Value> {
        let size = ty.size(&self.subject.program.records);
        self.check_access(st, p, size, site, ctx)?;
        let mut p = p.clone();
        loop {
            match st.mem.load(&p, ty) {
                Ok(v) => return self.fold(v),
                Err(MemError::NeedsConcreteIndex) => p = self.concretize(st, &p)?,
                Err(e) => return Err(self.mem_halt(e)),
            }
        }
    }

    fn store(&self, st: &mut SymState, p: &PointerValue, ty: &Type, v: Value, site: Span, ctx: &mut Ctx) -> R<()> {
        let size = ty.size(&self.subject.program.records);
        self.check_access(st, p, size, site, ctx)?;
        let mut p = p.clone();
        loop {
            match st.mem.store(&p, ty, v.clone()) {
                Ok(()) => return Ok(()),
                Err(MemError::NeedsConcreteIndex) => p = self.concretize(st, &p)?,
                Err(e) => return Err(self.mem_halt(e)),
            }
        }
    }

    fn mem_halt(&self, e: MemError) -> Halt {
        Halt::Stuck(StuckReason::Unsupported(e.to_string()))
    }

    /// In concrete mode, collapses a term to its value.
    fn fold(&self, v: Value) -> R<Value> {
        match (self.mode, v) {
            (Mode::Concrete(m), Value::Int(t)) if !t.is_const() => match eval_concrete(&t, m) {
                Ok(b) => Ok(Value::Int(Term::constant(b, t.ty()))),
                Err(f) => Err(Halt::Stuck(StuckReason::Unsupported(f.to_string()))),
            },
            (_, v) => Ok(v),
        }
    }

    // ---------------------------------------------------------------------
    // expressions

    fn int_of(&self, v: Value) -> R<Term> {
        match v {
            Value::Int(t) => Ok(t),
            Value::Ptr(p) if p.is_null() => Ok(Term::int(0)),
            Value::Ptr(_) => Err(Halt::Stuck(StuckReason::Unsupported("pointer used as integer".into()))),
        }
    }

    /// Nonzero-ness of a value as a 0/1 term.
    fn truth(&self, v: &Value) -> R<Term> {
        match v {
            Value::Int(t) => Ok(mk_truth(t.clone())),
            Value::Ptr(p) => match &p.target {
                PtrTarget::Null => Ok(Term::int(0)),
                PtrTarget::Object(_) => Ok(Term::int(1)),
                PtrTarget::Fixed(a) => Ok(mk_binary(
                    BinOp::Ne,
                    mk_binary(BinOp::Add, a.clone(), p.offset_term()),
                    Term::int(0),
                )),
                PtrTarget::Unbound => Err(Halt::Stuck(StuckReason::Unsupported("test of unbound pointer".into()))),
            },
        }
    }

    fn convert(&self, v: Value, ty: &Type) -> R<Value> {
        match (v, ty) {
            (Value::Int(t), Type::Int(k)) => Ok(Value::Int(mk_cast(*k, t))),
            (Value::Int(t), Type::Pointer(_) | Type::VoidPtr) => Ok(Value::Ptr(PointerValue::from_int(t))),
            (Value::Ptr(p), Type::Pointer(_) | Type::VoidPtr) => Ok(Value::Ptr(p)),
            (v @ Value::Ptr(_), Type::Int(k)) => Ok(Value::Int(mk_cast(*k, self.int_of(v)?))),
            (v, _) => Ok(v),
        }
    }

    fn var_ptr(&self, st: &mut SymState, r: VarRef, name: &str) -> PointerValue {
        match r {
            VarRef::Global(g) => PointerValue::to_object(st.globals[g]),
            VarRef::Local(s) => {
                if let Some(o) = st.top().locals[s] {
                    return PointerValue::to_object(o);
                }
                let func = st.top().func;
                let ty = self.subject.program.functions[func].locals[s].ty.clone();
                let o = st.mem.alloc(name.to_string(), ty, Origin::Local, Fresh::Uninit);
                st.top_mut().locals[s] = Some(o);
                PointerValue::to_object(o)
            }
            VarRef::Unresolved => unreachable!("checked program"),
        }
    }

    fn is_array_param(&self, st: &SymState, r: VarRef) -> bool {
        match r {
            VarRef::Local(s) => {
                let l = &self.subject.program.functions[st.top().func].locals[s];
                l.is_param && matches!(l.ty, Type::Array(..))
            }
            _ => false,
        }
    }

    fn lvalue(&self, st: &mut SymState, e: &Expr, ctx: &mut Ctx) -> R<PointerValue> {
        let records = &self.subject.program.records;
        match &e.kind {
            ExprKind::Var(name, r) => {
                if self.is_array_param(st, *r) {
                    let slot = self.var_ptr(st, *r, name);
                    let pty = e.ty().decayed();
                    return match self.load(st, &slot, &pty, e.span, ctx)? {
                        Value::Ptr(p) => Ok(p),
                        _ => Err(Halt::Stuck(StuckReason::Unsupported("array parameter".into()))),
                    };
                }
                Ok(self.var_ptr(st, *r, name))
            }
            ExprKind::Unary(UnaryOp::Deref, a) => self.pointer(st, a, ctx),
            ExprKind::Index(a, i) => {
                let p = self.pointer(st, a, ctx)?;
                let idx = self.eval(st, i, ctx)?;
                let idx = self.int_of(idx)?;
                let es = e.ty().size(records);
                st.mem.pointer_add(&p, &idx, es).map_err(|x| self.mem_halt(x))
            }
            ExprKind::Member(b, m, arrow) => {
                let (base, rty) = if *arrow {
                    (self.pointer(st, b, ctx)?, b.ty().pointee().cloned().unwrap_or(Type::Void))
                } else {
                    (self.lvalue(st, b, ctx)?, b.ty().clone())
                };
                let Type::Record(r) = rty else {
                    return Err(Halt::Stuck(StuckReason::Unsupported("member of non-record".into())));
                };
                let off = records[r].member(m).expect("checked member").1.offset;
                st.mem
                    .pointer_add(&base, &Term::int(off as i32), 1)
                    .map_err(|x| self.mem_halt(x))
            }
            _ => Err(Halt::Stuck(StuckReason::Unsupported("non-lvalue expression".into()))),
        }
    }

    /// Evaluates `e` to a pointer, decaying arrays.
    fn pointer(&self, st: &mut SymState, e: &Expr, ctx: &mut Ctx) -> R<PointerValue> {
        match self.eval(st, e, ctx)? {
            Value::Ptr(p) => Ok(p),
            Value::Int(t) => Ok(PointerValue::from_int(t)),
        }
    }

    fn eval(&self, st: &mut SymState, e: &Expr, ctx: &mut Ctx) -> R<Value> {
        let records = &self.subject.program.records;
        let v = match &e.kind {
            ExprKind::Int(v, t) => Value::Int(Term::constant(*v, *t)),
            ExprKind::Var(..) | ExprKind::Index(..) | ExprKind::Member(..) | ExprKind::Unary(UnaryOp::Deref, _) => {
                let ty = e.ty().clone();
                if let ExprKind::Var(_, r) = &e.kind {
                    if self.is_array_param(st, *r) {
                        return Ok(Value::Ptr(self.lvalue(st, e, ctx)?));
                    }
                }
                let p = self.lvalue(st, e, ctx)?;
                match ty {
                    Type::Array(..) => Value::Ptr(p),
                    Type::Record(_) => Value::Ptr(p),
                    ty => self.load(st, &p, &ty, e.span, ctx)?,
                }
            }
            ExprKind::Unary(UnaryOp::AddrOf, a) => Value::Ptr(self.lvalue(st, a, ctx)?),
            ExprKind::Unary(op, a) => {
                let v = self.eval(st, a, ctx)?;
                match op {
                    UnaryOp::Not => Value::Int(mk_not(self.truth(&v)?)),
                    UnaryOp::Neg => Value::Int(mk_unary(UnOp::Neg, self.int_of(v)?)),
                    UnaryOp::BitNot => Value::Int(mk_unary(UnOp::BitNot, self.int_of(v)?)),
                    UnaryOp::Deref | UnaryOp::AddrOf => unreachable!(),
                }
            }
            ExprKind::Binary(op @ (BinOp::LAnd | BinOp::LOr), a, b) => {
                let va = self.eval(st, a, ctx)?;
                let ta = self.truth(&va)?;
                let and = *op == BinOp::LAnd;
                match ta.as_const() {
                    Some(c) if (c != 0) != and => Value::Int(Term::int(i32::from(!and))),
                    Some(_) => {
                        let vb = self.eval(st, b, ctx)?;
                        Value::Int(self.truth(&vb)?)
                    }
                    None => {
                        let g = if and { ta.clone() } else { mk_not(ta.clone()) };
                        ctx.guards.push(g);
                        let vb = self.eval(st, b, ctx);
                        ctx.guards.pop();
                        let tb = self.truth(&vb?)?;
                        Value::Int(mk_binary(*op, ta, tb))
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let va = self.eval(st, a, ctx)?;
                let vb = self.eval(st, b, ctx)?;
                self.binary_values(st, *op, va, a.ty(), vb, b.ty(), e.span, ctx)?
            }
            ExprKind::Cast(ty, a) => {
                let v = self.eval(st, a, ctx)?;
                match (ty, v) {
                    (Type::Int(k), Value::Int(t)) => Value::Int(mk_cast(*k, t)),
                    (Type::Int(k), v) => Value::Int(mk_cast(*k, self.int_of(v)?)),
                    (_, Value::Int(t)) => Value::Ptr(PointerValue::from_int(t)),
                    (_, v) => v,
                }
            }
            ExprKind::Call(name, args) => return self.call(st, name, args, ctx),
            ExprKind::SizeofType(t) => Value::Int(Term::constant(t.size(records), Ty::U32)),
            ExprKind::SizeofExpr(a) => Value::Int(Term::constant(a.ty().size(records), Ty::U32)),
        };
        self.fold(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn binary_values(
        &self,
        st: &mut SymState,
        op: BinOp,
        va: Value,
        ta: &Type,
        vb: Value,
        tb: &Type,
        site: Span,
        ctx: &mut Ctx,
    ) -> R<Value> {
        let records = &self.subject.program.records;
        match (va, vb) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(self.arith(st, op, a, b, site, ctx)?)),
            (Value::Ptr(p), Value::Int(i)) if matches!(op, BinOp::Add | BinOp::Sub) => {
                let es = ta.decayed().pointee().map(|t| t.size(records)).unwrap_or(1);
                let d = if op == BinOp::Sub { mk_unary(UnOp::Neg, i) } else { i };
                Ok(Value::Ptr(st.mem.pointer_add(&p, &d, es).map_err(|x| self.mem_halt(x))?))
            }
            (Value::Int(i), Value::Ptr(p)) if op == BinOp::Add => {
                let es = tb.decayed().pointee().map(|t| t.size(records)).unwrap_or(1);
                Ok(Value::Ptr(st.mem.pointer_add(&p, &i, es).map_err(|x| self.mem_halt(x))?))
            }
            (a, b) => self.pointer_compare(op, a, b, ta, records),
        }
    }

    fn pointer_compare(
        &self,
        op: BinOp,
        a: Value,
        b: Value,
        ta: &Type,
        records: &[crate::frontend::RecordDecl],
    ) -> R<Value> {
        let as_ptr = |v: Value| match v {
            Value::Ptr(p) => p,
            Value::Int(t) => PointerValue::from_int(t),
        };
        let (p, q) = (as_ptr(a), as_ptr(b));
        let unsupported = || Halt::Stuck(StuckReason::Unsupported(format!("pointer operator {}", op.symbol())));
        let same = match (&p.target, &q.target) {
            (PtrTarget::Object(x), PtrTarget::Object(y)) => Some(x == y),
            (PtrTarget::Null, PtrTarget::Null) => Some(true),
            (PtrTarget::Null, PtrTarget::Object(_)) | (PtrTarget::Object(_), PtrTarget::Null) => Some(false),
            _ => None,
        };
        match (op, same) {
            (BinOp::Sub, Some(true)) => {
                let es = ta.decayed().pointee().map(|t| t.size(records)).unwrap_or(1).max(1);
                let diff = mk_binary(BinOp::Sub, p.offset_term(), q.offset_term());
                Ok(Value::Int(mk_binary(BinOp::Div, diff, Term::int(es as i32))))
            }
            (op, Some(true)) if op.is_comparison() => {
                Ok(Value::Int(mk_binary(op, p.offset_term(), q.offset_term())))
            }
            (BinOp::Eq, Some(false)) => Ok(Value::Int(Term::int(0))),
            (BinOp::Ne, Some(false)) => Ok(Value::Int(Term::int(1))),
            (BinOp::Eq | BinOp::Ne, None) => {
                let addr = |x: &PointerValue| match &x.target {
                    PtrTarget::Fixed(t) => Some(mk_binary(BinOp::Add, t.clone(), x.offset_term())),
                    PtrTarget::Null => Some(Term::int(0)),
                    _ => None,
                };
                match (addr(&p), addr(&q)) {
                    (Some(x), Some(y)) => Ok(Value::Int(mk_binary(op, x, y))),
                    _ => Err(unsupported()),
                }
            }
            _ => Err(unsupported()),
        }
    }

    fn arith(&self, st: &mut SymState, op: BinOp, a: Term, b: Term, site: Span, ctx: &mut Ctx) -> R<Term> {
        if op.is_division() {
            let zero = mk_binary(BinOp::Eq, b.clone(), Term::int(0));
            let what = if op == BinOp::Div { "division by zero" } else { "remainder by zero" };
            self.hazard(st, zero, ExceptionCategory::DividedByZero, site, what.into(), ctx)?;
            if Ty::usual(a.ty(), b.ty()).is_signed() {
                let ov = mk_binary(
                    BinOp::LAnd,
                    mk_binary(BinOp::Eq, a.clone(), Term::int(i32::MIN)),
                    mk_binary(BinOp::Eq, b.clone(), Term::int(-1)),
                );
                self.exclude(st, ov, "signed division overflow", ctx)?;
            }
        }
        Ok(mk_binary(op, a, b))
    }

    fn call(&self, st: &mut SymState, name: &str, args: &[Expr], ctx: &mut Ctx) -> R<Value> {
        if let Some(v) = st.top_mut().call_result.take() {
            return Ok(v.unwrap_or(Value::Int(Term::int(0))));
        }
        let prog = &self.subject.program;
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(st, a, ctx)?);
        }
        if let Some(fi) = prog.function_index(name) {
            if st.frames.len() > self.config.call_depth {
                return Err(Halt::Stuck(StuckReason::BudgetExceeded("call depth".into())));
            }
            let callee = &prog.functions[fi];
            let mut locals = vec![None; callee.locals.len()];
            for (i, (p, v)) in callee.params.iter().zip(vals).enumerate() {
                let ty = p.ty.decayed();
                let v = self.convert(v, &ty)?;
                let o = st.mem.alloc(p.name.clone(), ty.clone(), Origin::Local, Fresh::Uninit);
                st.mem.store(&PointerValue::to_object(o), &ty, v).map_err(|x| self.mem_halt(x))?;
                locals[i] = Some(o);
            }
            let entry = self.subject.cfgs[fi].entry;
            st.frames.push(Frame {
                func: fi,
                node: entry,
                stmt: 0,
                locals,
                ret: None,
                call_result: None,
            });
            return Err(Halt::Pushed);
        }
        // extern: fresh return value and clobbered pointees
        let k = {
            let c = st.stub_counts.entry(name.to_string()).or_insert(0);
            *c += 1;
            *c - 1
        };
        let decl = prog.extern_decl(name);
        for (j, (a, v)) in args.iter().zip(&vals).enumerate() {
            if let Value::Ptr(p) = v {
                if matches!(p.target, PtrTarget::Object(_)) && a.ty().decayed().is_pointer() {
                    st.mem
                        .havoc(p, &format!("__stub_{name}_{k}_arg{j}"))
                        .map_err(|x| self.mem_halt(x))?;
                }
            }
        }
        let ret = decl.map(|d| d.ret.clone()).unwrap_or_else(Type::int);
        if ret == Type::Void {
            return Ok(Value::Int(Term::int(0)));
        }
        let sym = format!("__stub_{name}_{k}");
        let o = st.mem.alloc(sym.clone(), ret.clone(), Origin::Local, Fresh::Input(sym));
        let v = st
            .mem
            .load(&PointerValue::to_object(o), &ret)
            .map_err(|x| self.mem_halt(x))?;
        self.fold(v)
    }
}

fn end_of(st: SymState, h: Halt) -> End {
    match h {
        Halt::Fault(rec) => End::Fault(st, rec),
        Halt::Stuck(r @ StuckReason::BudgetExceeded(_)) => End::Pruned(r),
        Halt::Stuck(r) => End::Stuck(st, r),
        Halt::Pushed => unreachable!("calls are not evaluated inside decisions"),
    }
}
