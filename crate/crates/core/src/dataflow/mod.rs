//! Def-use pairs, reaching definitions and cut-point plans.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, NodeId, NodeKind, StmtLoc};
use crate::frontend::{Expr, ExprKind, FunctionDef, Init, Program, Span, Stmt, StmtKind, Type, UnaryOp, VarRef};

/// A tracked variable: a scalar, a whole array, or one struct member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub root: VarRef,
    pub field: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UseKind {
    CUse,
    PUse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefUsePair {
    pub id: usize,
    pub variable: String,
    #[serde(skip)]
    pub key: Option<VarKey>,
    pub def: StmtLoc,
    #[serde(rename = "use")]
    pub use_site: StmtLoc,
    pub kind: UseKind,
    pub def_span: Span,
    pub use_span: Span,
}

impl DefUsePair {
    fn key(&self) -> &VarKey {
        self.key.as_ref().expect("analysed pair")
    }
}

impl fmt::Display for DefUsePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} def {} use {}", self.variable, self.def_span, self.use_span)
    }
}

/// Definitions and uses per statement location.
#[derive(Clone, Debug, Default)]
pub struct DefUseTable {
    pub defs: BTreeMap<StmtLoc, BTreeSet<VarKey>>,
    pub uses: BTreeMap<StmtLoc, BTreeSet<VarKey>>,
    names: BTreeMap<VarKey, String>,
    spans: BTreeMap<StmtLoc, Span>,
    /// Pseudo site where parameters and globals are defined.
    pub entry: StmtLoc,
}

impl DefUseTable {
    pub fn build(program: &Program, func: &FunctionDef, cfg: &Cfg) -> Self {
        let mut t = DefUseTable {
            entry: (cfg.entry, 0),
            ..Default::default()
        };
        let w = Walker { program, func };
        let mut initial = BTreeSet::new();
        for (i, l) in func.locals.iter().enumerate().filter(|(_, l)| l.is_param) {
            initial.extend(w.expand(VarRef::Local(i), &l.ty));
        }
        for (g, d) in program.globals.iter().enumerate() {
            initial.extend(w.expand(VarRef::Global(g), &d.ty));
        }
        t.spans.insert(t.entry, func.span);
        t.defs.insert(t.entry, initial);
        for n in &cfg.nodes {
            match n.kind {
                NodeKind::Sequential => {
                    for (i, s) in n.statements.iter().enumerate() {
                        let (d, u) = w.statement(s);
                        t.spans.insert((n.id, i), s.span);
                        t.defs.insert((n.id, i), d);
                        t.uses.insert((n.id, i), u);
                    }
                }
                NodeKind::Branch => {
                    let dec = cfg.decision_at(n.id).expect("branch decision");
                    let mut u = BTreeSet::new();
                    w.uses(&dec.expr, &mut u);
                    t.spans.insert((n.id, 0), dec.span);
                    t.uses.insert((n.id, 0), u);
                }
                _ => {}
            }
        }
        let all: Vec<VarKey> = t.defs.values().chain(t.uses.values()).flatten().cloned().collect();
        for k in all {
            let name = w.name(&k);
            t.names.insert(k, name);
        }
        t
    }

    pub fn defines(&self, loc: StmtLoc, k: &VarKey) -> bool {
        self.defs.get(&loc).is_some_and(|d| d.contains(k))
    }

    pub fn uses_at(&self, loc: StmtLoc, k: &VarKey) -> bool {
        self.uses.get(&loc).is_some_and(|d| d.contains(k))
    }

    pub fn name(&self, k: &VarKey) -> &str {
        &self.names[k]
    }

    pub fn span(&self, loc: StmtLoc) -> Span {
        self.spans.get(&loc).copied().unwrap_or_default()
    }

    /// Statement locations of node `n` in execution order.
    pub fn locs(&self, cfg: &Cfg, n: NodeId) -> Vec<StmtLoc> {
        let node = cfg.node(n);
        match node.kind {
            NodeKind::Entry => vec![self.entry],
            NodeKind::Sequential => (0..node.statements.len()).map(|i| (n, i)).collect(),
            NodeKind::Branch => vec![(n, 0)],
            NodeKind::Exit => Vec::new(),
        }
    }

    /// Whether node `n` defines `k` anywhere.
    pub fn node_defines(&self, cfg: &Cfg, n: NodeId, k: &VarKey) -> bool {
        self.locs(cfg, n).into_iter().any(|l| self.defines(l, k))
    }
}

struct Walker<'a> {
    program: &'a Program,
    func: &'a FunctionDef,
}

impl Walker<'_> {
    fn ty_of(&self, r: VarRef) -> &Type {
        match r {
            VarRef::Local(s) => &self.func.locals[s].ty,
            VarRef::Global(g) => &self.program.globals[g].ty,
            VarRef::Unresolved => unreachable!("checked program"),
        }
    }

    fn name(&self, k: &VarKey) -> String {
        let base = match k.root {
            VarRef::Local(s) => self.func.locals[s].name.clone(),
            VarRef::Global(g) => self.program.globals[g].name.clone(),
            VarRef::Unresolved => "?".into(),
        };
        match &k.field {
            Some(m) => format!("{base}.{m}"),
            None => base,
        }
    }

    /// Keys covering the whole of variable `r`.
    fn expand(&self, r: VarRef, ty: &Type) -> Vec<VarKey> {
        match ty {
            Type::Record(i) => self.program.records[*i]
                .members
                .iter()
                .map(|m| VarKey {
                    root: r,
                    field: Some(m.name.clone()),
                })
                .collect(),
            _ => vec![VarKey { root: r, field: None }],
        }
    }

    fn statement(&self, s: &Stmt) -> (BTreeSet<VarKey>, BTreeSet<VarKey>) {
        let mut defs = BTreeSet::new();
        let mut uses = BTreeSet::new();
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(init) = &d.init {
                    self.init_uses(init, &mut uses);
                    let slot = d.slot.expect("checked declaration");
                    defs.extend(self.expand(VarRef::Local(slot), &d.ty));
                }
            }
            StmtKind::Assign { lhs, op, rhs } => {
                self.uses(rhs, &mut uses);
                self.lvalue_uses(lhs, &mut uses);
                let written = self.written(lhs);
                if op.is_some() {
                    uses.extend(written.iter().cloned());
                }
                defs.extend(written);
            }
            StmtKind::Expr(e) => self.uses(e, &mut uses),
            StmtKind::Return(Some(e)) => self.uses(e, &mut uses),
            _ => {}
        }
        (defs, uses)
    }

    fn init_uses(&self, i: &Init, out: &mut BTreeSet<VarKey>) {
        match i {
            Init::Expr(e) => self.uses(e, out),
            Init::List(l) => l.iter().for_each(|i| self.init_uses(i, out)),
        }
    }

    /// Variables a store to `lhs` defines; stores through pointers define nothing.
    fn written(&self, lhs: &Expr) -> Vec<VarKey> {
        match &lhs.kind {
            ExprKind::Var(_, r) => self.expand(*r, self.ty_of(*r)),
            ExprKind::Member(b, m, false) => match &b.kind {
                ExprKind::Var(_, r) => vec![VarKey {
                    root: *r,
                    field: Some(m.clone()),
                }],
                _ => self.written(b),
            },
            ExprKind::Index(a, _) if matches!(a.ty(), Type::Array(..)) => self.written(a),
            _ => Vec::new(),
        }
    }

    fn uses(&self, e: &Expr, out: &mut BTreeSet<VarKey>) {
        match &e.kind {
            ExprKind::Var(_, r) => out.extend(self.expand(*r, self.ty_of(*r))),
            ExprKind::Member(b, m, false) => match &b.kind {
                ExprKind::Var(_, r) => {
                    out.insert(VarKey {
                        root: *r,
                        field: Some(m.clone()),
                    });
                }
                _ => self.uses(b, out),
            },
            ExprKind::Unary(UnaryOp::AddrOf, a) => self.lvalue_uses(a, out),
            ExprKind::Int(..) | ExprKind::SizeofType(_) | ExprKind::SizeofExpr(_) => {}
            ExprKind::Member(a, _, true) | ExprKind::Unary(_, a) | ExprKind::Cast(_, a) => self.uses(a, out),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                self.uses(a, out);
                self.uses(b, out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| self.uses(a, out)),
        }
    }

    /// Reads performed while locating `e` as a store or address target.
    fn lvalue_uses(&self, e: &Expr, out: &mut BTreeSet<VarKey>) {
        match &e.kind {
            ExprKind::Var(..) => {}
            ExprKind::Index(a, i) => {
                if matches!(a.ty(), Type::Array(..)) {
                    self.lvalue_uses(a, out);
                } else {
                    self.uses(a, out);
                }
                self.uses(i, out);
            }
            ExprKind::Member(b, _, false) => self.lvalue_uses(b, out),
            ExprKind::Member(b, _, true) | ExprKind::Unary(UnaryOp::Deref, b) => self.uses(b, out),
            _ => self.uses(e, out),
        }
    }
}

/// Reaching definitions at statement granularity: the defs live on entry to each node.
fn reaching(cfg: &Cfg, t: &DefUseTable) -> Vec<BTreeSet<(VarKey, StmtLoc)>> {
    let n = cfg.nodes.len();
    let transfer = |node: NodeId, mut set: BTreeSet<(VarKey, StmtLoc)>| {
        for l in t.locs(cfg, node) {
            if let Some(ds) = t.defs.get(&l) {
                set.retain(|(k, _)| !ds.contains(k));
                set.extend(ds.iter().map(|k| (k.clone(), l)));
            }
        }
        set
    };
    let mut inn: Vec<BTreeSet<(VarKey, StmtLoc)>> = vec![BTreeSet::new(); n];
    let mut work: VecDeque<NodeId> = (0..n).collect();
    while let Some(v) = work.pop_front() {
        let mut acc = BTreeSet::new();
        for p in cfg.predecessors(v) {
            acc.extend(transfer(p, inn[p].clone()));
        }
        if acc != inn[v] {
            inn[v] = acc;
            for s in cfg.successors(v) {
                if !work.contains(&s) {
                    work.push_back(s);
                }
            }
        }
    }
    inn
}

/// All def-use pairs of `func`, in use-site order.
pub fn compute_defuse_pairs(program: &Program, func: &FunctionDef, cfg: &Cfg) -> (Vec<DefUsePair>, DefUseTable) {
    let t = DefUseTable::build(program, func, cfg);
    let inn = reaching(cfg, &t);
    let mut found = BTreeSet::new();
    for node in &cfg.nodes {
        let mut live = inn[node.id].clone();
        for l in t.locs(cfg, node.id) {
            if let Some(us) = t.uses.get(&l) {
                for (k, d) in &live {
                    if us.contains(k) {
                        found.insert((l, k.clone(), *d));
                    }
                }
            }
            if let Some(ds) = t.defs.get(&l) {
                live.retain(|(k, _)| !ds.contains(k));
                live.extend(ds.iter().map(|k| (k.clone(), l)));
            }
        }
    }
    let pairs = found
        .into_iter()
        .enumerate()
        .map(|(id, (u, k, d))| DefUsePair {
            id,
            variable: t.name(&k).to_string(),
            kind: if cfg.node(u.0).kind == NodeKind::Branch {
                UseKind::PUse
            } else {
                UseKind::CUse
            },
            def_span: t.span(d),
            use_span: t.span(u),
            key: Some(k),
            def: d,
            use_site: u,
        })
        .collect();
    (pairs, t)
}

/// Progress of one statement trace against one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairProgress {
    Pending,
    /// The definition ran and is still live.
    Armed,
    /// The definition ran but was overwritten since.
    Killed,
    Covered,
}

/// Replays `stmts` against `pair`: the use must be reached from the
/// definition with no redefinition in between.
pub fn pair_progress(t: &DefUseTable, pair: &DefUsePair, stmts: &[StmtLoc]) -> PairProgress {
    let k = pair.key();
    let mut st = if pair.def == t.entry {
        PairProgress::Armed
    } else {
        PairProgress::Pending
    };
    for &l in stmts {
        if st == PairProgress::Armed && l == pair.use_site {
            return PairProgress::Covered;
        }
        if l == pair.def {
            st = PairProgress::Armed;
        } else if st == PairProgress::Armed && t.defines(l, k) {
            st = PairProgress::Killed;
        }
    }
    st
}

pub fn covers_pair(t: &DefUseTable, pair: &DefUsePair, stmts: &[StmtLoc]) -> bool {
    pair_progress(t, pair, stmts) == PairProgress::Covered
}

/// Intermediate goals for covering one pair.
#[derive(Clone, Debug)]
pub struct CutPointPlan {
    pub pair: DefUsePair,
    pub cut_points: Vec<NodeId>,
    /// `distances[i][n]`: edges from node `n` to `cut_points[i]`.
    pub distances: Vec<Vec<u32>>,
}

pub fn compute_cut_points(cfg: &Cfg, t: &DefUseTable, pair: &DefUsePair) -> CutPointPlan {
    let k = pair.key();
    let (dn, un) = (pair.def.0, pair.use_site.0);
    let mut doms: Vec<NodeId> = cfg.dominators(dn).to_vec();
    doms.sort_by_key(|&d| cfg.dominators(d).len());
    let mut cut = doms;
    if !(dn == un && pair.def < pair.use_site) {
        let blocked: Vec<bool> = (0..cfg.nodes.len())
            .map(|n| n != dn && n != un && t.node_defines(cfg, n, k))
            .collect();
        // nodes reachable from the definition without passing `skip`, stopping at the use
        let reach = |skip: Option<NodeId>| {
            let mut seen = vec![false; cfg.nodes.len()];
            let mut q: VecDeque<NodeId> = cfg.successors(dn).collect();
            while let Some(v) = q.pop_front() {
                if blocked[v] || Some(v) == skip || std::mem::replace(&mut seen[v], true) || v == un {
                    continue;
                }
                q.extend(cfg.successors(v));
            }
            seen
        };
        let base = reach(None);
        let from_def = cfg_bfs(cfg, dn);
        let mut must: Vec<NodeId> = (0..cfg.nodes.len())
            .filter(|&n| n != dn && n != un && base[n] && !cut.contains(&n))
            .filter(|&n| !reach(Some(n))[un])
            .collect();
        must.sort_by_key(|&n| from_def[n]);
        cut.extend(must);
        cut.push(un);
    }
    let distances = cut.iter().map(|&c| cfg.distances_to(c)).collect();
    CutPointPlan {
        pair: pair.clone(),
        cut_points: cut,
        distances,
    }
}

fn cfg_bfs(cfg: &Cfg, from: NodeId) -> Vec<u32> {
    let mut d = vec![u32::MAX; cfg.nodes.len()];
    d[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for s in cfg.successors(v) {
            if d[s] == u32::MAX {
                d[s] = d[v] + 1;
                q.push_back(s);
            }
        }
    }
    d
}

/// How far a node sequence has advanced through `plan`'s cut points.
pub fn cut_progress(plan: &CutPointPlan, nodes: impl IntoIterator<Item = NodeId>) -> usize {
    let mut i = 0;
    for n in nodes {
        if i < plan.cut_points.len() && plan.cut_points[i] == n {
            i += 1;
        }
    }
    i
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Covered,
    Uncovered,
    UnsatWithinBudget,
}

/// Partition of one function's pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    /// Pair id to the id of the witnessing test case.
    pub covered: BTreeMap<usize, usize>,
    pub uncovered: BTreeSet<usize>,
    pub unsat_within_budget: BTreeSet<usize>,
    pub total: usize,
}

impl PairReport {
    pub fn class_of(&self, id: usize) -> PairClass {
        if self.covered.contains_key(&id) {
            PairClass::Covered
        } else if self.unsat_within_budget.contains(&id) {
            PairClass::UnsatWithinBudget
        } else {
            PairClass::Uncovered
        }
    }

    /// Covered over total, as a percentage; 100 when there are no pairs.
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            100.0 * self.covered.len() as f64 / self.total as f64
        }
    }
}

/// Outcome of searching for one pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairOutcome {
    /// Witnessed by the test with this id.
    Witness(usize),
    /// The search ran out of states or time.
    Exhausted,
    /// The search hit states it could not decide.
    Undecided,
}

pub fn classify_pairs(pairs: &[DefUsePair], outcomes: &[PairOutcome]) -> PairReport {
    let mut r = PairReport {
        total: pairs.len(),
        ..Default::default()
    };
    for (p, o) in pairs.iter().zip(outcomes) {
        match o {
            PairOutcome::Witness(t) => {
                r.covered.insert(p.id, *t);
            }
            PairOutcome::Exhausted => {
                r.unsat_within_budget.insert(p.id);
            }
            PairOutcome::Undecided => {
                r.uncovered.insert(p.id);
            }
        }
    }
    r
}

#[cfg(test)]
mod tests;
