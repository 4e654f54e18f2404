//! Path-constraint solving over 32-bit integers.
//!
//! There is no external SMT backend. Queries are split into independent
//! components and each component goes through a fixed pipeline:
//! equality propagation, boundary-value candidates, interval narrowing,
//! seeded random sampling, and finally exhaustive enumeration over a small
//! finite domain. Only refutations and exhausted enumerations yield `Unsat`.

mod eval;
mod simplify;
mod smtlib;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use eval::{apply_binary, apply_unary, eval_bool, eval_concrete, ArithFault, Model, Valuation};
pub use simplify::{
    mk_binary, mk_cast, mk_not, mk_select, mk_truth, mk_unary, retype, simplify, substitute,
};
pub use smtlib::export_smtlib2;
pub use term::{BinOp, Node, PathCondition, SymVar, Term, Ty, UnOp};

pub mod defaults {
    use std::time::Duration;

    pub const MAX_EVALS: u64 = 10_000;
    pub const TIME_LIMIT: Duration = Duration::from_millis(200);
    pub const DOMAIN: (i32, i32) = (-64, 64);
    pub const MAX_ENUM_VARS: usize = 2;
    /// Upper bound on points visited by the exhaustive stage.
    pub const MAX_ENUM_POINTS: u64 = 1 << 20;
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveBudget {
    /// Candidate evaluations for the heuristic stages.
    pub max_evals: u64,
    pub time_limit: Duration,
    /// Inclusive enumeration domain per variable.
    pub domain: (i32, i32),
    pub max_enum_vars: usize,
    /// Only consider models whose values lie inside `domain`.
    pub domain_only: bool,
    pub seed: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_evals: defaults::MAX_EVALS,
            time_limit: defaults::TIME_LIMIT,
            domain: defaults::DOMAIN,
            max_enum_vars: defaults::MAX_ENUM_VARS,
            domain_only: false,
            seed: 0,
        }
    }
}

impl SolveBudget {
    pub fn with_seed(seed: u64) -> Self {
        SolveBudget {
            seed,
            ..Default::default()
        }
    }

    /// The cheaper budget used for feasibility probes at forks.
    pub fn probe(&self) -> Self {
        SolveBudget {
            max_evals: (self.max_evals / 2).max(1),
            time_limit: self.time_limit / 2,
            ..self.clone()
        }
    }
}

/// Why a query has no model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsatProof {
    /// A conjunct simplified to false, possibly after forced equalities.
    ConstantFalse,
    /// Bounds collected from linear atoms are contradictory.
    EmptyInterval(String),
    /// Every point of the enumeration domain was tried.
    ExhaustedDomain { vars: usize, points: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat(UnsatProof),
    UnknownWithinBudget(String),
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveOutcome::Sat(m) => Some(m),
            _ => None,
        }
    }
}

/// Solves `pc` for the variables `vars` (free variables of `pc` are always
/// included). A returned model has been re-checked against every conjunct.
pub fn solve(pc: &PathCondition, vars: &[SymVar], budget: &SolveBudget) -> SolveOutcome {
    solve_with_hint(pc, vars, budget, None)
}

/// Like [`solve`], but tries `hint` first and keeps its values for every
/// independent component it already satisfies.
pub fn solve_with_hint(
    pc: &PathCondition,
    vars: &[SymVar],
    budget: &SolveBudget,
    hint: Option<&Model>,
) -> SolveOutcome {
    let mut ctx = Ctx {
        budget,
        evals: 0,
        start: Instant::now(),
    };
    let mut all_vars: BTreeSet<SymVar> = vars.iter().cloned().collect();
    pc.free_vars().into_iter().for_each(|v| {
        all_vars.insert(v);
    });

    let mut conjuncts = Vec::with_capacity(pc.len());
    for c in &pc.conjuncts {
        let s = simplify(c);
        match s.as_const() {
            Some(0) => return SolveOutcome::Unsat(UnsatProof::ConstantFalse),
            Some(_) => {}
            None => {
                if s.free_vars().is_empty() {
                    // closed but faulting, e.g. 1/0 != 0
                    if !holds(&s, &Model::new()) {
                        return SolveOutcome::Unsat(UnsatProof::ConstantFalse);
                    }
                } else {
                    conjuncts.push(s);
                }
            }
        }
    }

    let mut model = Model::new();
    for v in &all_vars {
        let init = hint.map(|h| h.value_of(v)).unwrap_or(0);
        model.set(v, init);
    }
    if budget.domain_only {
        for v in &all_vars {
            if !in_domain(v.ty, model.value_of(v), budget.domain) {
                model.set(v, 0);
            }
        }
    }

    let components = partition(&conjuncts);
    let mut unknown = None;
    for (idx, comp) in components.iter().enumerate() {
        let comp_terms: Vec<&Term> = comp.iter().map(|&i| &conjuncts[i]).collect();
        if comp_terms.iter().all(|t| holds(t, &model)) {
            continue;
        }
        match solve_component(&comp_terms, &mut ctx, idx as u64) {
            ComponentResult::Sat(values) => {
                for (v, b) in values {
                    model.set(&v, b);
                }
            }
            ComponentResult::Unsat(p) => return SolveOutcome::Unsat(p),
            ComponentResult::Unknown(r) => {
                unknown.get_or_insert(r);
            }
        }
    }
    if let Some(r) = unknown {
        return SolveOutcome::UnknownWithinBudget(r);
    }
    if conjuncts.iter().all(|t| holds(t, &model)) {
        // drop names outside the requested universe
        model.assignment.retain(|k, _| all_vars.iter().any(|v| &v.name == k));
        SolveOutcome::Sat(model)
    } else {
        SolveOutcome::UnknownWithinBudget("model failed self-check".into())
    }
}

struct Ctx<'a> {
    budget: &'a SolveBudget,
    evals: u64,
    start: Instant,
}

impl Ctx<'_> {
    fn out_of_time(&self) -> bool {
        self.start.elapsed() > self.budget.time_limit
    }

    fn heuristics_exhausted(&self) -> bool {
        self.evals >= self.budget.max_evals || (self.evals % 256 == 0 && self.out_of_time())
    }
}

enum ComponentResult {
    Sat(Vec<(SymVar, u32)>),
    Unsat(UnsatProof),
    Unknown(String),
}

fn holds(t: &Term, m: &dyn Valuation) -> bool {
    matches!(eval_concrete(t, m), Ok(v) if v != 0)
}

fn in_domain(ty: Ty, bits: u32, domain: (i32, i32)) -> bool {
    let v = ty.as_i64(bits);
    let (lo, hi) = domain;
    // Values of unsigned variables are compared by their i32 reading so
    // that the domain means the same bit patterns for every type.
    let v = if ty == Ty::U32 { bits as i32 as i64 } else { v };
    v >= lo as i64 && v <= hi as i64
}

/// Groups conjunct indices that transitively share variables.
fn partition(conjuncts: &[Term]) -> Vec<Vec<usize>> {
    let vars: Vec<BTreeSet<SymVar>> = conjuncts.iter().map(|c| c.free_vars()).collect();
    let mut parent: Vec<usize> = (0..conjuncts.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let n = p[i];
            p[i] = r;
            i = n;
        }
        r
    }
    let mut owner: BTreeMap<&SymVar, usize> = BTreeMap::new();
    for (i, vs) in vars.iter().enumerate() {
        for v in vs {
            if let Some(&j) = owner.get(v) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            } else {
                owner.insert(v, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..conjuncts.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Signed-or-unsigned ordering key for a variable's values.
fn key(ty: Ty, bits: u32) -> i64 {
    ty.as_i64(bits)
}

fn from_key(ty: Ty, k: i64) -> u32 {
    ty.normalize(k as u32)
}

#[derive(Clone, Debug)]
struct Interval {
    lo: i64,
    hi: i64,
    excluded: BTreeSet<i64>,
}

fn solve_component(terms: &[&Term], ctx: &mut Ctx<'_>, salt: u64) -> ComponentResult {
    let budget: &SolveBudget = ctx.budget;
    // (1) equality propagation
    let mut bound: BTreeMap<String, u32> = BTreeMap::new();
    let mut bound_vars: Vec<(SymVar, u32)> = Vec::new();
    let mut work: Vec<Term> = terms.iter().map(|t| (*t).clone()).collect();
    loop {
        let mut found = None;
        for t in &work {
            if let Some((v, b)) = forced_equality(t) {
                found = Some((v, b));
                break;
            }
        }
        let Some((v, b)) = found else { break };
        if v.ty.normalize(b) != b {
            return ComponentResult::Unsat(UnsatProof::ConstantFalse);
        }
        if budget.domain_only && !in_domain(v.ty, b, budget.domain) {
            return ComponentResult::Unsat(UnsatProof::ExhaustedDomain { vars: 1, points: 0 });
        }
        bound.insert(v.name.clone(), b);
        bound_vars.push((v, b));
        let mut next = Vec::with_capacity(work.len());
        for t in &work {
            let s = substitute(t, &bound);
            match s.as_const() {
                Some(0) => return ComponentResult::Unsat(UnsatProof::ConstantFalse),
                Some(_) => {}
                None => {
                    if s.free_vars().is_empty() {
                        if !holds(&s, &Model::new()) {
                            return ComponentResult::Unsat(UnsatProof::ConstantFalse);
                        }
                    } else {
                        next.push(s);
                    }
                }
            }
        }
        work = next;
    }

    let mut vars: BTreeSet<SymVar> = BTreeSet::new();
    for t in &work {
        t.collect_vars(&mut vars);
    }
    let vars: Vec<SymVar> = vars.into_iter().collect();
    if vars.is_empty() {
        return ComponentResult::Sat(bound_vars);
    }
    let finish = |values: &[u32]| -> ComponentResult {
        let mut out = bound_vars.clone();
        out.extend(vars.iter().cloned().zip(values.iter().copied()));
        ComponentResult::Sat(out)
    };

    // (3) bounds from linear atoms, computed up front to seed candidates
    let mut intervals: Vec<Interval> = vars
        .iter()
        .map(|v| Interval {
            lo: key(v.ty, v.ty.min_bits()),
            hi: key(v.ty, v.ty.max_bits()),
            excluded: BTreeSet::new(),
        })
        .collect();
    if budget.domain_only {
        for (iv, v) in intervals.iter_mut().zip(&vars) {
            if v.ty != Ty::U32 {
                iv.lo = iv.lo.max(budget.domain.0 as i64);
                iv.hi = iv.hi.min(budget.domain.1 as i64);
            }
        }
    }
    for t in &work {
        narrow(t, &vars, &mut intervals);
    }
    for (iv, v) in intervals.iter().zip(&vars) {
        if iv.lo > iv.hi {
            return ComponentResult::Unsat(UnsatProof::EmptyInterval(v.name.clone()));
        }
        if iv.hi - iv.lo < 64 && (iv.lo..=iv.hi).all(|k| iv.excluded.contains(&k)) {
            return ComponentResult::Unsat(UnsatProof::EmptyInterval(v.name.clone()));
        }
    }

    let admissible = |i: usize, k: i64| -> bool {
        let iv = &intervals[i];
        if k < iv.lo || k > iv.hi || iv.excluded.contains(&k) {
            return false;
        }
        !budget.domain_only || in_domain(vars[i].ty, from_key(vars[i].ty, k), budget.domain)
    };

    let check = |values: &[u32], ctx: &mut Ctx<'_>| -> bool {
        ctx.evals += 1;
        let m = Assignment {
            vars: &vars,
            values,
        };
        work.iter().all(|t| holds(t, &m))
    };

    // (2) boundary-value candidates
    let mut consts = BTreeSet::new();
    for t in &work {
        t.collect_consts(&mut consts);
    }
    let mut cand_lists: Vec<Vec<u32>> = Vec::with_capacity(vars.len());
    for (i, v) in vars.iter().enumerate() {
        let mut keys: BTreeSet<i64> = BTreeSet::new();
        for &c in &consts {
            for d in [-1i64, 0, 1] {
                keys.insert(key(v.ty, from_key(v.ty, c + d)));
            }
        }
        for b in [v.ty.min_bits(), u32::MAX, 0, 1, v.ty.max_bits()] {
            keys.insert(key(v.ty, v.ty.normalize(b)));
        }
        let iv = &intervals[i];
        for k in [iv.lo, iv.hi, iv.lo.saturating_add(1), iv.hi.saturating_sub(1), iv.lo / 2 + iv.hi / 2] {
            keys.insert(k);
        }
        let mut list: Vec<i64> = keys.into_iter().filter(|&k| admissible(i, k)).collect();
        // small magnitudes first: they make readable tests
        list.sort_by_key(|k| (k.unsigned_abs(), *k < 0));
        cand_lists.push(list.into_iter().map(|k| from_key(v.ty, k)).collect());
    }
    if cand_lists.iter().all(|l| !l.is_empty()) {
        let cap = (budget.max_evals / 2).max(1);
        let mut total: u64 = 1;
        for l in &cand_lists {
            total = total.saturating_mul(l.len() as u64);
        }
        if total > cap {
            let per = ((cap as f64).powf(1.0 / vars.len() as f64)).floor().max(1.0) as usize;
            for l in &mut cand_lists {
                l.truncate(per);
            }
        }
        let mut idx = vec![0usize; vars.len()];
        let mut values: Vec<u32> = cand_lists.iter().map(|l| l[0]).collect();
        loop {
            if ctx.heuristics_exhausted() {
                break;
            }
            if check(&values, ctx) {
                return finish(&values);
            }
            // odometer, first variable fastest
            let mut d = 0;
            loop {
                if d == vars.len() {
                    break;
                }
                idx[d] += 1;
                if idx[d] < cand_lists[d].len() {
                    values[d] = cand_lists[d][idx[d]];
                    break;
                }
                idx[d] = 0;
                values[d] = cand_lists[d][0];
                d += 1;
            }
            if d == vars.len() {
                break;
            }
        }
    }

    // (4) seeded random sampling
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (dlo, dhi) = budget.domain;
    let mut values = vec![0u32; vars.len()];
    while !ctx.heuristics_exhausted() {
        for (i, v) in vars.iter().enumerate() {
            let iv = &intervals[i];
            let mut k;
            let mut tries = 0;
            loop {
                let pick: u8 = rng.gen_range(0..4);
                k = match pick {
                    0 | 1 => {
                        let lo = iv.lo.max(dlo as i64);
                        let hi = iv.hi.min(dhi as i64);
                        if lo <= hi {
                            rng.gen_range(lo..=hi)
                        } else {
                            rng.gen_range(iv.lo..=iv.hi)
                        }
                    }
                    2 => rng.gen_range(iv.lo..=iv.hi),
                    _ => {
                        let l = &cand_lists[i];
                        if l.is_empty() {
                            rng.gen_range(iv.lo..=iv.hi)
                        } else {
                            key(v.ty, l[rng.gen_range(0..l.len())])
                        }
                    }
                };
                tries += 1;
                if admissible(i, k) || tries > 8 {
                    break;
                }
            }
            values[i] = from_key(v.ty, k);
        }
        if check(&values, ctx) {
            return finish(&values);
        }
    }

    // (5) exhaustive enumeration
    if vars.len() <= budget.max_enum_vars {
        let mut ranges = Vec::with_capacity(vars.len());
        let mut points: u64 = 1;
        for (i, v) in vars.iter().enumerate() {
            let iv = &intervals[i];
            // whole interval when small, else the domain slice of it
            let (lo, hi) = if iv.hi - iv.lo < 4096 {
                (iv.lo, iv.hi)
            } else if v.ty == Ty::U32 {
                (0, (dhi as i64).max(0))
            } else {
                (iv.lo.max(dlo as i64), iv.hi.min(dhi as i64))
            };
            let mut keys: Vec<i64> = if lo <= hi { (lo..=hi).filter(|&k| admissible(i, k)).collect() } else { vec![] };
            if v.ty == Ty::U32 && iv.hi - iv.lo >= 4096 {
                // negative half of the domain as unsigned bit patterns
                for k in dlo.min(0)..0 {
                    let b = k as u32 as i64;
                    if admissible(i, b) {
                        keys.push(b);
                    }
                }
            }
            points = points.saturating_mul(keys.len() as u64);
            ranges.push(keys);
        }
        if points <= defaults::MAX_ENUM_POINTS {
            if ranges.iter().any(|r| r.is_empty()) {
                return ComponentResult::Unsat(UnsatProof::ExhaustedDomain {
                    vars: vars.len(),
                    points: 0,
                });
            }
            let mut idx = vec![0usize; vars.len()];
            let mut values: Vec<u32> = vars
                .iter()
                .zip(&ranges)
                .map(|(v, r)| from_key(v.ty, r[0]))
                .collect();
            let mut visited: u64 = 0;
            loop {
                visited += 1;
                if visited % 1024 == 0 && ctx.out_of_time() {
                    return ComponentResult::Unknown("time limit during enumeration".into());
                }
                if check(&values, ctx) {
                    return finish(&values);
                }
                let mut d = 0;
                while d < vars.len() {
                    idx[d] += 1;
                    if idx[d] < ranges[d].len() {
                        values[d] = from_key(vars[d].ty, ranges[d][idx[d]]);
                        break;
                    }
                    idx[d] = 0;
                    values[d] = from_key(vars[d].ty, ranges[d][0]);
                    d += 1;
                }
                if d == vars.len() {
                    break;
                }
            }
            return ComponentResult::Unsat(UnsatProof::ExhaustedDomain {
                vars: vars.len(),
                points: visited,
            });
        }
    }
    ComponentResult::Unknown(format!(
        "no model after {} evaluations over {} variables",
        ctx.evals,
        vars.len()
    ))
}

struct Assignment<'a> {
    vars: &'a [SymVar],
    values: &'a [u32],
}

impl Valuation for Assignment<'_> {
    fn value_of(&self, var: &SymVar) -> u32 {
        match self.vars.binary_search(var) {
            Ok(i) => self.values[i],
            Err(_) => 0,
        }
    }
}

/// Recognizes `v == c`, `c == v`, and `v + k == c` over 32-bit `v`.
fn forced_equality(t: &Term) -> Option<(SymVar, u32)> {
    let Some(Node::Binary(BinOp::Eq, a, b)) = t.node() else {
        return None;
    };
    let (lhs, c) = match (a, b) {
        (_, Term::Const(c, _)) => (a, *c),
        (Term::Const(c, _), _) => (b, *c),
        _ => return None,
    };
    match lhs {
        Term::Var(v) => Some((v.as_ref().clone(), c)),
        Term::Op(n) => match &n.node {
            Node::Binary(BinOp::Add, Term::Var(v), Term::Const(k, _)) if v.ty != Ty::I8 => {
                Some((v.as_ref().clone(), c.wrapping_sub(*k)))
            }
            Node::Cast(ty, Term::Var(v)) if *ty != Ty::I8 => Some((v.as_ref().clone(), c)),
            _ => None,
        },
        _ => None,
    }
}

/// Tightens intervals from atoms comparing a variable with a constant.
fn narrow(t: &Term, vars: &[SymVar], intervals: &mut [Interval]) {
    let Some(Node::Binary(op, a, b)) = t.node() else {
        return;
    };
    if op.is_logical() {
        if *op == BinOp::LAnd {
            narrow(a, vars, intervals);
            narrow(b, vars, intervals);
        }
        return;
    }
    if !op.is_comparison() {
        return;
    }
    let (var, c, op) = match (a, b) {
        (Term::Var(v), Term::Const(c, cty)) => (v, (*c, *cty), *op),
        (Term::Const(c, cty), Term::Var(v)) => (v, (*c, *cty), flip(*op)),
        _ => return,
    };
    let Ok(i) = vars.binary_search(var) else { return };
    let opty = Ty::usual(var.ty, c.1);
    // only sound when the comparison order matches the variable's order
    let var_order_signed = var.ty.is_signed();
    if opty.is_signed() != var_order_signed {
        return;
    }
    let ck = if opty.is_signed() { c.0 as i32 as i64 } else { c.0 as i64 };
    let iv = &mut intervals[i];
    match op {
        BinOp::Lt => iv.hi = iv.hi.min(ck - 1),
        BinOp::Le => iv.hi = iv.hi.min(ck),
        BinOp::Gt => iv.lo = iv.lo.max(ck + 1),
        BinOp::Ge => iv.lo = iv.lo.max(ck),
        BinOp::Eq => {
            iv.lo = iv.lo.max(ck);
            iv.hi = iv.hi.min(ck);
        }
        BinOp::Ne => {
            iv.excluded.insert(ck);
        }
        _ => {}
    }
}

fn flip(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        o => o,
    }
}

#[cfg(test)]
mod tests;
