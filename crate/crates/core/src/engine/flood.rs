use std::collections::BTreeSet;
use std::time::Instant;

use log::{debug, info};

use crate::cfg::{Cfg, EdgeId, Outcome};

use super::collect::Collector;
use super::exec::{Child, Executor, Mode};
use super::state::SymState;
use super::{CompletedPath, Criterion, DecisionEval, EngineConfig, ExploreResult, Subject};

/// A coverage goal of the flood: a branch edge, or for MC/DC an edge
/// together with the condition vector that led to it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Edge(EdgeId),
    Eval(EdgeId, Vec<Option<bool>>),
}

/// All keys of `cfg` under `criterion`.
pub fn coverage_keys(cfg: &Cfg, criterion: Criterion) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    for n in cfg.branch_nodes() {
        let d = cfg.decision_at(n.id).expect("branch node has a decision");
        if criterion == Criterion::Mcdc && !d.is_switch {
            for (v, o) in d.tree.evaluations(d.conditions.len()) {
                let outcome = if o { Outcome::True } else { Outcome::False };
                if let Some(e) = cfg.edge_for(n.id, outcome) {
                    out.insert(Key::Eval(e, v));
                }
            }
        } else {
            out.extend(n.succs.iter().map(|&e| Key::Edge(e)));
        }
    }
    out
}

fn key_of(cfg: &Cfg, criterion: Criterion, e: EdgeId, eval: Option<&DecisionEval>) -> Key {
    match eval {
        Some(ev) if criterion == Criterion::Mcdc && !cfg.decision_at(cfg.edge(e).from).is_some_and(|d| d.is_switch) => {
            Key::Eval(e, ev.vector.clone())
        }
        _ => Key::Edge(e),
    }
}

/// Keys a finished path covers.
pub fn path_keys(cfg: &Cfg, criterion: Criterion, p: &CompletedPath) -> Vec<Key> {
    let labeled = p.trace.iter().filter(|&&e| cfg.edge(e).label.is_some());
    labeled
        .zip(&p.decisions)
        .map(|(&e, ev)| key_of(cfg, criterion, e, Some(ev)))
        .collect()
}

struct Entry {
    state: SymState,
    key: Option<Key>,
    discharged: bool,
}

/// Open/close scheduling of states over one function's CFG.
pub struct FloodScheduler<'a, 's> {
    exec: &'a Executor<'s>,
    cfg: &'s Cfg,
    criterion: Criterion,
    open: Vec<Entry>,
    close: Vec<Entry>,
    universe: BTreeSet<Key>,
    visited: BTreeSet<Key>,
    collector: Collector<'a, 's>,
    started: Instant,
}

impl<'a, 's> FloodScheduler<'a, 's> {
    pub fn new(exec: &'a Executor<'s>, func: usize) -> Self {
        let cfg = &exec.subject.cfgs[func];
        let criterion = exec.config.criterion;
        let mut collector = Collector::new(exec);
        collector.result.states = 1;
        FloodScheduler {
            exec,
            cfg,
            criterion,
            open: vec![Entry {
                state: exec.initial_state(func),
                key: None,
                discharged: false,
            }],
            close: Vec::new(),
            universe: coverage_keys(cfg, criterion),
            visited: BTreeSet::new(),
            collector,
            started: Instant::now(),
        }
    }

    fn config(&self) -> &EngineConfig {
        self.exec.config
    }

    fn out_of_budget(&self) -> bool {
        self.collector.result.states >= self.config().state_cap || self.started.elapsed() >= self.config().time_limit
    }

    fn progress(&self) -> usize {
        self.visited.len() + self.collector.fault_sites()
    }

    pub fn run(mut self) -> ExploreResult {
        let mut stalled = 0;
        let mut last = self.progress();
        let mut budget_hit = false;
        loop {
            if self.out_of_budget() {
                budget_hit = true;
                break;
            }
            let Some(entry) = self.open.pop() else {
                if self.close.is_empty() {
                    break;
                }
                let now = self.progress();
                if now == last {
                    stalled += 1;
                    if stalled >= self.config().stall_rounds {
                        debug!("{}: no progress after {stalled} discharge rounds", self.cfg.function);
                        break;
                    }
                } else {
                    stalled = 0;
                }
                last = now;
                self.discharge();
                continue;
            };
            if !entry.discharged && entry.key.as_ref().is_some_and(|k| self.visited.contains(k)) {
                self.close.push(entry);
                continue;
            }
            self.search_shortest_to_exit(entry.state);
        }
        let mut result = self.collector.result;
        let all = self.universe.is_subset(&self.visited);
        result.incomplete = budget_hit && !all;
        if budget_hit && !all {
            result.bound_hit = true;
        }
        info!(
            "{}: {} paths, {} states, {}/{} keys",
            self.cfg.function,
            result.paths.len(),
            result.states,
            self.visited.intersection(&self.universe).count(),
            self.universe.len()
        );
        result
    }

    /// Moves every parked state back to open.
    fn discharge(&mut self) {
        self.open.extend(self.close.drain(..).rev().map(|mut e| {
            e.discharged = true;
            e
        }));
    }

    /// Drives `s` to the exit, preferring unvisited edges and then the
    /// shortest way out; siblings are parked in open or close.
    fn search_shortest_to_exit(&mut self, s: SymState) {
        let mut local: BTreeSet<Key> = BTreeSet::new();
        let mut cur = s;
        loop {
            let adv = self.exec.advance(cur);
            for e in adv.ends {
                if let Some(i) = self.collector.end(e) {
                    self.finish(i);
                }
            }
            if adv.children.is_empty() {
                return;
            }
            self.collector.result.states += adv.children.len();
            let keyed: Vec<(Child, Option<Key>)> = adv
                .children
                .into_iter()
                .map(|c| {
                    let k = c.top.then(|| key_of(self.cfg, self.criterion, c.edge, c.eval.as_ref()));
                    (c, k)
                })
                .collect();
            let fresh = |k: &Option<Key>| k.as_ref().is_some_and(|k| !self.visited.contains(k) && !local.contains(k));
            let dist = |c: &Child| {
                let f = c.state.top();
                self.exec.subject.cfgs[f.func].dist_to_exit(f.node)
            };
            let pick = keyed
                .iter()
                .enumerate()
                .filter(|(_, (_, k))| fresh(k))
                .min_by_key(|(i, (c, _))| (dist(c), *i))
                .or_else(|| keyed.iter().enumerate().min_by_key(|(i, (c, _))| (dist(c), *i)))
                .map(|(i, _)| i)
                .expect("nonempty children");
            let mut chosen = None;
            for (i, (c, k)) in keyed.into_iter().enumerate() {
                if i == pick {
                    chosen = Some((c, k));
                    continue;
                }
                let entry = Entry {
                    discharged: false,
                    key: k.clone(),
                    state: c.state,
                };
                if k.is_some() && fresh(&k) {
                    self.open.push(entry);
                } else {
                    self.close.push(entry);
                }
            }
            let (c, k) = chosen.expect("picked child");
            if let Some(k) = k {
                local.insert(k);
            }
            cur = c.state;
            if self.out_of_budget() {
                self.close.push(Entry {
                    state: cur,
                    key: None,
                    discharged: false,
                });
                return;
            }
        }
    }

    fn finish(&mut self, i: usize) {
        let p = &self.collector.result.paths[i];
        let keys = path_keys(self.cfg, self.criterion, p);
        self.collector.result.visited.extend(p.trace.iter().copied());
        self.visited.extend(keys);
    }
}

/// Explores `function` with the flood policy.
pub fn flood_search(subject: &Subject, function: &str, config: &EngineConfig) -> Option<ExploreResult> {
    let func = subject.function_index(function)?;
    let exec = Executor::new(subject, config, Mode::Symbolic);
    Some(FloodScheduler::new(&exec, func).run())
}
