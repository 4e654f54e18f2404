use std::collections::BTreeSet;

use log::debug;

use crate::solver::SolveOutcome;

use super::exec::{End, Executor};
use super::state::SymState;
use super::{CompletedPath, ExceptionCategory, ExceptionRecord, ExploreResult, Site};

/// Turns finished states into solved paths.
pub(crate) struct Collector<'a, 's> {
    exec: &'a Executor<'s>,
    pub result: ExploreResult,
    /// Keep only the first path per fault site.
    pub dedup_faults: bool,
    fault_sites: BTreeSet<(ExceptionCategory, Site)>,
}

impl<'a, 's> Collector<'a, 's> {
    pub fn new(exec: &'a Executor<'s>) -> Self {
        Collector {
            exec,
            result: ExploreResult::default(),
            dedup_faults: true,
            fault_sites: BTreeSet::new(),
        }
    }

    pub fn fault_sites(&self) -> usize {
        self.fault_sites.len()
    }

    /// Records `e`; returns the index of the new path, if one was produced.
    pub fn end(&mut self, e: End) -> Option<usize> {
        match e {
            End::Exit(st) => self.complete(st, None),
            End::Fault(st, rec) => {
                let key = (rec.category, rec.site.clone());
                if self.dedup_faults && self.fault_sites.contains(&key) {
                    return None;
                }
                let r = self.complete(st, Some(rec));
                if r.is_some() {
                    self.fault_sites.insert(key);
                }
                r
            }
            End::Stuck(_, r) => {
                debug!("state stuck: {r}");
                self.result.stuck.push(r.to_string());
                None
            }
            End::Pruned(_) => {
                self.result.bound_hit = true;
                None
            }
            End::Unknown(_) => {
                self.result.unknown += 1;
                None
            }
        }
    }

    fn complete(&mut self, st: SymState, exception: Option<ExceptionRecord>) -> Option<usize> {
        match self.exec.solve_state(&st) {
            SolveOutcome::Sat(model) => {
                let id = self.result.paths.len();
                self.result.paths.push(CompletedPath {
                    id,
                    pc: st.pc,
                    model,
                    inputs: st.mem.inputs().to_vec(),
                    trace: st.trace,
                    stmts: st.stmts,
                    decisions: st.decisions,
                    exception,
                });
                Some(id)
            }
            SolveOutcome::Unsat(_) => None,
            SolveOutcome::UnknownWithinBudget(r) => {
                debug!("path dropped, solver gave up: {r}");
                self.result.unknown += 1;
                None
            }
        }
    }
}
