use std::time::{Duration, Instant};

use log::debug;

use crate::dataflow::{cut_progress, pair_progress, CutPointPlan, DefUseTable, PairProgress};

use super::collect::Collector;
use super::exec::{End, Executor, Mode};
use super::state::SymState;
use super::{CompletedPath, EngineConfig, Subject};

pub const PAIR_TIME: Duration = Duration::from_secs(2);

#[derive(Clone, Debug)]
pub enum GuidedOutcome {
    Covered(CompletedPath),
    UnsatWithinBudget {
        states: usize,
        /// Some state was dropped as undecidable or unsupported.
        undecided: bool,
    },
}

/// Ranking key; larger is better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Rank {
    covered: bool,
    cut: usize,
    /// Negated distance to the next goal.
    near: i64,
    clean: bool,
}

struct Ranked {
    rank: Rank,
    seq: usize,
    state: SymState,
}

/// Searches for a path that covers `plan.pair`, steering by cut points.
pub fn guided_search(
    subject: &Subject,
    function: &str,
    table: &DefUseTable,
    plan: &CutPointPlan,
    config: &EngineConfig,
    time: Duration,
) -> Option<GuidedOutcome> {
    let func = subject.function_index(function)?;
    let cfg = &subject.cfgs[func];
    let exec = Executor::new(subject, config, Mode::Symbolic);
    let mut col = Collector::new(&exec);
    col.dedup_faults = false;
    let started = Instant::now();
    let rank = |s: &SymState| {
        let progress = pair_progress(table, &plan.pair, &s.stmts);
        let nodes = std::iter::once(cfg.entry).chain(s.trace.iter().map(|&e| cfg.edge(e).to));
        let cut = cut_progress(plan, nodes);
        let here = s.outer_node();
        let covered = progress == PairProgress::Covered;
        let dist = if covered || cut >= plan.cut_points.len() {
            cfg.dist_to_exit(here)
        } else {
            plan.distances[cut][here]
        };
        Rank {
            covered,
            cut,
            near: -(dist.min(1 << 20) as i64),
            clean: progress != PairProgress::Killed,
        }
    };
    let init = exec.initial_state(func);
    let mut queue = vec![Ranked {
        rank: rank(&init),
        seq: 0,
        state: init,
    }];
    let mut seq = 1;
    let mut states = 1;
    let mut undecided = false;
    while !queue.is_empty() {
        if states >= config.state_cap || started.elapsed() >= time {
            debug!("{function}: pair {} out of budget", plan.pair.id);
            break;
        }
        let best = (0..queue.len())
            .max_by_key(|&i| (queue[i].rank, std::cmp::Reverse(queue[i].seq)))
            .expect("nonempty queue");
        let cur = queue.swap_remove(best).state;
        let adv = exec.advance(cur);
        for e in adv.ends {
            match e {
                End::Exit(_) | End::Fault(..) => {
                    if let Some(i) = col.end(e) {
                        let p = &col.result.paths[i];
                        if pair_progress(table, &plan.pair, &p.stmts) == PairProgress::Covered {
                            return Some(GuidedOutcome::Covered(p.clone()));
                        }
                    }
                }
                End::Stuck(..) | End::Unknown(_) => {
                    undecided = true;
                    col.end(e);
                }
                End::Pruned(_) => {}
            }
        }
        for c in adv.children {
            states += 1;
            queue.push(Ranked {
                rank: rank(&c.state),
                seq,
                state: c.state,
            });
            seq += 1;
        }
    }
    Some(GuidedOutcome::UnsatWithinBudget { states, undecided })
}
