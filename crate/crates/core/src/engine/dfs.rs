use std::collections::BTreeSet;
use std::time::Instant;

use super::collect::Collector;
use super::exec::{Executor, Mode};
use super::{EngineConfig, ExploreResult, Subject};

/// Plain depth-first exploration, first successor first. Stops once every
/// labeled edge has been covered by a finished path or the budget runs out.
pub fn dfs_search(subject: &Subject, function: &str, config: &EngineConfig) -> Option<ExploreResult> {
    let func = subject.function_index(function)?;
    let cfg = &subject.cfgs[func];
    let exec = Executor::new(subject, config, Mode::Symbolic);
    let mut col = Collector::new(&exec);
    let universe: BTreeSet<_> = cfg.labeled_edges().map(|e| e.id).collect();
    let started = Instant::now();
    let mut stack = vec![exec.initial_state(func)];
    col.result.states = 1;
    let mut hit = false;
    while let Some(s) = stack.pop() {
        if col.result.states >= config.state_cap || started.elapsed() >= config.time_limit {
            hit = true;
            break;
        }
        let adv = exec.advance(s);
        for e in adv.ends {
            if let Some(i) = col.end(e) {
                let trace = col.result.paths[i].trace.clone();
                col.result.visited.extend(trace);
            }
        }
        col.result.states += adv.children.len();
        stack.extend(adv.children.into_iter().rev().map(|c| c.state));
        if universe.is_subset(&col.result.visited) {
            break;
        }
    }
    let mut result = col.result;
    result.incomplete = hit && !universe.is_subset(&result.visited);
    Some(result)
}
