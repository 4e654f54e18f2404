use std::collections::VecDeque;

use super::{Cfg, EdgeId, NodeId};

/// Distance sentinel for nodes that cannot reach the target.
pub const INFINITE: u32 = u32::MAX;

pub(super) fn reverse_bfs(g: &Cfg, target: NodeId) -> Vec<u32> {
    let mut dist = vec![INFINITE; g.nodes.len()];
    dist[target] = 0;
    let mut q = VecDeque::from([target]);
    while let Some(v) = q.pop_front() {
        for p in g.predecessors(v) {
            if dist[p] == INFINITE {
                dist[p] = dist[v] + 1;
                q.push_back(p);
            }
        }
    }
    dist
}

/// Iterative data-flow dominators; unreachable nodes dominate only themselves.
pub(super) fn dominator_sets(g: &Cfg) -> Vec<Vec<NodeId>> {
    let n = g.nodes.len();
    let mut reach = vec![false; n];
    let mut stack = vec![g.entry];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut reach[v], true) {
            stack.extend(g.successors(v));
        }
    }
    let mut dom: Vec<Vec<bool>> = (0..n).map(|i| if i == g.entry || !reach[i] { single(n, i) } else { vec![true; n] }).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if v == g.entry || !reach[v] {
                continue;
            }
            let mut acc = vec![true; n];
            for p in g.predecessors(v).filter(|&p| reach[p]) {
                for (a, &d) in acc.iter_mut().zip(&dom[p]) {
                    *a &= d;
                }
            }
            acc[v] = true;
            if acc != dom[v] {
                dom[v] = acc;
                changed = true;
            }
        }
    }
    dom.into_iter()
        .map(|set| set.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
        .collect()
}

fn single(n: usize, i: usize) -> Vec<bool> {
    let mut v = vec![false; n];
    v[i] = true;
    v
}

pub(super) fn natural_loop(g: &Cfg, e: EdgeId) -> Vec<NodeId> {
    let edge = g.edge(e);
    let head = edge.to;
    let mut body = vec![false; g.nodes.len()];
    body[head] = true;
    let mut stack = vec![edge.from];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut body[v], true) {
            stack.extend(g.predecessors(v));
        }
    }
    body.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}
