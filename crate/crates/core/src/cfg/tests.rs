use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use super::*;
use crate::frontend::load_program;

fn cfg_of(src: &str) -> Cfg {
    let p = load_program(src).unwrap();
    build_cfg(&p.functions[0])
}

#[test]
fn straight_line() {
    let g = cfg_of("int f(){ return 1; }");
    assert_eq!(g.nodes.len(), 3);
    assert_eq!(g.edges.len(), 2);
    assert_eq!(g.labeled_edges().count(), 0);
    assert_eq!(g.dist_to_exit(g.entry), 2);
    assert_eq!(g.dist_to_exit(g.exit), 0);
}

#[test]
fn diamond() {
    let g = cfg_of("int f(int x){ int y; if (x>0) y=1; else y=2; return y; }");
    let branches: Vec<_> = g.branch_nodes().collect();
    assert_eq!(branches.len(), 1);
    let b = branches[0];
    let outs: Vec<Outcome> = b.succs.iter().map(|&e| g.edge(e).label.unwrap().outcome).collect();
    assert_eq!(outs, [Outcome::True, Outcome::False]);
    // arms join before the exit
    let join: BTreeSet<NodeId> = g.successors(b.id).flat_map(|a| g.successors(a).collect::<Vec<_>>()).collect();
    assert_eq!(join.len(), 1);
    let j = *join.iter().next().unwrap();
    assert_ne!(j, g.exit);
    assert_eq!(g.dist_to_exit(b.id), 3);
    assert_eq!(g.dominators(j), &[0, 1, b.id, j].iter().copied().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>()[..]);
}

#[test]
fn bare_diamond_distance_and_dominators() {
    let g = cfg_of("void f(int x){ int y; if (x>0) y=1; else y=2; }");
    let b = g.branch_nodes().next().unwrap().id;
    assert_eq!(g.dist_to_exit(b), 2);
    assert_eq!(g.dominators(g.exit), &[0, 1, b, g.exit]);
}

#[test]
fn while_with_inner_if() {
    let g = cfg_of("void f(int a){ int i = 0; int s; while (i<3) { if (a) s=1; else s=2; i++; } }");
    assert_eq!(g.branch_nodes().count(), 2);
    assert_eq!(g.labeled_edges().count(), 4);
    assert_eq!(g.back_edges().count(), 1);
    let back = g.back_edges().next().unwrap();
    assert_eq!(g.node(back.to).kind, NodeKind::Branch);
}

#[test]
fn for_loop_shape() {
    let g = cfg_of("int f(int n){ int s = 0; for (int i = 0; i < n; i++) s += i; return s; }");
    // entry, [s=0; i=0], branch, body, step, return, exit
    assert_eq!(g.nodes.len(), 7);
    assert_eq!(g.node(1).statements.len(), 2);
    assert_eq!(g.back_edges().count(), 1);
}

#[test]
fn switch_edges_per_label() {
    let g = cfg_of("int f(int x){ switch (x) { case 1: case 2: return 5; case 7: x = 0; } return x; }");
    let b = g.branch_nodes().next().unwrap();
    let outs: Vec<Outcome> = b.succs.iter().map(|&e| g.edge(e).label.unwrap().outcome).collect();
    assert_eq!(outs, [Outcome::Case(1), Outcome::Case(2), Outcome::Case(7), Outcome::Default]);
    assert!(g.decisions[0].is_switch);
    let t1 = g.edge(b.succs[0]).to;
    assert_eq!(t1, g.edge(b.succs[1]).to);
}

#[test]
fn short_circuit_stays_in_one_node() {
    let g = cfg_of("int f(int x, int y){ if (y != 0 && (((x-1)*y) % y) == 1) return 1; return 0; }");
    assert_eq!(g.branch_nodes().count(), 1);
    assert_eq!(g.decisions[0].conditions.len(), 2);
}

#[test]
fn decomposition_order() {
    let g = cfg_of("int f(int a, int b, int c){ if ((a || b) && !c) return 1; return 0; }");
    let d = &g.decisions[0];
    let names: Vec<String> = d
        .conditions
        .iter()
        .map(|c| crate::frontend::pretty_expr(c, &[]))
        .collect();
    assert_eq!(names, ["a", "b", "c"]);
    assert_eq!(
        d.tree,
        BoolTree::And(
            Box::new(BoolTree::Or(Box::new(BoolTree::Cond(0)), Box::new(BoolTree::Cond(1)))),
            Box::new(BoolTree::Not(Box::new(BoolTree::Cond(2))))
        )
    );
}

#[test]
fn break_continue_targets() {
    let g = cfg_of(
        "int f(int n){ int i = 0; while (1) { i++; if (i > n) break; if (i == 2) continue; n--; } return i; }",
    );
    for n in &g.nodes {
        if n.kind != NodeKind::Exit {
            assert!(!n.succs.is_empty());
        }
    }
    assert!(g.dist_to_exit(g.entry) < INFINITE);
}

#[test]
fn dead_code_after_return_is_pruned() {
    let g = cfg_of("int f(int x){ return 1; x = 2; if (x) return 3; return 4; }");
    assert_eq!(g.nodes.len(), 3);
}

#[test]
fn infinite_loop_is_dead_end() {
    let g = cfg_of("void f(){ while (1) { } }");
    let b = g.branch_nodes().next().unwrap().id;
    // the false edge still leads to exit, though it is infeasible
    assert_eq!(g.dist_to_exit(b), 1);
}

#[test]
fn dot_output() {
    let g = cfg_of("int f(int x){ if (x > 0) return 1; return 0; }");
    let d = g.to_dot(&[]);
    assert!(d.starts_with("digraph \"f\""));
    assert!(d.contains("label=\"x > 0\""));
    assert!(d.contains("[label=\"T\"]"));
}

// ---------------------------------------------------------------------------
// random programs

fn arb_stmt(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        Just("x = x + 1;".to_string()),
        Just("y = x;".to_string()),
        Just("return x;".to_string()),
        Just("x = 2;".to_string()),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let sub = prop::collection::vec(arb_stmt(depth - 1), 0..3).prop_map(|v| format!("{{ {} }}", v.join(" ")));
    prop_oneof![
        3 => leaf,
        2 => (sub.clone(), sub.clone()).prop_map(|(a, b)| format!("if (x > y) {a} else {b}")),
        1 => sub.clone().prop_map(|a| format!("if (x == 3 || y < 2) {a}")),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| format!("switch (x) {{ case 1: {a} break; case 4: {b} default: y = 1; }}")),
    ]
    .boxed()
}

fn arb_loop_stmt(depth: u32) -> BoxedStrategy<String> {
    prop_oneof![
        arb_stmt(depth),
        prop::collection::vec(arb_stmt(depth.saturating_sub(1)), 0..3)
            .prop_map(|v| format!("while (x < 9) {{ x = x + 1; {} }}", v.join(" "))),
        prop::collection::vec(arb_stmt(depth.saturating_sub(1)), 0..3)
            .prop_map(|v| format!("for (y = 0; y < 3; y++) {{ if (x == y) break; {} }}", v.join(" "))),
    ]
    .boxed()
}

fn program(body: Vec<String>) -> String {
    format!("int f(int x, int y){{ {} return y; }}", body.join(" "))
}

fn bfs_oracle(g: &Cfg, from: NodeId) -> u32 {
    let mut dist = vec![u32::MAX; g.nodes.len()];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        if v == g.exit {
            return dist[v];
        }
        for e in &g.edges {
            if e.from == v && dist[e.to] == u32::MAX {
                dist[e.to] = dist[v] + 1;
                q.push_back(e.to);
            }
        }
    }
    INFINITE
}

fn all_paths_dominators(g: &Cfg, target: NodeId) -> BTreeSet<NodeId> {
    fn walk(g: &Cfg, v: NodeId, target: NodeId, path: &mut Vec<NodeId>, acc: &mut Option<BTreeSet<NodeId>>) {
        path.push(v);
        if v == target {
            let s: BTreeSet<NodeId> = path.iter().copied().collect();
            *acc = Some(match acc.take() {
                None => s,
                Some(a) => a.intersection(&s).copied().collect(),
            });
        } else {
            for e in &g.edges {
                if e.from == v {
                    walk(g, e.to, target, path, acc);
                }
            }
        }
        path.pop();
    }
    let mut acc = None;
    walk(g, g.entry, target, &mut Vec::new(), &mut acc);
    acc.unwrap_or_else(|| [target].into())
}

fn check_invariants(g: &Cfg) {
    assert_eq!(g.entry, 0);
    assert_eq!(g.exit, g.nodes.len() - 1);
    assert_eq!(g.node(g.exit).kind, NodeKind::Exit);
    for n in &g.nodes {
        match n.kind {
            NodeKind::Branch => {
                assert!(n.succs.len() >= 2);
                assert!(n.decision.is_some());
                let labels: BTreeSet<_> = n.succs.iter().map(|&e| g.edge(e).label.unwrap()).collect();
                assert_eq!(labels.len(), n.succs.len());
            }
            NodeKind::Sequential => {
                assert_eq!(n.succs.len(), 1);
                assert!(!n.statements.is_empty());
                assert!(n.decision.is_none());
            }
            NodeKind::Entry => assert_eq!(n.succs.len(), 1),
            NodeKind::Exit => assert!(n.succs.is_empty()),
        }
        for &e in &n.succs {
            assert_eq!(g.edge(e).label.is_some(), n.kind == NodeKind::Branch);
        }
        if n.id != g.exit {
            assert!(g.dominates(g.entry, n.id), "node {} unreachable", n.id);
        }
    }
    let out_degree: usize = g.branch_nodes().map(|n| n.succs.len()).sum();
    assert_eq!(out_degree, g.labeled_edges().count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn structural_invariants(body in prop::collection::vec(arb_loop_stmt(3), 0..5)) {
        let g = cfg_of(&program(body));
        check_invariants(&g);
    }

    #[test]
    fn distances_match_bfs(body in prop::collection::vec(arb_loop_stmt(2), 0..5)) {
        let g = cfg_of(&program(body));
        for n in 0..g.nodes.len() {
            prop_assert_eq!(g.dist_to_exit(n), bfs_oracle(&g, n));
        }
    }

    #[test]
    fn dominators_match_path_enumeration(body in prop::collection::vec(arb_stmt(2), 0..4)) {
        let g = cfg_of(&program(body));
        prop_assume!(g.nodes.len() <= 12);
        prop_assert_eq!(g.back_edges().count(), 0);
        for n in 0..g.nodes.len() {
            let want: Vec<NodeId> = all_paths_dominators(&g, n).into_iter().collect();
            prop_assert_eq!(g.dominators(n), &want[..]);
        }
    }
}
