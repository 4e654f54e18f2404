use std::collections::BTreeSet;

use super::*;
use crate::cfg::{build_cfg, NodeKind};
use crate::engine::{guided_search, EngineConfig, GuidedOutcome, Subject, PAIR_TIME};
use crate::frontend::load_program;

fn analyse(src: &str) -> (Program, Cfg, Vec<DefUsePair>, DefUseTable) {
    let p = load_program(src).expect("program loads");
    let cfg = build_cfg(&p.functions[0]);
    let (pairs, t) = compute_defuse_pairs(&p, &p.functions[0], &cfg);
    (p, cfg, pairs, t)
}

fn stmt(cfg: &Cfg, l: StmtLoc) -> &crate::frontend::Stmt {
    &cfg.node(l.0).statements[l.1]
}

fn is_decl(cfg: &Cfg, l: StmtLoc) -> bool {
    cfg.node(l.0).kind == NodeKind::Sequential && matches!(stmt(cfg, l).kind, crate::frontend::StmtKind::Decl(_))
}

fn is_return(cfg: &Cfg, l: StmtLoc) -> bool {
    cfg.node(l.0).kind == NodeKind::Sequential && matches!(stmt(cfg, l).kind, crate::frontend::StmtKind::Return(_))
}

fn of<'a>(pairs: &'a [DefUsePair], var: &str) -> Vec<&'a DefUsePair> {
    pairs.iter().filter(|p| p.variable == var).collect()
}

/// Statement traces of every entry-to-exit path taking each back edge at most twice.
fn path_traces(cfg: &Cfg, t: &DefUseTable) -> Vec<Vec<StmtLoc>> {
    fn go(cfg: &Cfg, t: &DefUseTable, n: NodeId, backs: &mut Vec<usize>, acc: &mut Vec<StmtLoc>, out: &mut Vec<Vec<StmtLoc>>) {
        let mark = acc.len();
        if cfg.node(n).kind != NodeKind::Entry {
            acc.extend(t.locs(cfg, n));
        }
        if n == cfg.exit {
            out.push(acc.clone());
        }
        for &e in &cfg.node(n).succs {
            if cfg.is_back_edge(e) {
                if backs[e] == 2 {
                    continue;
                }
                backs[e] += 1;
            }
            go(cfg, t, cfg.edge(e).to, backs, acc, out);
            if cfg.is_back_edge(e) {
                backs[e] -= 1;
            }
        }
        acc.truncate(mark);
    }
    let mut out = Vec::new();
    go(cfg, t, cfg.entry, &mut vec![0; cfg.edges.len()], &mut Vec::new(), &mut out);
    out
}

fn brute_force_pairs(cfg: &Cfg, t: &DefUseTable) -> BTreeSet<(String, StmtLoc, StmtLoc)> {
    let mut out = BTreeSet::new();
    for trace in path_traces(cfg, t) {
        let mut live: BTreeMap<VarKey, StmtLoc> = t.defs[&t.entry].iter().map(|k| (k.clone(), t.entry)).collect();
        for &l in &trace {
            if let Some(us) = t.uses.get(&l) {
                for u in us {
                    if let Some(d) = live.get(u) {
                        out.insert((t.name(u).to_string(), *d, l));
                    }
                }
            }
            if let Some(ds) = t.defs.get(&l) {
                for d in ds {
                    live.insert(d.clone(), l);
                }
            }
        }
    }
    out
}

const PROGRAMS: &[&str] = &[
    "int f(int a){ int x = 1; if (a > 0) x = 2; else x = 3; return x + a; }",
    "int f(int n){ int s = 0; int i = 0; while (i < n) { s = s + i; i = i + 1; } return s; }",
    "int f(int a, int b){ int x = a; if (a > b) { x = b; if (x > 3) x = 0; } return x; }",
    "struct P { int u; int v; }; int f(int a){ struct P p; p.u = a; p.v = 2; if (p.u > 1) p.v = p.u; return p.v; }",
    "int f(int k){ int a[3] = {1,2,3}; int r = 0; switch (k) { case 0: a[0] = 9; break; case 1: r = a[1]; break; default: r = k; } return r + a[0]; }",
    "int g; int f(int x){ g = x; for (int i = 0; i < 2; i++) { g += i; } return g; }",
];

#[test]
fn single_use_gives_one_pair() {
    let (_, _, pairs, _) = analyse("int f(){ int x = 1; int y = x + 2; return y; }");
    assert_eq!(of(&pairs, "x").len(), 1);
}

#[test]
fn redefinition_kills_earlier_def() {
    let (_, cfg, pairs, _) = analyse("int f(){ int x = 1; x = 2; int y = x; return y; }");
    let xs = of(&pairs, "x");
    assert_eq!(xs.len(), 1);
    let n = cfg.node(xs[0].def.0);
    assert_eq!(xs[0].def.1, 1);
    assert!(n.statements.len() >= 3);
}

#[test]
fn defs_in_both_arms_reach_the_join() {
    let (_, _, pairs, _) = analyse("int f(int c){ int x; if (c) x = 1; else x = 2; return x; }");
    assert_eq!(of(&pairs, "x").len(), 2);
    let c = of(&pairs, "c");
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].kind, UseKind::PUse);
}

#[test]
fn pairs_match_path_enumeration() {
    for src in PROGRAMS {
        let (_, cfg, pairs, t) = analyse(src);
        let got: BTreeSet<_> = pairs.iter().map(|p| (p.variable.clone(), p.def, p.use_site)).collect();
        assert_eq!(got, brute_force_pairs(&cfg, &t), "{src}");
    }
}

#[test]
fn cut_points_lie_on_every_clean_path() {
    for src in PROGRAMS {
        let (_, cfg, pairs, t) = analyse(src);
        let traces = path_traces(&cfg, &t);
        for p in &pairs {
            let plan = compute_cut_points(&cfg, &t, p);
            for tr in &traces {
                // shortest covering prefix of the node sequence
                let Some(end) = (1..=tr.len()).find(|&i| covers_pair(&t, p, &tr[..i])) else { continue };
                let mut nodes = vec![cfg.entry];
                nodes.extend(tr[..end].iter().map(|l| l.0));
                nodes.dedup();
                assert_eq!(cut_progress(&plan, nodes), plan.cut_points.len(), "{src}: {p}");
            }
        }
    }
}

#[test]
fn straight_line_cut_points_are_the_whole_path() {
    let (_, cfg, pairs, t) = analyse("int f(int a){ int x = a; int y = 0; y = x + 1; return y; }");
    let p = of(&pairs, "x")[0];
    let plan = compute_cut_points(&cfg, &t, p);
    assert_eq!(plan.cut_points, vec![cfg.entry, p.def.0]);
    assert_eq!(p.def.0, p.use_site.0);
}

#[test]
fn diamond_cut_points_skip_the_arms() {
    let (_, cfg, pairs, t) = analyse("int f(int a){ int x = a; int y; if (a > 0) y = 1; else y = 2; return x + y; }");
    let p = of(&pairs, "x").into_iter().find(|p| p.use_site.0 != p.def.0).unwrap();
    let plan = compute_cut_points(&cfg, &t, p);
    let branch = cfg.branch_nodes().next().unwrap().id;
    assert!(plan.cut_points.contains(&branch));
    for e in &cfg.node(branch).succs {
        assert!(!plan.cut_points.contains(&cfg.edge(*e).to) || cfg.edge(*e).to == p.use_site.0);
    }
    assert_eq!(*plan.cut_points.last().unwrap(), p.use_site.0);
}

#[test]
fn loop_header_appears_once() {
    let (_, cfg, pairs, t) = analyse("int f(int n){ int s = 0; int i = 0; while (i < n) { s = s + 1; i = i + 1; } return s; }");
    let header = cfg.branch_nodes().next().unwrap().id;
    let p = of(&pairs, "s")
        .into_iter()
        .find(|p| !is_decl(&cfg, p.def) && is_return(&cfg, p.use_site))
        .unwrap();
    let plan = compute_cut_points(&cfg, &t, p);
    assert_eq!(plan.cut_points.iter().filter(|&&n| n == header).count(), 1);
}

fn guided(src: &str, var: &str) -> Vec<GuidedOutcome> {
    let (program, cfg, pairs, t) = analyse(src);
    let s = Subject::new(program);
    let name = cfg.function.clone();
    of(&pairs, var)
        .into_iter()
        .map(|p| {
            let plan = compute_cut_points(&cfg, &t, p);
            guided_search(&s, &name, &t, &plan, &EngineConfig::default(), PAIR_TIME).unwrap()
        })
        .collect()
}

#[test]
fn guided_covers_straight_line() {
    let out = guided("int f(int a){ int x = a + 1; int y = x * 2; return y; }", "x");
    assert!(out.iter().all(|o| matches!(o, GuidedOutcome::Covered(_))));
}

#[test]
fn guided_avoids_the_redefinition() {
    let src = "int f(int a, int c){ int x = a; if (c > 0) x = 5; return x; }";
    let (program, cfg, pairs, t) = analyse(src);
    let s = Subject::new(program);
    let p = of(&pairs, "x")
        .into_iter()
        .find(|p| is_decl(&cfg, p.def) && is_return(&cfg, p.use_site))
        .unwrap();
    let plan = compute_cut_points(&cfg, &t, p);
    let GuidedOutcome::Covered(path) = guided_search(&s, "f", &t, &plan, &EngineConfig::default(), PAIR_TIME).unwrap() else {
        panic!("not covered")
    };
    assert!((path.model.get("c").unwrap_or(0) as i32) <= 0);
}

#[test]
fn contradictory_guard_is_unsat() {
    let out = guided("int f(int a){ int x = a; int y = 0; if (a > 5) { if (a < 3) { y = x; } } return y; }", "x");
    assert!(out.iter().any(|o| matches!(o, GuidedOutcome::UnsatWithinBudget { undecided: false, .. })));
}

#[test]
fn classification_is_a_partition() {
    let pairs: Vec<DefUsePair> = analyse(PROGRAMS[0]).2;
    let outcomes: Vec<PairOutcome> = (0..pairs.len())
        .map(|i| match i % 3 {
            0 => PairOutcome::Witness(i),
            1 => PairOutcome::Exhausted,
            _ => PairOutcome::Undecided,
        })
        .collect();
    let r = classify_pairs(&pairs, &outcomes);
    assert_eq!(r.covered.len() + r.uncovered.len() + r.unsat_within_budget.len(), pairs.len());
    assert!(r.ratio() <= 100.0);
}
