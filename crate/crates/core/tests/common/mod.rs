#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use smartgen::cfg::{EdgeId, StmtLoc};
use smartgen::coverage::Vector;
use smartgen::engine::{ExceptionCategory, EngineConfig, Site, Subject};
use smartgen::frontend::{load_program, Type};
use smartgen::testgen::{replay_concrete, Inputs};

pub const DOMAIN: std::ops::RangeInclusive<i64> = -64..=64;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_source(file: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn corpus(file: &str) -> Subject {
    let src = corpus_source(file);
    match load_program(&src) {
        Ok(p) => Subject::new(p),
        Err(e) => panic!("{}", e.render(file)),
    }
}

/// Integer parameters and integer globals the function touches; every
/// other input stays at zero.
pub fn dims(s: &Subject, function: &str) -> Vec<String> {
    let f = s.program.function(function).expect("function");
    let mut out: Vec<String> = f
        .params
        .iter()
        .filter(|p| matches!(p.ty, Type::Int(_)))
        .map(|p| p.name.clone())
        .collect();
    for &g in &f.globals_used {
        let g = &s.program.globals[g];
        if matches!(g.ty, Type::Int(_)) {
            out.push(g.name.clone());
        }
    }
    out
}

/// Everything observed by running the function on every point of the grid.
#[derive(Debug, Default)]
pub struct GridOracle {
    pub points: usize,
    pub failed: usize,
    pub edges: BTreeSet<EdgeId>,
    pub traces: BTreeSet<Vec<EdgeId>>,
    pub stmt_traces: BTreeSet<Vec<StmtLoc>>,
    pub vectors: BTreeMap<usize, BTreeSet<Vector>>,
    pub faults: BTreeSet<(ExceptionCategory, Site)>,
}

pub fn grid_oracle(s: &Subject, function: &str) -> GridOracle {
    let cfg = s.cfg(function).expect("function");
    let labeled: BTreeSet<EdgeId> = cfg.labeled_edges().map(|e| e.id).collect();
    let names = dims(s, function);
    let config = EngineConfig::default();
    let mut o = GridOracle::default();
    let mut point = vec![*DOMAIN.start(); names.len()];
    loop {
        let inputs: Inputs = names.iter().cloned().zip(point.iter().copied()).collect();
        o.points += 1;
        match replay_concrete(s, function, &inputs, &config) {
            Ok(r) => {
                o.edges.extend(r.trace.iter().filter(|e| labeled.contains(e)));
                for d in &r.decisions {
                    let out = d.outcome == smartgen::cfg::Outcome::True;
                    o.vectors.entry(d.decision).or_default().insert((d.vector.clone(), out));
                }
                o.traces.insert(r.trace);
                o.stmt_traces.insert(r.stmts);
                if let Some(e) = r.exception {
                    o.faults.insert((e.category, e.site));
                }
            }
            Err(_) => o.failed += 1,
        }
        let mut k = 0;
        while k < point.len() {
            if point[k] < *DOMAIN.end() {
                point[k] += 1;
                break;
            }
            point[k] = *DOMAIN.start();
            k += 1;
        }
        if k == point.len() {
            break;
        }
    }
    o
}

/// Masking MC/DC by wildcard expansion: a masked condition may take either
/// value, and a condition is shown once two completions differ only in it
/// and disagree on the outcome.
pub fn masking_oracle(k: usize, vectors: &BTreeSet<Vector>) -> usize {
    let complete = |v: &[Option<bool>]| -> Vec<Vec<bool>> {
        let mut out = vec![Vec::new()];
        for c in v {
            let choices: &[bool] = match c {
                Some(true) => &[true],
                Some(false) => &[false],
                None => &[false, true],
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    choices.iter().map(move |&b| {
                        let mut q = p.clone();
                        q.push(b);
                        q
                    })
                })
                .collect();
        }
        out
    };
    let expanded: Vec<(Vec<Option<bool>>, Vec<Vec<bool>>, bool)> =
        vectors.iter().map(|(v, o)| (v.clone(), complete(v), *o)).collect();
    (0..k)
        .filter(|&i| {
            expanded.iter().any(|(va, ca, oa)| {
                expanded.iter().any(|(vb, cb, ob)| {
                    oa != ob
                        && va[i].is_some()
                        && vb[i].is_some()
                        && ca.iter().any(|x| {
                            cb.iter()
                                .any(|y| (0..k).all(|j| (j == i) == (x[j] != y[j])))
                        })
                })
            })
        })
        .count()
}

/// Lines carrying a bug marker.
pub fn bug_lines(file: &str) -> BTreeSet<u32> {
    corpus_source(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.contains("/* bug */"))
        .map(|(i, _)| i as u32 + 1)
        .collect()
}
