//! Statement, branch and masking MC/DC accounting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, EdgeId, Outcome, StmtLoc};
use crate::engine::DecisionEval;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("edge {0} is not part of `{1}`")]
    UnknownEdge(EdgeId, String),
    #[error("decision {0} is not part of `{1}`")]
    UnknownDecision(usize, String),
}

/// An exact fraction; empty universes count as fully covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub covered: usize,
    pub total: usize,
}

impl Ratio {
    pub fn new(covered: usize, total: usize) -> Self {
        Ratio { covered, total }
    }

    pub fn is_full(&self) -> bool {
        self.covered == self.total
    }

    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }

    pub fn bucket(&self) -> Bucket {
        if self.is_full() {
            return Bucket::Full;
        }
        // compare covered/total against b/100 without rounding
        let (c, t) = (self.covered as u128 * 100, self.total as u128);
        if c < 10 * t {
            Bucket::Below10
        } else if c < 50 * t {
            Bucket::Below50
        } else if c < 90 * t {
            Bucket::Below90
        } else {
            Bucket::Below100
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.percent())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "0%-10%")]
    Below10,
    #[serde(rename = "10%-50%")]
    Below50,
    #[serde(rename = "50%-90%")]
    Below90,
    #[serde(rename = "90%-100%")]
    Below100,
    #[serde(rename = "100%")]
    Full,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [
        Bucket::Below10,
        Bucket::Below50,
        Bucket::Below90,
        Bucket::Below100,
        Bucket::Full,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Below10 => "0%-10%",
            Bucket::Below50 => "10%-50%",
            Bucket::Below90 => "50%-90%",
            Bucket::Below100 => "90%-100%",
            Bucket::Full => "100%",
        }
    }
}

/// Buckets a percentage in `[0, 100]`; only exactly 100 lands in the top bucket.
pub fn bucketize(percent: f64) -> Bucket {
    match percent {
        p if p >= 100.0 => Bucket::Full,
        p if p >= 90.0 => Bucket::Below100,
        p if p >= 50.0 => Bucket::Below90,
        p if p >= 10.0 => Bucket::Below50,
        _ => Bucket::Below10,
    }
}

/// Function counts per bucket.
pub fn histogram(ratios: impl IntoIterator<Item = Ratio>) -> BTreeMap<Bucket, usize> {
    let mut h: BTreeMap<Bucket, usize> = Bucket::ALL.iter().map(|&b| (b, 0)).collect();
    for r in ratios {
        *h.get_mut(&r.bucket()).expect("all buckets present") += 1;
    }
    h
}

/// One evaluation of a decision: per-condition values (`None` = masked) and the outcome.
pub type Vector = (Vec<Option<bool>>, bool);

/// Which conditions of a `k`-condition decision the vectors show to be
/// independent under masking MC/DC.
pub fn mcdc_covered(k: usize, vectors: &BTreeSet<Vector>) -> Vec<bool> {
    let vs: Vec<&Vector> = vectors.iter().collect();
    (0..k)
        .map(|i| {
            vs.iter().enumerate().any(|(a, (va, oa))| {
                vs[a + 1..].iter().any(|(vb, ob)| {
                    oa != ob
                        && matches!((va[i], vb[i]), (Some(x), Some(y)) if x != y)
                        && (0..k)
                            .filter(|&j| j != i)
                            .all(|j| va[j].is_none() || vb[j].is_none() || va[j] == vb[j])
                })
            })
        })
        .collect()
}

/// Covered share of conditions of one decision.
pub fn mcdc_percent(k: usize, vectors: &BTreeSet<Vector>) -> f64 {
    let c = mcdc_covered(k, vectors).iter().filter(|&&b| b).count();
    Ratio::new(c, k).percent()
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct DecisionInfo {
    conditions: usize,
    is_switch: bool,
}

/// Executed statements, edges and decision vectors of one function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageLedger {
    pub function: String,
    statements: BTreeSet<StmtLoc>,
    branches: BTreeSet<EdgeId>,
    decisions: BTreeMap<usize, DecisionInfo>,
    pub executed_statements: BTreeSet<StmtLoc>,
    pub executed_branches: BTreeSet<EdgeId>,
    pub vectors: BTreeMap<usize, BTreeSet<Vector>>,
    edges: usize,
}

impl CoverageLedger {
    pub fn new(cfg: &Cfg) -> Self {
        CoverageLedger {
            function: cfg.function.clone(),
            statements: cfg.statements().into_iter().collect(),
            branches: cfg.labeled_edges().map(|e| e.id).collect(),
            decisions: cfg
                .decisions
                .iter()
                .map(|d| {
                    (
                        d.id,
                        DecisionInfo {
                            conditions: d.conditions.len(),
                            is_switch: d.is_switch,
                        },
                    )
                })
                .collect(),
            executed_statements: BTreeSet::new(),
            executed_branches: BTreeSet::new(),
            vectors: BTreeMap::new(),
            edges: cfg.edges.len(),
        }
    }

    /// Adds one execution. Statements are derived by the caller from the
    /// same run; decision vectors come from the decision log.
    pub fn record_execution(
        &mut self,
        trace: &[EdgeId],
        stmts: &[StmtLoc],
        decisions: &[DecisionEval],
    ) -> Result<(), CoverageError> {
        if let Some(&e) = trace.iter().find(|&&e| e >= self.edges) {
            return Err(CoverageError::UnknownEdge(e, self.function.clone()));
        }
        if let Some(d) = decisions.iter().find(|d| !self.decisions.contains_key(&d.decision)) {
            return Err(CoverageError::UnknownDecision(d.decision, self.function.clone()));
        }
        self.executed_branches
            .extend(trace.iter().filter(|e| self.branches.contains(e)));
        self.executed_statements
            .extend(stmts.iter().filter(|s| self.statements.contains(s)));
        for d in decisions {
            if self.decisions[&d.decision].is_switch {
                continue;
            }
            let outcome = d.outcome == Outcome::True;
            self.vectors
                .entry(d.decision)
                .or_default()
                .insert((d.vector.clone(), outcome));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &CoverageLedger) {
        self.executed_statements.extend(other.executed_statements.iter().copied());
        self.executed_branches.extend(other.executed_branches.iter().copied());
        for (d, vs) in &other.vectors {
            self.vectors.entry(*d).or_default().extend(vs.iter().cloned());
        }
    }

    pub fn statement(&self) -> Ratio {
        Ratio::new(self.executed_statements.len(), self.statements.len())
    }

    pub fn branch(&self) -> Ratio {
        Ratio::new(self.executed_branches.len(), self.branches.len())
    }

    /// Covered conditions over all conditions of non-switch decisions.
    pub fn mcdc(&self) -> Ratio {
        let mut r = Ratio::new(0, 0);
        for (id, info) in self.decisions.iter().filter(|(_, i)| !i.is_switch) {
            r.total += info.conditions;
            if let Some(vs) = self.vectors.get(id) {
                r.covered += mcdc_covered(info.conditions, vs).iter().filter(|&&b| b).count();
            }
        }
        r
    }

    /// MC/DC share of a single decision.
    pub fn decision_mcdc(&self, id: usize) -> Option<Ratio> {
        let info = self.decisions.get(&id)?;
        let empty = BTreeSet::new();
        let vs = self.vectors.get(&id).unwrap_or(&empty);
        let c = mcdc_covered(info.conditions, vs).iter().filter(|&&b| b).count();
        Some(Ratio::new(c, info.conditions))
    }
}
