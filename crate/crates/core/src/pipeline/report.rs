use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::coverage::{histogram, Bucket, Ratio};
use crate::dataflow::{PairClass, UseKind};
use crate::engine::Criterion;
use crate::frontend::Span;
use crate::testgen::Expected;

use super::ProgramRun;

/// A coverage figure: exact counts plus the percentage to one decimal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub covered: usize,
    pub total: usize,
    pub percent: f64,
}

impl From<Ratio> for Cell {
    fn from(r: Ratio) -> Self {
        Cell {
            covered: r.covered,
            total: r.total,
            percent: (r.percent() * 10.0).round() / 10.0,
        }
    }
}

impl Cell {
    fn ratio(&self) -> Ratio {
        Ratio::new(self.covered, self.total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionRow {
    pub category: String,
    pub site: String,
    pub test: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub id: usize,
    pub variable: String,
    pub kind: UseKind,
    pub def: Span,
    #[serde(rename = "use")]
    pub use_site: Span,
    pub class: PairClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionRow {
    pub function: String,
    pub tests: usize,
    pub statement: Cell,
    pub branch: Cell,
    pub mcdc: Cell,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub defuse: Option<Cell>,
    pub exceptions: Vec<ExceptionRow>,
    pub paths: usize,
    pub states: usize,
    pub incomplete: bool,
    pub bound_hit: bool,
    pub unknown: usize,
    pub stuck: usize,
    pub rejected: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pairs: Vec<PairRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub statement: BTreeMap<Bucket, usize>,
    pub branch: BTreeMap<Bucket, usize>,
    pub mcdc: BTreeMap<Bucket, usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub defuse: Option<BTreeMap<Bucket, usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub functions: usize,
    pub tests: usize,
    pub exceptions: usize,
    pub statement: Cell,
    pub branch: Cell,
    pub mcdc: Cell,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub defuse: Option<Cell>,
    pub incomplete: bool,
    pub rejected: usize,
}

/// Deterministic run report; wall-clock times live in [`Timing`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub criterion: Criterion,
    pub mcdc_variant: String,
    pub seed: u64,
    pub functions: Vec<FunctionRow>,
    pub histogram: Histograms,
    pub totals: Totals,
    pub skipped: Vec<String>,
}

fn sum(cells: impl Iterator<Item = Cell>) -> Cell {
    let (c, t) = cells.fold((0, 0), |(c, t), x| (c + x.covered, t + x.total));
    Ratio::new(c, t).into()
}

impl Report {
    pub fn build(run: &ProgramRun) -> Report {
        let mut rows = Vec::new();
        for f in &run.functions {
            let exceptions = f
                .test_cases()
                .filter_map(|c| match &c.expected {
                    Expected::Exception(e) => Some(ExceptionRow {
                        category: e.category.to_string(),
                        site: e.site.to_string(),
                        test: c.id.clone(),
                    }),
                    Expected::Return(_) => None,
                })
                .collect();
            let (defuse, pairs) = match &f.dataflow {
                None => (None, Vec::new()),
                Some(d) => {
                    let cell = Ratio::new(d.report.covered.len(), d.report.total).into();
                    let rows = d
                        .pairs
                        .iter()
                        .map(|p| PairRow {
                            id: p.id,
                            variable: p.variable.clone(),
                            kind: p.kind,
                            def: p.def_span,
                            use_site: p.use_span,
                            class: d.report.class_of(p.id),
                            witness: d.report.covered.get(&p.id).map(|&k| f.cases[k].case.id.clone()),
                        })
                        .collect();
                    (Some(cell), rows)
                }
            };
            rows.push(FunctionRow {
                function: f.function.clone(),
                tests: f.cases.len(),
                statement: f.ledger.statement().into(),
                branch: f.ledger.branch().into(),
                mcdc: f.ledger.mcdc().into(),
                defuse,
                exceptions,
                paths: f.paths,
                states: f.states,
                incomplete: f.incomplete,
                bound_hit: f.bound_hit,
                unknown: f.unknown,
                stuck: f.stuck,
                rejected: f.rejected.len(),
                pairs,
            });
        }
        let hist = |get: fn(&FunctionRow) -> Cell| histogram(rows.iter().map(|r| get(r).ratio()));
        let has_defuse = run.criterion == Criterion::Defuse;
        let histogram = Histograms {
            statement: hist(|r| r.statement),
            branch: hist(|r| r.branch),
            mcdc: hist(|r| r.mcdc),
            defuse: has_defuse.then(|| histogram(rows.iter().filter_map(|r| r.defuse).map(|c| c.ratio()))),
        };
        let totals = Totals {
            functions: rows.len(),
            tests: rows.iter().map(|r| r.tests).sum(),
            exceptions: rows.iter().map(|r| r.exceptions.len()).sum(),
            statement: sum(rows.iter().map(|r| r.statement)),
            branch: sum(rows.iter().map(|r| r.branch)),
            mcdc: sum(rows.iter().map(|r| r.mcdc)),
            defuse: has_defuse.then(|| sum(rows.iter().filter_map(|r| r.defuse))),
            incomplete: rows.iter().any(|r| r.incomplete),
            rejected: rows.iter().map(|r| r.rejected).sum(),
        };
        Report {
            criterion: run.criterion,
            mcdc_variant: "masking".into(),
            seed: run.seed,
            functions: rows,
            histogram,
            totals,
            skipped: run.skipped.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Generation times, kept apart from the report so the report stays reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub functions: BTreeMap<String, f64>,
    pub total_seconds: f64,
    pub average_seconds: f64,
    pub median_seconds: f64,
}

impl Timing {
    pub fn build(run: &ProgramRun) -> Timing {
        Timing::from_seconds(run.functions.iter().map(|f| (f.function.clone(), f.seconds)).collect())
    }

    pub fn from_seconds(functions: BTreeMap<String, f64>) -> Timing {
        let total: f64 = functions.values().sum();
        let n = functions.len();
        let mut sorted: Vec<f64> = functions.values().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
        };
        Timing {
            functions,
            total_seconds: total,
            average_seconds: if n == 0 { 0.0 } else { total / n as f64 },
            median_seconds: median,
        }
    }
}

/// Fixed-width summary: bucket histogram per criterion, time totals, and one row per function.
pub fn render_text(r: &Report, timing: Option<&Timing>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "criterion: {}   mc/dc: {}   seed: {}", r.criterion, r.mcdc_variant, r.seed);
    let _ = write!(out, "\n{:<12}", "Coverage");
    for b in Bucket::ALL {
        let _ = write!(out, "{:>10}", b.label());
    }
    out.push('\n');
    let mut line = |name: &str, h: &BTreeMap<Bucket, usize>| {
        let _ = write!(out, "{name:<12}");
        for b in Bucket::ALL {
            let _ = write!(out, "{:>10}", h.get(&b).copied().unwrap_or(0));
        }
        out.push('\n');
    };
    line("Statement", &r.histogram.statement);
    line("Branch", &r.histogram.branch);
    line("MC/DC", &r.histogram.mcdc);
    if let Some(h) = &r.histogram.defuse {
        line("Def-use", h);
    }
    let _ = writeln!(out, "\n{:>12}{:>12}{:>20}", "# Functions", "Time (s)", "Average (s/func)");
    match timing {
        Some(t) => {
            let _ = writeln!(out, "{:>12}{:>12.2}{:>20.2}", r.totals.functions, t.total_seconds, t.average_seconds);
        }
        None => {
            let _ = writeln!(out, "{:>12}{:>12}{:>20}", r.totals.functions, "-", "-");
        }
    }
    let _ = writeln!(
        out,
        "\n{:<28}{:>7}{:>8}{:>8}{:>8}{:>9}{:>6}{:>9}",
        "function", "tests", "stmt%", "branch%", "mcdc%", "defuse%", "exc", "time(s)"
    );
    for f in &r.functions {
        let defuse = f.defuse.map(|c| format!("{:.1}", c.percent)).unwrap_or_else(|| "-".into());
        let secs = timing
            .and_then(|t| t.functions.get(&f.function))
            .map(|s| format!("{s:.2}"))
            .unwrap_or_else(|| "-".into());
        let flag = if f.incomplete { " (incomplete)" } else { "" };
        let _ = writeln!(
            out,
            "{:<28}{:>7}{:>8.1}{:>8.1}{:>8.1}{:>9}{:>6}{:>9}{flag}",
            f.function,
            f.tests,
            f.statement.percent,
            f.branch.percent,
            f.mcdc.percent,
            defuse,
            f.exceptions.len(),
            secs
        );
    }
    let t = &r.totals;
    let _ = writeln!(
        out,
        "{:<28}{:>7}{:>8.1}{:>8.1}{:>8.1}{:>9}{:>6}",
        "total",
        t.tests,
        t.statement.percent,
        t.branch.percent,
        t.mcdc.percent,
        t.defuse.map(|c| format!("{:.1}", c.percent)).unwrap_or_else(|| "-".into()),
        t.exceptions
    );
    if t.incomplete {
        out.push_str("\nsome functions hit the exploration budget; results are partial\n");
    }
    out
}
