//! The generation pipeline behind the command line: explore, replay,
//! deduplicate, account coverage, and write artifacts.

mod report;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{info, warn};

use crate::coverage::CoverageLedger;
use crate::dataflow::{classify_pairs, compute_cut_points, compute_defuse_pairs, covers_pair, DefUsePair, PairOutcome, PairReport};
use crate::engine::{flood_search, guided_search, Criterion, EngineConfig, GuidedOutcome, Subject, PAIR_TIME};
use crate::solver::export_smtlib2;
use crate::testgen::{dedup_suite, emit_harness, materialize, write_jsonl, TestCase, TestgenError, Verified};

pub use report::{render_text, Cell, ExceptionRow, FunctionRow, Histograms, PairRow, Report, Timing, Totals};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no function `{0}`")]
    UnknownFunction(String),
    #[error("nothing to generate: no functions selected")]
    EmptySelection,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Testgen(#[from] TestgenError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub criterion: Criterion,
    pub engine: EngineConfig,
    pub pair_time: Duration,
    pub seed: u64,
    pub jobs: usize,
    /// Functions to process; empty means all.
    pub functions: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            criterion: Criterion::Branch,
            engine: EngineConfig::default(),
            pair_time: PAIR_TIME,
            seed: 0,
            jobs: 1,
            functions: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let e = &self.engine;
        let bad = [
            (e.state_cap == 0, "state cap"),
            (e.unroll_bound == 0, "unroll bound"),
            (e.call_depth == 0, "call depth"),
            (e.solver.max_evals == 0, "solver evaluations"),
            (self.pair_time.is_zero(), "pair time"),
            (self.jobs == 0, "jobs"),
        ];
        match bad.iter().find(|(b, _)| *b) {
            Some((_, what)) => Err(PipelineError::Config(format!("{what} must be positive"))),
            None => Ok(()),
        }
    }

    fn engine_config(&self) -> EngineConfig {
        let mut e = self.engine.clone();
        e.criterion = match self.criterion {
            Criterion::Defuse => Criterion::Branch,
            c => c,
        };
        e.solver.seed = self.seed;
        e
    }
}

#[derive(Clone, Debug)]
pub struct DataflowRun {
    pub pairs: Vec<DefUsePair>,
    pub report: PairReport,
}

/// Everything produced for one function.
#[derive(Clone, Debug)]
pub struct FunctionRun {
    pub function: String,
    pub cases: Vec<Verified>,
    pub ledger: CoverageLedger,
    pub paths: usize,
    pub states: usize,
    pub incomplete: bool,
    pub bound_hit: bool,
    pub unknown: usize,
    pub stuck: usize,
    /// Paths whose replay disagreed with the explored path.
    pub rejected: Vec<String>,
    pub dataflow: Option<DataflowRun>,
    pub seconds: f64,
}

impl FunctionRun {
    pub fn test_cases(&self) -> impl Iterator<Item = &TestCase> {
        self.cases.iter().map(|v| &v.case)
    }
}

/// Runs the whole pipeline for one function.
pub fn generate_function(subject: &Subject, function: &str, config: &RunConfig) -> Result<FunctionRun, PipelineError> {
    let started = Instant::now();
    let func = subject
        .function_index(function)
        .ok_or_else(|| PipelineError::UnknownFunction(function.to_string()))?;
    let engine = config.engine_config();
    let explored = flood_search(subject, function, &engine).expect("function exists");
    let mut rejected = Vec::new();
    let mut cases = Vec::new();
    for p in &explored.paths {
        match materialize(subject, function, p, &engine) {
            Ok(v) => cases.push(v),
            Err(e) => {
                warn!("{function}: path {} rejected: {e}", p.id);
                rejected.push(format!("path {}: {e}", p.id));
            }
        }
    }
    let cfg = &subject.cfgs[func];
    let mut dataflow = None;
    if config.criterion == Criterion::Defuse {
        let (pairs, table) = compute_defuse_pairs(&subject.program, &subject.program.functions[func], cfg);
        let mark = |v: &mut Verified| {
            v.case.pairs = pairs
                .iter()
                .filter(|p| covers_pair(&table, p, &v.replay.stmts))
                .map(|p| p.id)
                .collect();
        };
        cases.iter_mut().for_each(mark);
        let mut outcomes = Vec::with_capacity(pairs.len());
        let mut next_path = explored.paths.len();
        for pair in &pairs {
            if cases.iter().any(|v| v.case.pairs.contains(&pair.id)) {
                outcomes.push(PairOutcome::Witness(0));
                continue;
            }
            let plan = compute_cut_points(cfg, &table, pair);
            let outcome = match guided_search(subject, function, &table, &plan, &engine, config.pair_time) {
                Some(GuidedOutcome::Covered(path)) => match materialize(subject, function, &path, &engine) {
                    Ok(mut v) => {
                        mark(&mut v);
                        v.case.path = next_path;
                        next_path += 1;
                        if v.case.pairs.contains(&pair.id) {
                            cases.push(v);
                            PairOutcome::Witness(0)
                        } else {
                            rejected.push(format!("pair {}: witness replay missed the pair", pair.id));
                            PairOutcome::Undecided
                        }
                    }
                    Err(e) => {
                        rejected.push(format!("pair {}: {e}", pair.id));
                        PairOutcome::Undecided
                    }
                },
                Some(GuidedOutcome::UnsatWithinBudget { undecided: false, .. }) => PairOutcome::Exhausted,
                _ => PairOutcome::Undecided,
            };
            outcomes.push(outcome);
        }
        dataflow = Some((pairs, outcomes));
    }
    let mut cases = dedup_suite(cases);
    for (k, v) in cases.iter_mut().enumerate() {
        v.case.id = format!("{function}_{k}");
    }
    let dataflow = dataflow.map(|(pairs, mut outcomes)| {
        for (p, o) in pairs.iter().zip(outcomes.iter_mut()) {
            if let PairOutcome::Witness(w) = o {
                *w = cases
                    .iter()
                    .position(|v| v.case.pairs.contains(&p.id))
                    .expect("dedup keeps every pair");
            }
        }
        let report = classify_pairs(&pairs, &outcomes);
        DataflowRun { pairs, report }
    });
    let mut ledger = CoverageLedger::new(cfg);
    for v in &cases {
        ledger
            .record_execution(&v.replay.trace, &v.replay.stmts, &v.replay.decisions)
            .expect("replayed trace lies in the function's graph");
    }
    let seconds = started.elapsed().as_secs_f64();
    info!(
        "{function}: {} tests, branch {}/{}, {seconds:.2}s",
        cases.len(),
        ledger.branch().covered,
        ledger.branch().total
    );
    Ok(FunctionRun {
        function: function.to_string(),
        cases,
        ledger,
        paths: explored.paths.len(),
        states: explored.states,
        incomplete: explored.incomplete,
        bound_hit: explored.bound_hit,
        unknown: explored.unknown,
        stuck: explored.stuck.len(),
        rejected,
        dataflow,
        seconds,
    })
}

#[derive(Clone, Debug)]
pub struct ProgramRun {
    pub criterion: Criterion,
    pub seed: u64,
    /// Sorted by function name.
    pub functions: Vec<FunctionRun>,
    pub skipped: Vec<String>,
}

impl ProgramRun {
    pub fn incomplete(&self) -> bool {
        self.functions.iter().any(|f| f.incomplete)
    }

    pub fn rejected(&self) -> usize {
        self.functions.iter().map(|f| f.rejected.len()).sum()
    }

    pub fn cases(&self) -> Vec<TestCase> {
        self.functions.iter().flat_map(|f| f.test_cases().cloned()).collect()
    }
}

/// Runs every selected function, up to `config.jobs` at a time.
pub fn run_program(subject: &Subject, config: &RunConfig) -> Result<ProgramRun, PipelineError> {
    config.validate()?;
    let mut names: Vec<String> = if config.functions.is_empty() {
        subject.program.functions.iter().map(|f| f.name.clone()).collect()
    } else {
        config.functions.clone()
    };
    names.sort();
    names.dedup();
    if names.is_empty() {
        return Err(PipelineError::EmptySelection);
    }
    if let Some(n) = names.iter().find(|n| subject.function_index(n).is_none()) {
        return Err(PipelineError::UnknownFunction(n.clone()));
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<FunctionRun, PipelineError>>>> = Mutex::new(names.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..config.jobs.min(names.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(name) = names.get(i) else { break };
                let r = generate_function(subject, name, config);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    let functions = slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProgramRun {
        criterion: config.criterion,
        seed: config.seed,
        functions,
        skipped: subject.program.skipped.iter().map(|e| e.to_string()).collect(),
    })
}

/// Which files [`write_artifacts`] produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Emit {
    /// `tests.jsonl`
    pub jsonl: bool,
    /// `report.json`, `report.txt` and `timing.json`
    pub report: bool,
    pub harness: bool,
    pub dot: bool,
    pub smt2: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Emit {
            jsonl: true,
            report: true,
            harness: false,
            dot: false,
            smt2: false,
        }
    }
}

/// Writes the files selected by `emit` under `out` and returns the report.
pub fn write_artifacts(subject: &Subject, run: &ProgramRun, config: &RunConfig, out: &Path, emit: Emit) -> Result<Report, PipelineError> {
    std::fs::create_dir_all(out)?;
    if emit.jsonl {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &run.cases())?;
        std::fs::write(out.join("tests.jsonl"), buf)?;
    }
    let report = Report::build(run);
    if emit.report {
        let timing = Timing::build(run);
        std::fs::write(out.join("report.json"), report.to_json()? + "\n")?;
        std::fs::write(out.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
        std::fs::write(out.join("report.txt"), render_text(&report, Some(&timing)))?;
    }
    let records = &subject.program.records;
    if emit.dot {
        std::fs::create_dir_all(out.join("cfg"))?;
        for f in &run.functions {
            let cfg = subject.cfg(&f.function).expect("processed function");
            std::fs::write(out.join("cfg").join(format!("{}.dot", f.function)), cfg.to_dot(records))?;
        }
    }
    if emit.smt2 {
        std::fs::create_dir_all(out.join("smt2"))?;
        for f in &run.functions {
            let mut seen = BTreeSet::new();
            for v in &f.cases {
                if seen.insert(v.case.path) {
                    let name = format!("{}_{}.smt2", f.function, v.case.path);
                    std::fs::write(out.join("smt2").join(name), export_smtlib2(&v.pc))?;
                }
            }
        }
    }
    if emit.harness {
        std::fs::create_dir_all(out.join("harness"))?;
        for f in &run.functions {
            let cases: Vec<TestCase> = f.test_cases().cloned().collect();
            let text = emit_harness(&subject.program, &f.function, &cases, config.engine.backing_len);
            std::fs::write(out.join("harness").join(format!("{}.c", f.function)), text)?;
        }
    }
    Ok(report)
}
