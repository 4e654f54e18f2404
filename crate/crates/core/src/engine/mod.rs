//! Symbolic execution over control-flow graphs.
//!
//! A single [`Executor`] advances [`SymState`]s node by node. It runs in
//! symbolic mode, forking at branches and at unsafe operations, or in
//! concrete mode under a fixed [`Model`], which is how test cases are
//! replayed. Schedulers decide which state to advance next:
//! [`flood_search`] for coverage, [`dfs_search`] as a naive reference, and
//! [`guided_search`] for def-use targets.

mod collect;
mod dfs;
mod exec;
mod flood;
mod guided;
mod state;
#[cfg(test)]
mod tests;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cfg::{build_cfg, Cfg, EdgeId, Outcome, StmtLoc};
use crate::frontend::{Program, RecordDecl, Span};
use crate::solver::{Model, PathCondition, SolveBudget, SymVar};

pub use dfs::dfs_search;
pub use exec::{Advance, Child, End, Executor, Mode};
pub use flood::{coverage_keys, flood_search, path_keys, FloodScheduler, Key};
pub use guided::{guided_search, GuidedOutcome, PAIR_TIME};
pub use state::{Frame, SymState};

/// A checked program with one CFG per function.
#[derive(Clone, Debug)]
pub struct Subject {
    pub program: Program,
    pub cfgs: Vec<Cfg>,
    pub(crate) records: Arc<[RecordDecl]>,
    /// Per function and edge: back edges whose loop the edge leaves.
    pub(crate) loop_exits: Vec<Vec<Vec<EdgeId>>>,
}

impl Subject {
    pub fn new(program: Program) -> Self {
        let cfgs: Vec<Cfg> = program.functions.iter().map(build_cfg).collect();
        let records = Arc::from(program.records.clone());
        let loop_exits = cfgs.iter().map(loop_exits).collect();
        Subject {
            program,
            cfgs,
            records,
            loop_exits,
        }
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.program.function_index(name)
    }

    pub fn cfg(&self, name: &str) -> Option<&Cfg> {
        self.function_index(name).map(|i| &self.cfgs[i])
    }
}

fn loop_exits(cfg: &Cfg) -> Vec<Vec<EdgeId>> {
    let mut out = vec![Vec::new(); cfg.edges.len()];
    for b in cfg.back_edges() {
        let body = cfg.natural_loop(b.id);
        for &e in &cfg.node(b.to).succs {
            if !body.contains(&cfg.edge(e).to) {
                out[e].push(b.id);
            }
        }
    }
    out
}

/// What the scheduler tries to cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Statement,
    #[default]
    Branch,
    Mcdc,
    Defuse,
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "statement" => Ok(Criterion::Statement),
            "branch" => Ok(Criterion::Branch),
            "mcdc" => Ok(Criterion::Mcdc),
            "defuse" => Ok(Criterion::Defuse),
            _ => Err(format!("unknown criterion `{s}`")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criterion::Statement => "statement",
            Criterion::Branch => "branch",
            Criterion::Mcdc => "mcdc",
            Criterion::Defuse => "defuse",
        };
        f.write_str(s)
    }
}

pub mod defaults {
    use std::time::Duration;

    pub const UNROLL_BOUND: u32 = 3;
    pub const STATE_CAP: usize = 512;
    pub const CALL_DEPTH: usize = 4;
    pub const MAX_STEPS: u64 = 1_000_000;
    /// Discharge rounds without new coverage before the flood stops.
    pub const STALL_ROUNDS: u32 = 16;
    pub const TIME_LIMIT: Duration = Duration::from_secs(20);
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub unroll_bound: u32,
    pub state_cap: usize,
    pub call_depth: usize,
    /// Statement limit for concrete runs.
    pub max_steps: u64,
    pub stall_rounds: u32,
    pub time_limit: Duration,
    pub backing_len: u32,
    pub criterion: Criterion,
    pub solver: SolveBudget,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            unroll_bound: defaults::UNROLL_BOUND,
            state_cap: defaults::STATE_CAP,
            call_depth: defaults::CALL_DEPTH,
            max_steps: defaults::MAX_STEPS,
            stall_rounds: defaults::STALL_ROUNDS,
            time_limit: defaults::TIME_LIMIT,
            backing_len: crate::memmodel::DEFAULT_BACKING_LEN,
            criterion: Criterion::Branch,
            solver: SolveBudget::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExceptionCategory {
    ArrayIndexOutOfBounds,
    FixedMemoryAddress,
    DividedByZero,
}

impl fmt::Display for ExceptionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExceptionCategory::ArrayIndexOutOfBounds => "ArrayIndexOutOfBounds",
            ExceptionCategory::FixedMemoryAddress => "FixedMemoryAddress",
            ExceptionCategory::DividedByZero => "DividedByZero",
        };
        f.write_str(s)
    }
}

/// Where a fault happened: the function and the faulting expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub function: String,
    pub line: u32,
    pub col: u32,
}

impl Site {
    pub fn new(function: &str, span: Span) -> Self {
        Site {
            function: function.to_string(),
            line: span.line,
            col: span.col,
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.function, self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionRecord {
    pub category: ExceptionCategory,
    pub site: Site,
    pub detail: String,
}

/// Per-condition outcomes of one decision evaluation; `None` is masked.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecisionEval {
    pub decision: usize,
    pub vector: Vec<Option<bool>>,
    pub outcome: Outcome,
}

/// Why a state stopped without reaching the exit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckReason {
    Unsupported(String),
    BudgetExceeded(String),
    Solver(String),
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::Unsupported(s) => write!(f, "unsupported: {s}"),
            StuckReason::BudgetExceeded(s) => write!(f, "budget exceeded: {s}"),
            StuckReason::Solver(s) => write!(f, "solver: {s}"),
        }
    }
}

/// A finished, solved path.
#[derive(Clone, Debug)]
pub struct CompletedPath {
    pub id: usize,
    pub pc: PathCondition,
    pub model: Model,
    /// Symbolic inputs the path read, in first-use order.
    pub inputs: Vec<SymVar>,
    pub trace: Vec<EdgeId>,
    pub stmts: Vec<StmtLoc>,
    pub decisions: Vec<DecisionEval>,
    pub exception: Option<ExceptionRecord>,
}

/// Outcome of exploring one function.
#[derive(Clone, Debug, Default)]
pub struct ExploreResult {
    pub paths: Vec<CompletedPath>,
    /// Labeled and unlabeled top-level edges taken by any state.
    pub visited: BTreeSet<EdgeId>,
    pub states: usize,
    /// The state cap or time limit cut exploration short.
    pub incomplete: bool,
    /// Some state was dropped at an unroll or call-depth bound.
    pub bound_hit: bool,
    /// Paths dropped because the solver gave up.
    pub unknown: usize,
    pub stuck: Vec<String>,
}
