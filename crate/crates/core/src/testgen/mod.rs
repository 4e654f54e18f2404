//! Test cases: concrete replay, suites on disk, and deduplication.

mod harness;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::cfg::{EdgeId, StmtLoc};
use crate::engine::{CompletedPath, DecisionEval, End, EngineConfig, ExceptionRecord, Executor, Mode, StuckReason, Subject};
use crate::memmodel::{leaves, PtrTarget, SymMemory, Value};
use crate::solver::{eval_concrete, Model, PathCondition, SymVar};

pub use harness::emit_harness;

#[derive(Debug, thiserror::Error)]
pub enum TestgenError {
    #[error("no function `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` did not finish within {steps} steps")]
    InterpreterLimit { function: String, steps: u64 },
    #[error("replay of `{function}` got stuck: {reason}")]
    Stuck { function: String, reason: String },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flat input valuation: `x`, `a[2]`, `s.m`, `p[0]`, `__stub_f_0`.
pub type Inputs = BTreeMap<String, i64>;

/// Observable result of one concrete run.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub ret: Json,
    pub globals: BTreeMap<String, Json>,
    pub trace: Vec<EdgeId>,
    pub stmts: Vec<StmtLoc>,
    pub decisions: Vec<DecisionEval>,
    pub exception: Option<ExceptionRecord>,
}

impl Replay {
    pub fn expected(&self) -> Expected {
        match &self.exception {
            Some(e) => Expected::Exception(e.clone()),
            None => Expected::Return(self.ret.clone()),
        }
    }

    pub fn edges(&self) -> BTreeSet<EdgeId> {
        self.trace.iter().copied().collect()
    }
}

pub fn inputs_model(inputs: &Inputs) -> Model {
    let mut m = Model::new();
    for (k, v) in inputs {
        m.assignment.insert(k.clone(), *v as u32);
    }
    m
}

/// Runs `function` on the concrete interpreter.
pub fn replay_concrete(
    subject: &Subject,
    function: &str,
    inputs: &Inputs,
    config: &EngineConfig,
) -> Result<Replay, TestgenError> {
    let func = subject
        .function_index(function)
        .ok_or_else(|| TestgenError::UnknownFunction(function.to_string()))?;
    let model = inputs_model(inputs);
    let exec = Executor::new(subject, config, Mode::Concrete(&model));
    let adv = exec.advance(exec.initial_state(func));
    let end = adv.ends.into_iter().next().ok_or_else(|| TestgenError::Stuck {
        function: function.to_string(),
        reason: "no feasible successor".into(),
    })?;
    let (st, exception) = match end {
        End::Exit(st) => (st, None),
        End::Fault(st, rec) => (st, Some(rec)),
        End::Stuck(st, StuckReason::BudgetExceeded(_)) if st.steps > config.max_steps => {
            return Err(TestgenError::InterpreterLimit {
                function: function.to_string(),
                steps: config.max_steps,
            })
        }
        End::Stuck(_, r) | End::Pruned(r) => {
            return Err(TestgenError::Stuck {
                function: function.to_string(),
                reason: r.to_string(),
            })
        }
        End::Unknown(_) => {
            return Err(TestgenError::Stuck {
                function: function.to_string(),
                reason: "undecided".into(),
            })
        }
    };
    let f = &subject.program.functions[func];
    let mut mem = st.mem.clone();
    let ret = match (&exception, st.returned.as_ref().and_then(|r| r.as_ref())) {
        (None, Some(v)) => render(&mem, v, &model),
        _ => Json::Null,
    };
    let mut globals = BTreeMap::new();
    if exception.is_none() {
        for &g in &f.globals_used {
            let obj = st.globals[g];
            let name = subject.program.globals[g].name.clone();
            let ty = mem.object(obj).ty.clone();
            for leaf in leaves(&ty, &subject.program.records) {
                let p = crate::memmodel::PointerValue {
                    base: leaf.offset as i64,
                    ..crate::memmodel::PointerValue::to_object(obj)
                };
                if let Ok(v) = mem.load(&p, &leaf.ty) {
                    globals.insert(format!("{name}{}", leaf.path), render(&mem, &v, &model));
                }
            }
        }
    }
    Ok(Replay {
        ret,
        globals,
        trace: st.trace,
        stmts: st.stmts,
        decisions: st.decisions,
        exception,
    })
}

fn render(mem: &SymMemory, v: &Value, model: &Model) -> Json {
    match v {
        Value::Int(t) => match eval_concrete(t, model) {
            Ok(bits) => Json::from(t.ty().as_i64(bits)),
            Err(_) => Json::Null,
        },
        Value::Ptr(p) => {
            let s = match &p.target {
                PtrTarget::Null => "NULL".to_string(),
                PtrTarget::Object(id) => format!("&{}+{}", mem.object(*id).name, p.base),
                PtrTarget::Fixed(t) => match eval_concrete(t, model) {
                    Ok(a) => format!("0x{:08X}", a.wrapping_add(p.base as u32)),
                    Err(_) => "?".into(),
                },
                PtrTarget::Unbound => "unbound".into(),
            };
            Json::from(s)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Return(Json),
    Exception(ExceptionRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    #[serde(rename = "fn")]
    pub function: String,
    pub inputs: Inputs,
    pub expected: Expected,
    pub globals: BTreeMap<String, Json>,
    pub edges: BTreeSet<EdgeId>,
    pub pairs: BTreeSet<usize>,
    /// Index of the explored path the case came from.
    pub path: usize,
}

impl TestCase {
    pub fn exception_key(&self) -> Option<(String, String)> {
        match &self.expected {
            Expected::Exception(e) => Some((e.category.to_string(), e.site.to_string())),
            Expected::Return(_) => None,
        }
    }
}

/// Inputs of a solved path: every symbol it read, unset ones as 0.
pub fn path_inputs(p: &CompletedPath) -> Inputs {
    let mut vars: BTreeSet<SymVar> = p.inputs.iter().cloned().collect();
    vars.extend(p.pc.free_vars());
    vars.into_iter()
        .map(|v| {
            let bits = v.ty.normalize(p.model.get(&v.name).unwrap_or(0));
            (v.name, v.ty.as_i64(bits))
        })
        .collect()
}

/// A case together with the replay that confirmed it.
#[derive(Clone, Debug)]
pub struct Verified {
    pub case: TestCase,
    pub replay: Replay,
    pub pc: PathCondition,
}

/// Why a path could not become a test case.
#[derive(Debug, thiserror::Error)]
pub enum Mismatch {
    #[error("replay took edges {got:?}, path took {want:?}")]
    Edges { want: Vec<EdgeId>, got: Vec<EdgeId> },
    #[error("replay ended with {got:?}, path with {want:?}")]
    Outcome { want: Option<String>, got: Option<String> },
    #[error(transparent)]
    Replay(#[from] TestgenError),
}

/// Replays `p` and turns it into a case if the run follows the path.
pub fn materialize(
    subject: &Subject,
    function: &str,
    p: &CompletedPath,
    config: &EngineConfig,
) -> Result<Verified, Mismatch> {
    let inputs = path_inputs(p);
    let replay = replay_concrete(subject, function, &inputs, config)?;
    if replay.trace != p.trace {
        return Err(Mismatch::Edges {
            want: p.trace.clone(),
            got: replay.trace.clone(),
        });
    }
    let key = |e: &Option<ExceptionRecord>| e.as_ref().map(|e| format!("{} at {}", e.category, e.site));
    if key(&replay.exception) != key(&p.exception) {
        return Err(Mismatch::Outcome {
            want: key(&p.exception),
            got: key(&replay.exception),
        });
    }
    let case = TestCase {
        id: String::new(),
        function: function.to_string(),
        inputs,
        expected: replay.expected(),
        globals: replay.globals.clone(),
        edges: replay.edges(),
        pairs: BTreeSet::new(),
        path: p.id,
    };
    Ok(Verified {
        case,
        replay,
        pc: p.pc.clone(),
    })
}

/// Re-runs a stored case and checks it against its expectations.
pub fn check_case(subject: &Subject, case: &TestCase, config: &EngineConfig) -> Result<bool, TestgenError> {
    let r = replay_concrete(subject, &case.function, &case.inputs, config)?;
    Ok(r.edges() == case.edges && r.expected() == case.expected && r.globals == case.globals)
}

/// Greedy selection in order: a case stays if it adds an edge, a statement,
/// a decision vector, a def-use pair, or an unseen exception site.
pub fn dedup_suite(items: Vec<Verified>) -> Vec<Verified> {
    let mut edges = BTreeSet::new();
    let mut stmts = BTreeSet::new();
    let mut vectors = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    let mut faults = BTreeSet::new();
    let mut kept = Vec::new();
    for v in items {
        let mut new = false;
        for e in &v.case.edges {
            new |= edges.insert(*e);
        }
        for s in &v.replay.stmts {
            new |= stmts.insert(*s);
        }
        for d in &v.replay.decisions {
            new |= vectors.insert(d.clone());
        }
        for p in &v.case.pairs {
            new |= pairs.insert(*p);
        }
        if let Some(k) = v.case.exception_key() {
            new |= faults.insert(k);
        }
        if new {
            kept.push(v);
        }
    }
    kept
}

pub fn write_jsonl<W: Write>(mut w: W, cases: &[TestCase]) -> Result<(), TestgenError> {
    for c in cases {
        let line = serde_json::to_string(c).map_err(|e| TestgenError::Json { line: 0, source: e })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<TestCase>, TestgenError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| TestgenError::Json { line: i + 1, source: e })?);
    }
    Ok(out)
}
