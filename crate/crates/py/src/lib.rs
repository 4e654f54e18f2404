//! Python bindings: load a program, inspect it, generate and replay tests.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use smartgen::dataflow::compute_defuse_pairs;
use smartgen::engine::{defaults, Criterion, EngineConfig, Subject, PAIR_TIME};
use smartgen::frontend::load_program;
use smartgen::pipeline::{render_text, run_program, write_artifacts, Emit, PipelineError, ProgramRun, Report, RunConfig, Timing};
use smartgen::solver::SolveBudget;
use smartgen::testgen::{check_case, replay_concrete, Inputs, TestCase};

create_exception!(smartgen, SmartgenError, PyException);
create_exception!(smartgen, FrontendError, SmartgenError);

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| SmartgenError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Io(e) => PyIOError::new_err(e.to_string()),
        PipelineError::Config(_) | PipelineError::UnknownFunction(_) | PipelineError::EmptySelection => {
            PyValueError::new_err(e.to_string())
        }
        e => SmartgenError::new_err(e.to_string()),
    }
}

/// A parsed and type-checked translation unit.
#[pyclass(frozen, module = "smartgen")]
pub struct Program {
    subject: Arc<Subject>,
    name: String,
}

impl Program {
    fn index(&self, function: &str) -> PyResult<usize> {
        self.subject
            .function_index(function)
            .ok_or_else(|| PyValueError::new_err(format!("no function `{function}`")))
    }
}

#[pymethods]
impl Program {
    #[new]
    #[pyo3(signature = (source, name = "<string>"))]
    fn new(source: &str, name: &str) -> PyResult<Self> {
        let program = load_program(source).map_err(|e| FrontendError::new_err(e.render(name)))?;
        Ok(Program {
            subject: Arc::new(Subject::new(program)),
            name: name.to_string(),
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let source = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Program::new(&source, &path.display().to_string())
    }

    #[getter]
    fn name(&self) -> &str {
        &self.name
    }

    #[getter]
    fn functions(&self) -> Vec<String> {
        self.subject.program.functions.iter().map(|f| f.name.clone()).collect()
    }

    /// Diagnostics for functions dropped because they use unsupported constructs.
    #[getter]
    fn skipped(&self) -> Vec<String> {
        self.subject.program.skipped.iter().map(|e| e.render(&self.name)).collect()
    }

    fn cfg_dot(&self, function: &str) -> PyResult<String> {
        let i = self.index(function)?;
        Ok(self.subject.cfgs[i].to_dot(&self.subject.program.records))
    }

    fn defuse_pairs<'py>(&self, py: Python<'py>, function: &str) -> PyResult<Bound<'py, PyAny>> {
        let i = self.index(function)?;
        let p = &self.subject.program;
        let (pairs, _) = compute_defuse_pairs(p, &p.functions[i], &self.subject.cfgs[i]);
        to_py(py, &pairs)
    }

    /// Runs `function` concretely; returns `{"ret", "globals", "exception"}`.
    #[pyo3(signature = (function, inputs = None))]
    fn replay<'py>(&self, py: Python<'py>, function: &str, inputs: Option<Inputs>) -> PyResult<Bound<'py, PyAny>> {
        self.index(function)?;
        let inputs = inputs.unwrap_or_default();
        let r = replay_concrete(&self.subject, function, &inputs, &EngineConfig::default())
            .map_err(|e| SmartgenError::new_err(e.to_string()))?;
        let out = serde_json::json!({
            "ret": r.ret,
            "globals": r.globals,
            "exception": r.exception,
        });
        to_py(py, &out)
    }

    /// Replays a test case (as read from tests.jsonl) and checks its recorded outcome.
    fn check_case(&self, case: &Bound<'_, PyAny>) -> PyResult<bool> {
        let case: TestCase = from_py(case)?;
        check_case(&self.subject, &case, &EngineConfig::default()).map_err(|e| SmartgenError::new_err(e.to_string()))
    }

    #[pyo3(signature = (
        criterion = "branch",
        *,
        state_cap = defaults::STATE_CAP,
        unroll = defaults::UNROLL_BOUND,
        call_depth = defaults::CALL_DEPTH,
        pair_seconds = PAIR_TIME.as_secs_f64(),
        solver_evals = smartgen::solver::defaults::MAX_EVALS,
        seed = 0,
        jobs = 1,
        functions = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        &self,
        py: Python<'_>,
        criterion: &str,
        state_cap: usize,
        unroll: u32,
        call_depth: usize,
        pair_seconds: f64,
        solver_evals: u64,
        seed: u64,
        jobs: usize,
        functions: Option<Vec<String>>,
    ) -> PyResult<Run> {
        let criterion: Criterion = criterion.parse().map_err(PyValueError::new_err)?;
        if !(pair_seconds > 0.0 && pair_seconds.is_finite()) {
            return Err(PyValueError::new_err("pair_seconds must be positive"));
        }
        let config = RunConfig {
            criterion,
            engine: EngineConfig {
                unroll_bound: unroll,
                state_cap,
                call_depth,
                solver: SolveBudget {
                    max_evals: solver_evals,
                    ..SolveBudget::default()
                },
                ..EngineConfig::default()
            },
            pair_time: Duration::from_secs_f64(pair_seconds),
            seed,
            jobs,
            functions: functions.unwrap_or_default(),
        };
        let subject = self.subject.clone();
        let run = py.detach(|| run_program(&subject, &config)).map_err(pipeline_err)?;
        Ok(Run { subject, config, run })
    }

    fn __repr__(&self) -> String {
        format!("<Program {} ({} functions)>", self.name, self.subject.program.functions.len())
    }
}

/// The result of one generation run.
#[pyclass(frozen, module = "smartgen")]
pub struct Run {
    subject: Arc<Subject>,
    config: RunConfig,
    run: ProgramRun,
}

#[pymethods]
impl Run {
    #[getter]
    fn criterion(&self) -> String {
        self.run.criterion.to_string()
    }

    #[getter]
    fn incomplete(&self) -> bool {
        self.run.incomplete()
    }

    #[getter]
    fn rejected(&self) -> usize {
        self.run.rejected()
    }

    fn cases<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.run.cases())
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &Report::build(&self.run))
    }

    fn timing<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &Timing::build(&self.run))
    }

    fn render_text(&self) -> String {
        render_text(&Report::build(&self.run), Some(&Timing::build(&self.run)))
    }

    /// Writes artifacts under `out`; `emit` picks from jsonl, report, harness, dot, smt2.
    #[pyo3(signature = (out, emit = vec!["jsonl".to_string(), "report".to_string()]))]
    fn write<'py>(&self, py: Python<'py>, out: PathBuf, emit: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let mut flags = Emit {
            jsonl: false,
            report: false,
            harness: false,
            dot: false,
            smt2: false,
        };
        for e in &emit {
            let slot = match e.as_str() {
                "jsonl" => &mut flags.jsonl,
                "report" => &mut flags.report,
                "harness" => &mut flags.harness,
                "dot" => &mut flags.dot,
                "smt2" => &mut flags.smt2,
                other => return Err(PyValueError::new_err(format!("unknown artifact `{other}`"))),
            };
            *slot = true;
        }
        let report = py
            .detach(|| write_artifacts(&self.subject, &self.run, &self.config, &out, flags))
            .map_err(pipeline_err)?;
        to_py(py, &report)
    }

    /// Per-function coverage percentages keyed by function name.
    fn coverage(&self) -> BTreeMap<String, BTreeMap<&'static str, f64>> {
        Report::build(&self.run)
            .functions
            .iter()
            .map(|f| {
                let mut m = BTreeMap::from([
                    ("statement", f.statement.percent),
                    ("branch", f.branch.percent),
                    ("mcdc", f.mcdc.percent),
                ]);
                if let Some(d) = f.defuse {
                    m.insert("defuse", d.percent);
                }
                (f.function.clone(), m)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "<Run {} over {} functions, {} cases>",
            self.run.criterion,
            self.run.functions.len(),
            self.run.cases().len()
        )
    }
}

/// Registers the classes and exceptions on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Program>()?;
    m.add_class::<Run>()?;
    m.add("SmartgenError", py.get_type::<SmartgenError>())?;
    m.add("FrontendError", py.get_type::<FrontendError>())?;
    m.add("CRITERIA", vec!["statement", "branch", "mcdc", "defuse"])?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "smartgen")]
fn smartgen_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
