use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use smartgen::dataflow::compute_defuse_pairs;
use smartgen::engine::{defaults, Criterion, EngineConfig, Subject, PAIR_TIME};
use smartgen::frontend::load_program;
use smartgen::pipeline::{render_text, run_program, write_artifacts, Emit, PairRow, PipelineError, Report, RunConfig, Timing};
use smartgen::solver::SolveBudget;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Frontend(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}: {1}")]
    BadArtifact(PathBuf, serde_json::Error),
    #[error("{0} generated paths failed replay verification")]
    Rejected(usize),
    #[error("exploration budget exhausted; artifacts are partial")]
    Incomplete,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Frontend(_) => 1,
            CliError::Io { .. } | CliError::Pipeline(PipelineError::Io(_)) => 4,
            CliError::Incomplete => 3,
            CliError::Pipeline(_) | CliError::BadArtifact(..) | CliError::Rejected(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "smartgen", version, about = "Coverage-driven unit-test generation for a small C dialect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and type-check a file, reporting diagnostics only
    Parse { file: PathBuf },
    /// Print control-flow graphs as DOT
    Cfg {
        file: PathBuf,
        #[arg(long = "function", short = 'f')]
        functions: Vec<String>,
        /// Also write `cfg/<fn>.dot` under this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate test cases
    Gen(GenArgs),
    /// List def-use pairs, or generate a def-use suite
    Dataflow(DataflowArgs),
    /// Re-render report.txt from report.json and timing.json
    Report { dir: PathBuf },
}

#[derive(Args, Debug)]
struct GenArgs {
    file: PathBuf,
    #[arg(long, default_value = "branch")]
    criterion: Criterion,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args, Debug)]
struct DataflowArgs {
    file: PathBuf,
    /// Only list the pairs; no generation
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EmitKind {
    Jsonl,
    Report,
    Harness,
    Dot,
    Smt2,
}

#[derive(Args, Debug)]
struct RunOpts {
    #[arg(long, default_value_t = defaults::STATE_CAP, value_parser = positive_usize)]
    state_cap: usize,
    #[arg(long, default_value_t = defaults::UNROLL_BOUND, value_parser = clap::value_parser!(u32).range(1..))]
    unroll: u32,
    #[arg(long, default_value_t = defaults::CALL_DEPTH, value_parser = positive_usize)]
    call_depth: usize,
    /// Search time per def-use pair
    #[arg(long, default_value_t = PAIR_TIME.as_secs_f64())]
    pair_seconds: f64,
    /// Candidate evaluations per solver query
    #[arg(long, default_value_t = smartgen::solver::defaults::MAX_EVALS, value_parser = clap::value_parser!(u64).range(1..))]
    solver_evals: u64,
    #[arg(long, env = "SMARTGEN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'j', default_value_t = 1, value_parser = positive_usize)]
    jobs: usize,
    #[arg(long, short = 'o', default_value = "smartgen-out")]
    out: PathBuf,
    /// Artifacts to write
    #[arg(long, value_enum, value_delimiter = ',', default_value = "jsonl,report")]
    emit: Vec<EmitKind>,
    /// Restrict to these functions
    #[arg(long = "function", short = 'f')]
    functions: Vec<String>,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

impl RunOpts {
    fn config(&self, criterion: Criterion) -> Result<RunConfig, CliError> {
        if !(self.pair_seconds > 0.0 && self.pair_seconds.is_finite()) {
            return Err(PipelineError::Config("pair time must be positive".into()).into());
        }
        Ok(RunConfig {
            criterion,
            engine: EngineConfig {
                unroll_bound: self.unroll,
                state_cap: self.state_cap,
                call_depth: self.call_depth,
                solver: SolveBudget {
                    max_evals: self.solver_evals,
                    ..SolveBudget::default()
                },
                ..EngineConfig::default()
            },
            pair_time: Duration::from_secs_f64(self.pair_seconds),
            seed: self.seed,
            jobs: self.jobs,
            functions: self.functions.clone(),
        })
    }

    fn emit(&self) -> Emit {
        let has = |k| self.emit.contains(&k);
        Emit {
            jsonl: has(EmitKind::Jsonl),
            report: has(EmitKind::Report),
            harness: has(EmitKind::Harness),
            dot: has(EmitKind::Dot),
            smt2: has(EmitKind::Smt2),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> Result<Subject, CliError> {
    let src = read(path)?;
    let name = path.display().to_string();
    let program = load_program(&src).map_err(|e| CliError::Frontend(e.render(&name)))?;
    for e in &program.skipped {
        warn!("{}", e.render(&name));
    }
    Ok(Subject::new(program))
}

fn selected<'a>(s: &'a Subject, names: &'a [String]) -> Result<Vec<&'a str>, CliError> {
    if names.is_empty() {
        return Ok(s.program.functions.iter().map(|f| f.name.as_str()).collect());
    }
    for n in names {
        if s.function_index(n).is_none() {
            return Err(PipelineError::UnknownFunction(n.clone()).into());
        }
    }
    Ok(names.iter().map(String::as_str).collect())
}

fn parse_cmd(file: &Path) -> Result<(), CliError> {
    let s = load(file)?;
    let p = &s.program;
    println!(
        "{}: {} functions, {} externs, {} skipped",
        file.display(),
        p.functions.len(),
        p.externs.len(),
        p.skipped.len()
    );
    for (f, cfg) in p.functions.iter().zip(&s.cfgs) {
        let params: Vec<String> = f.params.iter().map(|a| p.render_type(&a.ty, &a.name)).collect();
        println!(
            "  {}({}): {} statements, {} branch edges, {} decisions",
            f.name,
            params.join(", "),
            cfg.statements().len(),
            cfg.labeled_edges().count(),
            cfg.decisions.len()
        );
    }
    Ok(())
}

fn cfg_cmd(file: &Path, functions: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let s = load(file)?;
    for name in selected(&s, functions)? {
        let dot = s.cfg(name).expect("selected").to_dot(&s.program.records);
        print!("{dot}");
        if let Some(dir) = out {
            write(&dir.join("cfg").join(format!("{name}.dot")), &dot)?;
        }
    }
    Ok(())
}

/// Runs the pipeline and writes artifacts; the text summary goes to stdout.
fn generate(file: &Path, criterion: Criterion, opts: &RunOpts, summary: bool) -> Result<Report, CliError> {
    let config = opts.config(criterion)?;
    config.validate()?;
    let s = load(file)?;
    let run = run_program(&s, &config)?;
    let report = write_artifacts(&s, &run, &config, &opts.out, opts.emit())?;
    if summary {
        print!("{}", render_text(&report, Some(&Timing::build(&run))));
    }
    info!("artifacts in {}", opts.out.display());
    for f in &run.functions {
        for r in &f.rejected {
            warn!("{}: {r}", f.function);
        }
    }
    if run.rejected() > 0 {
        return Err(CliError::Rejected(run.rejected()));
    }
    if run.incomplete() {
        return Err(CliError::Incomplete);
    }
    Ok(report)
}

#[derive(Serialize)]
struct PairListing<T> {
    function: String,
    pairs: Vec<T>,
}

fn dataflow_cmd(args: &DataflowArgs) -> Result<(), CliError> {
    if args.list {
        let s = load(&args.file)?;
        let mut out = Vec::new();
        for name in selected(&s, &args.run.functions)? {
            let i = s.function_index(name).expect("selected");
            let (pairs, _) = compute_defuse_pairs(&s.program, &s.program.functions[i], &s.cfgs[i]);
            out.push(PairListing {
                function: name.to_string(),
                pairs,
            });
        }
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
        return Ok(());
    }
    let result = generate(&args.file, Criterion::Defuse, &args.run, false);
    let report = match &result {
        Ok(r) => r.clone(),
        Err(CliError::Incomplete | CliError::Rejected(_)) => {
            let path = args.run.out.join("report.json");
            serde_json::from_str(&read(&path)?).map_err(|e| CliError::BadArtifact(path, e))?
        }
        Err(_) => return result.map(|_| ()),
    };
    let rows: Vec<PairListing<PairRow>> = report
        .functions
        .into_iter()
        .map(|f| PairListing {
            function: f.function,
            pairs: f.pairs,
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows).expect("serializable"));
    result.map(|_| ())
}

fn report_cmd(dir: &Path) -> Result<(), CliError> {
    let path = dir.join("report.json");
    let report: Report = serde_json::from_str(&read(&path)?).map_err(|e| CliError::BadArtifact(path, e))?;
    let tpath = dir.join("timing.json");
    let timing: Option<Timing> = match std::fs::read_to_string(&tpath) {
        Ok(t) => Some(serde_json::from_str(&t).map_err(|e| CliError::BadArtifact(tpath, e))?),
        Err(_) => None,
    };
    let text = render_text(&report, timing.as_ref());
    write(&dir.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse { file } => parse_cmd(file),
        Command::Cfg { file, functions, out } => cfg_cmd(file, functions, out.as_deref()),
        Command::Gen(a) => generate(&a.file, a.criterion, &a.run, true).map(|_| ()),
        Command::Dataflow(a) => dataflow_cmd(a),
        Command::Report { dir } => report_cmd(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
