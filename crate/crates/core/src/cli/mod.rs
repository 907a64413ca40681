//! Command-line front end: `fit`, `simulate`, `evaluate` and `sweep`.
//!
//! Exit codes: 0 success, 2 parse or I/O error, 3 invalid data or
//! settings, 4 when every random start failed. `CWRM_THREADS` caps the
//! number of worker threads.

pub mod evaluate;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use itertools::iproduct;
use rayon::prelude::*;

use crate::baselines::fit_trimmed_mixreg;
use crate::datagen::{self, ScenarioSpec};
use crate::em::fit;
use crate::error::Error;
use crate::model::{Dataset, FitConfig};
use crate::oracle;

pub use evaluate::{evaluate, permutation_error, Metrics};
pub use io::{read_dataset, write_dataset, CsvOptions};
pub use report::{Method, ReportParams, RunReport};

/// Error surfaced to the user, with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AllStartsFailed { .. } => 4,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cwrm", version, about = "Robust clusterwise linear regression with trimmed, constrained cluster weighted models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file and write a JSON report.
    Fit(FitArgs),
    /// Draw a dataset from a preset or a scenario file.
    Simulate(SimulateArgs),
    /// Score a report against the true labels of its dataset.
    Evaluate(EvaluateArgs),
    /// Fit every cell of an alpha x c_x x c_eps grid.
    Sweep(SweepArgs),
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV file; the response is the last column unless --response is given.
    input: PathBuf,
    /// Response column name or 0-based index.
    #[arg(long)]
    response: Option<String>,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        let file = File::open(&self.input).map_err(|e| CliError::parse(format!("{}: {e}", self.input.display())))?;
        read_dataset(
            BufReader::new(file),
            &CsvOptions {
                no_header: self.no_header,
                response: self.response.clone(),
            },
        )
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long = "cx", default_value_t = 20.0)]
    c_x: f64,
    #[arg(long = "ceps", default_value_t = 20.0)]
    c_eps: f64,
    #[arg(long, value_enum, default_value_t = Method::Cwrm)]
    method: Method,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn config(&self, alpha: f64, c_x: f64, c_eps: f64) -> FitConfig {
        FitConfig::new(self.groups, alpha, c_x, c_eps)
            .with_starts(self.starts)
            .with_max_iter(self.max_iter)
            .with_rel_tol(self.tol)
            .with_seed(self.seed)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-row CSV of labels, trimming flags and posteriors.
    #[arg(long)]
    rows_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// CSV with a `true_label` column.
    #[command(flatten)]
    input: InputArgs,
    /// JSON report of a fit on the same rows.
    #[arg(long)]
    report: PathBuf,
    /// Preset whose parameters are the truth for parameter errors.
    #[arg(long, conflicts_with = "truth_spec")]
    truth_preset: Option<String>,
    /// Scenario file whose parameters are the truth for parameter errors.
    #[arg(long)]
    truth_spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated trimming levels.
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    /// Comma-separated c_x values (defaults to --cx).
    #[arg(long, value_delimiter = ',')]
    cxs: Vec<f64>,
    /// Comma-separated c_eps values (defaults to --ceps).
    #[arg(long, value_delimiter = ',')]
    cepss: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum OracleKind {
    CwmG1,
    Lts,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(value_enum)]
    kind: OracleKind,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::parse(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes()).map_err(CliError::io)?;
    w.write_all(b"\n").map_err(CliError::io)?;
    w.flush().map_err(CliError::io)
}

fn load_spec(path: &Path) -> Result<ScenarioSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| CliError::parse(format!("invalid scenario: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Fits `ds` and builds the report.
pub fn fit_report(ds: &Dataset, cfg: &FitConfig, method: Method) -> Result<RunReport, Error> {
    let started = Instant::now();
    let report = match method {
        Method::Cwrm => {
            let f = fit(ds, cfg)?;
            let p = ReportParams::from(&f.params);
            RunReport::new(method, cfg, ds.d(), &f, p, 0.0)
        }
        Method::Mixreg => {
            let f = fit_trimmed_mixreg(ds, cfg)?;
            let p = ReportParams::from(&f.params);
            RunReport::new(method, cfg, ds.d(), &f, p, 0.0)
        }
    };
    Ok(RunReport {
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        ..report
    })
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let ds = args.input.load()?;
    let m = &args.model;
    let cfg = m.config(args.alpha, m.c_x, m.c_eps);
    let report = fit_report(&ds, &cfg, m.method)?;
    if let Some(p) = &args.rows_out {
        report.write_rows(output(Some(p))?)?;
    }
    write_text(args.out.as_deref(), &report.to_json())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), _) => datagen::preset(name)?,
        (None, Some(path)) => load_spec(path)?,
        (None, None) => return Err(CliError::parse("either --preset or --spec is required")),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ds = datagen::generate(&spec)?;
    let mut w = output(args.out.as_deref())?;
    write_dataset(&mut w, &ds)?;
    w.flush().map_err(CliError::io)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let ds = args.input.load()?;
    let truth_labels = ds
        .true_labels()
        .ok_or_else(|| CliError::parse(format!("input has no `{}` column", io::LABEL_COLUMN)))?;
    let text = std::fs::read_to_string(&args.report).map_err(|e| CliError::parse(format!("{}: {e}", args.report.display())))?;
    let report = RunReport::from_json(&text)?;
    let truth = match (&args.truth_preset, &args.truth_spec) {
        (Some(name), _) => Some(datagen::preset(name)?),
        (None, Some(path)) => Some(load_spec(path)?),
        (None, None) => None,
    };
    let metrics = evaluate(truth_labels, &report.labels, &report.z, Some(&report.params), truth.as_ref())?;
    write_text(
        args.out.as_deref(),
        &serde_json::to_string_pretty(&metrics).expect("metrics are serializable"),
    )
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let ds = args.input.load()?;
    let m = &args.model;
    let cxs = if args.cxs.is_empty() { vec![m.c_x] } else { args.cxs.clone() };
    let cepss = if args.cepss.is_empty() { vec![m.c_eps] } else { args.cepss.clone() };
    let cells: Vec<FitConfig> = iproduct!(&args.alphas, &cxs, &cepss)
        .map(|(&a, &cx, &ce)| m.config(a, cx, ce))
        .collect();
    // validation errors abort the sweep; failed fits become rows
    for cfg in &cells {
        crate::model::validate_dataset(&ds, cfg)?;
    }
    let results: Vec<Result<RunReport, Error>> = cells.par_iter().map(|cfg| fit_report(&ds, cfg, m.method)).collect();

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record([
        "alpha",
        "c_x",
        "c_eps",
        "status",
        "objective",
        "retained",
        "converged",
        "contamination_recall",
        "false_trim_rate",
        "classification_error",
    ])
    .map_err(CliError::io)?;
    for (cfg, res) in cells.iter().zip(results) {
        let mut rec = vec![cfg.alpha.to_string(), cfg.c_x.to_string(), cfg.c_eps.to_string()];
        match res {
            Ok(r) => {
                let metrics = ds
                    .true_labels()
                    .map(|t| evaluate(t, &r.labels, &r.z, None, None))
                    .transpose()?;
                rec.extend([
                    "ok".to_string(),
                    r.objective.to_string(),
                    r.retained.to_string(),
                    r.converged.to_string(),
                ]);
                match metrics {
                    Some(mt) => rec.extend([
                        mt.contamination_recall.map_or(String::new(), |v| v.to_string()),
                        mt.false_trim_rate.to_string(),
                        mt.classification_error.to_string(),
                    ]),
                    None => rec.extend([String::new(), String::new(), String::new()]),
                }
            }
            Err(Error::AllStartsFailed { .. }) => {
                rec.push("all_starts_failed".into());
                rec.extend(std::iter::repeat_n(String::new(), 6));
            }
            Err(e) => return Err(e.into()),
        }
        w.write_record(&rec).map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let ds = args.input.load()?;
    let r = match args.kind {
        OracleKind::CwmG1 => oracle::exhaustive_trimmed_cwm_g1(&ds, args.alpha)?,
        OracleKind::Lts => oracle::exhaustive_lts(&ds, args.alpha)?,
    };
    let subset = r.subset().map(<[usize]>::to_vec).unwrap_or_default();
    let json = serde_json::json!({ "objective": r.objective, "subset": subset });
    write_text(None, &json.to_string())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("CWRM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::parse(format!("CWRM_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = thread_cap().and_then(|cap| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(CliError::io)?;
        pool.install(|| dispatch(&cli))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
