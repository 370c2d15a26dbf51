//! The `lasskit` command line: graph construction, training, out-of-sample
//! prediction, experiments and the HTTP server.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 non-convergence (the
//! model is still written), 4 some prediction rows failed, 1 anything else.

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lasskit_core::eval::{run_experiment, ExperimentConfig, ExperimentReport};
use lasskit_core::graph::{build_knn_graph, connected_components, laplacian, Kernel};
use lasskit_core::io::{
    format_f64, graph_fingerprint, read_dense_csv_file, read_matrix_file, read_matrix_market, read_similarity,
    write_similarity, ModelBundle,
};
use lasskit_core::lass::{solve, Backend, Problem, RhoPolicy, SolverConfig};
use lasskit_core::oos::{OosModel, OosQuery};
use lasskit_core::ssl::ssl_oos;
use lasskit_core::LassError;
use ndarray::Array2;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_PARTIAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "lasskit", version, about = "Laplacian assignment models on similarity graphs")]
pub struct Cli {
    /// Seed for every randomized step; overrides the seed in an eval config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a symmetric kNN similarity graph from a points CSV.
    BuildGraph(BuildGraphArgs),
    /// Solve the assignment problem and write a model directory.
    Train(TrainArgs),
    /// Assign new items with a trained model.
    Predict(PredictArgs),
    /// Run an experiment described by a JSON config.
    Eval(EvalArgs),
    /// Serve trained models over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Binary,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum)]
    pub kernel: KernelArg,
    #[arg(long, required_if_eq("kernel", "gaussian"))]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// `auto` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoArg(pub RhoPolicy);

impl FromStr for RhoArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(RhoArg(RhoPolicy::Auto));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(RhoArg(RhoPolicy::Value(v))),
            _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Cholesky,
    Cg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// N x K affinities, `.mtx` or dense CSV.
    #[arg(long)]
    pub affinities: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value = "auto")]
    pub rho: RhoArg,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value = "cholesky")]
    pub backend: BackendArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lass,
    Ssl,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Q x N similarities of the queries to the training items (`.mtx`).
    #[arg(long)]
    pub queries_w: PathBuf,
    /// Q x K affinities of the queries; all zero when omitted.
    #[arg(long)]
    pub queries_g: Option<PathBuf>,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "lass")]
    pub method: MethodArg,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the report files.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Model directories to load at startup.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<LassError> for Failure {
    fn from(e: LassError) -> Self {
        let code = match e {
            LassError::DimensionMismatch(_)
            | LassError::InvalidArgument(_)
            | LassError::Parse { .. }
            | LassError::Io(_)
            | LassError::Json(_) => EXIT_INPUT,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_FAILURE, message: e.to_string() }
    }
}

fn with_path<T>(path: &Path, r: lasskit_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{}: {}", path.display(), f.message) }
    })
}

/// Runs one command, writing normal output to `out`. Returns the exit code
/// for outcomes that still produced output (0, 3 or 4).
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, Failure> {
    match cli.command {
        Command::BuildGraph(a) => build_graph(&a, out),
        Command::Train(a) => train(&a, out),
        Command::Predict(a) => predict(&a, out),
        Command::Eval(a) => eval(&a, cli.seed, out),
        Command::Serve(a) => serve(&a),
    }
}

pub fn build_graph(a: &BuildGraphArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let points = with_path(&a.points, read_dense_csv_file(&a.points))?;
    let kernel = match a.kernel {
        KernelArg::Gaussian => Kernel::Gaussian { sigma: a.sigma.expect("clap requires --sigma") },
        KernelArg::Binary => Kernel::Binary,
    };
    let w = build_knn_graph(points.view(), a.k, kernel)?;
    with_path(&a.out, write_similarity(&a.out, &w))?;
    let degrees = w.degrees();
    let (min, max) = degrees.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let mean = degrees.iter().sum::<f64>() / degrees.len() as f64;
    writeln!(out, "items: {}", w.n())?;
    writeln!(out, "edges: {}", w.num_edges())?;
    writeln!(out, "components: {}", connected_components(&w).count())?;
    writeln!(out, "degree min/mean/max: {} / {} / {}", format_f64(min), format_f64(mean), format_f64(max))?;
    Ok(EXIT_OK)
}

pub fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let w = with_path(&a.graph, read_similarity(&a.graph))?;
    let g = with_path(&a.affinities, read_matrix_file(&a.affinities))?;
    if g.nrows() != w.n() {
        return Err(Failure::input(format!(
            "dimension mismatch: affinities have {} rows, graph has {} items",
            g.nrows(),
            w.n()
        )));
    }
    let cfg = SolverConfig {
        rho: a.rho.0,
        tol: a.tol,
        max_iterations: a.max_iters,
        backend: match a.backend {
            BackendArg::Cholesky => Backend::Cholesky,
            BackendArg::Cg => Backend::Cg,
        },
        ..Default::default()
    };
    let p = Problem::new(laplacian(&w, false), g, a.lambda)?;
    let sol = solve(&p, &cfg, None)?;
    let d = &sol.diagnostics;
    writeln!(out, "method: {}", serde_json::to_value(d.method).unwrap_or_default().as_str().unwrap_or(""))?;
    writeln!(out, "iterations: {}", d.iterations)?;
    writeln!(out, "objective: {}", format_f64(d.objective))?;
    writeln!(out, "converged: {}", d.converged)?;
    for note in &d.notes {
        log::info!("{note}");
    }
    let converged = d.converged;
    let bundle =
        ModelBundle::new(sol.z, a.lambda, graph_fingerprint(&w), connected_components(&w).labels, sol.diagnostics)?;
    with_path(&a.out, bundle.write(&a.out))?;
    writeln!(out, "model: {} ({})", bundle.meta.id, a.out.display())?;
    if converged {
        Ok(EXIT_OK)
    } else {
        log::warn!("solver stopped after {} iterations without converging", bundle.diagnostics.iterations);
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn predict(a: &PredictArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let bundle = with_path(&a.model, ModelBundle::read(&a.model))?;
    let (n, k) = (bundle.meta.n, bundle.meta.k);
    let file = fs::File::open(&a.queries_w).map_err(|e| Failure::input(format!("{}: {e}", a.queries_w.display())))?;
    let qw = with_path(&a.queries_w, read_matrix_market(file))?;
    if qw.ncols() != n {
        return Err(Failure::input(format!(
            "dimension mismatch: query similarities have {} columns, model has {n} items",
            qw.ncols()
        )));
    }
    let q = qw.nrows();
    let qg = match &a.queries_g {
        Some(path) => {
            let g = with_path(path, read_dense_csv_file(path))?;
            if g.nrows() == 0 && q == 0 {
                Array2::zeros((0, k))
            } else {
                g
            }
        }
        None => Array2::zeros((q, k)),
    };
    if qg.nrows() != q || qg.ncols() != k {
        return Err(Failure::input(format!(
            "dimension mismatch: query affinities are {}x{}, expected {q}x{k}",
            qg.nrows(),
            qg.ncols()
        )));
    }
    let model = OosModel::new(bundle.z)?;
    let mut failed = 0;
    for i in 0..q {
        let (cols, vals) = qw.row(i);
        let w: Vec<(usize, f64)> = cols.iter().copied().zip(vals.iter().copied()).collect();
        let result = match a.method {
            MethodArg::Lass => model
                .predict(&OosQuery { w, g: qg.row(i).to_vec(), lambda: a.lambda })
                .map(|p| (p.z, mode_name(p.mode))),
            MethodArg::Ssl => ssl_oos(model.z(), &w).map(|z| (z, "ssl".to_string())),
        };
        let fields: Vec<String> = match result {
            Ok((z, mode)) => z.iter().map(|&v| format_f64(v)).chain(std::iter::once(mode)).collect(),
            Err(LassError::InvalidArgument(msg)) | Err(LassError::DimensionMismatch(msg)) => {
                failed += 1;
                log::error!("query row {i}: {msg}");
                std::iter::repeat_n(String::new(), k).chain(std::iter::once("error".to_string())).collect()
            }
            Err(e) => return Err(e.into()),
        };
        writeln!(out, "{}", fields.join(","))?;
    }
    if failed > 0 {
        log::error!("{failed} of {q} query rows failed");
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn mode_name(mode: lasskit_core::oos::OosMode) -> String {
    serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Parses an experiment config, naming the offending field on error.
pub fn parse_config(bytes: &[u8]) -> Result<ExperimentConfig, Failure> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::input(format!("invalid config at '{path}': {}", e.into_inner()))
    })?;
    cfg.validate().map_err(|e| Failure::input(format!("invalid config: {e}")))?;
    Ok(cfg)
}

pub fn eval(a: &EvalArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<u8, Failure> {
    let bytes = fs::read(&a.config).map_err(|e| Failure::input(format!("{}: {e}", a.config.display())))?;
    let mut cfg = parse_config(&bytes)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_experiment(&cfg)?;
    with_path(&a.out, report.write(&a.out))?;
    write_summary_table(&report, out)?;
    Ok(EXIT_OK)
}

pub fn write_summary_table(report: &ExperimentReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{:>10} {:>8} {:>10} {:>10} {:>10} {:>5}", report.sweep_name, "method", "metric", "mean", "std", "runs")?;
    for r in &report.summary {
        writeln!(
            out,
            "{:>10} {:>8} {:>10} {:>10.4} {:>10.4} {:>5}",
            r.sweep,
            r.method.name(),
            r.metric,
            r.mean,
            r.std,
            r.runs
        )?;
    }
    for note in &report.notes {
        writeln!(out, "note: {note}")?;
    }
    Ok(())
}

pub fn serve(a: &ServeArgs) -> Result<u8, Failure> {
    let state = lasskit_serve::AppState::new();
    for dir in &a.models {
        let id = state.load_dir(None, dir).map_err(|e| Failure::input(format!("{}: {}", dir.display(), e.message)))?;
        log::info!("loaded model {id} from {}", dir.display());
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(lasskit_serve::serve(a.addr, state))?;
    Ok(EXIT_OK)
}

/// Caps the global rayon pool at `LASSKIT_THREADS` when it is set.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("LASSKIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::input(format!("LASSKIT_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure { code: EXIT_FAILURE, message: e.to_string() })
}

/// Writes to a file when `path` is given, else to stdout.
pub fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
