//! `skelforge` command line: batch skeletonization, Table-style reports,
//! detector evaluation, consensus over annotator exports and the annotation
//! service.
//!
//! Exit codes: 0 success, 1 some items failed (the rest were processed),
//! 2 configuration error.

pub mod commands;
pub mod plot;

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use skelforge_core::ladder::{LadderOptions, DEFAULT_K_MAX, DEFAULT_K_MIN};

#[derive(Parser, Debug)]
#[command(name = "skelforge", version, about = "Skeleton ground-truth toolkit")]
pub struct Cli {
    /// Worker threads for per-item work.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a candidate ladder and an initial GT record for every shape.
    Skeletonize(SkeletonizeArgs),
    /// Mean RE and SS of exported GT records, per dataset.
    Report(ReportArgs),
    /// AEP and F1 of predicted skeletons against GT, optionally BES.
    Eval(EvalArgs),
    /// Consensus over several annotators' exports of the same shapes.
    Integrate(IntegrateArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct LadderArgs {
    #[arg(long = "kmin", default_value_t = DEFAULT_K_MIN)]
    pub k_min: usize,
    #[arg(long = "kmax", default_value_t = DEFAULT_K_MAX)]
    pub k_max: usize,
    /// Fill holes before skeletonizing; `--fill-holes false` keeps them.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub fill_holes: bool,
}

impl LadderArgs {
    pub fn options(&self) -> LadderOptions {
        LadderOptions {
            k_min: self.k_min,
            k_max: self.k_max,
            fill_holes: self.fill_holes,
        }
    }
}

#[derive(Args, Debug)]
pub struct SkeletonizeArgs {
    /// Dataset root: a folder of silhouettes, or `masks/` plus `images/`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub ladder: LadderArgs,
    /// Record the lowest-RE ladder step whose SS reaches this value instead
    /// of step 0.
    #[arg(long)]
    pub min_ss: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Folder searched recursively for `gt.json` records.
    #[arg(long)]
    pub input: PathBuf,
    /// Where `report.csv`, `records.csv` and `report.txt` go.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted skeletons: `<id>.png` files or `<id>/skeleton.png` records.
    #[arg(long)]
    pub input: PathBuf,
    /// Ground truth, same layout.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Matching distance in pixels; defaults to 0.0075 of the image diagonal.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Evaluate only ids present on both sides instead of failing.
    #[arg(long)]
    pub intersect: bool,
    /// Header-less n x n similarity CSV, rows in sorted id order.
    #[arg(long)]
    pub similarity: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IntegrateArgs {
    /// `<input>/<annotator>/<id>/gt.json` exports.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "SKELFORGE_DATASET")]
    pub input: PathBuf,
    /// Export root; sessions live in `<output>/sessions` unless `--sessions`
    /// is given.
    #[arg(long, env = "SKELFORGE_EXPORT")]
    pub output: PathBuf,
    #[arg(long, env = "SKELFORGE_SESSIONS")]
    pub sessions: Option<PathBuf>,
    #[arg(long, env = "SKELFORGE_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "SKELFORGE_HOST", default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs that prevent any work (exit 2).
    Config(String),
    /// Work ran but `failed` items could not be processed (exit 1).
    Items { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Items { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Items { failed } => write!(f, "{failed} item(s) failed"),
        }
    }
}

impl From<skelforge_core::Error> for CliError {
    fn from(e: skelforge_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

pub(crate) fn config(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn validate(cli: &Cli) -> CliResult {
    if cli.workers == 0 {
        return Err(config("--workers must be at least 1"));
    }
    let ladder = match &cli.command {
        Command::Skeletonize(a) => Some(a.ladder),
        _ => None,
    };
    if let Some(l) = ladder {
        if l.k_min < 3 {
            return Err(config("--kmin must be at least 3"));
        }
        l.options().validate()?;
    }
    if let Command::Eval(a) = &cli.command {
        if a.tolerance.is_some_and(|t| !(t >= 0.0)) {
            return Err(config("--tolerance must be non-negative"));
        }
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = validate(&cli).and_then(|()| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build()
            .map_err(|e| config(e.to_string()))?;
        pool.install(|| dispatch(cli.command))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("skelforge: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Skeletonize(a) => commands::skeletonize::run(&a),
        Command::Report(a) => commands::report::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Integrate(a) => commands::integrate::run(&a),
        Command::Serve(a) => serve(a),
    }
}

fn serve(args: ServeArgs) -> CliResult {
    let mut service = skelforge_service::ServiceConfig::new(SocketAddr::new(args.host, args.port), args.input, args.output);
    if let Some(s) = args.sessions {
        service.session_root = s;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| config(e.to_string()))?;
    runtime
        .block_on(skelforge_service::serve(service))
        .map_err(|e| config(e.to_string()))
}
