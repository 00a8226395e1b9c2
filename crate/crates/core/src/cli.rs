//! Command-line front end: `run <command>` with a JSON config and overrides.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::discretization_report;
use crate::error::{Error, Result};
use crate::experiments::{decay_regime, grf_input, run_experiment, ExperimentKind, RunArtifacts, SweepConfig};
use crate::kernels::ConvMode;
use crate::operator::OperatorModel;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "NOPERR_THREADS";

/// Exit status for invalid invocations, missing files and schema errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for runtime failures and, under `--strict-bounds`, violations.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "noperr", version, about = "Discretization and stability experiments for neural operators")]
struct Cli {
    #[command(subcommand)]
    top: Top,
}

#[derive(Debug, Subcommand)]
enum Top {
    /// Run an experiment or evaluate a bound.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Sweep,
    Stability,
    Depth,
    Nyquist,
    Iss,
    Bounds,
    GrfCheck,
    KernelCheck,
}

impl Command {
    /// Driver behind an experiment command; `None` for `bounds`.
    pub fn experiment(self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Sweep => ExperimentKind::Discretization,
            Command::Stability => ExperimentKind::Stability,
            Command::Depth => ExperimentKind::Depth,
            Command::Nyquist => ExperimentKind::Nyquist,
            Command::Iss => ExperimentKind::Iss,
            Command::GrfCheck => ExperimentKind::GrfCheck,
            Command::KernelCheck => ExperimentKind::KernelCheck,
            Command::Bounds => return None,
        })
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    command: Command,
    /// JSON config; defaults for the command when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to NOPERR_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Write SVG figures, overriding `output.plot`.
    #[arg(long, overrides_with = "no_plot")]
    plot: bool,
    /// Skip SVG figures.
    #[arg(long)]
    no_plot: bool,
    /// Exit nonzero when a measured quantity exceeds its bound.
    #[arg(long)]
    strict_bounds: bool,
    /// Weight file for `bounds`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Grid size for `bounds`.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Input smoothness for `bounds`.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Spectral cutoff for `bounds`; sampled-kernel convolution when omitted.
    #[arg(long)]
    cutoff: Option<usize>,
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status. Reports go to stdout, diagnostics to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let Top::Run(args) = cli.top;
    let threads = args.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| execute(&args)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", args.command.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default());
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MissingFile(_) | Error::Json(_) | Error::Version { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn execute(args: &RunArgs) -> Result<i32> {
    let Some(kind) = args.command.experiment() else {
        return bounds(args);
    };
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::new(kind),
    };
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "config describes a {} experiment, command expects {}",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if args.plot {
        cfg.output.plot = true;
    }
    if args.no_plot {
        cfg.output.plot = false;
    }
    let RunArtifacts { files, violations } = run_experiment(&cfg, &cfg.output.dir, cfg.output.plot)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    for v in &violations {
        eprintln!("bound violation: {v}");
    }
    Ok(if args.strict_bounds && !violations.is_empty() { EXIT_FAILURE } else { 0 })
}

fn bounds(args: &RunArgs) -> Result<i32> {
    let path = args.model.as_ref().ok_or_else(|| Error::Config("bounds needs --model".into()))?;
    let n = args.n.ok_or_else(|| Error::Config("bounds needs --N".into()))?;
    let model = OperatorModel::load(path)?;
    let mode = args.cutoff.map_or(ConvMode::SampledKernelDft, ConvMode::AnalyticSpectrumCutoff);
    let mut cfg = SweepConfig::new(ExperimentKind::Discretization);
    cfg.seed = args.seed.unwrap_or(0);
    cfg.arch = model.arch.clone();
    let prepared = model.prepare(n, mode)?;
    let (_, states) = prepared.layers(&prepared.lift(&grf_input(&cfg, n, args.s, 0)?)?, true)?;
    let report = discretization_report(&model, &states, args.s, decay_regime(&model, mode), n, 1.0)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}
