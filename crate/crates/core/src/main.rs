//! Thin argument-parsing shell around [`egue_strengths::cli`]. All real work
//! (and all unit testing of it) lives in the library; this binary only
//! resolves flags + optional JSON config into a `RunConfig` and maps errors
//! to the exit-code contract (0 ok, 1 verification failure, 2 config error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use egue_strengths::cli::{
    cmd_histogram, cmd_moments, cmd_table1, cmd_verify, emit, parse_points, Command, Method,
    OutputFormat, RunConfig, DEFAULT_VERIFY_GRID,
};
use egue_strengths::exact_moments::{Mode, ModelParams};
use egue_strengths::{Error, Result};

#[derive(Parser)]
#[command(
    name = "egue-strengths",
    version,
    about = "Finite-N transition-strength moments and cumulants for embedded Gaussian ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; explicit flags override its fields.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,

    /// Report encoding.
    #[arg(long, value_parser = ["csv", "json"], global = true)]
    format: Option<String>,

    /// Write the report to this file instead of stdout.
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recompute the 15-row reference sweep and diff against its printed values.
    Table1,
    /// Evaluate moments and cumulants at one parameter point.
    Moments(ParamOpts),
    /// Cross-validate the closed forms, the pairing oracle, and (optionally) Monte Carlo.
    Verify(VerifyOpts),
    /// Sample the bivariate strength density onto a standardized grid.
    Histogram(ParamOpts),
}

#[derive(Args)]
struct ParamOpts {
    /// Number of single-particle states.
    #[arg(long = "N")]
    n: Option<i64>,
    /// Number of fermions in the initial space.
    #[arg(long)]
    m: Option<i64>,
    /// Hamiltonian rank.
    #[arg(long)]
    k: Option<i64>,
    /// Transition-operator rank.
    #[arg(long)]
    k0: Option<i64>,
    /// Particle removal or addition.
    #[arg(long, value_parser = ["removal", "addition"])]
    mode: Option<String>,
    /// Evaluation route.
    #[arg(long, value_parser = ["exact", "asymp", "dilute", "wick", "mc"])]
    method: Option<String>,
    /// Ensemble size for randomized methods.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed; randomized methods refuse to run without one.
    #[arg(long)]
    seed: Option<u64>,
    /// Histogram bins per axis.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct VerifyOpts {
    /// Semicolon-separated grid points, each "N,m,k,k0". Defaults to the
    /// built-in oracle grid.
    #[arg(long)]
    points: Option<String>,
    /// Also check Monte Carlo against the oracle with this many samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for the Monte Carlo check.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Mode {
    match s {
        "addition" => Mode::Addition,
        _ => Mode::Removal,
    }
}

fn parse_method(s: &str) -> Method {
    match s {
        "asymp" => Method::Asymp,
        "dilute" => Method::Dilute,
        "wick" => Method::Wick,
        "mc" => Method::Mc,
        _ => Method::Exact,
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Domain(format!("invalid config {}: {e}", path.display())))
}

/// Merge a possible config file with command-line flags (flags win). When no
/// N is given for the asymptotic/dilute methods — which never look at it —
/// a minimal admissible value is filled in so the parameter set validates.
fn resolve(command: Command, opts: &ParamOpts, file: Option<RunConfig>) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(mut c) => {
            c.command = command;
            c
        }
        None => {
            let m = opts.m.ok_or_else(|| Error::Domain("--m is required".into()))?;
            let k = opts.k.ok_or_else(|| Error::Domain("--k is required".into()))?;
            let k0 = opts.k0.ok_or_else(|| Error::Domain("--k0 is required".into()))?;
            let method = parse_method(opts.method.as_deref().unwrap_or("exact"));
            let n = match opts.n {
                Some(n) => n,
                None if matches!(method, Method::Asymp | Method::Dilute) => m + k0,
                None => return Err(Error::Domain("--N is required for this method".into())),
            };
            RunConfig::new(command, ModelParams::new(n, m, k, k0, 1.0, 1.0)?)
        }
    };
    if [opts.n, opts.m, opts.k, opts.k0].iter().any(Option::is_some) {
        cfg.params = ModelParams::new(
            opts.n.unwrap_or(cfg.params.n),
            opts.m.unwrap_or(cfg.params.m),
            opts.k.unwrap_or(cfg.params.k),
            opts.k0.unwrap_or(cfg.params.k0),
            cfg.params.vh2,
            cfg.params.vo2,
        )?;
    }
    if let Some(mode) = &opts.mode {
        cfg.mode = parse_mode(mode);
    }
    if let Some(method) = &opts.method {
        cfg.method = parse_method(method);
    }
    if let Some(n_samples) = opts.samples {
        cfg.n_samples = Some(n_samples);
    }
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    if let Some(bins) = opts.bins {
        cfg.bins = bins;
    }
    Ok(cfg)
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let file_cfg = cli.config.as_ref().map(load_config).transpose()?;

    // Output routing: flags beat config file, default is CSV on stdout.
    let format = match cli.format.as_deref() {
        Some("json") => OutputFormat::Json,
        Some(_) => OutputFormat::Csv,
        None => file_cfg.as_ref().map(|c| c.output).unwrap_or(OutputFormat::Csv),
    };
    let out_path = cli
        .out
        .clone()
        .or_else(|| file_cfg.as_ref().and_then(|c| c.out_path.clone()));

    let report = match &cli.command {
        Cmd::Table1 => cmd_table1()?,
        Cmd::Moments(opts) => {
            let mut cfg = resolve(Command::Moments, opts, file_cfg)?;
            cfg.output = format;
            cfg.out_path = out_path.clone();
            cmd_moments(&cfg)?
        }
        Cmd::Verify(opts) => {
            let points = match &opts.points {
                Some(text) => parse_points(text)?,
                None => DEFAULT_VERIFY_GRID.to_vec(),
            };
            let file_samples = opts
                .samples
                .or_else(|| file_cfg.as_ref().and_then(|c| c.n_samples));
            let file_seed = opts.seed.or_else(|| file_cfg.as_ref().and_then(|c| c.seed));
            let mc = match (file_samples, file_seed) {
                (Some(n), Some(s)) => Some((n, s)),
                (None, None) => None,
                _ => {
                    return Err(Error::Domain(
                        "--samples and --seed must be given together".into(),
                    ))
                }
            };
            cmd_verify(&points, mc)?
        }
        Cmd::Histogram(opts) => {
            let mut cfg = resolve(Command::Histogram, opts, file_cfg)?;
            cfg.output = format;
            cfg.out_path = out_path.clone();
            cmd_histogram(&cfg)?
        }
    };

    emit(&report, format, out_path.as_deref())?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
