//! Command-line front end: capacity queries, capacity sweeps, region grids
//! and Monte Carlo simulations, written as CSV or JSON.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fading_ms_core::capacity::capacity_report;
use fading_ms_core::channel::ChannelParams;
use fading_ms_core::codec::{log_proportional_alphas, make_schedule};
use fading_ms_core::control::{deadbeat_gain, PlantSpec, DEFAULT_OVERFLOW_CAP};
use fading_ms_core::output::{fmt_sig9, region_csv, sweep_csv, trajectory_csv};
use fading_ms_core::sim::{region_grid, run_closed_loop, run_estimation, step_grid, sweep_capacity, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub mod parse;

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV: &str = "FADING_MS_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<fading_ms_core::Error> for CliError {
    fn from(e: fading_ms_core::Error) -> Self {
        use fading_ms_core::Error as E;
        match e {
            E::Uncontrollable | E::InfiniteCapacity | E::ChannelOutputOverflow | E::HorizonOverflow { .. } => {
                CliError::Domain(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fading-ms", version, about = "Mean-square stabilization over fading channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shannon, mean-square and linear mean-square capacities of one channel.
    Capacity(CapacityArgs),
    /// Capacities of the Bernoulli erasure-fading channel over a grid of ε.
    Sweep(SweepArgs),
    /// Two-mode stability region labels on a grid of (log|λ₁|, log|λ₂|).
    Region(RegionArgs),
    /// Monte Carlo run of the refinement codec, open or closed loop.
    Simulate(SimulateArgs),
    /// Re-run a saved manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Estimation,
    ClosedLoop,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CapacityArgs {
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// start:stop:step
    #[arg(long)]
    pub eps_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RegionArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.3)]
    pub grid_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// scalar:<λ> or diag:<λ1,λ2,...>
    #[arg(long)]
    pub plant: String,
    /// Input vector; a single value applies to every coordinate.
    #[arg(long, default_value = "1")]
    pub b: String,
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::ClosedLoop)]
    pub mode: Mode,
    /// tau:<τ>; shares follow log|λᵢ|.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Prior variance of x₀ per coordinate; a single value applies to all.
    #[arg(long, default_value = "1")]
    pub prior_var: String,
    /// realized or averaged
    #[arg(long, default_value = "realized")]
    pub tracking: String,
    #[arg(long, default_value_t = DEFAULT_OVERFLOW_CAP)]
    pub overflow_cap: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Trajectory CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output path for the replay; without it the output goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Provenance written next to (or inside) every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub master_seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    fn new<T: Serialize>(command: &str, params: &T, master_seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            master_seed,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Runs one command; the returned text goes to stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Capacity(a) => cmd_capacity(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Region(a) => cmd_region(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    text
}

/// Writes a CSV with its sidecar manifest, or returns it for stdout.
fn emit_csv(csv: String, out: Option<&Path>, manifest: &RunManifest) -> Result<String, CliError> {
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            write_file(&sidecar_path(path), &to_json(&json!(manifest)))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn channel(dist: &str, power: f64, noise: f64) -> Result<ChannelParams, CliError> {
    let fading = parse::distribution(dist)?;
    Ok(ChannelParams::new(power, noise, fading)?)
}

pub fn cmd_capacity(args: &CapacityArgs) -> Result<String, CliError> {
    let ch = channel(&args.dist, args.power, args.noise)?;
    let manifest = RunManifest::new("capacity", args, None);
    let report = capacity_report(&ch)?;
    match args.format {
        Format::Json => {
            let mut value = json!(report);
            value["manifest"] = json!(manifest);
            let text = to_json(&value);
            match &args.out {
                Some(path) => write_file(path, &text).map(|_| String::new()),
                None => Ok(text),
            }
        }
        Format::Csv => {
            let csv = format!(
                "shannon_bits,msc_bits,msl_bits,contraction\n{},{},{},{}\n",
                fmt_sig9(report.c_shannon),
                fmt_sig9(report.c_msc),
                fmt_sig9(report.c_msl),
                fmt_sig9(report.contraction)
            );
            emit_csv(csv, args.out.as_deref(), &manifest)
        }
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let (start, stop, step) = parse::grid(&args.eps_grid)?;
    let grid = step_grid(start, stop, step)?;
    if grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(CliError::Usage("--eps-grid: erasure probabilities must lie in [0, 1]".into()));
    }
    ChannelParams::new(args.power, args.noise, parse::distribution("point:1")?)?;
    let manifest = RunManifest::new("sweep", args, None);
    let rows = sweep_capacity(&grid, args.power, args.noise)?;
    emit_csv(sweep_csv(&rows), args.out.as_deref(), &manifest)
}

pub fn cmd_region(args: &RegionArgs) -> Result<String, CliError> {
    if args.steps < 2 {
        return Err(CliError::Usage("--steps must be >= 2".into()));
    }
    if !(args.grid_max.is_finite() && args.grid_max >= 0.0) {
        return Err(CliError::Usage("--grid-max must be finite and >= 0".into()));
    }
    channel(&format!("bernoulli:{}", args.eps), args.power, args.noise)?;
    let manifest = RunManifest::new("region", args, None);
    let points = region_grid(args.eps, args.power, args.noise, args.grid_max, args.steps)?;
    emit_csv(region_csv(&points), args.out.as_deref(), &manifest)
}

/// Resolves the simulate flags into a validated configuration.
pub fn simulate_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let lambdas = parse::plant(&args.plant)?;
    let n = lambdas.len();
    let b = parse::broadcast(parse::float_list(&args.b, "--b")?, n, "--b")?;
    let prior_var = parse::broadcast(parse::float_list(&args.prior_var, "--prior-var")?, n, "--prior-var")?;
    let tracking = parse::tracking(&args.tracking)?;
    let ch = channel(&args.dist, args.power, args.noise)?;
    let plant = PlantSpec::diagonal(&lambdas, &b)?;
    let period = match &args.schedule {
        Some(spec) => Some(parse::schedule_period(spec)?),
        None if n > 1 => Some(n.max(20)),
        None => None,
    };
    let schedule = match period {
        Some(_) if n == 1 => return Err(CliError::Usage("--schedule applies only to vector plants".into())),
        Some(tau) => {
            let logs: Vec<f64> = lambdas.iter().map(|l| l.abs().log2()).collect();
            Some(make_schedule(&log_proportional_alphas(&logs), tau)?)
        }
        None => None,
    };
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be >= 1".into()));
    }
    let config = SimConfig {
        plant,
        channel: ch,
        prior_var,
        trials: args.trials,
        horizon: args.horizon,
        master_seed: args.seed,
        schedule,
        overflow_cap: args.overflow_cap,
        tracking,
    };
    config.validate()?;
    if args.mode == Mode::ClosedLoop {
        deadbeat_gain(&config.plant)?;
    }
    Ok(config)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}: `{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let config = simulate_config(args)?;
    let threads = thread_count(args.threads)?;
    let manifest = RunManifest::new("simulate", args, Some(args.seed));
    let run = || match args.mode {
        Mode::Estimation => run_estimation(&config),
        Mode::ClosedLoop => run_closed_loop(&config),
    };
    let stats = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    if let Some(path) = &args.out {
        write_file(path, &trajectory_csv(&stats))?;
        write_file(&sidecar_path(path), &to_json(&json!(manifest)))?;
    }
    let last = stats.horizon - 1;
    Ok(to_json(&json!({
        "verdict": stats.verdict,
        "tail_slope": stats.tail_slope,
        "diverged_count": stats.diverged_count,
        "trials": stats.trials,
        "horizon": stats.horizon,
        "final_mean_sq_state": stats.mean_sq_state[last],
        "final_mean_sq_error": stats.mean_sq_error[last],
        "manifest": manifest,
    })))
}

fn params<T: for<'de> Deserialize<'de>>(manifest: &RunManifest) -> Result<T, CliError> {
    serde_json::from_value(manifest.params.clone())
        .map_err(|e| CliError::Usage(format!("manifest parameters for `{}`: {e}", manifest.command)))
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.manifest.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.manifest.display())))?;
    // JSON outputs embed the manifest under "manifest"; sidecars are the manifest itself.
    let manifest: RunManifest = serde_json::from_value(value.get("manifest").cloned().unwrap_or(value))
        .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", args.manifest.display())))?;
    let out = args.out.clone();
    match manifest.command.as_str() {
        "capacity" => cmd_capacity(&CapacityArgs { out, ..params(&manifest)? }),
        "sweep" => cmd_sweep(&SweepArgs { out, ..params(&manifest)? }),
        "region" => cmd_region(&RegionArgs { out, ..params(&manifest)? }),
        "simulate" => cmd_simulate(&SimulateArgs { out, threads: args.threads, ..params(&manifest)? }),
        other => Err(CliError::Usage(format!("manifest names unknown command `{other}`"))),
    }
}
