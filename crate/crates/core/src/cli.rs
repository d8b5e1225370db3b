//! Command-line front end: `validate`, `run`, `batch`, `compare`, `plot`.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::log::write_atomic;
use crate::engine::{run_trial, EngineError, TrialLog};
use crate::metrics::{batch_csv, compare_batches, comparison_csv, comparison_table, MetricsError, TrialMetrics};
use crate::plot::render_svg;
use crate::world::{validate_config_str, Config, ConfigError, ControllerChoice, ROCK_FIELD};

/// Environment variable overriding the default output directory.
pub const OUT_ENV: &str = "SWARM_SIM_OUT";
const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "swarm-sim", version, about = "Leader-follower cyborg insect swarm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config and print the fully resolved version.
    Validate {
        #[arg(long, default_value = ROCK_FIELD)]
        config: String,
    },
    /// Run one trial.
    Run(RunArgs),
    /// Run one trial per seed and tabulate metrics.
    Batch(BatchArgs),
    /// Run the same seeds under two controllers and compare.
    Compare(CompareArgs),
    /// Render a trial log as an SVG path plot.
    Plot {
        /// Log path: the `.csv`, the `.json` sidecar or their common stem.
        log: PathBuf,
        /// Output file (default: next to the log, `.svg`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Config file, or the name of a built-in preset.
    #[arg(long, default_value = ROCK_FIELD)]
    pub config: String,
    /// Output directory (default: $SWARM_SIM_OUT or ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the configured controller.
    #[arg(long)]
    pub controller: Option<ControllerChoice>,
    /// Also write an SVG plot per trial.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct BatchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Inclusive seed range `A..B` (or a single seed).
    #[arg(long, value_parser = parse_seeds, default_value = "1..10")]
    pub seeds: RangeInclusive<u64>,
    /// Worker threads; 1 runs serially.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Args, Clone)]
pub struct CompareArgs {
    #[arg(long, default_value = ROCK_FIELD)]
    pub config: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_seeds, default_value = "1..10")]
    pub seeds: RangeInclusive<u64>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// First controller of the comparison.
    #[arg(long, default_value = "tgi")]
    pub a: ControllerChoice,
    /// Second controller of the comparison.
    #[arg(long, default_value = "boids")]
    pub b: ControllerChoice,
}

pub fn parse_seeds(s: &str) -> Result<RangeInclusive<u64>, String> {
    let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}"));
    let range = match s.split_once("..") {
        Some((a, b)) => parse(a)?..=parse(b.trim_start_matches('='))?,
        None => {
            let v = parse(s)?;
            v..=v
        }
    };
    if range.is_empty() {
        return Err(format!("seed range {s:?} is empty"));
    }
    Ok(range)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: String, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigRead { .. } => 2,
            _ => 1,
        }
    }
}

/// Loads a config from a file, or from a preset name when no such file exists.
pub fn load_config(name: &str) -> Result<Config, CliError> {
    let path = Path::new(name);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: name.into(),
            source,
        })?
    } else if name == ROCK_FIELD {
        String::new()
    } else if name == "open" {
        "[terrain]\npreset = \"open\"\n".to_string()
    } else {
        return Err(CliError::ConfigRead {
            path: name.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or preset"),
        });
    };
    Ok(validate_config_str(&text)?)
}

pub fn out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn trial_stem(dir: &Path, controller: ControllerChoice, seed: u64) -> PathBuf {
    dir.join(format!("{}_seed{seed}", controller.name()))
}

/// Runs one trial per seed. `parallel > 1` spreads trials over a thread
/// pool; results come back in seed order either way.
pub fn run_batch(
    config: &Config,
    seeds: RangeInclusive<u64>,
    parallel: usize,
) -> Result<Vec<(TrialLog, TrialMetrics)>, CliError> {
    let one = |seed: u64| -> Result<(TrialLog, TrialMetrics), CliError> {
        let log = run_trial(config, seed)?;
        let m = TrialMetrics::compute(&log)?;
        Ok((log, m))
    };
    let seeds: Vec<u64> = seeds.collect();
    if parallel <= 1 {
        seeds.into_iter().map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel).build()?;
        pool.install(|| seeds.into_par_iter().map(one).collect())
    }
}

fn write_trial(dir: &Path, log: &TrialLog, metrics: &TrialMetrics, plot: bool) -> Result<Vec<PathBuf>, CliError> {
    let stem = trial_stem(dir, log.config.controller, log.seed);
    let csv = crate::engine::log::csv_path(&stem);
    let json = crate::engine::log::sidecar_path(&stem);
    write(&csv, &log.to_csv()?)?;
    write(&json, log.to_sidecar_json()?.as_bytes())?;
    let metrics_path = stem.with_file_name(format!("{}_metrics.json", stem.file_name().unwrap().to_string_lossy()));
    write(
        &metrics_path,
        (serde_json::to_string_pretty(metrics)? + "\n").as_bytes(),
    )?;
    let mut written = vec![csv, json, metrics_path];
    if plot {
        let svg = stem.with_extension("svg");
        write(&svg, render_svg(log).as_bytes())?;
        written.push(svg);
    }
    Ok(written)
}

fn with_controller(mut config: Config, choice: Option<ControllerChoice>) -> Config {
    if let Some(c) = choice {
        config.controller = c;
    }
    config
}

pub fn cmd_validate(config: &str) -> Result<String, CliError> {
    Ok(load_config(config)?.to_toml())
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<PathBuf>, CliError> {
    let config = with_controller(load_config(&args.common.config)?, args.common.controller);
    let dir = out_dir(args.common.out.as_deref());
    ensure_dir(&dir)?;
    let log = run_trial(&config, args.seed)?;
    let metrics = TrialMetrics::compute(&log)?;
    write_trial(&dir, &log, &metrics, args.common.plot)
}

pub fn batch_csv_path(dir: &Path, controller: ControllerChoice, seeds: &RangeInclusive<u64>) -> PathBuf {
    dir.join(format!(
        "batch_{}_seeds{}-{}.csv",
        controller.name(),
        seeds.start(),
        seeds.end()
    ))
}

pub fn cmd_batch(args: &BatchArgs) -> Result<PathBuf, CliError> {
    let config = with_controller(load_config(&args.common.config)?, args.common.controller);
    let dir = out_dir(args.common.out.as_deref());
    ensure_dir(&dir)?;
    let results = run_batch(&config, args.seeds.clone(), args.parallel)?;
    for (log, m) in &results {
        write_trial(&dir, log, m, args.common.plot)?;
    }
    let metrics: Vec<TrialMetrics> = results.into_iter().map(|(_, m)| m).collect();
    let path = batch_csv_path(&dir, config.controller, &args.seeds);
    write(&path, &batch_csv(&metrics)?)?;
    Ok(path)
}

/// Returns the CSV path and the human-readable table.
pub fn cmd_compare(args: &CompareArgs) -> Result<(PathBuf, String), CliError> {
    let base = load_config(&args.config)?;
    let dir = out_dir(args.out.as_deref());
    ensure_dir(&dir)?;
    let mut batches = Vec::new();
    for choice in [args.a, args.b] {
        let config = with_controller(base.clone(), Some(choice));
        let metrics: Vec<TrialMetrics> = run_batch(&config, args.seeds.clone(), args.parallel)?
            .into_iter()
            .map(|(_, m)| m)
            .collect();
        write(&batch_csv_path(&dir, choice, &args.seeds), &batch_csv(&metrics)?)?;
        batches.push(metrics);
    }
    let rows = compare_batches(&batches[0], &batches[1])?;
    let (a, b) = (args.a.name(), args.b.name());
    let path = dir.join(format!(
        "compare_{a}_vs_{b}_seeds{}-{}.csv",
        args.seeds.start(),
        args.seeds.end()
    ));
    write(&path, &comparison_csv(&rows)?)?;
    Ok((path, comparison_table(&rows, a, b)))
}

pub fn cmd_plot(log: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let stem = log.with_extension("");
    let trial = TrialLog::read(&stem)?;
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| stem.with_extension("svg"));
    write(&target, render_svg(&trial).as_bytes())?;
    Ok(target)
}

/// Dispatches a parsed command line; prints artifact paths to stdout.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let lines = |paths: Vec<PathBuf>| paths.iter().map(|p| format!("{}\n", p.display())).collect::<String>();
    let text = match cli.command {
        Command::Validate { config } => cmd_validate(&config)?,
        Command::Run(args) => lines(cmd_run(&args)?),
        Command::Batch(args) => lines(vec![cmd_batch(&args)?]),
        Command::Compare(args) => {
            let (path, table) = cmd_compare(&args)?;
            table + &lines(vec![path])
        }
        Command::Plot { log, out } => lines(vec![cmd_plot(&log, out.as_deref())?]),
    };
    emit(&text)
}

/// Writes to stdout; a reader that went away early (`| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Write {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("1..10").unwrap(), 1..=10);
        assert_eq!(parse_seeds("1..=3").unwrap(), 1..=3);
        assert_eq!(parse_seeds("7").unwrap(), 7..=7);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x..2").is_err());
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(load_config(ROCK_FIELD).unwrap(), Config::default());
        assert!(load_config("open").unwrap().terrain.obstacles.is_empty());
        assert!(matches!(load_config("no-such-thing"), Err(CliError::ConfigRead { .. })));
    }
}
