use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use tscore_core::report::{summary_json, summary_rows, write_curve_csv, write_summary_csv};
use tscore_core::{
    fit, fit_single_series, run_experiment, EstimatorKind, ExperimentSummary, Family, FitOptions,
    ModelSpec,
};

mod config;
mod data;

/// Malformed input or configuration; exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(name = "tscore", version, about = "Score-matching estimators for Gaussian time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo experiments and write summary.csv, summary.json and manifest.json.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, env = "TSCORE_THREADS")]
        threads: Option<usize>,
    },
    /// Fit one estimator to a headerless CSV panel (one series per row).
    Fit {
        data: PathBuf,
        #[arg(long)]
        model: Family,
        /// mle, pl, ht, hw, or h for the joint single-series fit.
        #[arg(long)]
        estimator: Option<EstimatorKind>,
        /// Known innovation variance; required by pl, ht and hw.
        #[arg(long)]
        sigma2: Option<f64>,
        /// Known mean subtracted before fitting (default 0).
        #[arg(long)]
        mu: Option<f64>,
        /// Fit σ² and λ jointly on a single long series.
        #[arg(long)]
        single_series: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run experiments and write curve.csv with ARE against λ.
    Curve {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, env = "TSCORE_THREADS")]
        threads: Option<usize>,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_path: String,
    output_dir: String,
    experiments: Vec<ManifestEntry<'a>>,
    threads: usize,
    started_unix: u64,
    wall_clock_seconds: f64,
    config_text: &'a str,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use tscore_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::DegreesOfFreedom { .. } | E::MissingSigma2(_) => 3,
                E::Config(_) | E::InvalidPanel(_) | E::Domain(_) | E::DimensionMismatch { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            output,
            threads,
        } => simulate(&config, &output, threads, false),
        Command::Curve {
            config,
            output,
            threads,
        } => simulate(&config, &output, threads, true),
        Command::Fit {
            data,
            model,
            estimator,
            sigma2,
            mu,
            single_series,
            seed,
        } => {
            let single = single_series || estimator == Some(EstimatorKind::HSingle);
            let mut spec = ModelSpec::new(model);
            if let Some(m) = mu {
                spec = spec.with_mu(m);
            }
            let opts = FitOptions {
                bootstrap_seed: seed,
                ..FitOptions::default()
            };
            let result = if single {
                if sigma2.is_some() {
                    return Err(InputError("--sigma2 cannot be combined with the single-series fit, which estimates it".into()).into());
                }
                let series = data::read_series(&data)?;
                fit_single_series(&spec, &series, &opts)?
            } else {
                let kind = estimator.ok_or_else(|| {
                    InputError("--estimator is required unless --single-series is given".into())
                })?;
                if let Some(s2) = sigma2 {
                    spec = spec.with_sigma2(s2);
                }
                let panel = data::read_panel(&data)?;
                fit(kind, &spec, &panel, &opts)?
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(())
        }
    }
}

fn simulate(config_path: &Path, out_dir: &Path, threads: Option<usize>, curve: bool) -> Result<()> {
    let file = config::load(config_path)?;
    if threads == Some(0) {
        return Err(InputError("--threads must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("starting worker pool")?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut summaries: Vec<ExperimentSummary> = Vec::new();
    for exp in &file.experiments {
        eprintln!(
            "running [{}]: {} x {} grid points x {} replicates",
            exp.name,
            exp.config.family,
            exp.config.lambda_grid.len(),
            exp.config.replicates
        );
        let part = pool
            .install(|| run_experiment(&exp.config))
            .with_context(|| format!("experiment [{}]", exp.name))?;
        summaries.extend(part);
    }
    let elapsed = clock.elapsed().as_secs_f64();

    if curve {
        write_atomic(out_dir, "curve.csv", |w| Ok(write_curve_csv(&summaries, w)?))?;
    } else {
        let rows = summary_rows(&summaries);
        write_atomic(out_dir, "summary.csv", |w| Ok(write_summary_csv(&rows, w)?))?;
        let json = summary_json(&rows)?;
        write_atomic(out_dir, "summary.json", |w| Ok(writeln!(w, "{json}")?))?;
    }
    let manifest = Manifest {
        tool: "tscore",
        version: env!("CARGO_PKG_VERSION"),
        command: if curve { "curve" } else { "simulate" },
        config_path: config_path.display().to_string(),
        output_dir: out_dir.display().to_string(),
        experiments: file
            .experiments
            .iter()
            .map(|e| ManifestEntry {
                name: &e.name,
                seed: e.config.seed,
            })
            .collect(),
        threads: pool.current_num_threads(),
        started_unix: started,
        wall_clock_seconds: elapsed,
        config_text: &file.text,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    write_atomic(out_dir, "manifest.json", |w| Ok(writeln!(w, "{text}")?))?;
    eprintln!("wrote {} in {elapsed:.1}s", out_dir.display());
    Ok(())
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
fn write_atomic(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut std::io::BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(&mut tmp);
        body(&mut w)?;
        w.flush()?;
    }
    let target = dir.join(name);
    tmp.persist(&target)
        .with_context(|| format!("writing {}", target.display()))?;
    Ok(())
}
