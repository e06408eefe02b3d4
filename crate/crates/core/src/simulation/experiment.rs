use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, EstimatorKind, FitOptions, FitResult};
use crate::models::{CovarianceModel, Family, ModelSpec, Theta};

use super::{stream_rng, PanelSampler};

fn default_sigma2() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-6
}

fn default_draws() -> usize {
    200
}

/// One Monte Carlo design: a grid of true λ, each with `replicates` panels
/// of `n` series of length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub lambda_grid: Vec<f64>,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub replicates: usize,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub mu: f64,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_draws")]
    pub bootstrap_draws: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.lambda_grid.is_empty() {
            return bad("lambda_grid must be non-empty".into());
        }
        let (lo, hi) = self.family.parameter_domain();
        for &l in &self.lambda_grid {
            if !(l >= lo && l <= hi) {
                return bad(format!(
                    "lambda_grid value {l} is outside [{lo}, {hi}] for {}",
                    self.family
                ));
            }
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.t < 2 {
            return bad("T must be at least 2".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !self.mu.is_finite() {
            return bad("mu must be finite".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.estimators.is_empty() {
            return bad("estimators must be non-empty".into());
        }
        for (i, k) in self.estimators.iter().enumerate() {
            if *k == EstimatorKind::HSingle {
                return bad("estimators: H applies to single series, not panels".into());
            }
            if self.estimators[..i].contains(k) {
                return bad(format!("estimators: {k} listed twice"));
            }
        }
        if self.estimators.contains(&EstimatorKind::Hw) {
            if self.n < self.t + 2 {
                return Err(Error::DegreesOfFreedom {
                    n: self.n,
                    t: self.t,
                });
            }
            if self.bootstrap_draws < 2 {
                return bad("bootstrap_draws must be at least 2 when HW is requested".into());
            }
        }
        if self.lambda_grid.len() > u32::MAX as usize || self.replicates > u32::MAX as usize {
            return bad("grid or replicate count too large".into());
        }
        Ok(())
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::new(self.family)
            .with_sigma2(self.sigma2)
            .with_mu(self.mu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub mean_est: f64,
    pub mean_sd: f64,
    /// `(mean sd of MLE / mean sd)²`; absent when MLE was not run.
    pub are: Option<f64>,
    /// Monte Carlo standard error of `mean_est`.
    pub mc_se: f64,
    /// Replicates that entered the means.
    pub replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub family: Family,
    pub true_lambda: f64,
    pub estimators: Vec<EstimatorSummary>,
}

fn summarize(kind: EstimatorKind, fits: &[&Result<FitResult>]) -> (EstimatorSummary, usize) {
    let ok: Vec<&FitResult> = fits
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter(|r| r.converged && r.sd.is_finite())
        .collect();
    let failures = fits.len() - ok.len();
    let m = ok.len() as f64;
    let mean_est = ok.iter().map(|r| r.lambda).sum::<f64>() / m;
    let mean_sd = ok.iter().map(|r| r.sd).sum::<f64>() / m;
    let mc_se = if ok.len() > 1 {
        let ss: f64 = ok.iter().map(|r| (r.lambda - mean_est).powi(2)).sum();
        (ss / (m - 1.0) / m).sqrt()
    } else {
        f64::NAN
    };
    (
        EstimatorSummary {
            estimator: kind,
            mean_est,
            mean_sd,
            are: None,
            mc_se,
            replicates: ok.len(),
            failures,
        },
        failures,
    )
}

/// Runs every grid point and returns one summary per point, in grid order.
///
/// Replicates run in parallel on the current rayon pool. Each draws from its
/// own stream keyed by `(seed, grid index, replicate index)` and results are
/// reduced in replicate order, so output does not depend on the pool size.
/// Failed fits are excluded from the means and counted; more than 1% failures
/// for any estimator fails the whole run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentSummary>> {
    config.validate()?;
    let spec = config.spec();
    config
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let sampler = PanelSampler::new(
                config.family,
                Theta::new(config.mu, config.sigma2, lambda),
                config.t,
            )?;
            let fits: Vec<Vec<Result<FitResult>>> = (0..config.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream_rng(config.seed, g as u32, r as u32);
                    let panel = match sampler.panel(config.n, &mut rng) {
                        Ok(p) => p,
                        Err(e) => return vec![Err(e); config.estimators.len()],
                    };
                    let opts = FitOptions {
                        tol: config.tol,
                        bootstrap_draws: config.bootstrap_draws,
                        bootstrap_seed: rng.next_u64(),
                        ..FitOptions::default()
                    };
                    config
                        .estimators
                        .iter()
                        .map(|&k| fit(k, &spec, &panel, &opts))
                        .collect()
                })
                .collect();

            let mut rows = Vec::with_capacity(config.estimators.len());
            for (e, &kind) in config.estimators.iter().enumerate() {
                let column: Vec<&Result<FitResult>> = fits.iter().map(|f| &f[e]).collect();
                let (row, failures) = summarize(kind, &column);
                if failures * 100 > config.replicates {
                    return Err(Error::ExperimentFailed {
                        lambda,
                        failures,
                        replicates: config.replicates,
                    });
                }
                rows.push(row);
            }
            let mle_sd = rows
                .iter()
                .find(|r| r.estimator == EstimatorKind::Mle)
                .map(|r| r.mean_sd);
            if let Some(base) = mle_sd {
                for row in &mut rows {
                    row.are = crate::estimation::are(base, row.mean_sd).ok();
                }
            }
            Ok(ExperimentSummary {
                family: config.family,
                true_lambda: lambda,
                estimators: rows,
            })
        })
        .collect()
}
