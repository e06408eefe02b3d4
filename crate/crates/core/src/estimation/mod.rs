//! Minimum-score estimation of the dependence parameter, with sandwich
//! standard errors.

pub mod numdiff;
pub mod optimize;

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Ar1Precision, PrecisionOperator};
use crate::models::{build_covariance, check_sigma2, CovarianceModel, Family, ModelSpec, Theta};
use crate::scoring::{
    hyvarinen_single, hyvarinen_terms_unchecked, inverse_covariance_derivative,
    loglik_terms_unchecked, pairwise_terms_unchecked, profiled_loglik_unchecked,
    sufficient_statistic, SeriesPanel, SspMatrix, WishartScore,
};
use crate::simulation::{sample_wishart, wishart_scale, PanelSampler};

use numdiff::{derivative_terms, first_step, numeric_derivative, second_step, Order};
use optimize::{minimize_scalar, nelder_mead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "MLE", alias = "mle")]
    Mle,
    #[serde(rename = "PL", alias = "pl")]
    Pl,
    #[serde(rename = "HT", alias = "ht")]
    Ht,
    #[serde(rename = "HW", alias = "hw")]
    Hw,
    /// Joint (σ², λ) Hyvärinen fit of one long series.
    #[serde(rename = "H", alias = "h")]
    HSingle,
}

impl EstimatorKind {
    pub const PANEL: [EstimatorKind; 4] = [
        EstimatorKind::Mle,
        EstimatorKind::Pl,
        EstimatorKind::Ht,
        EstimatorKind::Hw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "MLE",
            EstimatorKind::Pl => "PL",
            EstimatorKind::Ht => "HT",
            EstimatorKind::Hw => "HW",
            EstimatorKind::HSingle => "H",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(EstimatorKind::Mle),
            "pl" => Ok(EstimatorKind::Pl),
            "ht" => Ok(EstimatorKind::Ht),
            "hw" => Ok(EstimatorKind::Hw),
            "h" | "h_single" => Ok(EstimatorKind::HSingle),
            other => Err(Error::Config(format!(
                "unknown estimator '{other}' (expected mle, pl, ht, hw or h)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Absolute tolerance on λ.
    pub tol: f64,
    pub max_evaluations: usize,
    /// Parametric bootstrap size for HW and single-series standard errors.
    pub bootstrap_draws: usize,
    pub bootstrap_seed: u64,
    pub max_simplex_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evaluations: 200,
            bootstrap_draws: 200,
            bootstrap_seed: 0,
            max_simplex_iterations: 500,
        }
    }
}

/// Per-series variability `j`, sensitivity `k` and Godambe information
/// `g = k²/j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GodambeInfo {
    pub j: f64,
    pub k: f64,
    pub g: f64,
}

impl GodambeInfo {
    fn new(j: f64, k: f64) -> Self {
        Self { j, k, g: k * k / j }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: EstimatorKind,
    pub family: Family,
    pub lambda: f64,
    pub sigma2: f64,
    /// False when σ² was supplied rather than estimated.
    pub sigma2_estimated: bool,
    /// Asymptotic standard deviation of λ̂; NaN when it could not be formed.
    pub sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_sigma2: Option<f64>,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<GodambeInfo>,
}

/// A panel objective in minimization form, evaluated without re-validating λ.
struct PanelObjective<'a> {
    kind: EstimatorKind,
    family: Family,
    panel: &'a SeriesPanel,
    sigma2: Option<f64>,
    wishart: Option<(WishartScore, SspMatrix)>,
}

impl<'a> PanelObjective<'a> {
    fn new(
        kind: EstimatorKind,
        family: Family,
        panel: &'a SeriesPanel,
        sigma2: Option<f64>,
    ) -> Result<Self> {
        if let Some(s2) = sigma2 {
            check_sigma2(s2)?;
        }
        let wishart = match kind {
            EstimatorKind::Mle => None,
            EstimatorKind::Pl | EstimatorKind::Ht | EstimatorKind::Hw if sigma2.is_none() => {
                return Err(Error::MissingSigma2(kind.as_str()))
            }
            EstimatorKind::Hw => {
                let ssp = sufficient_statistic(panel);
                Some((WishartScore::new(&ssp)?, ssp))
            }
            EstimatorKind::Pl | EstimatorKind::Ht => None,
            EstimatorKind::HSingle => {
                return Err(Error::InvalidPanel(
                    "the single-series estimator takes one series, not a panel".into(),
                ))
            }
        };
        Ok(Self {
            kind,
            family,
            panel,
            sigma2,
            wishart,
        })
    }

    /// Per-series losses for the decomposable objectives.
    fn terms(&self, lambda: f64) -> Result<Vec<f64>> {
        let s2 = self.sigma2.unwrap_or(1.0);
        let negate = |v: Vec<f64>| v.into_iter().map(|x| -x).collect();
        match self.kind {
            EstimatorKind::Mle => Ok(negate(loglik_terms_unchecked(
                &self.family,
                lambda,
                self.panel,
                s2,
            )?)),
            EstimatorKind::Pl => Ok(negate(pairwise_terms_unchecked(
                &self.family,
                lambda,
                self.panel,
                s2,
            )?)),
            EstimatorKind::Ht => hyvarinen_terms_unchecked(&self.family, lambda, self.panel, s2),
            _ => unreachable!("no per-series decomposition"),
        }
    }

    fn loss(&self, lambda: f64) -> Result<f64> {
        match (self.kind, self.sigma2) {
            (EstimatorKind::Mle, None) => {
                Ok(-profiled_loglik_unchecked(&self.family, lambda, self.panel)?.0)
            }
            (EstimatorKind::Hw, Some(s2)) => {
                let (score, ssp) = self.wishart.as_ref().expect("prepared for HW");
                let bundle = build_covariance(&self.family, lambda, ssp.t())?;
                Ok(score.value(&bundle.inverse, s2))
            }
            _ => Ok(self.terms(lambda)?.iter().sum()),
        }
    }
}

fn check_interior(family: &Family, lambda: f64) -> Result<()> {
    let (lo, hi) = family.parameter_domain();
    let margin = 2.0 * second_step(lambda);
    if lambda < lo + margin || lambda > hi - margin {
        return Err(Error::Domain(format!(
            "estimate {lambda} is on the boundary of [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn godambe_for(
    obj: &PanelObjective<'_>,
    lambda: f64,
    opts: &FitOptions,
) -> Result<(f64, GodambeInfo)> {
    check_interior(&obj.family, lambda)?;
    let n = obj.panel.n() as f64;
    let singular = |k: f64| -> Result<()> {
        if k.abs() < 1e-10 || !k.is_finite() {
            Err(Error::SingularInformation { k })
        } else {
            Ok(())
        }
    };
    match (obj.kind, obj.sigma2) {
        (EstimatorKind::Mle, None) => {
            // Observed information of the profile log-likelihood.
            let k = numeric_derivative(|l| obj.loss(l), lambda, Order::Second)? / n;
            singular(k)?;
            if k < 0.0 {
                return Err(Error::SingularInformation { k });
            }
            Ok(((1.0 / (n * k)).sqrt(), GodambeInfo::new(k, k)))
        }
        (EstimatorKind::Hw, Some(s2)) => hw_godambe(obj, lambda, s2, opts),
        (kind, _) => {
            let (g, h) = derivative_terms(|l| obj.terms(l), lambda)?;
            let j = g.iter().map(|v| v * v).sum::<f64>() / n;
            let k = h.iter().sum::<f64>() / n;
            singular(k)?;
            if kind == EstimatorKind::Mle {
                if k < 0.0 {
                    return Err(Error::SingularInformation { k });
                }
                return Ok(((1.0 / (n * k)).sqrt(), GodambeInfo::new(j, k)));
            }
            Ok(((j / (n * k * k)).sqrt(), GodambeInfo::new(j, k)))
        }
    }
}

/// HW has no per-series decomposition: `K` is the curvature of the whole
/// statistic and `J` the variance of its gradient over Wishart draws at λ̂.
fn hw_godambe(
    obj: &PanelObjective<'_>,
    lambda: f64,
    sigma2: f64,
    opts: &FitOptions,
) -> Result<(f64, GodambeInfo)> {
    if opts.bootstrap_draws < 2 {
        return Err(Error::Config("HW standard errors need at least 2 bootstrap draws".into()));
    }
    let (_, ssp) = obj.wishart.as_ref().expect("prepared for HW");
    let t = ssp.t();
    let k = numeric_derivative(|l| obj.loss(l), lambda, Order::Second)?;
    if k.abs() < 1e-10 || !k.is_finite() {
        return Err(Error::SingularInformation { k });
    }
    let scale = wishart_scale(&obj.family, lambda, sigma2, t)?;
    let gamma_inv = build_covariance(&obj.family, lambda, t)?.inverse;
    let d_gamma_inv = inverse_covariance_derivative(&obj.family, lambda, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.bootstrap_seed);
    let mut j = 0.0;
    for _ in 0..opts.bootstrap_draws {
        let s = sample_wishart(&scale, ssp.n, &mut rng)?;
        let score = WishartScore::new(&SspMatrix { s, n: ssp.n })?;
        j += score.gradient(&gamma_inv, &d_gamma_inv, sigma2).powi(2);
    }
    j /= opts.bootstrap_draws as f64;
    Ok((j.sqrt() / k.abs(), GodambeInfo::new(j, k)))
}

fn centered_panel<'a>(spec: &ModelSpec, panel: &'a SeriesPanel) -> Cow<'a, SeriesPanel> {
    match spec.known_mu {
        Some(mu) if mu != 0.0 => Cow::Owned(panel.centered(mu)),
        _ => Cow::Borrowed(panel),
    }
}

/// Sandwich standard deviation of λ̂ and the per-series Godambe pieces.
///
/// MLE uses observed information; PL and HT use per-series score
/// contributions; HW bootstraps its gradient from Wishart draws at λ̂.
pub fn godambe_sd(
    kind: EstimatorKind,
    spec: &ModelSpec,
    panel: &SeriesPanel,
    lambda_hat: f64,
    opts: &FitOptions,
) -> Result<(f64, GodambeInfo)> {
    let panel = centered_panel(spec, panel);
    let obj = PanelObjective::new(kind, spec.family, &panel, spec.known_sigma2)?;
    godambe_for(&obj, lambda_hat, opts)
}

/// Minimum-score estimate of λ over the clipped domain.
///
/// σ² is taken from `spec.known_sigma2`; only MLE may leave it unknown, in
/// which case it is profiled out. A failed standard error does not fail the
/// fit: the result comes back with `converged = false` and a NaN `sd`.
pub fn fit(
    kind: EstimatorKind,
    spec: &ModelSpec,
    panel: &SeriesPanel,
    opts: &FitOptions,
) -> Result<FitResult> {
    if kind == EstimatorKind::HSingle {
        if panel.n() != 1 {
            return Err(Error::InvalidPanel(format!(
                "the single-series estimator takes one series, got {}",
                panel.n()
            )));
        }
        return fit_single_series(spec, panel.row(0), opts);
    }
    let panel = centered_panel(spec, panel);
    if panel.is_zero() {
        return Err(Error::ZeroDenominator("panel is identically zero"));
    }
    let obj = PanelObjective::new(kind, spec.family, &panel, spec.known_sigma2)?;
    let (lo, hi) = spec.family.parameter_domain();
    let min = minimize_scalar(|l| obj.loss(l), lo, hi, opts.tol, opts.max_evaluations)?;
    let sigma2 = match spec.known_sigma2 {
        Some(s2) => s2,
        None => profiled_loglik_unchecked(&spec.family, min.x, &panel)?.1,
    };
    let (sd, info, converged) = match godambe_for(&obj, min.x, opts) {
        Ok((sd, info)) => (sd, Some(info), sd.is_finite()),
        Err(Error::Domain(_)) | Err(Error::SingularInformation { .. }) => (f64::NAN, None, false),
        Err(e) => return Err(e),
    };
    Ok(FitResult {
        estimator: kind,
        family: spec.family,
        lambda: min.x,
        sigma2,
        sigma2_estimated: spec.known_sigma2.is_none(),
        sd,
        sd_sigma2: None,
        evaluations: min.evaluations,
        converged,
        info,
    })
}

/// Asymptotic relative efficiency `(sd_mle / sd_est)²`.
pub fn are(sd_mle: f64, sd_est: f64) -> Result<f64> {
    if !(sd_mle > 0.0 && sd_est > 0.0) || !sd_mle.is_finite() || !sd_est.is_finite() {
        return Err(Error::Domain(format!(
            "standard deviations must be positive, got {sd_mle} and {sd_est}"
        )));
    }
    Ok((sd_mle / sd_est).powi(2))
}

/// Unit-σ² precision at λ, banded for AR(1) and dense otherwise.
fn precision_at(family: Family, lambda: f64, t: usize) -> Result<Box<dyn PrecisionOperator>> {
    match family {
        Family::Ar1 => Ok(Box::new(Ar1Precision::new(lambda, t)?)),
        _ => Ok(Box::new(build_covariance(&family, lambda, t)?)),
    }
}

/// Joint (σ², λ) Hyvärinen fit of one series.
///
/// Nelder–Mead runs over `(log σ², logit of λ rescaled to the domain)`.
/// Standard errors come from a 2×2 sandwich: numeric Hessian on the data and
/// gradient covariance over series simulated at the estimate.
pub fn fit_single_series(spec: &ModelSpec, series: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let t = series.len();
    if t < 2 {
        return Err(Error::InvalidPanel(format!("series needs at least 2 values, got {t}")));
    }
    if let Some(at) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidPanel(format!("non-finite value at position {at}")));
    }
    let family = spec.family;
    let mu = spec.known_mu.unwrap_or(0.0);
    let var = series.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / t as f64;
    if var == 0.0 {
        return Err(Error::ZeroDenominator("series is constant at the mean"));
    }
    let (lo, hi) = family.parameter_domain();
    let to_lambda = |v: f64| lo + (hi - lo) / (1.0 + (-v).exp());
    let objective = |p: &[f64]| -> Result<f64> {
        let lambda = to_lambda(p[1]);
        let precision = precision_at(family, lambda, t)?;
        hyvarinen_single(&Theta::new(mu, p[0].exp(), lambda), series, precision.as_ref())
    };
    let start = [var.ln(), 0.0];
    let nm = nelder_mead(
        objective,
        &start,
        &[0.5, 0.5],
        opts.tol * opts.tol,
        opts.max_simplex_iterations,
    )?;
    let lambda = to_lambda(nm.x[1]);
    let sigma2 = nm.x[0].exp();

    let (sd, sd_sigma2, converged) =
        match single_series_sandwich(family, mu, sigma2, lambda, series, opts) {
            Ok((sd_l, sd_s)) => (sd_l, Some(sd_s), sd_l.is_finite()),
            Err(Error::Domain(_)) | Err(Error::SingularInformation { .. }) => {
                (f64::NAN, None, false)
            }
            Err(e) => return Err(e),
        };
    Ok(FitResult {
        estimator: EstimatorKind::HSingle,
        family,
        lambda,
        sigma2,
        sigma2_estimated: true,
        sd,
        sd_sigma2,
        evaluations: nm.evaluations,
        converged,
        info: None,
    })
}

/// `(sd(λ̂), sd(σ̂²))` from `K⁻¹ J K⁻¹` in the (σ², λ) parametrization.
fn single_series_sandwich(
    family: Family,
    mu: f64,
    sigma2: f64,
    lambda: f64,
    series: &[f64],
    opts: &FitOptions,
) -> Result<(f64, f64)> {
    check_interior(&family, lambda)?;
    if opts.bootstrap_draws < 2 {
        return Err(Error::Config("single-series standard errors need at least 2 bootstrap draws".into()));
    }
    let t = series.len();
    let score = |y: &[f64], s2: f64, p: &dyn PrecisionOperator| -> Result<f64> {
        let v = hyvarinen_single(&Theta::new(mu, s2, lambda), y, p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: lambda })
        }
    };

    // Hessian on the observed series.
    let hs = second_step(sigma2);
    let hl = second_step(lambda);
    if sigma2 - 2.0 * hs <= 0.0 {
        return Err(Error::Domain(format!("sigma2 estimate {sigma2} too close to zero")));
    }
    let at_lambda = |l: f64| precision_at(family, l, t);
    let p0 = at_lambda(lambda)?;
    let k_ss = numeric_derivative(|s2| score(series, s2, p0.as_ref()), sigma2, Order::Second)?;
    let k_ll = numeric_derivative(
        |l| {
            let p = precision_at(family, l, t)?;
            hyvarinen_single(&Theta::new(mu, sigma2, l), series, p.as_ref())
        },
        lambda,
        Order::Second,
    )?;
    let p_up = at_lambda(lambda + hl)?;
    let p_dn = at_lambda(lambda - hl)?;
    let cross = |p: &dyn PrecisionOperator, l: f64, s2: f64| {
        hyvarinen_single(&Theta::new(mu, s2, l), series, p)
    };
    let k_sl = (cross(p_up.as_ref(), lambda + hl, sigma2 + hs)?
        - cross(p_up.as_ref(), lambda + hl, sigma2 - hs)?
        - cross(p_dn.as_ref(), lambda - hl, sigma2 + hs)?
        + cross(p_dn.as_ref(), lambda - hl, sigma2 - hs)?)
        / (4.0 * hs * hl);
    let det = k_ss * k_ll - k_sl * k_sl;
    if !(det.abs() > 1e-12 * (k_ss * k_ll).abs()) || !det.is_finite() {
        return Err(Error::SingularInformation { k: det });
    }
    let kinv = [[k_ll / det, -k_sl / det], [-k_sl / det, k_ss / det]];

    // Gradient covariance over series simulated at the estimate.
    let h1s = first_step(sigma2);
    let h1l = first_step(lambda);
    let q_up = at_lambda(lambda + h1l)?;
    let q_dn = at_lambda(lambda - h1l)?;
    let sampler = PanelSampler::new(family, Theta::new(mu, sigma2, lambda), t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.bootstrap_seed);
    let mut j = [[0.0; 2]; 2];
    for _ in 0..opts.bootstrap_draws {
        let y = sampler.series(&mut rng)?;
        let gs = (score(&y, sigma2 + h1s, p0.as_ref())? - score(&y, sigma2 - h1s, p0.as_ref())?)
            / (2.0 * h1s);
        let gl = (hyvarinen_single(&Theta::new(mu, sigma2, lambda + h1l), &y, q_up.as_ref())?
            - hyvarinen_single(&Theta::new(mu, sigma2, lambda - h1l), &y, q_dn.as_ref())?)
            / (2.0 * h1l);
        let g = [gs, gl];
        for a in 0..2 {
            for b in 0..2 {
                j[a][b] += g[a] * g[b];
            }
        }
    }
    let b = opts.bootstrap_draws as f64;
    let j = j.map(|row| row.map(|v| v / b));
    let mut v = [[0.0; 2]; 2];
    for a in 0..2 {
        for c in 0..2 {
            v[a][c] = (0..2)
                .flat_map(|x| (0..2).map(move |y| (x, y)))
                .map(|(x, y)| kinv[a][x] * j[x][y] * kinv[y][c])
                .sum();
        }
    }
    Ok((v[1][1].sqrt(), v[0][0].sqrt()))
}
