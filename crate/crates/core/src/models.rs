//! The three process families, their autocovariances and the covariance
//! bundle shared by every objective.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CholeskyFactor, PrecisionOperator, SymMatrix};

/// Process family. `lambda` is φ for AR(1), α for MA(1) and d for ARFIMA(0,d,0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ar1,
    Ma1,
    Arfima,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Ar1, Family::Ma1, Family::Arfima];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ar1 => "ar1",
            Family::Ma1 => "ma1",
            Family::Arfima => "arfima",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar1" => Ok(Family::Ar1),
            "ma1" => Ok(Family::Ma1),
            "arfima" | "arfima0d0" => Ok(Family::Arfima),
            other => Err(Error::Config(format!(
                "unknown model family '{other}' (expected ar1, ma1 or arfima)"
            ))),
        }
    }
}

/// Source of unit-innovation autocovariances `γ_λ(k)`.
///
/// Implemented by [`Family`]; other stationary models can plug into the
/// covariance construction and every objective through this trait.
pub trait CovarianceModel: Sync {
    /// Closed interval searched by the estimators.
    fn parameter_domain(&self) -> (f64, f64);

    /// Whether `lambda` gives a valid stationary covariance at all. This is
    /// wider than [`parameter_domain`](Self::parameter_domain) so that
    /// finite-difference stencils may step slightly past the clipped edges.
    fn admits(&self, lambda: f64) -> bool;

    /// `γ_λ(0), …, γ_λ(len − 1)`; `lambda` is assumed admissible.
    fn unit_autocovariances(&self, lambda: f64, len: usize) -> Vec<f64>;

    fn label(&self) -> String;
}

impl CovarianceModel for Family {
    fn parameter_domain(&self) -> (f64, f64) {
        match self {
            Family::Ar1 | Family::Ma1 => (-0.99, 0.99),
            Family::Arfima => (0.001, 0.499),
        }
    }

    fn admits(&self, lambda: f64) -> bool {
        match self {
            Family::Ar1 | Family::Ma1 => lambda.abs() < 1.0,
            Family::Arfima => lambda.abs() < 0.5,
        }
    }

    fn unit_autocovariances(&self, lambda: f64, len: usize) -> Vec<f64> {
        match self {
            Family::Ar1 => {
                let c = 1.0 / (1.0 - lambda * lambda);
                (0..len).map(|k| c * lambda.powi(k as i32)).collect()
            }
            Family::Ma1 => (0..len)
                .map(|k| match k {
                    0 => 1.0 + lambda * lambda,
                    1 => lambda,
                    _ => 0.0,
                })
                .collect(),
            Family::Arfima => arfima_autocovariances(lambda, len),
        }
    }

    fn label(&self) -> String {
        self.as_str().to_string()
    }
}

/// `(−1)^k Γ(1−2d) / (Γ(k−d+1) Γ(−k−d+1))`.
///
/// Reflection turns `(−1)^k / Γ(1−d−k)` into `sin(πd) Γ(k+d) / π`, so for
/// `k ≥ 1` only positive gamma arguments are needed and the alternating signs
/// cancel exactly.
fn arfima_autocovariances(d: f64, len: usize) -> Vec<f64> {
    if d == 0.0 {
        return (0..len).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    }
    let lg_num = ln_gamma(1.0 - 2.0 * d);
    let s = (PI * d).sin() / PI;
    (0..len)
        .map(|k| {
            if k == 0 {
                (lg_num - 2.0 * ln_gamma(1.0 - d)).exp()
            } else {
                let k = k as f64;
                s * (lg_num + ln_gamma(k + d) - ln_gamma(k + 1.0 - d)).exp()
            }
        })
        .collect()
}

/// Which family, plus any parameters treated as known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub known_sigma2: Option<f64>,
    pub known_mu: Option<f64>,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            known_sigma2: None,
            known_mu: None,
        }
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.known_sigma2 = Some(sigma2);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.known_mu = Some(mu);
        self
    }

    pub fn parameter_domain(&self) -> (f64, f64) {
        self.family.parameter_domain()
    }
}

/// `(μ, σ², λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub mu: f64,
    pub sigma2: f64,
    pub lambda: f64,
}

impl Theta {
    pub fn new(mu: f64, sigma2: f64, lambda: f64) -> Self {
        Self { mu, sigma2, lambda }
    }

    /// Zero mean, unit innovation variance.
    pub fn standard(lambda: f64) -> Self {
        Self::new(0.0, 1.0, lambda)
    }
}

pub fn parameter_domain(spec: &ModelSpec) -> (f64, f64) {
    spec.parameter_domain()
}

pub(crate) fn check_admissible<M: CovarianceModel + ?Sized>(model: &M, lambda: f64) -> Result<()> {
    if lambda.is_finite() && model.admits(lambda) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda = {lambda} is not admissible for {}",
            model.label()
        )))
    }
}

pub(crate) fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")))
    }
}

/// `σ² γ_λ(lag)`.
pub fn autocovariance(spec: &ModelSpec, theta: &Theta, lag: usize) -> Result<f64> {
    check_sigma2(theta.sigma2)?;
    check_admissible(&spec.family, theta.lambda)?;
    let g = spec.family.unit_autocovariances(theta.lambda, lag + 1);
    Ok(theta.sigma2 * g[lag])
}

/// Unit-σ² Toeplitz covariance with its factorization and inverse.
#[derive(Debug, Clone)]
pub struct CovarianceBundle {
    pub t: usize,
    pub gamma: SymMatrix,
    pub factor: CholeskyFactor,
    pub inverse: SymMatrix,
    pub logdet: f64,
}

impl PrecisionOperator for CovarianceBundle {
    fn dim(&self) -> usize {
        self.t
    }

    fn trace(&self) -> f64 {
        self.inverse.trace()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        PrecisionOperator::apply(&self.inverse, x, out)
    }
}

pub fn build_covariance<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    t: usize,
) -> Result<CovarianceBundle> {
    if t == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    check_admissible(model, lambda)?;
    let acvf = model.unit_autocovariances(lambda, t);
    let gamma = SymMatrix::toeplitz(&acvf);
    let factor = cholesky(&gamma)?;
    let inverse = factor.inverse();
    let logdet = factor.log_det();
    Ok(CovarianceBundle {
        t,
        gamma,
        factor,
        inverse,
        logdet,
    })
}
