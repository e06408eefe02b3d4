//! Exact samplers for the three processes, Wishart draws for the parametric
//! bootstrap, and the Monte Carlo experiment driver.

mod experiment;

pub use experiment::{run_experiment, EstimatorSummary, ExperimentConfig, ExperimentSummary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CholeskyFactor, SymMatrix};
use crate::models::{build_covariance, check_admissible, check_sigma2, CovarianceModel, Family, Theta};
use crate::scoring::SeriesPanel;

/// Independent random stream for replicate `replicate` of grid point `grid`.
///
/// The ChaCha key comes from `seed`; the 64-bit stream id packs
/// `(grid, replicate)`, so no two work items share keystream.
pub fn stream_rng(seed: u64, grid: u32, replicate: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid as u64) << 32) | replicate as u64);
    rng
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Stationary AR(1) draw: the first value carries the stationary variance,
/// later values follow the recursion.
pub fn simulate_ar1<R: Rng + ?Sized>(theta: &Theta, t: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_sigma2(theta.sigma2)?;
    check_admissible(&Family::Ar1, theta.lambda)?;
    let phi = theta.lambda;
    let sigma = theta.sigma2.sqrt();
    let mut out = Vec::with_capacity(t);
    if t == 0 {
        return Ok(out);
    }
    let mut prev = sigma * standard_normal(rng) / (1.0 - phi * phi).sqrt();
    out.push(theta.mu + prev);
    for _ in 1..t {
        prev = phi * prev + sigma * standard_normal(rng);
        out.push(theta.mu + prev);
    }
    Ok(out)
}

/// MA(1) straight from its innovations, `y_t = μ + α z_{t−1} + z_t`.
pub fn simulate_ma1_innovations<R: Rng + ?Sized>(
    theta: &Theta,
    t: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_sigma2(theta.sigma2)?;
    check_admissible(&Family::Ma1, theta.lambda)?;
    let sigma = theta.sigma2.sqrt();
    let mut prev = sigma * standard_normal(rng);
    Ok((0..t)
        .map(|_| {
            let z = sigma * standard_normal(rng);
            let y = theta.mu + theta.lambda * prev + z;
            prev = z;
            y
        })
        .collect())
}

/// Exact joint draw `μ + σ L z` from a factorized `Γ`, reusable across draws.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    theta: Theta,
    factor: CholeskyFactor,
}

impl GaussianSampler {
    pub fn new<M: CovarianceModel + ?Sized>(model: &M, theta: Theta, t: usize) -> Result<Self> {
        check_sigma2(theta.sigma2)?;
        let bundle = build_covariance(model, theta.lambda, t)?;
        Ok(Self {
            theta,
            factor: bundle.factor,
        })
    }

    pub fn len(&self) -> usize {
        self.factor.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.len()).map(|_| standard_normal(rng)).collect();
        let sigma = self.theta.sigma2.sqrt();
        self.factor
            .mul_lower(&z)
            .into_iter()
            .map(|v| self.theta.mu + sigma * v)
            .collect()
    }
}

pub fn simulate_gaussian_exact<M: CovarianceModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    theta: &Theta,
    t: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(model, *theta, t)?.sample(rng))
}

/// Panel sampler: AR(1) uses its recursion, MA(1) and ARFIMA one shared
/// exact factorization.
#[derive(Debug, Clone)]
pub enum PanelSampler {
    Ar1 { theta: Theta, t: usize },
    Exact(GaussianSampler),
}

impl PanelSampler {
    pub fn new(family: Family, theta: Theta, t: usize) -> Result<Self> {
        match family {
            Family::Ar1 => {
                check_sigma2(theta.sigma2)?;
                check_admissible(&family, theta.lambda)?;
                Ok(PanelSampler::Ar1 { theta, t })
            }
            _ => Ok(PanelSampler::Exact(GaussianSampler::new(&family, theta, t)?)),
        }
    }

    pub fn series<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            PanelSampler::Ar1 { theta, t } => simulate_ar1(theta, *t, rng),
            PanelSampler::Exact(s) => Ok(s.sample(rng)),
        }
    }

    pub fn panel<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SeriesPanel> {
        let t = match self {
            PanelSampler::Ar1 { t, .. } => *t,
            PanelSampler::Exact(s) => s.len(),
        };
        let mut data = Vec::with_capacity(n * t);
        for _ in 0..n {
            data.extend(self.series(rng)?);
        }
        SeriesPanel::new(n, t, data)
    }
}

pub fn sample_panel<R: Rng + ?Sized>(
    family: &Family,
    theta: &Theta,
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<SeriesPanel> {
    PanelSampler::new(*family, *theta, t)?.panel(n, rng)
}

/// Wishart(df, L Lᵀ) draw by the Bartlett decomposition: `S = (L A)(L A)ᵀ`
/// with `A` lower triangular, `A_ii² ~ χ²(df − i)` and standard normal
/// entries below the diagonal.
pub fn sample_wishart<R: Rng + ?Sized>(
    scale: &CholeskyFactor,
    df: usize,
    rng: &mut R,
) -> Result<SymMatrix> {
    let t = scale.dim();
    if df < t {
        return Err(Error::DegreesOfFreedom { n: df, t });
    }
    let mut a = vec![0.0; t * t];
    for i in 0..t {
        let chi = ChiSquared::new((df - i) as f64).expect("positive degrees of freedom");
        a[i * t + i] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[i * t + j] = standard_normal(rng);
        }
    }
    // M = L A, lower triangular.
    let mut m = vec![0.0; t * t];
    for i in 0..t {
        for j in 0..=i {
            m[i * t + j] = (j..=i).map(|k| scale.get(i, k) * a[k * t + j]).sum();
        }
    }
    Ok(SymMatrix::from_fn(t, |i, j| {
        (0..=i.min(j)).map(|k| m[i * t + k] * m[j * t + k]).sum()
    }))
}

/// Factor of `σ² Γ(λ)`, the Wishart scale of `YᵀY`.
pub fn wishart_scale<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    sigma2: f64,
    t: usize,
) -> Result<CholeskyFactor> {
    check_sigma2(sigma2)?;
    let bundle = build_covariance(model, lambda, t)?;
    cholesky(&bundle.gamma.scale(sigma2))
}
