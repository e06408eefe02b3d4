//! Objective functions: Hyvärinen scores (single series, total, Wishart),
//! the Gaussian log-likelihood and the first-order consecutive pairwise
//! log-likelihood.
//!
//! Panel objectives assume a zero process mean and a known innovation
//! variance. The `*_terms` variants return one contribution per series; the
//! sandwich variance estimator differentiates those individually.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{invert_spd, PrecisionOperator, SymMatrix};
use crate::models::{build_covariance, check_sigma2, CovarianceModel, Theta};

/// `n` independent series of common length `T`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    n: usize,
    t: usize,
    data: Vec<f64>,
}

impl SeriesPanel {
    pub fn new(n: usize, t: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPanel("panel needs at least one series".into()));
        }
        if t < 2 {
            return Err(Error::InvalidPanel(format!(
                "series length must be at least 2, got {t}"
            )));
        }
        if data.len() != n * t {
            return Err(Error::DimensionMismatch {
                expected: n * t,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite value in series {} at position {}",
                pos / t,
                pos % t
            )));
        }
        Ok(Self { n, t, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let t = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * t);
        for (p, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != t {
                return Err(Error::InvalidPanel(format!(
                    "series {p} has length {}, expected {t}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), t, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.t..(p + 1) * self.t]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.t)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Copy with `mu` subtracted from every value.
    pub fn centered(&self, mu: f64) -> SeriesPanel {
        SeriesPanel {
            n: self.n,
            t: self.t,
            data: self.data.iter().map(|v| v - mu).collect(),
        }
    }
}

/// Sum-of-squares-and-products matrix `S = YᵀY` with its degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct SspMatrix {
    pub s: SymMatrix,
    pub n: usize,
}

impl SspMatrix {
    pub fn t(&self) -> usize {
        self.s.dim()
    }
}

fn check_lambda<M: CovarianceModel + ?Sized>(model: &M, lambda: f64) -> Result<()> {
    let (lo, hi) = model.parameter_domain();
    if lambda.is_finite() && lambda >= lo && lambda <= hi {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda = {lambda} outside [{lo}, {hi}] for {}",
            model.label()
        )))
    }
}

/// Hyvärinen score of one series:
/// `−(1/σ²) Σᵢ Γ^{ii} + ½ Σᵢ (Σₜ Γ^{it}(y_t − μ)/σ²)²`.
pub fn hyvarinen_single<P: PrecisionOperator + ?Sized>(
    theta: &Theta,
    series: &[f64],
    precision: &P,
) -> Result<f64> {
    let t = precision.dim();
    if series.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: series.len(),
        });
    }
    check_sigma2(theta.sigma2)?;
    let centered: Vec<f64> = series.iter().map(|y| y - theta.mu).collect();
    let mut z = vec![0.0; t];
    precision.apply(&centered, &mut z);
    Ok(single_from_parts(precision.trace(), &z, theta.sigma2))
}

#[inline]
fn single_from_parts(trace: f64, z: &[f64], sigma2: f64) -> f64 {
    let ss: f64 = z.iter().map(|v| v * v).sum();
    -trace / sigma2 + 0.5 * ss / (sigma2 * sigma2)
}

pub(crate) fn hyvarinen_terms_unchecked<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let bundle = build_covariance(model, lambda, panel.t())?;
    let trace = bundle.inverse.trace();
    let mut z = vec![0.0; panel.t()];
    Ok(panel
        .rows()
        .map(|y| {
            PrecisionOperator::apply(&bundle.inverse, y, &mut z);
            single_from_parts(trace, &z, sigma2)
        })
        .collect())
}

/// Per-series Hyvärinen scores sharing one covariance build (μ = 0).
pub fn hyvarinen_total_terms<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_lambda(model, lambda)?;
    check_sigma2(sigma2)?;
    hyvarinen_terms_unchecked(model, lambda, panel, sigma2)
}

/// Total Hyvärinen score: the sum of single-series scores over the panel.
pub fn hyvarinen_total<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<f64> {
    Ok(hyvarinen_total_terms(model, lambda, panel, sigma2)?
        .iter()
        .sum())
}

pub fn sufficient_statistic(panel: &SeriesPanel) -> SspMatrix {
    let t = panel.t();
    let mut s = vec![0.0; t * t];
    for y in panel.rows() {
        for i in 0..t {
            let yi = y[i];
            let dst = &mut s[i * t..i * t + i + 1];
            for (d, yj) in dst.iter_mut().zip(&y[..=i]) {
                *d += yi * yj;
            }
        }
    }
    for i in 0..t {
        for j in i + 1..t {
            s[i * t + j] = s[j * t + i];
        }
    }
    SspMatrix {
        s: SymMatrix::new(t, s).expect("YᵀY is symmetric by construction"),
        n: panel.n(),
    }
}

/// Observed part of the Wishart Hyvärinen score: `S⁻¹` and the degrees of
/// freedom, prepared once and evaluated against many `Γ⁻¹`.
#[derive(Debug, Clone)]
pub struct WishartScore {
    s_inv: SymMatrix,
    n: usize,
}

impl WishartScore {
    pub fn new(ssp: &SspMatrix) -> Result<Self> {
        let t = ssp.t();
        if ssp.n < t + 2 {
            return Err(Error::DegreesOfFreedom { n: ssp.n, t });
        }
        Ok(Self {
            s_inv: invert_spd(&ssp.s)?,
            n: ssp.n,
        })
    }

    pub fn t(&self) -> usize {
        self.s_inv.dim()
    }

    #[inline]
    fn half_dof(&self) -> f64 {
        (self.n - self.t() - 1) as f64 / 2.0
    }

    /// `−((n−T−1)/2) Σᵢ (s^{ii})² + ½ Σᵢⱼ (((n−T−1)/2) s^{ij} − Γ^{ij}/(2σ²))²`.
    pub fn value(&self, gamma_inv: &SymMatrix, sigma2: f64) -> f64 {
        let k = self.half_dof();
        let t = self.t();
        let diag: f64 = (0..t).map(|i| self.s_inv.get(i, i).powi(2)).sum();
        let c = 0.5 / sigma2;
        let quad: f64 = self
            .s_inv
            .as_slice()
            .iter()
            .zip(gamma_inv.as_slice())
            .map(|(s, g)| (k * s - c * g).powi(2))
            .sum();
        -k * diag + 0.5 * quad
    }

    /// `−(1/(2σ²)) Σᵢⱼ (((n−T−1)/2) s^{ij} − Γ^{ij}/(2σ²)) ∂Γ^{ij}/∂λ`.
    pub fn gradient(&self, gamma_inv: &SymMatrix, d_gamma_inv: &SymMatrix, sigma2: f64) -> f64 {
        let k = self.half_dof();
        let c = 0.5 / sigma2;
        let s: f64 = self
            .s_inv
            .as_slice()
            .iter()
            .zip(gamma_inv.as_slice())
            .zip(d_gamma_inv.as_slice())
            .map(|((s, g), dg)| (k * s - c * g) * dg)
            .sum();
        -c * s
    }
}

pub fn hyvarinen_wishart<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    ssp: &SspMatrix,
    sigma2: f64,
) -> Result<f64> {
    check_lambda(model, lambda)?;
    check_sigma2(sigma2)?;
    let score = WishartScore::new(ssp)?;
    let bundle = build_covariance(model, lambda, ssp.t())?;
    Ok(score.value(&bundle.inverse, sigma2))
}

/// `∂Γ⁻¹/∂λ` by central differences of the assembled inverse.
pub fn inverse_covariance_derivative<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    t: usize,
) -> Result<SymMatrix> {
    let h = f64::EPSILON.cbrt() * lambda.abs().max(1.0);
    let up = build_covariance(model, lambda + h, t)?.inverse;
    let down = build_covariance(model, lambda - h, t)?.inverse;
    Ok(SymMatrix::from_fn(t, |i, j| {
        (up.get(i, j) - down.get(i, j)) / (2.0 * h)
    }))
}

/// λ-derivative of the Wishart Hyvärinen score.
pub fn hyvarinen_wishart_gradient<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    ssp: &SspMatrix,
    sigma2: f64,
) -> Result<f64> {
    check_lambda(model, lambda)?;
    check_sigma2(sigma2)?;
    let score = WishartScore::new(ssp)?;
    let t = ssp.t();
    let bundle = build_covariance(model, lambda, t)?;
    let d = inverse_covariance_derivative(model, lambda, t)?;
    Ok(score.gradient(&bundle.inverse, &d, sigma2))
}

pub(crate) fn loglik_terms_unchecked<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let t = panel.t() as f64;
    let bundle = build_covariance(model, lambda, panel.t())?;
    let constant = -0.5 * t * (2.0 * PI).ln() - 0.5 * t * sigma2.ln() - 0.5 * bundle.logdet;
    Ok(panel
        .rows()
        .map(|y| constant - 0.5 * bundle.factor.inverse_quadratic_form(y) / sigma2)
        .collect())
}

/// Per-series Gaussian log-likelihood with covariance `σ²Γ` and zero mean.
pub fn gaussian_loglik_terms<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_lambda(model, lambda)?;
    check_sigma2(sigma2)?;
    loglik_terms_unchecked(model, lambda, panel, sigma2)
}

pub fn gaussian_loglik<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<f64> {
    Ok(gaussian_loglik_terms(model, lambda, panel, sigma2)?
        .iter()
        .sum())
}

/// Gaussian log-likelihood with σ² maximized out:
/// `σ̂²(λ) = Σₚ yₚᵀΓ⁻¹yₚ / (nT)`. Returns `(value, σ̂²)`.
pub fn gaussian_loglik_profiled<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
) -> Result<(f64, f64)> {
    check_lambda(model, lambda)?;
    profiled_loglik_unchecked(model, lambda, panel)
}

pub(crate) fn profiled_loglik_unchecked<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
) -> Result<(f64, f64)> {
    let bundle = build_covariance(model, lambda, panel.t())?;
    let q: f64 = panel
        .rows()
        .map(|y| bundle.factor.inverse_quadratic_form(y))
        .sum();
    let nt = (panel.n() * panel.t()) as f64;
    if q <= 0.0 {
        return Err(Error::ZeroDenominator("panel has zero quadratic form"));
    }
    let s2 = q / nt;
    let value = -0.5 * nt * ((2.0 * PI).ln() + s2.ln() + 1.0) - 0.5 * panel.n() as f64 * bundle.logdet;
    Ok((value, s2))
}

/// Unit-σ² variance and lag-one covariance of a consecutive pair.
fn pair_moments<M: CovarianceModel + ?Sized>(model: &M, lambda: f64) -> (f64, f64) {
    let g = model.unit_autocovariances(lambda, 2);
    (g[0], g[1])
}

/// `(Σ (y_t² + y_{t+1}²), Σ y_t y_{t+1})` for one series.
#[inline]
fn pair_sums(y: &[f64]) -> (f64, f64) {
    y.windows(2).fold((0.0, 0.0), |(a, b), w| {
        (a + w[0] * w[0] + w[1] * w[1], b + w[0] * w[1])
    })
}

pub(crate) fn pairwise_terms_unchecked<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    crate::models::check_admissible(model, lambda)?;
    let (v, c) = pair_moments(model, lambda);
    let (v, c) = (sigma2 * v, sigma2 * c);
    let det = v * v - c * c;
    if !(det > 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: 1, value: det });
    }
    let pairs = (panel.t() - 1) as f64;
    let constant = -pairs * ((2.0 * PI).ln() + 0.5 * det.ln());
    Ok(panel
        .rows()
        .map(|y| {
            let (sq, cross) = pair_sums(y);
            constant - (v * sq - 2.0 * c * cross) / (2.0 * det)
        })
        .collect())
}

/// Per-series first-order consecutive pairwise log-likelihood (μ = 0).
pub fn pairwise_loglik_terms<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_lambda(model, lambda)?;
    check_sigma2(sigma2)?;
    pairwise_terms_unchecked(model, lambda, panel, sigma2)
}

pub fn pairwise_loglik<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
    sigma2: f64,
) -> Result<f64> {
    Ok(pairwise_loglik_terms(model, lambda, panel, sigma2)?
        .iter()
        .sum())
}

/// Pairwise log-likelihood with σ² maximized out analytically. Returns
/// `(value, σ̂²)`.
pub fn pairwise_loglik_profiled<M: CovarianceModel + ?Sized>(
    model: &M,
    lambda: f64,
    panel: &SeriesPanel,
) -> Result<(f64, f64)> {
    check_lambda(model, lambda)?;
    let (v, c) = pair_moments(model, lambda);
    let det = v * v - c * c;
    let q: f64 = panel
        .rows()
        .map(|y| {
            let (sq, cross) = pair_sums(y);
            (v * sq - 2.0 * c * cross) / det
        })
        .sum();
    if q <= 0.0 {
        return Err(Error::ZeroDenominator("panel has zero pairwise quadratic form"));
    }
    let pairs = (panel.n() * (panel.t() - 1)) as f64;
    let s2 = q / (2.0 * pairs);
    let value = -pairs * ((2.0 * PI).ln() + s2.ln() + 0.5 * det.ln() + 1.0);
    Ok((value, s2))
}

/// Closed-form AR(1) pairwise (Yule–Walker) estimate
/// `2 Σ y_t y_{t−1} / Σ (y_t² + y_{t−1}²)`, pooled over series and clipped
/// to the AR(1) domain.
pub fn pairwise_ar1_closed_form(panel: &SeriesPanel) -> Result<f64> {
    let (sq, cross) = panel
        .rows()
        .map(pair_sums)
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    if sq == 0.0 {
        return Err(Error::ZeroDenominator("panel is identically zero"));
    }
    let (lo, hi) = crate::models::Family::Ar1.parameter_domain();
    Ok((2.0 * cross / sq).clamp(lo, hi))
}
