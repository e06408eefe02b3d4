//! Dense symmetric positive-definite kernel.
//!
//! Matrices are stored dense and row-major. The series lengths handled here
//! are small (tens to a few hundred), so plain O(n^3) Cholesky is used
//! throughout.

use crate::error::{Error, Result};

/// Dense symmetric matrix, row-major, full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, rejecting asymmetric input.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim > 0, "SymMatrix dimension must be positive");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Symmetric Toeplitz matrix with first row `first_row`.
    pub fn toeplitz(first_row: &[f64]) -> Self {
        Self::from_fn(first_row.len(), |i, j| first_row[j - i])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.get(i, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Dense product `self * other`, row-major, not necessarily symmetric.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[i * self.dim + j]
        }
    }

    /// Twice the sum of log-diagonal entries.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| self.lower[i * self.dim + i].ln())
            .sum::<f64>()
    }

    /// `L z`, the map used to colour white noise.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.lower[i * n..i * n + i + 1]
                    .iter()
                    .zip(z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / self.lower[i * n + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `bᵀ (L Lᵀ)⁻¹ b`, computed as `|L⁻¹ b|²`.
    pub fn inverse_quadratic_form(&self, b: &[f64]) -> f64 {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        x.iter().map(|v| v * v).sum()
    }

    /// `(L Lᵀ)⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        // Rows of L⁻¹, lower triangular.
        let mut linv = vec![0.0; n * n];
        for j in 0..n {
            linv[j * n + j] = 1.0 / self.lower[j * n + j];
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.lower[i * n + k] * linv[k * n + j];
                }
                linv[i * n + j] = -s / self.lower[i * n + i];
            }
        }
        SymMatrix::from_fn(n, |i, j| {
            // i <= j, so k runs from j.
            (j..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
        })
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            (0..=i.min(j))
                .map(|k| self.lower[i * n + k] * self.lower[j * n + k])
                .sum()
        })
    }
}

/// Cholesky factorization; fails when a pivot drops to
/// `dim * eps * max_diagonal` or below.
pub fn cholesky(m: &SymMatrix) -> Result<CholeskyFactor> {
    let n = m.dim();
    let threshold = n as f64 * f64::EPSILON * m.max_diagonal().max(0.0);
    let mut lower = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= lower[j * n + k] * lower[j * n + k];
        }
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        lower[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / ljj;
        }
    }
    Ok(CholeskyFactor { dim: n, lower })
}

pub fn invert_spd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(cholesky(m)?.inverse())
}

pub fn log_det(f: &CholeskyFactor) -> f64 {
    f.log_det()
}

/// Closed-form inverse of the unit-innovation AR(1) covariance
/// `φ^|i−j| / (1 − φ²)`: tridiagonal with `1` in the corners, `1 + φ²` on the
/// interior diagonal and `−φ` off the diagonal.
pub fn ar1_precision_analytic(phi: f64, t: usize) -> Result<SymMatrix> {
    if !(phi.abs() < 1.0) {
        return Err(Error::Domain(format!("AR(1) needs |phi| < 1, got {phi}")));
    }
    if t == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if t == 1 {
        return SymMatrix::new(1, vec![1.0 - phi * phi]);
    }
    Ok(SymMatrix::from_fn(t, |i, j| {
        if i == j {
            if i == 0 || i == t - 1 {
                1.0
            } else {
                1.0 + phi * phi
            }
        } else if j == i + 1 {
            -phi
        } else {
            0.0
        }
    }))
}

/// Read access to the inverse of a (unit-σ²) covariance matrix, enough to
/// evaluate quadratic Hyvärinen terms without materializing the inverse.
pub trait PrecisionOperator {
    fn dim(&self) -> usize;

    /// `tr(Γ⁻¹)`.
    fn trace(&self) -> f64;

    /// `out = Γ⁻¹ x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl PrecisionOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn trace(&self) -> f64 {
        SymMatrix::trace(self)
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// The AR(1) precision applied in O(T) without storing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Precision {
    pub phi: f64,
    pub len: usize,
}

impl Ar1Precision {
    pub fn new(phi: f64, len: usize) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::Domain(format!("AR(1) needs |phi| < 1, got {phi}")));
        }
        if len == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self { phi, len })
    }
}

impl PrecisionOperator for Ar1Precision {
    fn dim(&self) -> usize {
        self.len
    }

    fn trace(&self) -> f64 {
        let p2 = self.phi * self.phi;
        match self.len {
            1 => 1.0 - p2,
            n => 2.0 + (n - 2) as f64 * (1.0 + p2),
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len;
        let phi = self.phi;
        if n == 1 {
            out[0] = (1.0 - phi * phi) * x[0];
            return;
        }
        let mid = 1.0 + phi * phi;
        out[0] = x[0] - phi * x[1];
        for i in 1..n - 1 {
            out[i] = mid * x[i] - phi * (x[i - 1] + x[i + 1]);
        }
        out[n - 1] = x[n - 1] - phi * x[n - 2];
    }
}
