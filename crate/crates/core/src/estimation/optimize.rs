//! Derivative-free minimizers: Brent's bounded scalar search and
//! Nelder–Mead for the joint single-series fit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 − √5) / 2

/// Bounded minimization by golden-section search with parabolic
/// interpolation (Brent). Both endpoints are also evaluated, so a minimum on
/// the boundary is returned exactly.
pub fn minimize_scalar<F>(
    mut objective: F,
    lower: f64,
    upper: f64,
    tol: f64,
    max_evaluations: usize,
) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lower < upper) {
        return Err(Error::Domain(format!(
            "empty search interval [{lower}, {upper}]"
        )));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        let v = objective(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: x })
        }
    };

    let sqrt_eps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (lower, upper);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = eval(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let budget = max_evaluations.saturating_sub(2);
    let mut converged = false;

    for _ in 0..budget.saturating_sub(1) {
        let xm = 0.5 * (a + b);
        let tol1 = sqrt_eps * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = eval(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged { evaluations });
    }
    for edge in [lower, upper] {
        let fe = eval(edge)?;
        if fe < fx {
            x = edge;
            fx = fe;
        }
    }
    Ok(ScalarMinimum {
        x,
        fx,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Nelder–Mead with standard coefficients. Converges when both the spread
/// of function values and the simplex diameter fall below `tol` (relative
/// to the magnitude of the best vertex).
pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    step: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<SimplexMinimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let dim = start.len();
    assert_eq!(step.len(), dim);
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| -> Result<f64> {
        evaluations += 1;
        let v = objective(x)?;
        // Non-finite values act as a wall; the simplex moves away from them.
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut values = Vec::with_capacity(dim + 1);
    for p in &simplex {
        values.push(eval(p)?);
    }
    if !values[0].is_finite() {
        return Err(Error::NonFinite { at: start[0] });
    }

    for iteration in 0..max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let f_spread = (values[dim] - best).abs();
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let x_scale = simplex[0].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if f_spread <= tol * best.abs().max(1.0) && x_spread <= tol.sqrt() * x_scale {
            return Ok(SimplexMinimum {
                x: simplex[0].clone(),
                fx: best,
                iterations: iteration,
                evaluations,
            });
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|p| p[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |c: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(m, w)| m + c * (m - w))
                .collect()
        };
        let worst = simplex[dim].clone();
        let reflected = along(1.0, &worst);
        let fr = eval(&reflected)?;
        if fr < values[0] {
            let expanded = along(2.0, &worst);
            let fe = eval(&expanded)?;
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = along(0.5, &worst);
            let fc = eval(&c)?;
            (c, fc)
        } else {
            let c = along(-0.5, &worst);
            let fc = eval(&c)?;
            (c, fc)
        };
        if fc < fr.min(values[dim]) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, p)| b + 0.5 * (p - b))
                .collect();
            values[i] = eval(&shrunk)?;
            simplex[i] = shrunk;
        }
    }
    Err(Error::NotConverged { evaluations })
}
