//! Central finite differences. First derivatives use `h = ε^{1/3}·max(|x|, 1)`;
//! second derivatives use `h = ε^{1/4}·max(|x|, 1)` plus one Richardson step
//! against `2h`.

use crate::error::{Error, Result};

pub fn first_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

pub fn second_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

pub fn numeric_derivative<F>(mut objective: F, x: f64, order: Order) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f = |at: f64| -> Result<f64> {
        let v = objective(at)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at })
        }
    };
    match order {
        Order::First => {
            let h = first_step(x);
            Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
        }
        Order::Second => {
            let h = second_step(x);
            let f0 = f(x)?;
            let d1 = (f(x + h)? - 2.0 * f0 + f(x - h)?) / (h * h);
            let d2 = (f(x + 2.0 * h)? - 2.0 * f0 + f(x - 2.0 * h)?) / (4.0 * h * h);
            Ok((4.0 * d1 - d2) / 3.0)
        }
    }
}

/// Elementwise first and second derivatives of a vector-valued function,
/// sharing the stencil evaluations across components.
pub fn derivative_terms<F>(mut objective: F, x: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let h1 = first_step(x);
    let h2 = second_step(x);
    let plus1 = objective(x + h1)?;
    let minus1 = objective(x - h1)?;
    let center = objective(x)?;
    let plus = objective(x + h2)?;
    let minus = objective(x - h2)?;
    let plus2 = objective(x + 2.0 * h2)?;
    let minus2 = objective(x - 2.0 * h2)?;
    let n = center.len();
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        first.push((plus1[i] - minus1[i]) / (2.0 * h1));
        let d1 = (plus[i] - 2.0 * center[i] + minus[i]) / (h2 * h2);
        let d2 = (plus2[i] - 2.0 * center[i] + minus2[i]) / (4.0 * h2 * h2);
        second.push((4.0 * d1 - d2) / 3.0);
    }
    if first.iter().chain(&second).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { at: x });
    }
    Ok((first, second))
}
