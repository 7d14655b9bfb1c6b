//! Gauss-Legendre rules and the integration drivers used by numeric VMI.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng;

/// A numeric integral with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Standard error for Monte Carlo; difference between the last two
    /// refinements for quadrature.
    pub std_error: f64,
    pub evaluations: u64,
}

/// Nodes and weights of the `n`-point rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let pi = core::f64::consts::PI;
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = libm::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if libm::fabs(dz) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x.push(0.5 * (1.0 - z));
        w.push(1.0 / ((1.0 - z * z) * dp * dp));
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product rule on `[0, 1]²`, starting at 64 points per axis and
/// doubling until two successive values agree to `1e-10` or the next level
/// would exceed `budget` evaluations.
pub fn integrate_unit_square(f: impl Fn(f64, f64) -> f64, budget: u64) -> Result<Estimate> {
    if budget == 0 {
        return Err(Error::NonPositiveBudget);
    }
    let mut n = 64usize;
    let mut used = 0u64;
    let mut prev: Option<f64> = None;
    let mut last = Estimate { value: 0.0, std_error: f64::INFINITY, evaluations: 0 };
    loop {
        let cost = (n * n) as u64;
        if prev.is_some() && used + cost > budget {
            break;
        }
        let (x, w) = gauss_legendre(n);
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let mut row = 0.0;
            for (yj, wj) in x.iter().zip(&w) {
                row += wj * f(*xi, *yj);
            }
            total += wi * row;
        }
        used += cost;
        let err = prev.map_or(f64::INFINITY, |p| libm::fabs(total - p));
        last = Estimate { value: total, std_error: err, evaluations: used };
        if err < 1e-10 {
            break;
        }
        prev = Some(total);
        n *= 2;
    }
    Ok(last)
}

/// Plain Monte Carlo mean of `f` over `samples` draws produced by `draw`.
pub fn monte_carlo(
    samples: u64,
    seed: u64,
    mut draw: impl FnMut(&mut rng::SeededRng) -> f64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::NonPositiveBudget);
    }
    let mut r = rng::seeded(seed);
    // Welford accumulation.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=samples {
        let v = draw(&mut r);
        let d = v - mean;
        mean += d / k as f64;
        m2 += d * (v - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    Ok(Estimate { value: mean, std_error: libm::sqrt(var / samples as f64), evaluations: samples })
}
