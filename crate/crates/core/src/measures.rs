//! Information-monotone mutual information measures on joint distributions.
//!
//! Conditionals are taken row-wise: `U_{Y|x}` is row `x` normalised, `U_Y` the
//! column sums. Rows with zero mass contribute nothing.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::{det_poly, MultiPoly};
use crate::scalar::{Rational, Scalar};
use crate::vmi::{self, DensitySpec, ParityMode, VmiClosedForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FDivergence {
    /// `f(t) = -ln t`.
    Kl,
    /// `f(t) = |t - 1|`.
    Tvd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoringRule {
    Log,
    Quadratic,
}

pub fn dmi<S: Scalar>(u: &Matrix<S>) -> S {
    u.det().abs_val()
}

/// Applies `div(conditional, marginal)` to every row and averages by the row
/// marginal.
fn expected_divergence(u: &Matrix<f64>, div: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = u.dim();
    let marg = u.col_sums();
    let mut total = 0.0;
    for x in 0..n {
        let row: Vec<f64> = (0..n).map(|y| *u.get(x, y)).collect();
        let px: f64 = row.iter().sum();
        if px <= 0.0 {
            continue;
        }
        let cond: Vec<f64> = row.iter().map(|v| v / px).collect();
        total += px * div(&cond, &marg);
    }
    total
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| if *a > 0.0 { a * libm::log(a / b) } else { 0.0 })
        .sum()
}

fn tvd(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| libm::fabs(a - b)).sum()
}

/// Shannon mutual information in nats.
pub fn smi(u: &Matrix<f64>) -> f64 {
    fmi(u, FDivergence::Kl)
}

pub fn fmi(u: &Matrix<f64>, f: FDivergence) -> f64 {
    match f {
        FDivergence::Kl => expected_divergence(u, kl),
        FDivergence::Tvd => expected_divergence(u, tvd),
    }
}

/// `E_x ||U_{Y|x} - U_Y||²`, exact in rational mode.
pub fn qmi<S: Scalar>(u: &Matrix<S>) -> S {
    let n = u.dim();
    let marg = u.col_sums();
    let mut total = S::zero();
    for x in 0..n {
        let px = (0..n).fold(S::zero(), |a, y| a + u.get(x, y).clone());
        if px.is_zero() {
            continue;
        }
        let mut d = S::zero();
        for y in 0..n {
            let diff = u.get(x, y).clone() / px.clone() - marg[y].clone();
            d = d + diff.clone() * diff;
        }
        total = total + px * d;
    }
    total
}

/// Bregman mutual information: the log score gives Shannon MI, the quadratic
/// score `2p(σ) - Σp²` gives the squared-distance divergence.
pub fn bmi(u: &Matrix<f64>, ps: ScoringRule) -> f64 {
    match ps {
        ScoringRule::Log => smi(u),
        ScoringRule::Quadratic => qmi(u),
    }
}

/// `det(U)²` as a degree-`2C` polynomial.
pub fn dmi_squared_poly(c: usize) -> MultiPoly {
    det_poly(c).pow(2)
}

/// `2 det(U)² · Q_mountain(U)`: the Mountain volume multiplied by `|det U|`.
pub fn vmi_star_poly() -> MultiPoly {
    let f = vmi::vmi_symbolic(&vmi::mountain(), ParityMode::EvenTimesDmi).expect("binary mountain");
    f.materialize().poly
}

/// `u00` alone: not information-monotone. Used to show the audit firing.
pub fn non_monotone_example(c: usize) -> MultiPoly {
    MultiPoly::var(c * c, 0)
}

/// VMI-backed measure: the density, how parity is handled, and the closed form
/// when the density is polynomial.
#[derive(Clone, Debug)]
pub struct VmiMeasure {
    pub density: DensitySpec,
    pub mode: ParityMode,
    pub closed: Option<VmiClosedForm>,
    pub budget: u64,
}

impl VmiMeasure {
    /// Uses the exact closed form whenever the density is polynomial.
    pub fn new(density: DensitySpec, mode: ParityMode) -> Result<Self> {
        let closed = match density.as_polynomial() {
            Some(p) => Some(vmi::vmi_symbolic(&p, mode)?),
            None => {
                check_mode(density.c(), mode)?;
                None
            }
        };
        Ok(VmiMeasure { density, mode, closed, budget: vmi::DEFAULT_BUDGET })
    }

    /// Always integrates numerically.
    pub fn numeric(density: DensitySpec, mode: ParityMode, budget: u64) -> Result<Self> {
        check_mode(density.c(), mode)?;
        if budget == 0 {
            return Err(Error::NonPositiveBudget);
        }
        Ok(VmiMeasure { density, mode, closed: None, budget })
    }

    /// The plain volume.
    pub fn vmi(&self, u: &Matrix<f64>) -> Result<f64> {
        match &self.closed {
            Some(f) => Ok(f.vmi(u)),
            None => Ok(vmi::vmi_numeric(&self.density, u, self.budget, 0)?.value),
        }
    }

    /// The value after the parity transform.
    pub fn eval(&self, u: &Matrix<f64>) -> Result<f64> {
        Ok(self.mode.apply(self.vmi(u)?, libm::fabs(u.det())))
    }
}

fn check_mode(c: usize, mode: ParityMode) -> Result<()> {
    match mode {
        ParityMode::OddDirect if c % 2 == 0 => Err(Error::ParityMismatch { c, mode: mode.name() }),
        ParityMode::EvenTimesDmi if c % 2 == 1 => Err(Error::ParityMismatch { c, mode: mode.name() }),
        _ => Ok(()),
    }
}

#[derive(Clone, Debug)]
pub enum MeasureSpec {
    Dmi,
    Smi,
    Qmi,
    Fmi(FDivergence),
    Bmi(ScoringRule),
    Poly(MultiPoly),
    Vmi(VmiMeasure),
}

impl MeasureSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureSpec::Dmi => "DMI",
            MeasureSpec::Smi => "SMI",
            MeasureSpec::Qmi => "QMI",
            MeasureSpec::Fmi(_) => "FMI",
            MeasureSpec::Bmi(_) => "BMI",
            MeasureSpec::Poly(_) => "POLY",
            MeasureSpec::Vmi(_) => "VMI",
        }
    }

    pub fn eval(&self, u: &Matrix<f64>) -> Result<f64> {
        Ok(match self {
            MeasureSpec::Dmi => dmi(u),
            MeasureSpec::Smi => smi(u),
            MeasureSpec::Qmi => qmi(u),
            MeasureSpec::Fmi(f) => fmi(u, *f),
            MeasureSpec::Bmi(ps) => bmi(u, *ps),
            MeasureSpec::Poly(p) => {
                if p.nvars() != u.dim() * u.dim() {
                    return Err(Error::VariableCountMismatch { left: p.nvars(), right: u.dim() * u.dim() });
                }
                p.eval_f64(u.entries())
            }
            MeasureSpec::Vmi(v) => v.eval(u)?,
        })
    }

    /// Exact value, for measures that have one.
    pub fn eval_exact(&self, u: &Matrix<Rational>) -> Option<Rational> {
        match self {
            MeasureSpec::Dmi => Some(dmi(u)),
            MeasureSpec::Qmi | MeasureSpec::Bmi(ScoringRule::Quadratic) => Some(qmi(u)),
            MeasureSpec::Poly(p) => p.eval(u.entries()).ok(),
            MeasureSpec::Vmi(v) => {
                let f = v.closed.as_ref()?;
                let x = f.vmi_exact(u)?;
                Some(match v.mode {
                    ParityMode::OddDirect => x,
                    ParityMode::EvenTimesDmi => x * dmi(u),
                    ParityMode::Squared => x.clone() * x,
                })
            }
            _ => None,
        }
    }

    /// The backing polynomial, when the measure is a rational polynomial.
    pub fn polynomial(&self) -> Option<MultiPoly> {
        match self {
            MeasureSpec::Poly(p) => Some(p.clone()),
            MeasureSpec::Vmi(v) => {
                let m = v.closed.as_ref()?.materialize();
                (m.radical_pow == 0).then_some(m.poly)
            }
            // QMI divides by the row marginals, so it is rational rather than polynomial.
            _ => None,
        }
    }
}

/// Convenience: `DMI²` as a measure.
pub fn dmi_squared(c: usize) -> MeasureSpec {
    MeasureSpec::Poly(dmi_squared_poly(c))
}

/// Convenience: `VMI★` as a measure.
pub fn vmi_star() -> MeasureSpec {
    MeasureSpec::Poly(vmi_star_poly())
}
