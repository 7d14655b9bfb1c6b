//! Unbiased finite-sample estimators of polynomial mutual information.
//!
//! A monomial `Π_k u_{c_k c'_k}` of degree `d` is the probability that `d`
//! independent signal pairs equal `(c_1, c'_1), …, (c_d, c'_d)` in order, so the
//! product of indicators over `d` distinct samples estimates it without bias.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::MultiPoly;
use crate::rng;
use crate::scalar::{falling, rational_to_f64, Rational};

/// Maximum number of outcome sequences enumerated by [`exact_expectation`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Draws used by the default subsampled policy.
pub const DEFAULT_SUBSAMPLES: usize = 200;

/// How monomial factors are assigned to samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Factor `k` uses sample `k`.
    FirstK,
    /// Average over every ordered choice of distinct samples.
    AveragedExact,
    /// Average over `m` random orderings drawn from `seed`.
    AveragedSubsampled { m: usize, seed: u64 },
}

impl Default for Policy {
    fn default() -> Self {
        Policy::AveragedSubsampled { m: DEFAULT_SUBSAMPLES, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coef: Rational,
    pub coef_f64: f64,
    /// `(c, c')` per factor, with multiplicity.
    pub factors: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledEstimator {
    poly: MultiPoly,
    c: usize,
    monomials: Vec<Monomial>,
    degree: usize,
    policy: Policy,
    /// Orderings for the subsampled policy, fixed at compile time.
    orderings: Vec<Vec<usize>>,
    orderings_for: usize,
}

pub fn compile_ube(poly: &MultiPoly, c: usize, policy: Policy) -> Result<CompiledEstimator> {
    if poly.nvars() != c * c {
        return Err(Error::VariableCountMismatch { left: c * c, right: poly.nvars() });
    }
    if let Policy::AveragedSubsampled { m, .. } = policy {
        if m == 0 {
            return Err(Error::NoReplicates);
        }
    }
    let monomials = poly
        .terms()
        .map(|(e, coef)| {
            let mut factors = Vec::new();
            for (idx, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    factors.push((idx / c, idx % c));
                }
            }
            Monomial { coef: coef.clone(), coef_f64: rational_to_f64(coef), factors }
        })
        .collect();
    Ok(CompiledEstimator {
        poly: poly.clone(),
        c,
        monomials,
        degree: poly.degree() as usize,
        policy,
        orderings: Vec::new(),
        orderings_for: 0,
    })
}

impl CompiledEstimator {
    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Minimum number of samples: the polynomial degree.
    pub fn required_samples(&self) -> usize {
        self.degree
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self.orderings.clear();
        self.orderings_for = 0;
        self
    }

    /// Pre-draws the subsampled orderings for batches of length `t`, so that
    /// repeated evaluations do not redraw them.
    pub fn prepare(&mut self, t: usize) {
        if let Policy::AveragedSubsampled { m, seed } = self.policy {
            if self.orderings_for != t || self.orderings.len() != m {
                let mut r = rng::seeded(seed);
                self.orderings = (0..m).map(|_| rng::ordered_subset(&mut r, t, self.degree)).collect();
                self.orderings_for = t;
            }
        }
    }

    fn check(&self, batch: &[(usize, usize)]) -> Result<()> {
        if batch.len() < self.degree {
            return Err(Error::InsufficientSamples { required: self.degree, found: batch.len() });
        }
        for &(a, b) in batch {
            if a >= self.c || b >= self.c {
                return Err(Error::SymbolOutOfRange { symbol: a.max(b), c: self.c });
            }
        }
        Ok(())
    }

    fn orderings_for(&self, t: usize) -> Vec<Vec<usize>> {
        match self.policy {
            Policy::AveragedSubsampled { m, seed } => {
                if self.orderings_for == t && self.orderings.len() == m {
                    self.orderings.clone()
                } else {
                    let mut r = rng::seeded(seed);
                    (0..m).map(|_| rng::ordered_subset(&mut r, t, self.degree)).collect()
                }
            }
            _ => Vec::new(),
        }
    }

    /// Exact value of the estimator on a batch.
    pub fn evaluate(&self, batch: &[(usize, usize)]) -> Result<Rational> {
        self.check(batch)?;
        Ok(match self.policy {
            Policy::FirstK => self.first_k(batch, None),
            Policy::AveragedExact => self.averaged_exact(batch),
            Policy::AveragedSubsampled { m, .. } => {
                let ords = self.orderings_for(batch.len());
                let total = ords.iter().fold(Rational::zero(), |acc, o| acc + self.first_k(batch, Some(o)));
                total / Rational::from_integer(BigInt::from(m))
            }
        })
    }

    /// Floating value; same semantics as [`CompiledEstimator::evaluate`].
    pub fn evaluate_f64(&self, batch: &[(usize, usize)]) -> Result<f64> {
        self.check(batch)?;
        Ok(match self.policy {
            Policy::FirstK => self.first_k_f64(batch, None),
            Policy::AveragedExact => rational_to_f64(&self.averaged_exact(batch)),
            Policy::AveragedSubsampled { m, .. } => {
                let ords = self.orderings_for(batch.len());
                ords.iter().map(|o| self.first_k_f64(batch, Some(o))).sum::<f64>() / m as f64
            }
        })
    }

    fn hits(&self, mono: &Monomial, batch: &[(usize, usize)], order: Option<&Vec<usize>>) -> bool {
        mono.factors.iter().enumerate().all(|(k, f)| {
            let idx = order.map_or(k, |o| o[k]);
            batch[idx] == *f
        })
    }

    fn first_k(&self, batch: &[(usize, usize)], order: Option<&Vec<usize>>) -> Rational {
        self.monomials
            .iter()
            .filter(|m| self.hits(m, batch, order))
            .fold(Rational::zero(), |acc, m| acc + &m.coef)
    }

    fn first_k_f64(&self, batch: &[(usize, usize)], order: Option<&Vec<usize>>) -> f64 {
        self.monomials.iter().filter(|m| self.hits(m, batch, order)).map(|m| m.coef_f64).sum()
    }

    /// `Σ_mono coef · Π_p (n_p)_{m_p} / (T)_k`, where `n_p` counts pair type `p`
    /// in the batch and `m_p` its multiplicity in the monomial.
    fn averaged_exact(&self, batch: &[(usize, usize)]) -> Rational {
        let c = self.c;
        let mut counts = vec![0u64; c * c];
        for &(a, b) in batch {
            counts[a * c + b] += 1;
        }
        let t = batch.len() as u64;
        let mut total = Rational::zero();
        for m in &self.monomials {
            let mut need = vec![0u64; c * c];
            for &(a, b) in &m.factors {
                need[a * c + b] += 1;
            }
            let mut num = BigInt::one();
            for p in 0..c * c {
                if need[p] > 0 {
                    num *= falling(counts[p], need[p]);
                }
            }
            if num.is_zero() {
                continue;
            }
            let den = falling(t, m.factors.len() as u64);
            total += &m.coef * Rational::new(num, den);
        }
        total
    }
}

/// `E[estimator]` under `T` i.i.d. draws from `U`, by enumerating every outcome
/// sequence with positive probability.
pub fn exact_expectation(est: &CompiledEstimator, u: &Matrix<Rational>, t: usize) -> Result<Rational> {
    exact_expectation_capped(est, u, t, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_expectation_capped(est: &CompiledEstimator, u: &Matrix<Rational>, t: usize, cap: u64) -> Result<Rational> {
    let c = est.c;
    if u.dim() != c {
        return Err(Error::DimensionMismatch { expected: c, found: u.dim() });
    }
    if t < est.degree {
        return Err(Error::InsufficientSamples { required: est.degree, found: t });
    }
    let outcomes = libm::pow((c * c) as f64, t as f64);
    if outcomes > cap as f64 {
        return Err(Error::EnumerationCap { outcomes, cap });
    }
    let mut est = est.clone();
    est.prepare(t);
    let support: Vec<(usize, Rational)> =
        u.entries().iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(k, p)| (k, p.clone())).collect();
    let s = support.len();
    if s == 0 {
        return Ok(Rational::zero());
    }
    let mut digits = vec![0usize; t];
    let mut total = Rational::zero();
    let mut batch = vec![(0usize, 0usize); t];
    loop {
        let mut prob = Rational::one();
        for (k, &d) in digits.iter().enumerate() {
            let (idx, ref p) = support[d];
            prob *= p;
            batch[k] = (idx / c, idx % c);
        }
        let v = est.evaluate(&batch)?;
        if !v.is_zero() {
            total += prob * v;
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == t {
                return Ok(total);
            }
            digits[k] += 1;
            if digits[k] < s {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}
