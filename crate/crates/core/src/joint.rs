//! Joint distributions, column-stochastic matrices and the informativeness
//! order `U' ⪯ U  <=>  U' = T U` for some column-stochastic `T`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lp;
use crate::matrix::Matrix;
use crate::rng;
use crate::scalar::{Rational, Scalar, F64_TOL};

/// A `C × C` nonnegative matrix whose entries sum to one. Entry `(i, j)` is
/// the probability that the first agent sees `i` and the second sees `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<S = f64>(Matrix<S>);

impl<S: Scalar> JointDistribution<S> {
    pub fn new(m: Matrix<S>) -> Result<Self> {
        if m.dim() < 2 {
            return Err(Error::AlphabetTooSmall(m.dim()));
        }
        if let Some(k) = m.entries().iter().position(|x| !x.is_nonneg()) {
            return Err(Error::InvalidJoint(format!(
                "entry ({}, {}) is negative",
                k / m.dim(),
                k % m.dim()
            )));
        }
        let total = m.sum();
        if !total.near(&S::one()) {
            return Err(Error::InvalidJoint(format!("entries sum to {}", total.to_f64())));
        }
        Ok(JointDistribution(m))
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn c(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        self.0.get(i, j)
    }

    /// Column sums: the slice this distribution lives on.
    pub fn slice_id(&self) -> Vec<S> {
        self.0.col_sums()
    }

    pub fn transpose(&self) -> Self {
        JointDistribution(self.0.transpose())
    }

    /// Product of the two marginals.
    pub fn independent_part(&self) -> Self {
        let r = self.0.row_sums();
        let c = self.0.col_sums();
        let n = self.c();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, r[i].clone() * c[j].clone());
            }
        }
        JointDistribution(m)
    }

    pub fn to_f64(&self) -> JointDistribution<f64> {
        JointDistribution(self.0.to_f64())
    }
}

impl JointDistribution<f64> {
    /// Exact copy using the shortest decimal form of each entry, renormalising
    /// nothing: the rational entries must still sum to one.
    pub fn to_rational(&self) -> Result<JointDistribution<Rational>> {
        let m = self.0.to_rational().ok_or_else(|| Error::InvalidJoint("non-finite entry".into()))?;
        JointDistribution::new(m)
    }
}

/// Nonnegative square matrix whose columns each sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStochastic<S = f64>(Matrix<S>);

impl<S: Scalar> ColumnStochastic<S> {
    pub fn new(m: Matrix<S>) -> Result<Self> {
        if m.dim() < 1 {
            return Err(Error::AlphabetTooSmall(0));
        }
        let n = m.dim();
        for j in 0..n {
            let ok = (0..n).all(|i| m.get(i, j).is_nonneg());
            let s = (0..n).fold(S::zero(), |a, i| a + m.get(i, j).clone());
            if !ok || !s.near(&S::one()) {
                return Err(Error::NotColumnStochastic { column: j });
            }
        }
        Ok(ColumnStochastic(m))
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(c: usize) -> Self {
        ColumnStochastic(Matrix::identity(c))
    }

    pub fn uninformative(c: usize) -> Self {
        ColumnStochastic(Matrix::uniform(c))
    }

    /// Always report `symbol`, whatever is observed.
    pub fn constant(c: usize, symbol: usize) -> Self {
        let mut m = Matrix::zeros(c);
        for j in 0..c {
            m.set(symbol, j, S::one());
        }
        ColumnStochastic(m)
    }

    /// The permutation strategy sending observed `j` to reported `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let c = perm.len();
        let mut m = Matrix::zeros(c);
        for (j, &i) in perm.iter().enumerate() {
            m.set(i, j, S::one());
        }
        ColumnStochastic(m)
    }

    pub fn c(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.0
    }

    pub fn to_f64(&self) -> ColumnStochastic<f64> {
        ColumnStochastic(self.0.to_f64())
    }

    /// `(1-γ) self + γ/C J`, the strategy that keeps its report with
    /// probability `1-γ` and otherwise answers uniformly at random.
    pub fn mix_uniform(&self, gamma: &S) -> Self {
        let c = self.c();
        let u = S::one() / S::from_usize(c);
        let m = self.0.map(|x| (S::one() - gamma.clone()) * x.clone() + gamma.clone() * u.clone());
        ColumnStochastic(m)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(ColumnStochastic(self.0.mul(&other.0)?))
    }
}

/// Binary chart `U = [[s, t], [1-s, 1-t]] · diag(p, 1-p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StpCoords<S = f64> {
    pub s: S,
    pub t: S,
    pub p: S,
}

impl<S: Scalar> StpCoords<S> {
    pub fn new(s: S, t: S, p: S) -> Self {
        StpCoords { s, t, p }
    }
}

fn in_unit<S: Scalar>(name: &'static str, x: &S) -> Result<()> {
    if x.is_nonneg() && (S::one() - x.clone()).is_nonneg() {
        Ok(())
    } else {
        Err(Error::CoordinateOutOfRange { name, value: x.to_f64() })
    }
}

pub fn from_stp<S: Scalar>(c: &StpCoords<S>) -> Result<JointDistribution<S>> {
    in_unit("s", &c.s)?;
    in_unit("t", &c.t)?;
    in_unit("p", &c.p)?;
    let q = S::one() - c.p.clone();
    let m = Matrix::from_rows(alloc::vec![
        alloc::vec![c.s.clone() * c.p.clone(), c.t.clone() * q.clone()],
        alloc::vec![(S::one() - c.s.clone()) * c.p.clone(), (S::one() - c.t.clone()) * q],
    ])?;
    JointDistribution::new(m)
}

/// Inverse chart. The flag is `true` when a column is empty (`p ∈ {0, 1}`);
/// the coordinate of the empty column is then reported as 0.
pub fn to_stp<S: Scalar>(u: &JointDistribution<S>) -> Result<(StpCoords<S>, bool)> {
    if u.c() != 2 {
        return Err(Error::NotBinary(u.c()));
    }
    let p = u.get(0, 0).clone() + u.get(1, 0).clone();
    let q = u.get(0, 1).clone() + u.get(1, 1).clone();
    let mut degenerate = false;
    let s = if p.near_zero() {
        degenerate = true;
        S::zero()
    } else {
        u.get(0, 0).clone() / p.clone()
    };
    let t = if q.near_zero() {
        degenerate = true;
        S::zero()
    } else {
        u.get(0, 1).clone() / q
    };
    Ok((StpCoords { s, t, p }, degenerate))
}

/// `S_A · U · S_Bᵀ`.
pub fn apply_strategies<S: Scalar>(
    u: &JointDistribution<S>,
    sa: &ColumnStochastic<S>,
    sb: &ColumnStochastic<S>,
) -> Result<JointDistribution<S>> {
    let m = sa.matrix().mul(u.matrix())?.mul(&sb.matrix().transpose())?;
    Ok(JointDistribution(m))
}

/// `U' ⪯ U` for joint distributions.
pub fn is_less_informative<S: Scalar>(uprime: &JointDistribution<S>, u: &JointDistribution<S>) -> Result<bool> {
    less_informative_matrix(uprime.matrix(), u.matrix())
}

/// `A = T B` for some column-stochastic `T`, on arbitrary square matrices
/// (noise matrices included).
pub fn less_informative_matrix<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: a.dim() });
    }
    match b.inverse() {
        Some(inv) => Ok(is_column_stochastic(&a.mul(&inv)?)),
        None => less_informative_lp(a, b),
    }
}

/// The column-stochastic `T` with `A = T B`, when `B` is invertible.
pub fn strategy_between<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Option<Matrix<S>> {
    a.mul(&b.inverse()?).ok()
}

fn is_column_stochastic<S: Scalar>(t: &Matrix<S>) -> bool {
    t.entries().iter().all(|x| x.is_nonneg()) && t.col_sums().iter().all(|s| s.near(&S::one()))
}

/// Linear-programming form of the order test, valid for singular `B`.
///
/// Unknowns are the `C²` entries of `T`; equality rows are `(T B)_{ij} = A_{ij}`
/// (two-sided residual) and the `C` column sums of `T` (artificial). Floating
/// inputs are converted exactly and accepted when the optimal L1 residual is at
/// most the backend tolerance.
pub fn less_informative_lp<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Result<bool> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    let conv = |x: &S| -> Result<Rational> {
        if S::EXACT {
            x.to_rational().ok_or_else(|| Error::InvalidJoint("non-finite entry".into()))
        } else {
            Rational::from_float(x.to_f64()).ok_or_else(|| Error::InvalidJoint("non-finite entry".into()))
        }
    };
    let mut rows = Vec::with_capacity(n * n + n);
    let mut rhs = Vec::with_capacity(n * n + n);
    let mut soft = Vec::with_capacity(n * n + n);
    // Variable index of T_{ik} is i*n + k.
    for i in 0..n {
        for j in 0..n {
            let mut row = alloc::vec![Rational::zero(); n * n];
            for k in 0..n {
                row[i * n + k] = conv(b.get(k, j))?;
            }
            rows.push(row);
            rhs.push(conv(a.get(i, j))?);
            soft.push(true);
        }
    }
    for k in 0..n {
        let mut row = alloc::vec![Rational::zero(); n * n];
        for i in 0..n {
            row[i * n + k] = Rational::one();
        }
        rows.push(row);
        rhs.push(Rational::one());
        soft.push(false);
    }
    let gap = lp::min_residual(&rows, &rhs, &soft);
    Ok(if S::EXACT {
        gap.is_zero()
    } else {
        crate::scalar::rational_to_f64(&gap) <= F64_TOL
    })
}

/// The four pure-strategy images of a binary `U`: truthful, flipped, always 0
/// and always 1. Their convex hull is the lower set of `U` within its slice.
pub fn lower_set_vertices_binary<S: Scalar>(u: &JointDistribution<S>) -> Result<[JointDistribution<S>; 4]> {
    if u.c() != 2 {
        return Err(Error::NotBinary(u.c()));
    }
    let left = |s: ColumnStochastic<S>| -> Result<JointDistribution<S>> {
        Ok(JointDistribution(s.matrix().mul(u.matrix())?))
    };
    Ok([
        u.clone(),
        left(ColumnStochastic::permutation(&[1, 0]))?,
        left(ColumnStochastic::constant(2, 0))?,
        left(ColumnStochastic::constant(2, 1))?,
    ])
}

/// Joint distribution from `C²` normalised i.i.d. exponentials.
pub fn random_joint(c: usize, seed: u64) -> JointDistribution<f64> {
    let mut r = rng::seeded(seed);
    let e: Vec<f64> = (0..c * c).map(|_| rng::exponential(&mut r)).collect();
    let s: f64 = e.iter().sum();
    let m = Matrix::new(c, e.into_iter().map(|x| x / s).collect()).expect("c*c entries");
    JointDistribution(m)
}

/// Column-stochastic matrix with each column a normalised exponential vector.
pub fn random_stochastic(c: usize, seed: u64) -> ColumnStochastic<f64> {
    let mut r = rng::seeded(seed);
    let mut m = Matrix::zeros(c);
    for j in 0..c {
        let col = rng::uniform_simplex(&mut r, c);
        for (i, v) in col.into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    ColumnStochastic(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use alloc::vec;

    fn jf(rows: &[&[f64]]) -> JointDistribution<f64> {
        JointDistribution::new(Matrix::from_f64_rows(rows).unwrap()).unwrap()
    }

    fn close(a: &JointDistribution<f64>, b: &JointDistribution<f64>) -> bool {
        a.matrix().frobenius_distance(b.matrix()) < 1e-12
    }

    #[test]
    fn stp_forward() {
        let u = from_stp(&StpCoords::new(1.0, 0.0, 0.7)).unwrap();
        assert!(close(&u, &jf(&[&[0.7, 0.0], &[0.0, 0.3]])));
        let u = from_stp(&StpCoords::new(0.5, 0.5, 0.5)).unwrap();
        assert!(close(&u, &jf(&[&[0.25, 0.25], &[0.25, 0.25]])));
        let u = from_stp(&StpCoords::new(ratio(1, 2), ratio(0, 1), ratio(1, 2))).unwrap();
        assert_eq!(u.get(0, 0), &ratio(1, 4));
        assert_eq!(u.get(1, 1), &ratio(1, 2));
        assert!(matches!(
            from_stp(&StpCoords::new(1.5, 0.0, 0.5)),
            Err(Error::CoordinateOutOfRange { name: "s", .. })
        ));
    }

    #[test]
    fn stp_inverse() {
        let (c, d) = to_stp(&jf(&[&[0.25, 0.25], &[0.25, 0.25]])).unwrap();
        assert!(!d);
        assert_eq!((c.s, c.t, c.p), (0.5, 0.5, 0.5));
        let (c, _) = to_stp(&jf(&[&[0.7, 0.0], &[0.0, 0.3]])).unwrap();
        assert!((c.s - 1.0).abs() < 1e-15 && c.t == 0.0 && (c.p - 0.7).abs() < 1e-15);
        let (c, d) = to_stp(&jf(&[&[0.5, 0.5], &[0.0, 0.0]])).unwrap();
        assert!(!d);
        assert_eq!((c.s, c.t, c.p), (1.0, 1.0, 0.5));
        let (c, d) = to_stp(&jf(&[&[0.4, 0.0], &[0.6, 0.0]])).unwrap();
        assert!(d);
        assert_eq!(c.t, 0.0);
        assert!(matches!(to_stp(&random_joint(3, 1)), Err(Error::NotBinary(3))));
    }

    #[test]
    fn strategies_applied() {
        let u = jf(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let i = ColumnStochastic::identity(2);
        assert_eq!(apply_strategies(&u, &i, &i).unwrap(), u);
        let sa = ColumnStochastic::from_rows(vec![vec![0.5, 0.0], vec![0.5, 1.0]]).unwrap();
        let out = apply_strategies(&u, &sa, &i).unwrap();
        assert!(close(&out, &jf(&[&[0.25, 0.0], &[0.25, 0.5]])));
        let v = random_joint(3, 5);
        let flat = apply_strategies(&v, &ColumnStochastic::uninformative(3), &ColumnStochastic::identity(3)).unwrap();
        assert!(flat.matrix().det().abs() < 1e-15);
        assert!(close(&flat, &flat.independent_part()));
    }

    #[test]
    fn order_examples() {
        let diag = jf(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let flat = jf(&[&[0.25, 0.25], &[0.25, 0.25]]);
        assert!(is_less_informative(&flat, &diag).unwrap());
        assert!(!is_less_informative(&diag, &flat).unwrap());

        let u = diag.clone();
        let mid = ColumnStochastic::from_rows(vec![vec![0.5, 0.0], vec![0.5, 1.0]]).unwrap();
        let low = ColumnStochastic::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let i = ColumnStochastic::identity(2);
        let u1 = apply_strategies(&u, &mid, &i).unwrap();
        let u2 = apply_strategies(&u, &low, &i).unwrap();
        assert!(is_less_informative(&u2, &u1).unwrap());
        assert!(is_less_informative(&u1, &u).unwrap());
    }

    #[test]
    fn order_exact_with_singular_reference() {
        let flat = JointDistribution::from_rows(vec![
            vec![ratio(1, 4), ratio(1, 4)],
            vec![ratio(1, 4), ratio(1, 4)],
        ])
        .unwrap();
        let zero_row = JointDistribution::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(0, 1), ratio(0, 1)],
        ])
        .unwrap();
        let diag = JointDistribution::from_rows(vec![
            vec![ratio(1, 2), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 2)],
        ])
        .unwrap();
        assert!(is_less_informative(&zero_row, &flat).unwrap());
        assert!(is_less_informative(&flat, &zero_row).unwrap());
        assert!(!is_less_informative(&diag, &flat).unwrap());
        assert!(is_less_informative(&flat, &diag).unwrap());
    }

    #[test]
    fn lp_agrees_with_fast_path() {
        for seed in 0..200u64 {
            let u = random_joint(2 + (seed % 2) as usize, seed);
            let c = u.c();
            let t = random_stochastic(c, seed + 10_000);
            let down = JointDistribution::new(t.matrix().mul(u.matrix()).unwrap()).unwrap();
            let fast_down = less_informative_matrix(down.matrix(), u.matrix()).unwrap();
            let lp_down = less_informative_lp(down.matrix(), u.matrix()).unwrap();
            assert!(fast_down && lp_down, "seed {seed}");
            let fast_up = less_informative_matrix(u.matrix(), down.matrix()).unwrap();
            let lp_up = less_informative_lp(u.matrix(), down.matrix()).unwrap();
            assert_eq!(fast_up, lp_up, "seed {seed}");
        }
    }

    #[test]
    fn lower_set_vertices() {
        let u = jf(&[&[0.7, 0.0], &[0.0, 0.3]]);
        let v = lower_set_vertices_binary(&u).unwrap();
        assert!(close(&v[1], &jf(&[&[0.0, 0.3], &[0.7, 0.0]])));
        assert!(close(&v[2], &jf(&[&[0.7, 0.3], &[0.0, 0.0]])));
        assert!(close(&v[3], &jf(&[&[0.0, 0.0], &[0.7, 0.3]])));
        for x in &v {
            assert!(is_less_informative(x, &u).unwrap());
        }
        let flat = jf(&[&[0.25, 0.25], &[0.25, 0.25]]);
        for x in lower_set_vertices_binary(&flat).unwrap() {
            assert!(x.matrix().det().abs() < 1e-15);
        }
        assert!(lower_set_vertices_binary(&random_joint(3, 0)).is_err());
    }

    #[test]
    fn random_generation_is_deterministic() {
        assert_eq!(random_joint(3, 11), random_joint(3, 11));
        assert_ne!(random_joint(3, 11), random_joint(3, 12));
        assert_eq!(random_stochastic(4, 2), random_stochastic(4, 2));
        assert!(ColumnStochastic::new(random_stochastic(4, 2).into_matrix()).is_ok());
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(JointDistribution::new(Matrix::from_f64_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap()).is_err());
        assert!(JointDistribution::new(Matrix::from_f64_rows(&[&[1.5, -0.5], &[0.0, 0.0]]).unwrap()).is_err());
        assert!(ColumnStochastic::new(Matrix::from_f64_rows(&[&[0.5, 0.5], &[0.4, 0.5]]).unwrap()).is_err());
    }
}
