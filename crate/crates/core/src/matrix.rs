//! Small dense square matrices, row-major.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn new(n: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Ok(Matrix { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
            data.extend(r);
        }
        Ok(Matrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: alloc::vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    /// Every entry `1/n`: the uninformative strategy.
    pub fn uniform(n: usize) -> Self {
        let v = S::one() / S::from_usize(n);
        Matrix { n, data: alloc::vec![v; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    /// `None` if an entry has no rational value (non-finite floats).
    pub fn to_rational(&self) -> Option<Matrix<Rational>> {
        let data = self.data.iter().map(|x| x.to_rational()).collect::<Option<Vec<_>>>()?;
        Some(Matrix { n: self.n, data })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.data[i * n + j].clone() + a.clone() * other.data[k * n + j].clone();
                    out.data[i * n + j] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Matrix { n: self.n, data })
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                data.push(self.data[i * n + j].clone());
            }
        }
        Matrix { n, data }
    }

    pub fn sum(&self) -> S {
        self.data.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    pub fn col_sums(&self) -> Vec<S> {
        (0..self.n)
            .map(|j| (0..self.n).fold(S::zero(), |a, i| a + self.get(i, j).clone()))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.data.chunks(self.n).map(|r| r.iter().cloned().fold(S::zero(), |a, b| a + b)).collect()
    }

    /// Gaussian elimination with largest-magnitude pivots.
    pub fn det(&self) -> S {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = S::one();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs_val() > a[piv * n + col].abs_val() {
                    piv = r;
                }
            }
            if a[piv * n + col].is_zero() {
                return S::zero();
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col].clone();
            det = det * p.clone();
            for r in col + 1..n {
                let f = a[r * n + col].clone() / p.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[r * n + j].clone() - f.clone() * a[col * n + j].clone();
                    a[r * n + j] = v;
                }
            }
        }
        det
    }

    /// Gauss-Jordan inverse; `None` when a pivot is (near) zero.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs_val() > a[piv * n + col].abs_val() {
                    piv = r;
                }
            }
            if a[piv * n + col].is_zero() || (!S::EXACT && a[piv * n + col].abs_val().to_f64() < 1e-14) {
                return None;
            }
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
            let p = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] = a[col * n + j].clone() / p.clone();
                inv[col * n + j] = inv[col * n + j].clone() / p.clone();
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] = a[r * n + j].clone() - f.clone() * a[col * n + j].clone();
                    inv[r * n + j] = inv[r * n + j].clone() - f.clone() * inv[col * n + j].clone();
                }
            }
        }
        Some(Matrix { n, data: inv })
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }
}

impl Matrix<f64> {
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        libm::sqrt(self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.to_vec()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn det_and_inverse_exact() {
        let m = Matrix::from_rows(alloc::vec![
            alloc::vec![ratio(2, 5), ratio(1, 10)],
            alloc::vec![ratio(1, 10), ratio(2, 5)],
        ])
        .unwrap();
        assert_eq!(m.det(), ratio(3, 20));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn det_with_row_swap() {
        let m = Matrix::from_f64_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 2.0]]).unwrap();
        assert_eq!(m.det(), -2.0);
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = Matrix::from_f64_rows(&[&[0.25, 0.25], &[0.25, 0.25]]).unwrap();
        assert_eq!(m.det(), 0.0);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn sums_and_transpose() {
        let m = Matrix::from_f64_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(m.col_sums(), alloc::vec![4.0, 6.0]);
        assert_eq!(m.row_sums(), alloc::vec![3.0, 7.0]);
        assert_eq!(m.transpose().get(0, 1), &3.0);
        assert!(Matrix::<f64>::new(2, alloc::vec![1.0]).is_err());
    }
}
