//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Variables of a `C × C` matrix are ordered row-major: `u00, u01, …`. When
//! strategy variables are needed they follow the `C²` entry variables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{factorial, format_rational, parse_rational, Rational, Scalar};

pub type Exponents = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Exponents, Rational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn monomial(exps: Exponents, coef: Rational) -> Self {
        let nvars = exps.len();
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(exps, coef);
        }
        MultiPoly { nvars, terms }
    }

    /// Builds from `(exponents, coefficient)` pairs, merging duplicates.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, Rational)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::VariableCountMismatch { left: nvars, right: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut d = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match d.next() {
            None => true,
            Some(first) => d.all(|x| x == first),
        }
    }

    fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableCountMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base).expect("same ring");
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same ring");
            }
        }
        result
    }

    /// Exact (rational) or floating evaluation, depending on the backend.
    pub fn eval<S: Scalar>(&self, point: &[S]) -> Result<S> {
        if point.len() != self.nvars {
            return Err(Error::VariableCountMismatch { left: self.nvars, right: point.len() });
        }
        let maxe: Vec<u32> = (0..self.nvars)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<S>> = point
            .iter()
            .zip(&maxe)
            .map(|(x, &m)| {
                let mut v = Vec::with_capacity(m as usize + 1);
                v.push(S::one());
                for k in 1..=m as usize {
                    let next = v[k - 1].clone() * x.clone();
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut t = S::from_rational(c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * powers[i][k as usize].clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Floating evaluation with coefficients converted once per call.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = crate::scalar::rational_to_f64(c);
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        t *= libm::pow(point[i], k as f64);
                    }
                }
                t
            })
            .sum()
    }

    /// Replaces variable `i` with `subs[i]`; all substitutes share one ring.
    pub fn compose(&self, subs: &[MultiPoly]) -> Result<MultiPoly> {
        if subs.len() != self.nvars {
            return Err(Error::VariableCountMismatch { left: self.nvars, right: subs.len() });
        }
        let m = subs.first().map_or(0, |s| s.nvars);
        if let Some(s) = subs.iter().find(|s| s.nvars != m) {
            return Err(Error::VariableCountMismatch { left: m, right: s.nvars });
        }
        let mut cache: Vec<Vec<MultiPoly>> = subs.iter().map(|s| vec![MultiPoly::one(m), s.clone()]).collect();
        let mut out = MultiPoly::zero(m);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while cache[i].len() <= k as usize {
                    let next = cache[i].last().unwrap().mul(&subs[i])?;
                    cache[i].push(next);
                }
                t = t.mul(&cache[i][k as usize])?;
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// Same polynomial in a larger ring (new variables appended).
    pub fn extend(&self, nvars: usize) -> Result<Self> {
        if nvars < self.nvars {
            return Err(Error::VariableCountMismatch { left: self.nvars, right: nvars });
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e.resize(nvars, 0);
                (e, c.clone())
            })
            .collect();
        Ok(MultiPoly { nvars, terms })
    }

    /// Drops trailing variables, which must not occur.
    pub fn truncate(&self, nvars: usize) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[nvars..].iter().any(|&k| k > 0) {
                return Err(Error::VariableLayout(format!("variable beyond index {nvars} still present")));
            }
            terms.insert(e[..nvars].to_vec(), c.clone());
        }
        Ok(MultiPoly { nvars, terms })
    }

    /// Homogeneous component of degree `d`.
    pub fn component(&self, d: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() == d)
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        MultiPoly { nvars: self.nvars, terms }
    }

    /// Rewrites the polynomial using `Σ_k x_k = 1`, which holds on every joint
    /// distribution. Working from the top degree down, any homogeneous part
    /// that is an exact multiple `q · Σx` is replaced by `q`. Values on the
    /// probability simplex are unchanged.
    pub fn fold_unit_sum(&self) -> Self {
        if self.nvars == 0 {
            return self.clone();
        }
        let mut parts: Vec<MultiPoly> = (0..=self.degree()).map(|d| self.component(d)).collect();
        for d in (1..parts.len()).rev() {
            if parts[d].is_zero() {
                continue;
            }
            if let Some(q) = parts[d].divide_by_sum() {
                parts[d] = MultiPoly::zero(self.nvars);
                parts[d - 1] = parts[d - 1].add(&q).expect("same ring");
            }
        }
        parts.into_iter().fold(MultiPoly::zero(self.nvars), |a, p| a.add(&p).expect("same ring"))
    }

    /// Exact quotient by `x_0 + … + x_{n-1}`, if there is one.
    fn divide_by_sum(&self) -> Option<MultiPoly> {
        let n = self.nvars;
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(n);
        // Lex order with x_0 most significant: the leading term of the divisor
        // is x_0, so the remainder's leading term must contain x_0.
        while let Some((e, c)) = rem.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
            if e[0] == 0 {
                return None;
            }
            let mut qe = e.clone();
            qe[0] -= 1;
            quot.add_term(qe.clone(), c.clone());
            for k in 0..n {
                let mut te = qe.clone();
                te[k] += 1;
                rem.add_term(te, -c.clone());
            }
        }
        Some(quot)
    }

    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let a = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| {
                    let name = var_name(i, self.nvars);
                    if x == 1 { name } else { format!("{name}^{x}") }
                })
                .collect();
            if vars.is_empty() {
                out.push_str(&format_rational(&a));
            } else {
                if !a.is_one() {
                    out.push_str(&format_rational(&a));
                    out.push('*');
                }
                out.push_str(&vars.join("*"));
            }
        }
        out
    }

    /// Parses the text form produced by [`MultiPoly::to_text`]. Coefficients
    /// may be integers, `num/den` or decimals; a factor may repeat.
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let mut p = MultiPoly::zero(nvars);
        for (neg, term) in split_terms(text)? {
            let mut coef = Rational::one();
            let mut e = vec![0u32; nvars];
            for factor in term.split('*').map(str::trim) {
                if factor.is_empty() {
                    return Err(Error::Parse(format!("empty factor in '{term}'")));
                }
                let (base, pw) = match factor.split_once('^') {
                    Some((b, x)) => {
                        let x: u32 = x.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in '{factor}'")))?;
                        (b.trim(), x)
                    }
                    None => (factor, 1),
                };
                if let Some(i) = parse_var(base, nvars) {
                    e[i] += pw;
                } else if let Some(r) = parse_rational(base) {
                    coef *= num_traits::pow(r, pw as usize);
                } else {
                    return Err(Error::Parse(format!("unknown factor '{factor}'")));
                }
            }
            p.add_term(e, if neg { -coef } else { coef });
        }
        Ok(p)
    }
}

fn split_terms(text: &str) -> Result<Vec<(bool, String)>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut prev: Option<char> = None;
    for ch in text.chars() {
        if ch.is_whitespace() {
            continue;
        }
        let boundary = (ch == '+' || ch == '-')
            && !matches!(prev, None | Some('e') | Some('E') | Some('*') | Some('/') | Some('^'));
        if boundary && !cur.is_empty() {
            out.push((neg, core::mem::take(&mut cur)));
            neg = ch == '-';
        } else if (ch == '+' || ch == '-') && cur.is_empty() {
            if ch == '-' {
                neg = !neg;
            }
        } else {
            cur.push(ch);
        }
        prev = Some(ch);
    }
    if cur.is_empty() {
        if out.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        return Err(Error::Parse("dangling sign".into()));
    }
    out.push((neg, cur));
    Ok(out)
}

fn square_side(n: usize) -> Option<usize> {
    let c = libm::sqrt(n as f64) as usize;
    (c >= 2 && c * c == n && c <= 10).then_some(c)
}

/// `uij` for the entries of a `C × C` matrix (`C ≤ 10`), else `x<k>`.
pub fn var_name(k: usize, nvars: usize) -> String {
    match square_side(nvars) {
        Some(c) => format!("u{}{}", k / c, k % c),
        None => format!("x{k}"),
    }
}

fn parse_var(s: &str, nvars: usize) -> Option<usize> {
    if let Some(rest) = s.strip_prefix('x') {
        let k: usize = rest.parse().ok()?;
        return (k < nvars).then_some(k);
    }
    let c = square_side(nvars)?;
    let rest = s.strip_prefix('u')?;
    let b = rest.as_bytes();
    if b.len() != 2 || !b[0].is_ascii_digit() || !b[1].is_ascii_digit() {
        return None;
    }
    let (i, j) = ((b[0] - b'0') as usize, (b[1] - b'0') as usize);
    (i < c && j < c).then_some(i * c + j)
}

/// `∫_{t ≥ 0, Σt ≤ 1} Π t_i^{a_i} dt = Π a_i! / (m + Σ a_i)!` with `m = a.len()`.
pub fn simplex_monomial_integral(a: &[u32]) -> Rational {
    let m = a.len() as u32;
    let num = a.iter().fold(BigInt::one(), |acc, &k| acc * factorial(k));
    let den = factorial(m + a.iter().sum::<u32>());
    Rational::new(num, den)
}

/// `∫ Π_i x_i^{a_i}` over the probability simplex `{x ≥ 0, Σx = 1}` of
/// dimension `a.len()`, parametrised by all coordinates but the last:
/// `Π a_i! / (a.len() - 1 + Σ a_i)!`.
pub fn dirichlet_monomial_integral(a: &[u32]) -> Rational {
    let k = a.len() as u32;
    let num = a.iter().fold(BigInt::one(), |acc, &e| acc * factorial(e));
    let den = factorial(k - 1 + a.iter().sum::<u32>());
    Rational::new(num, den)
}

fn strategy_split(poly: &MultiPoly, c: usize, rows: usize) -> Result<()> {
    let want = c * c + rows * c;
    if poly.nvars != want {
        return Err(Error::VariableLayout(format!(
            "expected {} entry and {} strategy variables, found {} in total",
            c * c,
            rows * c,
            poly.nvars
        )));
    }
    Ok(())
}

/// Integrates out the free strategy entries `t_{ij}` (`i < C-1`), stored at
/// index `C² + i·C + j`, over the product of per-column simplices. The last row
/// of `T` must already have been eliminated through the column sums.
pub fn integrate_out_t(poly: &MultiPoly, c: usize) -> Result<MultiPoly> {
    strategy_split(poly, c, c - 1)?;
    let cc = c * c;
    let mut out = MultiPoly::zero(cc);
    for (e, coef) in &poly.terms {
        let mut w = coef.clone();
        for j in 0..c {
            let col: Vec<u32> = (0..c - 1).map(|i| e[cc + i * c + j]).collect();
            w *= simplex_monomial_integral(&col);
        }
        out.add_term(e[..cc].to_vec(), w);
    }
    Ok(out)
}

/// Same integral with all `C` rows of `T` kept as variables (`t_{ij}` at index
/// `C² + i·C + j`); each column is integrated over the probability simplex
/// without expanding `1 - Σ t`.
pub fn integrate_out_t_full(poly: &MultiPoly, c: usize) -> Result<MultiPoly> {
    strategy_split(poly, c, c)?;
    let cc = c * c;
    let mut out = MultiPoly::zero(cc);
    for (e, coef) in &poly.terms {
        let mut w = coef.clone();
        for j in 0..c {
            let col: Vec<u32> = (0..c).map(|i| e[cc + i * c + j]).collect();
            w *= dirichlet_monomial_integral(&col);
        }
        out.add_term(e[..cc].to_vec(), w);
    }
    Ok(out)
}

/// Permutations of `0..n` with their signs.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    heap(n, &mut p, &mut out);
    out.into_iter()
        .map(|p| {
            let inv = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let sign = if inv % 2 == 0 { 1 } else { -1 };
            (p, sign)
        })
        .collect()
}

fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(p.clone());
        return;
    }
    heap(k - 1, p, out);
    for i in 0..k - 1 {
        if k % 2 == 0 {
            p.swap(i, k - 1);
        } else {
            p.swap(0, k - 1);
        }
        heap(k - 1, p, out);
    }
}

/// `det U` as a polynomial in the `C²` entry variables.
pub fn det_poly(c: usize) -> MultiPoly {
    let n = c * c;
    let mut p = MultiPoly::zero(n);
    for (perm, sign) in signed_permutations(c) {
        let mut e = vec![0u32; n];
        for (i, &j) in perm.iter().enumerate() {
            e[i * c + j] += 1;
        }
        p.add_term(e, Rational::from_integer(BigInt::from(sign)));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn u(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    #[test]
    fn det_at_diagonal() {
        let d = det_poly(2);
        assert_eq!(d.to_text(), "u00*u11 - u01*u10");
        let v = d.eval(&[ratio(1, 2), int(0), int(0), ratio(1, 2)]).unwrap();
        assert_eq!(v, ratio(1, 4));
    }

    #[test]
    fn ring_identities() {
        let p = u(4, 0).add(&u(4, 3).scale(&ratio(3, 7))).unwrap();
        assert!(p.mul(&MultiPoly::zero(4)).unwrap().is_zero());
        assert_eq!(p.mul(&MultiPoly::one(4)).unwrap(), p);
        assert!(p.sub(&p).unwrap().is_zero());
        assert!(matches!(p.add(&MultiPoly::one(3)), Err(Error::VariableCountMismatch { .. })));
    }

    #[test]
    fn dmi_squared_value() {
        let d2 = det_poly(2).pow(2);
        assert_eq!(d2.degree(), 4);
        let v = d2.eval(&[ratio(2, 5), ratio(1, 10), ratio(1, 10), ratio(2, 5)]).unwrap();
        assert_eq!(v, ratio(9, 400));
    }

    #[test]
    fn degrees() {
        assert_eq!(MultiPoly::constant(4, int(5)).degree(), 0);
        assert_eq!(MultiPoly::zero(4).degree(), 0);
        let mountain = MultiPoly::monomial(vec![1, 1, 1, 1], int(16));
        assert_eq!(mountain.degree(), 4);
    }

    #[test]
    fn simplex_integrals() {
        assert_eq!(simplex_monomial_integral(&[0]), int(1));
        assert_eq!(simplex_monomial_integral(&[1, 1]), ratio(1, 24));
        assert_eq!(simplex_monomial_integral(&[0, 0]), ratio(1, 2));
        // Full-column form equals the free-row form after substituting the last row.
        assert_eq!(dirichlet_monomial_integral(&[1, 1]), ratio(1, 6));
        assert_eq!(dirichlet_monomial_integral(&[0, 0, 0]), ratio(1, 2));
    }

    #[test]
    fn integrate_out_strategies() {
        // C = 2: variables u00..u11 then t00, t01.
        let one = MultiPoly::one(6);
        assert_eq!(integrate_out_t(&one, 2).unwrap(), MultiPoly::one(4));
        let st = u(6, 4).mul(&u(6, 5)).unwrap();
        assert_eq!(integrate_out_t(&st, 2).unwrap(), MultiPoly::constant(4, ratio(1, 4)));
        let mixed = st.mul(&u(6, 0)).unwrap();
        let r = integrate_out_t(&mixed, 2).unwrap();
        assert_eq!(r.degree(), 1);
        assert_eq!(r.coeff(&[1, 0, 0, 0]), ratio(1, 4));
        assert!(integrate_out_t(&MultiPoly::one(5), 2).is_err());
    }

    #[test]
    fn full_column_integration_matches_substitution() {
        // s(1-s) over [0,1] two ways.
        let n = 8;
        let t00 = u(n, 4);
        let t10 = u(n, 6);
        let full = integrate_out_t_full(&t00.mul(&t10).unwrap(), 2).unwrap();
        let n2 = 6;
        let s = u(n2, 4);
        let free = integrate_out_t(&s.mul(&MultiPoly::one(n2).sub(&s).unwrap()).unwrap(), 2).unwrap();
        assert_eq!(full, free);
    }

    #[test]
    fn composition() {
        // (x0 + x1)^2 with x0 -> y0*y1, x1 -> 1.
        let p = u(2, 0).add(&u(2, 1)).unwrap().pow(2);
        let subs = vec![u(2, 0).mul(&u(2, 1)).unwrap(), MultiPoly::one(2)];
        let q = p.compose(&subs).unwrap();
        let x = [ratio(2, 3), ratio(5, 7)];
        let y = x[0].clone() * x[1].clone() + int(1);
        assert_eq!(q.eval(&x).unwrap(), y.clone() * y);
    }

    #[test]
    fn unit_sum_folding() {
        let n = 4;
        let l = (0..n).fold(MultiPoly::zero(n), |a, i| a.add(&u(n, i)).unwrap());
        let q = u(n, 0).mul(&u(n, 1)).unwrap();
        let p = q.mul(&l).unwrap().add(&l.scale(&ratio(-3, 4))).unwrap().add(&MultiPoly::constant(n, ratio(3, 8))).unwrap();
        let folded = p.fold_unit_sum();
        let expect = q.add(&MultiPoly::constant(n, ratio(-3, 8))).unwrap();
        assert_eq!(folded, expect);
        let square = u(n, 0).pow(2).add(&u(n, 1).pow(2)).unwrap();
        assert_eq!(square.fold_unit_sum(), square);
    }

    #[test]
    fn text_round_trip() {
        let p = MultiPoly::parse("8/15*u00^2*u01^2 - 1.5*u00*u10 + 3/8", 4).unwrap();
        assert_eq!(p.coeff(&[2, 2, 0, 0]), ratio(8, 15));
        assert_eq!(p.coeff(&[1, 0, 1, 0]), ratio(-3, 2));
        assert_eq!(p.coeff(&[0, 0, 0, 0]), ratio(3, 8));
        assert_eq!(MultiPoly::parse(&p.to_text(), 4).unwrap(), p);
        let q = MultiPoly::parse("-x0*x2 + 2e-1*x1", 3).unwrap();
        assert_eq!(q.coeff(&[0, 1, 0]), ratio(1, 5));
        assert!(MultiPoly::parse("u22", 4).is_err());
        assert!(MultiPoly::parse("", 4).is_err());
    }

    #[test]
    fn eval_product_is_product_of_evals() {
        let p = MultiPoly::parse("u00*u11 - 2/3*u01 + 1", 4).unwrap();
        let q = MultiPoly::parse("u10^3 + 5*u00*u01", 4).unwrap();
        let x = [ratio(1, 3), ratio(1, 5), ratio(2, 7), ratio(1, 11)];
        let pq = p.mul(&q).unwrap().eval(&x).unwrap();
        assert_eq!(pq, p.eval(&x).unwrap() * q.eval(&x).unwrap());
        let xf: Vec<f64> = x.iter().map(|r| r.to_f64()).collect();
        assert!((p.eval_f64(&xf) - p.eval(&x).unwrap().to_f64()).abs() < 1e-14);
    }

    #[test]
    fn permutation_signs() {
        let perms = signed_permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms.iter().map(|(_, s)| s).sum::<i64>(), 0);
        assert_eq!(det_poly(3).len(), 6);
    }
}
