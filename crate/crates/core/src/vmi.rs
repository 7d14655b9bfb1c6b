//! Volume mutual information: the `w`-weighted volume of the lower set of `U`.
//!
//! For an invertible `U` the lower set is the image of the strategy polytope
//! `E` under `T ↦ T U`, which gives
//!
//! `VMI(U) = C^{C/2} |det U|^{C-1} ∫_E w(T U) dT`.
//!
//! For polynomial `w` the integral is a polynomial `Q(U)` computed exactly.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::joint::{self, JointDistribution};
use crate::matrix::Matrix;
use crate::poly::{det_poly, integrate_out_t_full, MultiPoly};
use crate::quadrature::{self, Estimate};
use crate::rng;
use crate::scalar::{factorial, int, rational_to_f64, ratio, Rational, Scalar};

/// Default evaluation budget for numeric VMI.
pub const DEFAULT_BUDGET: u64 = 1 << 22;

/// `w(U) = (√C)^radical_pow · poly(U)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyDensity {
    poly: MultiPoly,
    c: usize,
    radical_pow: i32,
    nonneg_checked: bool,
}

impl PolyDensity {
    /// Checks nonnegativity at `10⁴` random joint distributions.
    pub fn new(poly: MultiPoly, c: usize) -> Result<Self> {
        let d = Self::unchecked(poly, c)?;
        for k in 0..10_000u64 {
            let u = joint::random_joint(c, 0x6e6f_6e6e_6567 ^ k);
            let v = d.poly.eval_f64(u.matrix().entries());
            if v < -1e-12 {
                return Err(Error::NegativeDensity { value: v });
            }
        }
        Ok(PolyDensity { nonneg_checked: true, ..d })
    }

    /// Skips the nonnegativity check; the flag records that.
    pub fn unchecked(poly: MultiPoly, c: usize) -> Result<Self> {
        if c < 2 {
            return Err(Error::AlphabetTooSmall(c));
        }
        if poly.nvars() != c * c {
            return Err(Error::VariableCountMismatch { left: c * c, right: poly.nvars() });
        }
        Ok(PolyDensity { poly, c, radical_pow: 0, nonneg_checked: false })
    }

    pub fn with_radical(mut self, radical_pow: i32) -> Self {
        self.radical_pow = radical_pow;
        self
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn radical_pow(&self) -> i32 {
        self.radical_pow
    }

    pub fn nonneg_checked(&self) -> bool {
        self.nonneg_checked
    }

    pub fn eval(&self, u: &Matrix<f64>) -> f64 {
        self.poly.eval_f64(u.entries()) * sqrt_pow(self.c, self.radical_pow)
    }
}

fn sqrt_pow(c: usize, k: i32) -> f64 {
    libm::pow(libm::sqrt(c as f64), k as f64)
}

/// Mountain: `16 u00 u01 u10 u11`.
pub fn mountain() -> PolyDensity {
    let p = MultiPoly::monomial(vec![1, 1, 1, 1], int(16));
    PolyDensity { poly: p, c: 2, radical_pow: 0, nonneg_checked: true }
}

/// Plain: the uniform density as a polynomial.
pub fn plain(c: usize) -> PolyDensity {
    PolyDensity { poly: MultiPoly::one(c * c), c, radical_pow: 0, nonneg_checked: true }
}

/// Basin: `3((u00 - 1/4)² + (u01 - 1/4)²)`.
pub fn basin() -> PolyDensity {
    let q = ratio(1, 4);
    let a = MultiPoly::var(4, 0).sub(&MultiPoly::constant(4, q.clone())).expect("ring");
    let b = MultiPoly::var(4, 1).sub(&MultiPoly::constant(4, q)).expect("ring");
    let p = a.pow(2).add(&b.pow(2)).expect("ring").scale(&int(3));
    PolyDensity { poly: p, c: 2, radical_pow: 0, nonneg_checked: true }
}

pub type EvalFn = Arc<dyn Fn(&Matrix<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DensitySpec {
    Uniform { c: usize },
    Polynomial(PolyDensity),
    Dirichlet(DirichletDensity),
    Evaluator { c: usize, f: EvalFn },
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Uniform { c } => write!(f, "Uniform(C={c})"),
            DensitySpec::Polynomial(p) => write!(f, "Polynomial({})", p.poly.to_text()),
            DensitySpec::Dirichlet(d) => write!(f, "Dirichlet(alpha={})", d.alpha),
            DensitySpec::Evaluator { c, .. } => write!(f, "Evaluator(C={c})"),
        }
    }
}

impl DensitySpec {
    pub fn c(&self) -> usize {
        match self {
            DensitySpec::Uniform { c } | DensitySpec::Evaluator { c, .. } => *c,
            DensitySpec::Polynomial(p) => p.c,
            DensitySpec::Dirichlet(d) => d.c,
        }
    }

    pub fn eval(&self, u: &Matrix<f64>) -> f64 {
        match self {
            DensitySpec::Uniform { .. } => 1.0,
            DensitySpec::Polynomial(p) => p.eval(u),
            DensitySpec::Dirichlet(d) => d.eval(u),
            DensitySpec::Evaluator { f, .. } => f(u),
        }
    }

    /// Polynomial form, when one exists.
    pub fn as_polynomial(&self) -> Option<PolyDensity> {
        match self {
            DensitySpec::Uniform { c } => Some(plain(*c)),
            DensitySpec::Polynomial(p) => Some(p.clone()),
            DensitySpec::Dirichlet(d) => d.polynomial().cloned(),
            DensitySpec::Evaluator { .. } => None,
        }
    }
}

/// How the non-polynomial factor `|det U|^{C-1}` is handled for even `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParityMode {
    /// `VMI` itself; a polynomial only for odd `C`.
    OddDirect,
    /// `|det U| · VMI = det^C · Q`; requires even `C`.
    EvenTimesDmi,
    /// `VMI²`, a polynomial for every `C`.
    Squared,
}

impl ParityMode {
    pub fn name(self) -> &'static str {
        match self {
            ParityMode::OddDirect => "odd_direct",
            ParityMode::EvenTimesDmi => "even_times_dmi",
            ParityMode::Squared => "squared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "odd_direct" => Some(ParityMode::OddDirect),
            "even_times_dmi" => Some(ParityMode::EvenTimesDmi),
            "squared" => Some(ParityMode::Squared),
            _ => None,
        }
    }

    /// The natural polynomial mode for alphabet size `c`.
    pub fn polynomial_for(c: usize) -> Self {
        if c % 2 == 1 {
            ParityMode::OddDirect
        } else {
            ParityMode::Squared
        }
    }

    /// Applies the mode to a plain VMI value.
    pub fn apply(self, vmi: f64, det_abs: f64) -> f64 {
        match self {
            ParityMode::OddDirect => vmi,
            ParityMode::EvenTimesDmi => vmi * det_abs,
            ParityMode::Squared => vmi * vmi,
        }
    }
}

/// `VMI(U) = coef · (√C)^radical_pow · |det U|^{C-1} · Q(U)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VmiClosedForm {
    pub c: usize,
    pub mode: ParityMode,
    pub coef: Rational,
    pub radical_pow: i32,
    /// `Q` rewritten with `Σ u = 1` where that lowers the degree.
    pub q: MultiPoly,
    /// `Q` exactly as integrated.
    pub q_raw: MultiPoly,
    /// Degree of the polynomial selected by `mode`.
    pub degree: u32,
}

/// Materialised polynomial MI: `(√C)^radical_pow · poly`.
#[derive(Clone, Debug, PartialEq)]
pub struct VmiPolynomial {
    pub poly: MultiPoly,
    pub radical_pow: i32,
}

impl VmiClosedForm {
    fn scale_f64(&self) -> f64 {
        rational_to_f64(&self.coef) * sqrt_pow(self.c, self.radical_pow)
    }

    /// The volume itself, `coef · √C^r · |det U|^{C-1} · Q(U)`.
    pub fn vmi(&self, u: &Matrix<f64>) -> f64 {
        let d = libm::fabs(u.det());
        self.scale_f64() * libm::pow(d, (self.c - 1) as f64) * self.q_raw.eval_f64(u.entries())
    }

    /// Exact volume; `None` when a radical remains.
    pub fn vmi_exact(&self, u: &Matrix<Rational>) -> Option<Rational> {
        if self.radical_pow != 0 {
            return None;
        }
        let d = u.det().abs_val();
        let q = self.q_raw.eval(u.entries()).ok()?;
        Some(self.coef.clone() * num_traits::pow(d, self.c - 1) * q)
    }

    /// Value of the polynomial selected by `mode`.
    pub fn eval(&self, u: &Matrix<f64>) -> f64 {
        self.mode.apply(self.vmi(u), libm::fabs(u.det()))
    }

    pub fn materialize(&self) -> VmiPolynomial {
        let c = self.c;
        let det = det_poly(c);
        match self.mode {
            ParityMode::OddDirect => VmiPolynomial {
                poly: det.pow((c - 1) as u32).mul(&self.q_raw).expect("ring").scale(&self.coef),
                radical_pow: self.radical_pow,
            },
            ParityMode::EvenTimesDmi => VmiPolynomial {
                poly: det.pow(c as u32).mul(&self.q_raw).expect("ring").scale(&self.coef),
                radical_pow: self.radical_pow,
            },
            ParityMode::Squared => {
                let k = self.coef.clone() * self.coef.clone() * pow_c(c, self.radical_pow);
                VmiPolynomial {
                    poly: det.pow(2 * (c - 1) as u32).mul(&self.q_raw.pow(2)).expect("ring").scale(&k),
                    radical_pow: 0,
                }
            }
        }
    }

    /// Human-readable form, e.g. `2*|det(U)|*(…)`.
    pub fn to_text(&self) -> String {
        let mut s = crate::scalar::format_rational(&self.coef);
        if self.radical_pow != 0 {
            s.push_str(&format!("*sqrt({})^{}", self.c, self.radical_pow));
        }
        s.push_str("*|det(U)|");
        if self.c > 2 {
            s.push_str(&format!("^{}", self.c - 1));
        }
        s.push_str(&format!("*({})", self.q.to_text()));
        s
    }
}

/// `C^k` as a rational, `k` possibly negative.
fn pow_c(c: usize, k: i32) -> Rational {
    let base = int(c as i64);
    if k >= 0 {
        num_traits::pow(base, k as usize)
    } else {
        Rational::one() / num_traits::pow(base, (-k) as usize)
    }
}

fn perfect_sqrt(c: usize) -> Option<usize> {
    let r = libm::sqrt(c as f64) as usize;
    (r * r == c).then_some(r)
}

/// Splits `(√C)^k` into a rational and a leftover radical power in `{0, 1}`.
fn fold_radical(c: usize, k: i32) -> (Rational, i32) {
    let half = k.div_euclid(2);
    let rest = k.rem_euclid(2);
    let mut coef = pow_c(c, half);
    if rest == 1 {
        if let Some(r) = perfect_sqrt(c) {
            coef *= int(r as i64);
            return (coef, 0);
        }
    }
    (coef, rest)
}

/// Exact VMI of a polynomial density.
pub fn vmi_symbolic(w: &PolyDensity, mode: ParityMode) -> Result<VmiClosedForm> {
    let c = w.c;
    match mode {
        ParityMode::OddDirect if c % 2 == 0 => return Err(Error::ParityMismatch { c, mode: mode.name() }),
        ParityMode::EvenTimesDmi if c % 2 == 1 => return Err(Error::ParityMismatch { c, mode: mode.name() }),
        _ => {}
    }
    let cc = c * c;
    let n = 2 * cc;
    // (T U)_{ij} = Σ_k t_{ik} u_{kj}; t_{ik} lives at index C² + i·C + k.
    let subs: Vec<MultiPoly> = (0..cc)
        .map(|idx| {
            let (i, j) = (idx / c, idx % c);
            (0..c).fold(MultiPoly::zero(n), |acc, k| {
                let term = MultiPoly::var(n, cc + i * c + k).mul(&MultiPoly::var(n, k * c + j)).expect("ring");
                acc.add(&term).expect("ring")
            })
        })
        .collect();
    let composed = w.poly.compose(&subs)?;
    let q_raw = integrate_out_t_full(&composed, c)?;
    let q = q_raw.fold_unit_sum();
    let (coef, radical_pow) = fold_radical(c, c as i32 + w.radical_pow);
    let dw = w.poly.degree();
    let cu = c as u32;
    let degree = match mode {
        ParityMode::OddDirect => dw + cu * (cu - 1),
        ParityMode::EvenTimesDmi => dw + cu * cu,
        ParityMode::Squared => 2 * (dw + cu * (cu - 1)),
    };
    Ok(VmiClosedForm { c, mode, coef, radical_pow, q, q_raw, degree })
}

/// `C^{C/2} ((C-1)!)^{-C}` as `(rational, radical power)`.
pub fn uniform_constant(c: usize) -> (Rational, i32) {
    let (k, r) = fold_radical(c, c as i32);
    let vol = Rational::new(BigInt::one(), num_traits::pow(factorial(c as u32 - 1), c));
    (k * vol, r)
}

/// Numeric VMI: Gauss-Legendre over `(s, t)` for `C = 2`, Monte Carlo over the
/// product of simplices otherwise (`budget` samples, seeded).
pub fn vmi_numeric(w: &DensitySpec, u: &Matrix<f64>, budget: u64, seed: u64) -> Result<Estimate> {
    if budget == 0 {
        return Err(Error::NonPositiveBudget);
    }
    let c = w.c();
    if u.dim() != c {
        return Err(Error::DimensionMismatch { expected: c, found: u.dim() });
    }
    let det = libm::fabs(u.det());
    if det == 0.0 {
        return Ok(Estimate { value: 0.0, std_error: 0.0, evaluations: 0 });
    }
    if c == 2 {
        let (u00, u01, u10, u11) = (*u.get(0, 0), *u.get(0, 1), *u.get(1, 0), *u.get(1, 1));
        let e = quadrature::integrate_unit_square(
            |s, t| {
                // T = [[s, t], [1-s, 1-t]]
                let m = Matrix::new(
                    2,
                    vec![
                        s * u00 + t * u10,
                        s * u01 + t * u11,
                        (1.0 - s) * u00 + (1.0 - t) * u10,
                        (1.0 - s) * u01 + (1.0 - t) * u11,
                    ],
                )
                .expect("2x2");
                w.eval(&m)
            },
            budget,
        )?;
        let k = 2.0 * det;
        return Ok(Estimate { value: k * e.value, std_error: k * e.std_error, evaluations: e.evaluations });
    }
    let vol = 1.0 / libm::pow(rational_to_f64(&Rational::from_integer(factorial(c as u32 - 1))), c as f64);
    let k = libm::pow(c as f64, c as f64 / 2.0) * libm::pow(det, (c - 1) as f64) * vol;
    let e = quadrature::monte_carlo(budget, seed, |r| {
        let mut t = Matrix::zeros(c);
        for j in 0..c {
            for (i, v) in rng::uniform_simplex(r, c).into_iter().enumerate() {
                t.set(i, j, v);
            }
        }
        w.eval(&t.mul(u).expect("same size"))
    })?;
    Ok(Estimate { value: k * e.value, std_error: k * e.std_error, evaluations: e.evaluations })
}

/// Dirichlet-shaped density concentrating on the slice of a target `U*`:
/// `w(U) = Π u_ij^{α_ij - 1} / C(α)` with `α_ij = α · U*_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletDensity {
    c: usize,
    alpha: f64,
    ustar: Matrix<f64>,
    params: Matrix<f64>,
    log_norm: f64,
    poly: Option<PolyDensity>,
}

/// Samples per column used to validate the normalising constant.
const NORMALIZATION_SAMPLES: u64 = 1 << 14;

pub fn dirichlet_density(ustar: &JointDistribution<f64>, alpha: f64) -> Result<DirichletDensity> {
    let c = ustar.c();
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    for i in 0..c {
        for j in 0..c {
            if *ustar.get(i, j) <= 0.0 {
                return Err(Error::NonPositiveEntry { row: i, col: j });
            }
        }
    }
    let params = ustar.matrix().scale(&alpha);
    let colsum = params.col_sums();
    let half_log_c = 0.5 * libm::log(c as f64);
    let mut log_norm = 0.0;
    for j in 0..c {
        let aj = colsum[j];
        let log_b: f64 = (0..c).map(|i| libm::lgamma(*params.get(i, j))).sum::<f64>() - libm::lgamma(aj);
        log_norm += (aj - 1.0) * libm::log(aj / alpha) + half_log_c + log_b;
    }
    let mut d = DirichletDensity { c, alpha, ustar: ustar.matrix().clone(), params, log_norm, poly: None };
    d.validate()?;
    d.poly = d.exact_polynomial();
    Ok(d)
}

impl DirichletDensity {
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target(&self) -> &Matrix<f64> {
        &self.ustar
    }

    /// The matrix `α · U*`.
    pub fn params(&self) -> &Matrix<f64> {
        &self.params
    }

    /// `ln C(α)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_norm
    }

    /// Present when every `α · U*_ij` is a positive integer.
    pub fn polynomial(&self) -> Option<&PolyDensity> {
        self.poly.as_ref()
    }

    pub fn log_eval(&self, u: &Matrix<f64>) -> f64 {
        let mut s = -self.log_norm;
        for (x, a) in u.entries().iter().zip(self.params.entries()) {
            let e = a - 1.0;
            if e == 0.0 {
                continue;
            }
            if *x <= 0.0 {
                return if e > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            }
            s += e * libm::log(*x);
        }
        s
    }

    pub fn eval(&self, u: &Matrix<f64>) -> f64 {
        libm::exp(self.log_eval(u))
    }

    /// Parameters of the Dirichlet law of column `j` of `U / u*_j` on the slice.
    pub fn column_parameters(&self, j: usize) -> Vec<f64> {
        (0..self.c).map(|i| *self.params.get(i, j)).collect()
    }

    pub fn column_mean(&self, j: usize) -> Vec<f64> {
        let b = self.column_parameters(j);
        let b0: f64 = b.iter().sum();
        b.iter().map(|x| x / b0).collect()
    }

    pub fn column_variance(&self, j: usize) -> Vec<f64> {
        let b = self.column_parameters(j);
        let b0: f64 = b.iter().sum();
        b.iter().map(|x| x * (b0 - x) / (b0 * b0 * (b0 + 1.0))).collect()
    }

    /// Upper bound `Π_j (u_j / u*_j)^{α u*_j - 1}` on the VMI of any `U` whose
    /// column sums are those of `u`.
    pub fn slice_volume_bound(&self, u: &Matrix<f64>) -> f64 {
        let cs = u.col_sums();
        let ts = self.ustar.col_sums();
        let mut log = 0.0;
        for j in 0..self.c {
            log += (self.alpha * ts[j] - 1.0) * libm::log(cs[j] / ts[j]);
        }
        libm::exp(log)
    }

    /// Monte Carlo check that each column factor of the density integrates to
    /// one over its simplex.
    fn validate(&self) -> Result<()> {
        let c = self.c;
        let log_fact = libm::lgamma(c as f64);
        for j in 0..c {
            let b = self.column_parameters(j);
            let log_b: f64 = b.iter().map(|x| libm::lgamma(*x)).sum::<f64>() - libm::lgamma(b.iter().sum());
            let e = quadrature::monte_carlo(NORMALIZATION_SAMPLES, 0xd1c4_1e70 + j as u64, |r| {
                let y = rng::uniform_simplex(r, c);
                let mut s = -log_b - log_fact;
                for (yi, bi) in y.iter().zip(&b) {
                    s += (bi - 1.0) * libm::log(*yi);
                }
                libm::exp(s)
            })?;
            if !(libm::fabs(e.value - 1.0) <= 3.0 * e.std_error + 1e-12) {
                return Err(Error::Normalization { estimate: e.value, std_error: e.std_error });
            }
        }
        Ok(())
    }

    fn exact_polynomial(&self) -> Option<PolyDensity> {
        let c = self.c;
        let mut k: Vec<u64> = Vec::with_capacity(c * c);
        for a in self.params.entries() {
            let r = libm::round(*a);
            if libm::fabs(a - r) > 1e-9 || r < 1.0 {
                return None;
            }
            k.push(r as u64);
        }
        let total: u64 = k.iter().sum();
        let mut r = Rational::one();
        for j in 0..c {
            let col: Vec<u64> = (0..c).map(|i| k[i * c + j]).collect();
            let aj: u64 = col.iter().sum();
            let beta = col.iter().fold(BigInt::one(), |acc, &x| acc * factorial(x as u32 - 1));
            r *= Rational::new(beta, factorial(aj as u32 - 1));
            r *= num_traits::pow(Rational::new(BigInt::from(aj), BigInt::from(total)), aj as usize - 1);
        }
        let exps: Vec<u32> = k.iter().map(|x| *x as u32 - 1).collect();
        let poly = MultiPoly::monomial(exps, Rational::one() / r);
        Some(PolyDensity { poly, c, radical_pow: -(c as i32), nonneg_checked: true })
    }
}

/// `1(U ⪰ U*)`.
pub fn threshold_indicator(u: &JointDistribution<f64>, ustar: &JointDistribution<f64>) -> Result<bool> {
    joint::is_less_informative(ustar, u)
}

/// Heuristic test for `U* ∈ ∂↓U`: nudge `U*` inside its own slice and see
/// whether the indicator changes.
pub fn on_lower_set_boundary(ustar: &JointDistribution<f64>, u: &JointDistribution<f64>, eta: f64) -> Result<bool> {
    let base = threshold_indicator(u, ustar)?;
    let c = ustar.c();
    let m = ustar.matrix();
    for j in 0..c {
        for a in 0..c {
            for b in 0..c {
                if a == b {
                    continue;
                }
                let mut p = m.clone();
                p.set(a, j, m.get(a, j) + eta);
                p.set(b, j, m.get(b, j) - eta);
                if p.entries().iter().any(|x| *x < 0.0) {
                    continue;
                }
                let pj = JointDistribution::new(p)?;
                if joint::is_less_informative(&pj, u)? != base {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub probe: Matrix<f64>,
    pub indicator: bool,
    /// One value per α, in input order.
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// The slice-volume bound per α (only informative off the target slice).
    pub bounds: Vec<f64>,
    /// Values move monotonically toward the indicator.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    pub fn all_monotone(&self) -> bool {
        self.rows.iter().all(|r| r.monotone)
    }
}

/// Numeric Dirichlet VMI at each probe for each α.
pub fn convergence_probe(
    ustar: &JointDistribution<f64>,
    probes: &[JointDistribution<f64>],
    alphas: &[f64],
    budget: u64,
) -> Result<ProbeTable> {
    if alphas.is_empty() {
        return Err(Error::Empty("alphas"));
    }
    if probes.is_empty() {
        return Err(Error::Empty("probes"));
    }
    for (k, p) in probes.iter().enumerate() {
        if on_lower_set_boundary(ustar, p, 1e-6)? {
            return Err(Error::BoundaryProbe(k));
        }
    }
    let densities: Vec<DensitySpec> = alphas
        .iter()
        .map(|a| dirichlet_density(ustar, *a).map(DensitySpec::Dirichlet))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(probes.len());
    for p in probes {
        let indicator = threshold_indicator(p, ustar)?;
        let mut values = Vec::with_capacity(alphas.len());
        let mut errs = Vec::with_capacity(alphas.len());
        let mut bounds = Vec::with_capacity(alphas.len());
        for d in &densities {
            let e = vmi_numeric(d, p.matrix(), budget, 0)?;
            values.push(e.value);
            errs.push(e.std_error);
            if let DensitySpec::Dirichlet(dd) = d {
                bounds.push(dd.slice_volume_bound(p.matrix()));
            }
        }
        let monotone = values.windows(2).all(|w| if indicator { w[1] > w[0] } else { w[1] < w[0] });
        rows.push(ProbeRow { probe: p.matrix().clone(), indicator, values, std_errors: errs, bounds, monotone });
    }
    Ok(ProbeTable { alphas: alphas.to_vec(), rows })
}

/// Boxed evaluator helper.
pub fn evaluator(c: usize, f: impl Fn(&Matrix<f64>) -> f64 + Send + Sync + 'static) -> DensitySpec {
    DensitySpec::Evaluator { c, f: Arc::new(f) as Arc<dyn Fn(&Matrix<f64>) -> f64 + Send + Sync> }
}
