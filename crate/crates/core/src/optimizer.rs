//! The effort game: agents pick a noise level at a cost, the requester values
//! the resulting joint report distribution, and a payment scheme decides which
//! profiles are equilibria.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::joint::{less_informative_matrix, strategy_between, ColumnStochastic, JointDistribution};
use crate::matrix::Matrix;
use crate::measures::{dmi, MeasureSpec, VmiMeasure};
use crate::scalar::{rational_to_f64, Rational, F64_TOL};
use crate::vmi::{self, dirichlet_density, DensitySpec, ParityMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        }
    }
}

/// One effort level: the intrinsic noise it leaves and what it costs.
#[derive(Clone, Debug, PartialEq)]
pub struct EffortStrategy {
    pub noise: ColumnStochastic<f64>,
    pub cost: f64,
}

impl EffortStrategy {
    pub fn new(noise: ColumnStochastic<f64>, cost: f64) -> Self {
        EffortStrategy { noise, cost }
    }
}

/// Value of an arbitrary joint (first-agent orientation) seen from one side.
pub type ValueHook = Arc<dyn Fn(&Matrix<f64>, Side) -> f64 + Send + Sync>;
/// Cost of an arbitrary noise matrix for one side.
pub type EffortHook = Arc<dyn Fn(&Matrix<f64>, Side) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EffortModel {
    ug: JointDistribution<f64>,
    alice: Vec<EffortStrategy>,
    bob: Vec<EffortStrategy>,
    /// `values[a][b]`.
    values: Vec<Vec<f64>>,
    value_hook: Option<ValueHook>,
    effort_hook: Option<EffortHook>,
    swapped: bool,
}

impl fmt::Debug for EffortModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EffortModel")
            .field("ug", &self.ug)
            .field("alice", &self.alice)
            .field("bob", &self.bob)
            .field("values", &self.values)
            .field("swapped", &self.swapped)
            .finish()
    }
}

impl EffortModel {
    /// Validates shapes, signs and monotonicity: a strategy whose noise is
    /// less informative than another's may not cost more, nor raise the value.
    pub fn new(
        ug: JointDistribution<f64>,
        alice: Vec<EffortStrategy>,
        bob: Vec<EffortStrategy>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if alice.is_empty() {
            return Err(Error::Empty("alice strategies"));
        }
        if bob.is_empty() {
            return Err(Error::Empty("bob strategies"));
        }
        let c = ug.c();
        for s in alice.iter().chain(&bob) {
            if s.noise.c() != c {
                return Err(Error::DimensionMismatch { expected: c, found: s.noise.c() });
            }
            if !(s.cost >= 0.0 && s.cost.is_finite()) {
                return Err(Error::NonMonotoneModel(format!("cost {} is not a nonnegative number", s.cost)));
            }
        }
        if values.len() != alice.len() {
            return Err(Error::DimensionMismatch { expected: alice.len(), found: values.len() });
        }
        for row in &values {
            if row.len() != bob.len() {
                return Err(Error::DimensionMismatch { expected: bob.len(), found: row.len() });
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::NonMonotoneModel(format!("value {v} is not a nonnegative number")));
            }
        }
        let m = EffortModel { ug, alice, bob, values, value_hook: None, effort_hook: None, swapped: false };
        m.check_monotone()?;
        Ok(m)
    }

    fn check_monotone(&self) -> Result<()> {
        for (side, list) in [(Side::Alice, &self.alice), (Side::Bob, &self.bob)] {
            for (i, si) in list.iter().enumerate() {
                for (j, sj) in list.iter().enumerate() {
                    if i == j || !less_informative_matrix(si.noise.matrix(), sj.noise.matrix())? {
                        continue;
                    }
                    if si.cost > sj.cost + F64_TOL {
                        return Err(Error::NonMonotoneModel(format!(
                            "{side:?} strategy {i} is less informative than {j} but costs more"
                        )));
                    }
                    let others = if side == Side::Alice { self.bob.len() } else { self.alice.len() };
                    for k in 0..others {
                        let (vi, vj) = match side {
                            Side::Alice => (self.values[i][k], self.values[j][k]),
                            Side::Bob => (self.values[k][i], self.values[k][j]),
                        };
                        if vi > vj + F64_TOL {
                            return Err(Error::NonMonotoneModel(format!(
                                "{side:?} strategy {i} is less informative than {j} but has higher value"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn with_value_hook(mut self, hook: ValueHook) -> Self {
        self.value_hook = Some(hook);
        self
    }

    pub fn with_effort_hook(mut self, hook: EffortHook) -> Self {
        self.effort_hook = Some(hook);
        self
    }

    pub fn c(&self) -> usize {
        self.ug.c()
    }

    pub fn ug(&self) -> &JointDistribution<f64> {
        &self.ug
    }

    pub fn alice(&self) -> &[EffortStrategy] {
        &self.alice
    }

    pub fn bob(&self) -> &[EffortStrategy] {
        &self.bob
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a][b]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `N_a · U_G · N_bᵀ`.
    pub fn joint(&self, a: usize, b: usize) -> Result<JointDistribution<f64>> {
        let m = self.alice[a].noise.matrix().mul(self.ug.matrix())?.mul(&self.bob[b].noise.matrix().transpose())?;
        JointDistribution::new(m)
    }

    /// The same game with the roles exchanged; joints are transposed.
    pub fn swapped(&self) -> Self {
        let nb = self.bob.len();
        let values = (0..nb).map(|b| self.values.iter().map(|row| row[b]).collect()).collect();
        EffortModel {
            ug: self.ug.transpose(),
            alice: self.bob.clone(),
            bob: self.alice.clone(),
            values,
            value_hook: self.value_hook.clone(),
            effort_hook: self.effort_hook.clone(),
            swapped: !self.swapped,
        }
    }

    /// Value of an arbitrary joint. Without a hook: the smallest table value
    /// among profiles whose joint dominates `u` in `side`'s order, which is the
    /// largest value monotonicity allows; zero if nothing dominates.
    pub fn value_at(&self, u: &Matrix<f64>, side: Side) -> Result<f64> {
        if let Some(h) = &self.value_hook {
            return Ok(if self.swapped { h(&u.transpose(), side.flip()) } else { h(u, side) });
        }
        let mut best: Option<f64> = None;
        for a in 0..self.alice.len() {
            for b in 0..self.bob.len() {
                let j = self.joint(a, b)?;
                let dominated = match side {
                    Side::Alice => less_informative_matrix(u, j.matrix())?,
                    Side::Bob => less_informative_matrix(&u.transpose(), &j.matrix().transpose())?,
                };
                if dominated {
                    let v = self.values[a][b];
                    best = Some(best.map_or(v, |x: f64| x.min(v)));
                }
            }
        }
        Ok(best.unwrap_or(0.0))
    }

    /// Cost of an arbitrary noise matrix. Without a hook: the cheapest table
    /// strategy of that side whose noise dominates `n`; the most expensive
    /// one if nothing dominates.
    pub fn effort_at(&self, n: &Matrix<f64>, side: Side) -> Result<f64> {
        if let Some(h) = &self.effort_hook {
            let s = if self.swapped { side.flip() } else { side };
            return Ok(h(n, s));
        }
        let list = match side {
            Side::Alice => &self.alice,
            Side::Bob => &self.bob,
        };
        let mut best: Option<f64> = None;
        for s in list {
            if less_informative_matrix(n, s.noise.matrix())? {
                best = Some(best.map_or(s.cost, |x: f64| x.min(s.cost)));
            }
        }
        Ok(best.unwrap_or_else(|| list.iter().map(|s| s.cost).fold(0.0, f64::max)))
    }
}

/// The instance used throughout: binary signals, `U_G = diag(.5, .5)`, three
/// effort levels for the first agent and two for the second.
pub fn reference_effort_model() -> EffortModel {
    let cs = |rows: &[&[f64]]| ColumnStochastic::new(Matrix::from_f64_rows(rows).unwrap()).unwrap();
    let ug = JointDistribution::new(Matrix::from_f64_rows(&[&[0.5, 0.0], &[0.0, 0.5]]).unwrap()).unwrap();
    let flat = cs(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let alice = vec![
        EffortStrategy::new(flat.clone(), 0.0),
        EffortStrategy::new(cs(&[&[1.0, 0.4], &[0.0, 0.6]]), 1.0),
        EffortStrategy::new(cs(&[&[0.8, 0.2], &[0.2, 0.8]]), 10.0),
    ];
    let bob = vec![EffortStrategy::new(flat, 0.0), EffortStrategy::new(cs(&[&[1.0, 0.4], &[0.0, 0.6]]), 1.0)];
    let values = vec![vec![0.0, 0.0], vec![0.0, 15.0], vec![0.0, 50.0]];
    EffortModel::new(ug, alice, bob, values).expect("example model is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct VStar {
    pub value: f64,
    pub a: usize,
    pub b: usize,
    pub ustar: JointDistribution<f64>,
    /// `det U* = 0`.
    pub degenerate: bool,
}

/// Best net value `v(a, b) − e_a − e_b`; ties go to the lower total cost, then
/// the lexicographically smaller index pair.
pub fn compute_vstar(model: &EffortModel) -> Result<VStar> {
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for a in 0..model.alice.len() {
        for b in 0..model.bob.len() {
            let cost = model.alice[a].cost + model.bob[b].cost;
            let net = model.values[a][b] - cost;
            let better = match best {
                None => true,
                Some((v, c, _, _)) => net > v + F64_TOL || (libm::fabs(net - v) <= F64_TOL && cost < c - F64_TOL),
            };
            if better {
                best = Some((net, cost, a, b));
            }
        }
    }
    let (value, _, a, b) = best.ok_or(Error::Empty("strategies"))?;
    let ustar = model.joint(a, b)?;
    let degenerate = libm::fabs(ustar.matrix().det()) <= F64_TOL;
    Ok(VStar { value, a, b, ustar, degenerate })
}

/// How the requester pays the two agents as a function of the joint.
#[derive(Clone, Debug)]
pub enum PaymentScheme {
    /// `level_A · 1(U ⪰ U*)` and `level_B · 1(Uᵀ ⪰ U*ᵀ)`.
    Threshold { ustar: JointDistribution<f64>, levels: [f64; 2] },
    /// `scale_A · m_A(U)` and `scale_B · m_B(Uᵀ)`.
    MeasureBacked { measures: [MeasureSpec; 2], scales: [f64; 2] },
}

impl PaymentScheme {
    pub fn payments(&self, u: &JointDistribution<f64>) -> Result<[f64; 2]> {
        Ok(match self {
            PaymentScheme::Threshold { ustar, levels } => {
                let a = vmi::threshold_indicator(u, ustar)?;
                let b = vmi::threshold_indicator(&u.transpose(), &ustar.transpose())?;
                [if a { levels[0] } else { 0.0 }, if b { levels[1] } else { 0.0 }]
            }
            PaymentScheme::MeasureBacked { measures, scales } => [
                scales[0] * measures[0].eval(u.matrix())?,
                scales[1] * measures[1].eval(u.transpose().matrix())?,
            ],
        })
    }
}

/// Pays each agent its cost at the optimum plus `eps` when the joint
/// dominates `U*`.
pub fn threshold_payments(model: &EffortModel, eps: f64) -> Result<PaymentScheme> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let vs = compute_vstar(model)?;
    if vs.degenerate {
        return Err(Error::DegenerateThreshold);
    }
    Ok(PaymentScheme::Threshold {
        ustar: vs.ustar,
        levels: [model.alice[vs.a].cost + eps, model.bob[vs.b].cost + eps],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub a: usize,
    pub b: usize,
    pub payments: [f64; 2],
    pub alice_utility: f64,
    pub bob_utility: f64,
    /// `v(a, b)` minus both payments.
    pub requester_utility: f64,
}

impl Outcome {
    pub fn min_utility(&self) -> f64 {
        self.alice_utility.min(self.bob_utility)
    }
}

/// Payments and utilities for every profile, `table[a][b]`.
pub fn outcome_table(model: &EffortModel, scheme: &PaymentScheme) -> Result<Vec<Vec<Outcome>>> {
    let mut t = Vec::with_capacity(model.alice.len());
    for a in 0..model.alice.len() {
        let mut row = Vec::with_capacity(model.bob.len());
        for b in 0..model.bob.len() {
            let p = scheme.payments(&model.joint(a, b)?)?;
            row.push(Outcome {
                a,
                b,
                payments: p,
                alice_utility: p[0] - model.alice[a].cost,
                bob_utility: p[1] - model.bob[b].cost,
                requester_utility: model.values[a][b] - p[0] - p[1],
            });
        }
        t.push(row);
    }
    Ok(t)
}

/// Profiles where neither agent gains more than `delta` by deviating alone.
pub fn find_equilibria(model: &EffortModel, scheme: &PaymentScheme, delta: f64) -> Result<Vec<Outcome>> {
    let table = outcome_table(model, scheme)?;
    equilibria_in(&table, delta)
}

pub fn equilibria_in(table: &[Vec<Outcome>], delta: f64) -> Result<Vec<Outcome>> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    let na = table.len();
    let nb = table.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    for a in 0..na {
        for b in 0..nb {
            let o = &table[a][b];
            let best_a = (0..na).map(|x| table[x][b].alice_utility).fold(f64::NEG_INFINITY, f64::max);
            let best_b = (0..nb).map(|y| table[a][y].bob_utility).fold(f64::NEG_INFINITY, f64::max);
            if best_a - o.alice_utility <= delta + F64_TOL && best_b - o.bob_utility <= delta + F64_TOL {
                out.push(*o);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub chosen: Outcome,
    /// Minimum requester utility over all candidates that maximise the
    /// smaller agent utility.
    pub guarantee: f64,
}

/// Keeps the candidates maximising `min(alice, bob)`; the first of them (in
/// input order) is reported, with the worst requester utility among them.
pub fn select_equilibrium(candidates: &[Outcome]) -> Result<Selection> {
    let best = candidates.iter().map(Outcome::min_utility).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Outcome> = candidates.iter().filter(|o| o.min_utility() >= best - F64_TOL).collect();
    let chosen = **top.first().ok_or(Error::Empty("equilibrium candidates"))?;
    let guarantee = top.iter().map(|o| o.requester_utility).fold(f64::INFINITY, f64::min);
    Ok(Selection { chosen, guarantee })
}

/// A rational stand-in `U⋆ ≺ U*` for one side, with the noise that produces it.
#[derive(Clone, Debug, PartialEq)]
pub struct Substitute {
    pub side: Side,
    /// Mixing weight toward uniform noise; `None` once snapped to a lattice.
    pub gamma: Option<Rational>,
    /// In the side's own orientation (Bob's is transposed).
    pub ustar: Matrix<Rational>,
    pub noise: Matrix<Rational>,
    /// Lattice denominator after snapping.
    pub denominator: Option<u64>,
}

impl Substitute {
    pub fn ustar_f64(&self) -> JointDistribution<f64> {
        JointDistribution::new(self.ustar.to_f64()).expect("substitute is a distribution")
    }
}

/// Smallest exponent of the γ grid `2^-k`.
const GAMMA_MIN_EXP: u32 = 4;
/// Largest exponent of the γ grid.
const GAMMA_MAX_EXP: u32 = 20;
/// Size of the nudges used to detect lower-set boundaries.
const BOUNDARY_ETA: f64 = 1e-6;

/// Mixes the optimal noise toward uniform, `N⋆ = (1−γ) N* + γ J / C`, for
/// `γ = 1/16, 1/32, …, 2^-20`, and returns the first (largest) `γ` that passes
/// every check of [`Substitute`] feasibility.
pub fn substituted_threshold(model: &EffortModel, eps: f64, side: Side) -> Result<Substitute> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let m = match side {
        Side::Alice => model.clone(),
        Side::Bob => model.swapped(),
    };
    let ctx = SubstituteContext::new(&m, eps)?;
    let c = m.c();
    let nstar = rat(m.alice[ctx.vs.a].noise.matrix())?;
    let flat = Matrix::<Rational>::uniform(c);
    for k in GAMMA_MIN_EXP..=GAMMA_MAX_EXP {
        let gamma = Rational::new(BigInt::one(), BigInt::one() << k as usize);
        let noise = nstar.scale(&(Rational::one() - &gamma)).add(&flat.scale(&gamma))?;
        let ustar = noise.mul(&ctx.right)?;
        if ctx.feasible(&m, &ustar, &noise)? {
            return Ok(Substitute { side, gamma: Some(gamma), ustar, noise, denominator: None });
        }
    }
    Err(Error::NoFeasibleSubstitute)
}

/// Moves a substitute onto the lattice `K / g` (integer `K ≥ 1`), choosing
/// the feasible lattice point nearest to it. Candidates are searched in boxes
/// of growing radius around `g · U⋆`.
pub fn snap_substitute(model: &EffortModel, eps: f64, sub: &Substitute, g: u64) -> Result<Substitute> {
    if g == 0 {
        return Err(Error::InvalidAlpha(0.0));
    }
    let m = match sub.side {
        Side::Alice => model.clone(),
        Side::Bob => model.swapped(),
    };
    let ctx = SubstituteContext::new(&m, eps)?;
    let c = m.c();
    let gr = Rational::from_integer(BigInt::from(g));
    let target: Vec<f64> = sub.ustar.entries().iter().map(|x| rational_to_f64(&(x * &gr))).collect();
    let mut col_totals = Vec::with_capacity(c);
    for s in sub.ustar.col_sums() {
        let t = s * &gr;
        if !t.is_integer() {
            return Err(Error::NoFeasibleSubstitute);
        }
        col_totals.push(t.to_integer().try_into().map_err(|_| Error::NoFeasibleSubstitute)?);
    }
    let nstar = rat(m.alice[ctx.vs.a].noise.matrix())?;
    let mut radius = 1i64;
    loop {
        let columns: Vec<Vec<Vec<i64>>> = (0..c)
            .map(|j| {
                let t: Vec<f64> = (0..c).map(|i| target[i * c + j]).collect();
                column_candidates(&t, col_totals[j], radius)
            })
            .collect();
        let mut cands: Vec<(f64, Vec<i64>)> = Vec::new();
        let mut idx = vec![0usize; c];
        if columns.iter().all(|v| !v.is_empty()) {
            loop {
                let mut k = vec![0i64; c * c];
                for j in 0..c {
                    for i in 0..c {
                        k[i * c + j] = columns[j][idx[j]][i];
                    }
                }
                let d: f64 = k.iter().zip(&target).map(|(a, b)| (*a as f64 - b) * (*a as f64 - b)).sum();
                cands.push((d, k));
                let mut p = 0;
                while p < c {
                    idx[p] += 1;
                    if idx[p] < columns[p].len() {
                        break;
                    }
                    idx[p] = 0;
                    p += 1;
                }
                if p == c {
                    break;
                }
            }
        }
        cands.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(core::cmp::Ordering::Equal).then(x.1.cmp(&y.1)));
        for (_, k) in &cands {
            let ustar = Matrix::new(c, k.iter().map(|x| Rational::new(BigInt::from(*x), BigInt::from(g))).collect())?;
            let Some(t) = strategy_between(&ustar, &ctx.ustar) else { continue };
            let noise = t.mul(&nstar)?;
            if ctx.feasible(&m, &ustar, &noise)? {
                return Ok(Substitute { side: sub.side, gamma: None, ustar, noise, denominator: Some(g) });
            }
        }
        if radius as u64 >= g {
            return Err(Error::NoFeasibleSubstitute);
        }
        radius *= 2;
    }
}

/// Integer vectors with the given total, entries `≥ 1`, within `radius` of `t`.
fn column_candidates(t: &[f64], total: i64, radius: i64) -> Vec<Vec<i64>> {
    let n = t.len();
    let lo: Vec<i64> = t.iter().map(|x| ((libm::floor(*x) as i64) - radius + 1).max(1)).collect();
    let hi: Vec<i64> = t.iter().map(|x| (libm::ceil(*x) as i64) + radius - 1).collect();
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(k: usize, left: i64, lo: &[i64], hi: &[i64], cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let n = lo.len();
        if k == n - 1 {
            if left >= lo[k] && left <= hi[k] {
                cur[k] = left;
                out.push(cur.clone());
            }
            return;
        }
        for v in lo[k]..=hi[k].min(left) {
            cur[k] = v;
            rec(k + 1, left - v, lo, hi, cur, out);
        }
    }
    if n > 0 {
        rec(0, total, &lo, &hi, &mut cur, &mut out);
    }
    out
}

fn rat(m: &Matrix<f64>) -> Result<Matrix<Rational>> {
    m.to_rational().ok_or_else(|| Error::InvalidJoint("non-finite entry".into()))
}

/// Shared data for substitute feasibility checks, in the side's orientation.
struct SubstituteContext {
    vs: VStar,
    eps: f64,
    /// `U_G · N_B*ᵀ`.
    right: Matrix<Rational>,
    ustar: Matrix<Rational>,
    joints: Vec<JointDistribution<f64>>,
}

impl SubstituteContext {
    fn new(m: &EffortModel, eps: f64) -> Result<Self> {
        let vs = compute_vstar(m)?;
        if vs.degenerate {
            return Err(Error::DegenerateThreshold);
        }
        let right = rat(m.ug.matrix())?.mul(&rat(m.bob[vs.b].noise.matrix())?.transpose())?;
        let ustar = rat(m.alice[vs.a].noise.matrix())?.mul(&right)?;
        let mut joints = Vec::new();
        for a in 0..m.alice.len() {
            for b in 0..m.bob.len() {
                joints.push(m.joint(a, b)?);
            }
        }
        Ok(SubstituteContext { vs, eps, right, ustar, joints })
    }

    /// Non-degenerate, strictly below `U*`, within `eps` of `U*` in value and
    /// of `N*` in effort, and off every table joint's lower-set boundary.
    fn feasible(&self, m: &EffortModel, ustar: &Matrix<Rational>, noise: &Matrix<Rational>) -> Result<bool> {
        if ustar.det().is_zero() {
            return Ok(false);
        }
        if !less_informative_matrix(ustar, &self.ustar)? || less_informative_matrix(&self.ustar, ustar)? {
            return Ok(false);
        }
        let uf = ustar.to_f64();
        // `m` is already oriented so that this side plays first.
        let v = m.value_at(&uf, Side::Alice)?;
        let vstar_value = m.values[self.vs.a][self.vs.b];
        if v < vstar_value - self.eps - F64_TOL {
            return Ok(false);
        }
        let e = m.effort_at(&noise.to_f64(), Side::Alice)?;
        if e < m.alice[self.vs.a].cost - self.eps - F64_TOL {
            return Ok(false);
        }
        let uj = JointDistribution::new(uf)?;
        for j in &self.joints {
            if vmi::on_lower_set_boundary(&uj, j, BOUNDARY_ETA)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Signals used for the off-slice probes: column 0 of `U*` rescaled to carry
/// this much more (and less) mass.
pub const OFF_SLICE_SHIFT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: u64,
    /// Tasks needed by the polynomial mechanism at this α.
    pub tasks: u64,
    /// First agent's Dirichlet VMI at `U*`.
    pub vmi_at_ustar: f64,
    /// First agent's Dirichlet VMI at the shifted copies of `U*`.
    pub off_slice: Vec<f64>,
    pub eq_a: usize,
    pub eq_b: usize,
    pub alice_utility: f64,
    pub bob_utility: f64,
    pub requester_utility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub vstar: f64,
    pub alice: Substitute,
    pub bob: Substitute,
    pub rows: Vec<SweepRow>,
}

/// For each α, pays each agent `(e(N*) + eps)` times the Dirichlet VMI (squared
/// for even `C`) centred at that side's substitute threshold, and reports the
/// selected `delta`-equilibrium. Both substitutes are snapped once to the
/// lattice `1 / gcd(alphas)` so that `α · U⋆` is integral for every α.
pub fn approximation_sweep(model: &EffortModel, eps: f64, delta: f64, alphas: &[u64], budget: u64) -> Result<Sweep> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    if !(delta > eps) {
        return Err(Error::InvalidDelta(delta));
    }
    if alphas.is_empty() {
        return Err(Error::Empty("alphas"));
    }
    let c = model.c() as u64;
    if let Some(&a) = alphas.iter().find(|&&a| a <= c * c) {
        return Err(Error::InvalidAlpha(a as f64));
    }
    let g = alphas.iter().fold(0, |acc, &a| gcd(acc, a));
    let vs = compute_vstar(model)?;
    let alice = snap_substitute(model, eps, &substituted_threshold(model, eps, Side::Alice)?, g)?;
    let bob = snap_substitute(model, eps, &substituted_threshold(model, eps, Side::Bob)?, g)?;
    let mode = ParityMode::polynomial_for(model.c());
    let scales = [model.alice[vs.a].cost + eps, model.bob[vs.b].cost + eps];
    let probes = off_slice_probes(&vs.ustar)?;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let da = DensitySpec::Dirichlet(dirichlet_density(&alice.ustar_f64(), alpha as f64)?);
        let db = DensitySpec::Dirichlet(dirichlet_density(&bob.ustar_f64(), alpha as f64)?);
        let ma = VmiMeasure::numeric(da, mode, budget)?;
        let mb = VmiMeasure::numeric(db, mode, budget)?;
        let vmi_at_ustar = ma.vmi(vs.ustar.matrix())?;
        let off_slice = probes.iter().map(|p| ma.vmi(p.matrix())).collect::<Result<Vec<_>>>()?;
        let scheme = PaymentScheme::MeasureBacked {
            measures: [MeasureSpec::Vmi(ma), MeasureSpec::Vmi(mb)],
            scales,
        };
        let eq = find_equilibria(model, &scheme, delta)?;
        let sel = select_equilibrium(&eq)?;
        let tasks = match mode {
            ParityMode::OddDirect => alpha - c,
            _ => 2 * (alpha - c),
        };
        rows.push(SweepRow {
            alpha,
            tasks,
            vmi_at_ustar,
            off_slice,
            eq_a: sel.chosen.a,
            eq_b: sel.chosen.b,
            alice_utility: sel.chosen.alice_utility,
            bob_utility: sel.chosen.bob_utility,
            requester_utility: sel.guarantee,
        });
    }
    Ok(Sweep { vstar: vs.value, alice, bob, rows })
}

/// `U*` with column 0 rescaled to carry `±OFF_SLICE_SHIFT` more mass and the
/// other columns rescaled to compensate.
pub fn off_slice_probes(ustar: &JointDistribution<f64>) -> Result<Vec<JointDistribution<f64>>> {
    let c = ustar.c();
    let cs = ustar.matrix().col_sums();
    let rest: f64 = cs[1..].iter().sum();
    let mut out = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let d = sign * OFF_SLICE_SHIFT;
        let mut m = ustar.matrix().clone();
        for i in 0..c {
            for j in 0..c {
                let f = if j == 0 { (cs[0] + d) / cs[0] } else { (rest - d) / rest };
                m.set(i, j, ustar.get(i, j) * f);
            }
        }
        out.push(JointDistribution::new(m)?);
    }
    Ok(out)
}

/// Two first-agent strategies with equal `|det|` but different value against
/// the optimal partner: any DMI-proportional payment treats them alike, so the
/// cheaper one is chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct DmiCounterexample {
    pub cheaper: usize,
    pub optimal: usize,
    pub det_cheaper: f64,
    pub det_optimal: f64,
    pub dmi_cheaper: f64,
    pub dmi_optimal: f64,
    /// Best requester utility when the cheaper strategy is played and its
    /// cost is covered: `v(cheaper, b*) − e(cheaper) − e(b*)`.
    pub capped_utility: f64,
    pub vstar: f64,
}

impl DmiCounterexample {
    pub fn payments_equal(&self) -> bool {
        libm::fabs(self.dmi_cheaper - self.dmi_optimal) <= F64_TOL
    }
}

pub fn dmi_counterexample_check(model: &EffortModel) -> Result<DmiCounterexample> {
    let vs = compute_vstar(model)?;
    let det_opt = model.alice[vs.a].noise.matrix().det();
    let cheaper = (0..model.alice.len())
        .filter(|&a| a != vs.a && model.alice[a].cost < model.alice[vs.a].cost)
        .find(|&a| libm::fabs(libm::fabs(model.alice[a].noise.matrix().det()) - libm::fabs(det_opt)) <= F64_TOL)
        .ok_or(Error::Empty("equal-determinant cheaper strategy"))?;
    let dmi_cheaper = dmi(model.joint(cheaper, vs.b)?.matrix());
    let dmi_optimal = dmi(vs.ustar.matrix());
    Ok(DmiCounterexample {
        cheaper,
        optimal: vs.a,
        det_cheaper: model.alice[cheaper].noise.matrix().det(),
        det_optimal: det_opt,
        dmi_cheaper,
        dmi_optimal,
        capped_utility: model.values[cheaper][vs.b] - model.alice[cheaper].cost - model.bob[vs.b].cost,
        vstar: vs.value,
    })
}
