//! Peer prediction mechanisms built on unbiased estimators, the literal
//! VMI★ payment rule, a Monte Carlo simulator and a truthfulness audit.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimator::{compile_ube, CompiledEstimator, Policy};
use crate::joint::{apply_strategies, ColumnStochastic, JointDistribution};
use crate::matrix::Matrix;
use crate::measures::{vmi_star_poly, MeasureSpec};
use crate::poly::MultiPoly;
use crate::rng;
use crate::scalar::{ratio, rational_to_f64, Rational, Scalar};

/// Number of designated tasks used by the literal VMI★ rule.
pub const VMI_STAR_TASKS: usize = 8;

#[derive(Clone, Debug)]
pub enum PaymentRule {
    /// Pay the compiled unbiased estimator of the measure.
    Estimator(CompiledEstimator),
    /// The explicit eight-task VMI★ formula.
    VmiStarLiteral,
}

#[derive(Clone, Debug)]
pub struct MechanismSpec {
    measure: MultiPoly,
    c: usize,
    tasks: usize,
    scale: f64,
    rule: PaymentRule,
    shuffle: bool,
    picks: Option<Vec<usize>>,
}

impl MechanismSpec {
    /// Mechanism paying `scale` times the unbiased estimator of a polynomial measure.
    pub fn new(measure: &MeasureSpec, c: usize, tasks: usize, policy: Policy, scale: f64) -> Result<Self> {
        let poly = measure.polynomial().ok_or(Error::NotPolynomial(measure.name()))?;
        Self::from_poly(&poly, c, tasks, policy, scale)
    }

    pub fn from_poly(poly: &MultiPoly, c: usize, tasks: usize, policy: Policy, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NonPositiveScale(scale));
        }
        let mut est = compile_ube(poly, c, policy)?;
        if tasks < est.required_samples() {
            return Err(Error::InsufficientSamples { required: est.required_samples(), found: tasks });
        }
        est.prepare(tasks);
        Ok(MechanismSpec {
            measure: poly.clone(),
            c,
            tasks,
            scale,
            rule: PaymentRule::Estimator(est),
            shuffle: true,
            picks: None,
        })
    }

    /// The explicit binary VMI★ mechanism on `tasks ≥ 8` tasks.
    pub fn vmi_star(tasks: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NonPositiveScale(scale));
        }
        if tasks < VMI_STAR_TASKS {
            return Err(Error::InsufficientSamples { required: VMI_STAR_TASKS, found: tasks });
        }
        Ok(MechanismSpec {
            measure: vmi_star_poly(),
            c: 2,
            tasks,
            scale,
            rule: PaymentRule::VmiStarLiteral,
            shuffle: true,
            picks: None,
        })
    }

    /// Disables the per-pair shuffle; tasks are then used in report order.
    pub fn without_shuffle(mut self) -> Self {
        self.shuffle = false;
        self
    }

    /// Uses the same designated tasks for every pair instead of seeded picks.
    pub fn with_picks(mut self, picks: Vec<usize>) -> Result<Self> {
        if picks.len() < self.required_tasks() {
            return Err(Error::InsufficientSamples { required: self.required_tasks(), found: picks.len() });
        }
        self.picks = Some(picks);
        Ok(self)
    }

    pub fn measure(&self) -> &MultiPoly {
        &self.measure
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rule(&self) -> &PaymentRule {
        &self.rule
    }

    pub fn required_tasks(&self) -> usize {
        match &self.rule {
            PaymentRule::Estimator(e) => e.required_samples(),
            PaymentRule::VmiStarLiteral => VMI_STAR_TASKS,
        }
    }

    fn pair_value(&self, batch: &[(usize, usize)]) -> Result<f64> {
        match &self.rule {
            PaymentRule::Estimator(e) => e.evaluate_f64(batch),
            PaymentRule::VmiStarLiteral => Ok(rational_to_f64(&vmi_star_payment(&batch[..VMI_STAR_TASKS])?)),
        }
    }
}

/// Payment of agent `i` against agent `j`, with the task order that was used.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPayment {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismOutcome {
    pub payments: Vec<f64>,
    pub pairs: Vec<PairPayment>,
}

/// Runs the mechanism: every ordered pair `(i, j)` is paid the estimator on
/// the stream `(report_i[t], report_j[t])`, after a seeded task shuffle.
pub fn run_mechanism(spec: &MechanismSpec, reports: &[Vec<usize>], seed: u64) -> Result<MechanismOutcome> {
    let n = reports.len();
    if n < 2 {
        return Err(Error::TooFewAgents(n));
    }
    let t = reports[0].len();
    if reports.iter().any(|r| r.len() != t) {
        return Err(Error::RaggedReports);
    }
    if t < spec.required_tasks() {
        return Err(Error::InsufficientSamples { required: spec.required_tasks(), found: t });
    }
    for r in reports {
        if let Some(&s) = r.iter().find(|&&s| s >= spec.c) {
            return Err(if spec.c == 2 && matches!(spec.rule, PaymentRule::VmiStarLiteral) {
                Error::NotBinary(s + 1)
            } else {
                Error::SymbolOutOfRange { symbol: s, c: spec.c }
            });
        }
    }
    if let Some(p) = &spec.picks {
        if let Some(&bad) = p.iter().find(|&&k| k >= t) {
            return Err(Error::InsufficientSamples { required: bad + 1, found: t });
        }
    }
    let mut payments = vec![0.0; n];
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let order = match &spec.picks {
                Some(p) => p.clone(),
                None if spec.shuffle => rng::permutation(&mut rng::stream(seed, (i * n + j) as u64), t),
                None => (0..t).collect(),
            };
            let batch: Vec<(usize, usize)> = order.iter().map(|&k| (reports[i][k], reports[j][k])).collect();
            let value = spec.scale * spec.pair_value(&batch)?;
            payments[i] += value;
            pairs.push(PairPayment { i, j, value, order });
        }
    }
    Ok(MechanismOutcome { payments, pairs })
}

/// The eight-task VMI★ payment, evaluated term by term as printed.
/// `pairs[t]` holds the two agents' answers on designated task `t + 1`.
pub fn vmi_star_payment(pairs: &[(usize, usize)]) -> Result<Rational> {
    if pairs.len() != VMI_STAR_TASKS {
        return Err(Error::DimensionMismatch { expected: VMI_STAR_TASKS, found: pairs.len() });
    }
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a > 1 || b > 1) {
        return Err(Error::NotBinary(a.max(b) + 1));
    }
    let e = |t: usize, c: usize, d: usize| -> Rational {
        if pairs[t - 1] == (c, d) {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    let d12 = e(1, 0, 0) * e(2, 1, 1) - e(1, 0, 1) * e(2, 1, 0);
    let d34 = e(3, 0, 0) * e(4, 1, 1) - e(3, 0, 1) * e(4, 1, 0);
    let tail = ratio(8, 15) * e(5, 0, 0) * e(6, 0, 0) * e(7, 0, 1) * e(8, 0, 1)
        + ratio(4, 3) * e(5, 0, 1) * e(6, 0, 0) * e(7, 0, 0) * e(8, 1, 1)
        + ratio(4, 9) * e(5, 0, 0) * e(6, 0, 0) * e(7, 1, 1) * e(8, 1, 1)
        + ratio(4, 3) * e(5, 0, 0) * e(6, 0, 1) * e(7, 0, 1) * e(8, 1, 0)
        + ratio(40, 9) * e(5, 0, 0) * e(6, 0, 1) * e(7, 1, 0) * e(8, 1, 1)
        + ratio(4, 3) * e(5, 0, 0) * e(6, 1, 0) * e(7, 1, 1) * e(8, 1, 1)
        + ratio(4, 9) * e(5, 0, 1) * e(6, 0, 1) * e(7, 1, 0) * e(8, 1, 0)
        + ratio(4, 3) * e(5, 0, 1) * e(6, 1, 0) * e(7, 1, 0) * e(8, 1, 1)
        + ratio(8, 15) * e(5, 1, 0) * e(6, 1, 0) * e(7, 1, 1) * e(8, 1, 1);
    Ok(ratio(2, 1) * d12 * d34 * tail)
}

/// The literal VMI★ rule as a polynomial in `u`: replacing every indicator
/// `E_t(c, c')` by `u_{cc'}` gives its expectation under i.i.d. tasks.
pub fn vmi_star_literal_poly() -> MultiPoly {
    let v = |c: usize, d: usize| MultiPoly::var(4, 2 * c + d);
    let det = v(0, 0).mul(&v(1, 1)).unwrap().sub(&v(0, 1).mul(&v(1, 0)).unwrap()).unwrap();
    let term = |k: Rational, fs: [(usize, usize); 4]| {
        fs.iter().fold(MultiPoly::constant(4, k), |acc, &(c, d)| acc.mul(&v(c, d)).unwrap())
    };
    let tail = [
        term(ratio(8, 15), [(0, 0), (0, 0), (0, 1), (0, 1)]),
        term(ratio(4, 3), [(0, 1), (0, 0), (0, 0), (1, 1)]),
        term(ratio(4, 9), [(0, 0), (0, 0), (1, 1), (1, 1)]),
        term(ratio(4, 3), [(0, 0), (0, 1), (0, 1), (1, 0)]),
        term(ratio(40, 9), [(0, 0), (0, 1), (1, 0), (1, 1)]),
        term(ratio(4, 3), [(0, 0), (1, 0), (1, 1), (1, 1)]),
        term(ratio(4, 9), [(0, 1), (0, 1), (1, 0), (1, 0)]),
        term(ratio(4, 3), [(0, 1), (1, 0), (1, 0), (1, 1)]),
        term(ratio(8, 15), [(1, 0), (1, 0), (1, 1), (1, 1)]),
    ]
    .into_iter()
    .fold(MultiPoly::zero(4), |acc, t| acc.add(&t).unwrap());
    det.pow(2).mul(&tail).unwrap().scale(&ratio(2, 1))
}

/// `measure(S_A · U · S_Bᵀ)`.
pub fn expected_payment(
    measure: &MeasureSpec,
    sa: &ColumnStochastic<f64>,
    u: &JointDistribution<f64>,
    sb: &ColumnStochastic<f64>,
) -> Result<f64> {
    check_dims(sa.c(), u.c(), sb.c())?;
    measure.eval(apply_strategies(u, sa, sb)?.matrix())
}

/// Exact counterpart of [`expected_payment`]; `None` when the measure has no
/// exact evaluation.
pub fn expected_payment_exact(
    measure: &MeasureSpec,
    sa: &ColumnStochastic<Rational>,
    u: &JointDistribution<Rational>,
    sb: &ColumnStochastic<Rational>,
) -> Result<Option<Rational>> {
    check_dims(sa.c(), u.c(), sb.c())?;
    Ok(measure.eval_exact(apply_strategies(u, sa, sb)?.matrix()))
}

fn check_dims(a: usize, c: usize, b: usize) -> Result<()> {
    if a != c {
        return Err(Error::DimensionMismatch { expected: c, found: a });
    }
    if b != c {
        return Err(Error::DimensionMismatch { expected: c, found: b });
    }
    Ok(())
}

/// How an agent turns a private signal into a report.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentProfile {
    pub strategy: ColumnStochastic<f64>,
    pub noise: Option<ColumnStochastic<f64>>,
}

impl AgentProfile {
    pub fn truthful(c: usize) -> Self {
        AgentProfile { strategy: ColumnStochastic::identity(c), noise: None }
    }

    pub fn new(strategy: ColumnStochastic<f64>) -> Self {
        AgentProfile { strategy, noise: None }
    }

    pub fn with_noise(mut self, noise: ColumnStochastic<f64>) -> Self {
        self.noise = Some(noise);
        self
    }

    /// `S · N`: the column-stochastic map from signal to report.
    pub fn effective(&self) -> Result<ColumnStochastic<f64>> {
        match &self.noise {
            Some(n) => self.strategy.compose(n),
            None => Ok(self.strategy.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PaymentStats {
    pub mean: f64,
    pub std_error: f64,
    /// `scale · measure` at the agent's effective joint report distribution.
    pub exact: f64,
    pub replicates: u64,
}

/// Monte Carlo realisation of a two-agent mechanism. Each replicate draws
/// `spec.tasks()` signal pairs from `u`, maps them through each agent's profile,
/// and runs the mechanism with a replicate-specific shuffle seed.
pub fn simulate(
    u: &JointDistribution<f64>,
    profiles: &[AgentProfile],
    spec: &MechanismSpec,
    replicates: u64,
    seed: u64,
) -> Result<Vec<PaymentStats>> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    if profiles.len() < 2 {
        return Err(Error::TooFewAgents(profiles.len()));
    }
    if profiles.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: profiles.len() });
    }
    let c = u.c();
    if c != spec.c {
        return Err(Error::DimensionMismatch { expected: spec.c, found: c });
    }
    let eff = [profiles[0].effective()?, profiles[1].effective()?];
    for e in &eff {
        if e.c() != c {
            return Err(Error::DimensionMismatch { expected: c, found: e.c() });
        }
    }
    let reported = apply_strategies(u, &eff[0], &eff[1])?;
    let exact = [
        spec.scale * spec.measure.eval_f64(reported.matrix().entries()),
        spec.scale * spec.measure.eval_f64(reported.transpose().matrix().entries()),
    ];
    let joint = u.matrix().entries().to_vec();
    let columns: [Vec<Vec<f64>>; 2] = [columns_of(eff[0].matrix()), columns_of(eff[1].matrix())];
    let t = spec.tasks;
    let mut acc = [(0.0f64, 0.0f64); 2];
    let mut reports = vec![vec![0usize; t], vec![0usize; t]];
    for r in 0..replicates {
        let mut g = rng::stream(seed, r);
        for k in 0..t {
            let idx = rng::categorical(&mut g, &joint);
            let (x, y) = (idx / c, idx % c);
            reports[0][k] = rng::categorical(&mut g, &columns[0][x]);
            reports[1][k] = rng::categorical(&mut g, &columns[1][y]);
        }
        let out = run_mechanism(spec, &reports, g.random::<u64>())?;
        // Welford per agent.
        for a in 0..2 {
            let v = out.payments[a];
            let (mean, m2) = &mut acc[a];
            let d = v - *mean;
            *mean += d / (r + 1) as f64;
            *m2 += d * (v - *mean);
        }
    }
    Ok((0..2)
        .map(|a| {
            let (mean, m2) = acc[a];
            let var = if replicates > 1 { m2 / (replicates - 1) as f64 } else { 0.0 };
            PaymentStats {
                mean,
                std_error: libm::sqrt(var / replicates as f64),
                exact: exact[a],
                replicates,
            }
        })
        .collect())
}

fn columns_of(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|j| (0..m.dim()).map(|i| *m.get(i, j)).collect()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub strategy: usize,
    pub peer: usize,
    /// `E[pay | S] − E[pay | I]`.
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Largest `E[pay | S] − E[pay | I]` seen (negative when truth strictly wins).
    pub max_gain: f64,
    /// `E[pay | I] − E[pay | uninformative]` against each peer.
    pub uninformative_gaps: Vec<f64>,
    /// Measure value at `U` itself.
    pub measure_at_u: f64,
}

impl AuditReport {
    /// No violations, and truth strictly beats an uninformative report whenever
    /// the measure is positive at `U` (checked against the truthful peer).
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && (self.measure_at_u <= 0.0 || self.uninformative_gaps[0] > 0.0)
    }
}

/// Checks `E[pay | I] ≥ E[pay | S] − tol` for each strategy `S` against each
/// peer. The truthful peer is always checked first.
pub fn truthfulness_audit(
    measure: &MeasureSpec,
    u: &JointDistribution<f64>,
    strategies: &[ColumnStochastic<f64>],
    peers: &[ColumnStochastic<f64>],
    tol: f64,
) -> Result<AuditReport> {
    audit_with(u, strategies, peers, tol, |m| measure.eval(m))
}

/// Exact-arithmetic audit with zero tolerance.
pub fn truthfulness_audit_exact(
    measure: &MeasureSpec,
    u: &JointDistribution<Rational>,
    strategies: &[ColumnStochastic<Rational>],
    peers: &[ColumnStochastic<Rational>],
) -> Result<AuditReport> {
    audit_with(u, strategies, peers, Rational::zero(), |m| {
        measure.eval_exact(m).ok_or(Error::NotPolynomial(measure.name()))
    })
}

fn audit_with<S: Scalar>(
    u: &JointDistribution<S>,
    strategies: &[ColumnStochastic<S>],
    peers: &[ColumnStochastic<S>],
    tol: S,
    eval: impl Fn(&Matrix<S>) -> Result<S>,
) -> Result<AuditReport> {
    let c = u.c();
    let mut all_peers = vec![ColumnStochastic::identity(c)];
    all_peers.extend(peers.iter().cloned());
    let id = ColumnStochastic::identity(c);
    let unif = ColumnStochastic::uninformative(c);
    let mut violations = Vec::new();
    let mut gaps = Vec::with_capacity(all_peers.len());
    let mut max_gain = f64::NEG_INFINITY;
    let mut checked = 0;
    for (pi, peer) in all_peers.iter().enumerate() {
        check_dims(peer.c(), c, c)?;
        let truth = eval(apply_strategies(u, &id, peer)?.matrix())?;
        let flat = eval(apply_strategies(u, &unif, peer)?.matrix())?;
        gaps.push((truth.clone() - flat).to_f64());
        for (si, s) in strategies.iter().enumerate() {
            check_dims(s.c(), c, c)?;
            let v = eval(apply_strategies(u, s, peer)?.matrix())?;
            let gain = v - truth.clone();
            let g = gain.to_f64();
            if g > max_gain {
                max_gain = g;
            }
            if gain > tol {
                violations.push(Violation { strategy: si, peer: pi, gain: g });
            }
            checked += 1;
        }
    }
    let measure_at_u = eval(u.matrix())?.to_f64();
    Ok(AuditReport { checked, violations, max_gain, uninformative_gaps: gaps, measure_at_u })
}
