//! JSON shapes accepted by the command line, and their conversion into core
//! types. Numbers may be JSON numbers or strings such as `"1/3"`.

use serde::{Deserialize, Serialize};

use vmi_core::estimator::Policy;
use vmi_core::measures::{dmi_squared_poly, vmi_star_poly, FDivergence, MeasureSpec, ScoringRule, VmiMeasure};
use vmi_core::mechanism::AgentProfile;
use vmi_core::optimizer::{EffortModel, EffortStrategy};
use vmi_core::poly::MultiPoly;
use vmi_core::scalar::{decimal_rational, parse_rational, ratio, rational_to_f64};
use vmi_core::vmi::{self, dirichlet_density, DensitySpec, ParityMode, PolyDensity};
use vmi_core::{ColumnStochastic, Error, JointDistribution, Matrix, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<Rational, Error> {
        match self {
            Num::Float(x) => decimal_rational(*x).ok_or_else(|| Error::Parse(format!("not a finite number: {x}"))),
            Num::Text(s) => parse_rational(s).ok_or_else(|| Error::Parse(format!("not a number: {s:?}"))),
        }
    }

    pub fn to_f64(&self) -> Result<f64, Error> {
        match self {
            Num::Float(x) => Ok(*x),
            Num::Text(_) => Ok(rational_to_f64(&self.to_rational()?)),
        }
    }
}

pub type Rows = Vec<Vec<Num>>;

pub fn matrix_f64(rows: &Rows) -> Result<Matrix<f64>, Error> {
    let r = rows.iter().map(|row| row.iter().map(Num::to_f64).collect()).collect::<Result<Vec<Vec<f64>>, _>>()?;
    Matrix::from_rows(r)
}

pub fn matrix_rational(rows: &Rows) -> Result<Matrix<Rational>, Error> {
    let r = rows.iter().map(|row| row.iter().map(Num::to_rational).collect()).collect::<Result<Vec<Vec<_>>, _>>()?;
    Matrix::from_rows(r)
}

pub fn joint_f64(rows: &Rows) -> Result<JointDistribution<f64>, Error> {
    JointDistribution::new(matrix_f64(rows)?)
}

pub fn joint_rational(rows: &Rows) -> Result<JointDistribution<Rational>, Error> {
    JointDistribution::new(matrix_rational(rows)?)
}

pub fn stochastic_f64(rows: &Rows) -> Result<ColumnStochastic<f64>, Error> {
    ColumnStochastic::new(matrix_f64(rows)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityJson {
    Uniform {
        #[serde(rename = "C")]
        c: usize,
    },
    Plain {
        #[serde(rename = "C", default = "two")]
        c: usize,
    },
    Mountain,
    Basin,
    Polynomial {
        poly: String,
        #[serde(rename = "C")]
        c: usize,
    },
    Dirichlet {
        target: Rows,
        alpha: f64,
    },
}

fn two() -> usize {
    2
}

impl DensityJson {
    pub fn build(&self) -> Result<DensitySpec, Error> {
        Ok(match self {
            DensityJson::Uniform { c } => DensitySpec::Uniform { c: *c },
            DensityJson::Plain { c } => DensitySpec::Polynomial(vmi::plain(*c)),
            DensityJson::Mountain => DensitySpec::Polynomial(vmi::mountain()),
            DensityJson::Basin => DensitySpec::Polynomial(vmi::basin()),
            DensityJson::Polynomial { poly, c } => {
                DensitySpec::Polynomial(PolyDensity::new(MultiPoly::parse(poly, c * c)?, *c)?)
            }
            DensityJson::Dirichlet { target, alpha } => {
                DensitySpec::Dirichlet(dirichlet_density(&joint_f64(target)?, *alpha)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum MeasureJson {
    Dmi,
    Smi,
    Qmi,
    Fmi {
        #[serde(default = "kl")]
        divergence: String,
    },
    Bmi {
        #[serde(default = "log")]
        rule: String,
    },
    Poly {
        poly: String,
        #[serde(rename = "C", default = "two")]
        c: usize,
    },
    Vmi {
        density: DensityJson,
        #[serde(default)]
        mode: Option<String>,
        #[serde(default)]
        budget: Option<u64>,
    },
    Dmi2 {
        #[serde(rename = "C", default = "two")]
        c: usize,
    },
    Vmistar,
}

fn kl() -> String {
    "KL".into()
}

fn log() -> String {
    "log".into()
}

impl MeasureJson {
    pub fn build(&self) -> Result<MeasureSpec, Error> {
        Ok(match self {
            MeasureJson::Dmi => MeasureSpec::Dmi,
            MeasureJson::Smi => MeasureSpec::Smi,
            MeasureJson::Qmi => MeasureSpec::Qmi,
            MeasureJson::Fmi { divergence } => MeasureSpec::Fmi(match divergence.to_ascii_uppercase().as_str() {
                "KL" => FDivergence::Kl,
                "TVD" => FDivergence::Tvd,
                other => return Err(Error::Parse(format!("unknown divergence {other:?}"))),
            }),
            MeasureJson::Bmi { rule } => MeasureSpec::Bmi(match rule.to_ascii_lowercase().as_str() {
                "log" => ScoringRule::Log,
                "quadratic" => ScoringRule::Quadratic,
                other => return Err(Error::Parse(format!("unknown scoring rule {other:?}"))),
            }),
            MeasureJson::Poly { poly, c } => MeasureSpec::Poly(MultiPoly::parse(poly, c * c)?),
            MeasureJson::Vmi { density, mode, budget } => {
                let d = density.build()?;
                let mode = match mode {
                    Some(m) => ParityMode::parse(m).ok_or_else(|| Error::Parse(format!("unknown parity mode {m:?}")))?,
                    None => ParityMode::polynomial_for(d.c()),
                };
                MeasureSpec::Vmi(match budget {
                    Some(b) => VmiMeasure::numeric(d, mode, *b)?,
                    None => VmiMeasure::new(d, mode)?,
                })
            }
            MeasureJson::Dmi2 { c } => MeasureSpec::Poly(dmi_squared_poly(*c)),
            MeasureJson::Vmistar => MeasureSpec::Poly(vmi_star_poly()),
        })
    }

    /// Alphabet size implied by the measure, when it fixes one.
    pub fn alphabet(&self) -> Option<usize> {
        match self {
            MeasureJson::Poly { c, .. } | MeasureJson::Dmi2 { c } => Some(*c),
            MeasureJson::Vmistar => Some(2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyJson {
    FirstK,
    AveragedExact,
    Subsampled {
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_m() -> usize {
    vmi_core::estimator::DEFAULT_SUBSAMPLES
}

impl PolicyJson {
    pub fn build(&self) -> Policy {
        match self {
            PolicyJson::FirstK => Policy::FirstK,
            PolicyJson::AveragedExact => Policy::AveragedExact,
            PolicyJson::Subsampled { m, seed } => Policy::AveragedSubsampled { m: *m, seed: *seed },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentJson {
    #[serde(default)]
    pub strategy: Option<Rows>,
    #[serde(default)]
    pub noise: Option<Rows>,
}

impl AgentJson {
    pub fn build(&self, c: usize) -> Result<AgentProfile, Error> {
        let s = match &self.strategy {
            Some(r) => stochastic_f64(r)?,
            None => ColumnStochastic::identity(c),
        };
        let mut p = AgentProfile::new(s);
        if let Some(n) = &self.noise {
            p = p.with_noise(stochastic_f64(n)?);
        }
        Ok(p)
    }
}

/// `mech run` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechConfig {
    pub measure: MeasureJson,
    #[serde(rename = "T")]
    pub tasks: usize,
    #[serde(rename = "U")]
    pub joint: Rows,
    pub agents: Vec<AgentJson>,
    #[serde(default = "one_replicate")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: Option<PolicyJson>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    /// Pay VMI★ through its explicit eight-task formula.
    #[serde(default)]
    pub literal: bool,
}

fn one_replicate() -> u64 {
    1
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyJson {
    #[serde(rename = "N")]
    pub noise: Rows,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffortModelJson {
    #[serde(rename = "U_G")]
    pub ug: Rows,
    pub alice: Vec<StrategyJson>,
    pub bob: Vec<StrategyJson>,
    pub values: Vec<Vec<f64>>,
}

impl EffortModelJson {
    pub fn build(&self) -> Result<EffortModel, Error> {
        let side = |v: &[StrategyJson]| -> Result<Vec<EffortStrategy>, Error> {
            v.iter().map(|s| Ok(EffortStrategy::new(stochastic_f64(&s.noise)?, s.cost))).collect()
        };
        EffortModel::new(joint_f64(&self.ug)?, side(&self.alice)?, side(&self.bob)?, self.values.clone())
    }

    pub fn from_model(m: &EffortModel) -> Self {
        let rows = |x: &Matrix<f64>| -> Rows { x.rows().into_iter().map(|r| r.into_iter().map(Num::Float).collect()).collect() };
        let side = |v: &[EffortStrategy]| v.iter().map(|s| StrategyJson { noise: rows(s.noise.matrix()), cost: s.cost }).collect();
        EffortModelJson { ug: rows(m.ug().matrix()), alice: side(m.alice()), bob: side(m.bob()), values: m.values().to_vec() }
    }
}

/// Parses `"task,alice,bob"` CSV into ordered report pairs.
pub fn parse_batch_csv(text: &str) -> Result<Vec<(usize, usize)>, Error> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (k == 0 && line.starts_with("task")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected task,alice,bob", k + 1)));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("line {}: bad integer {s:?}", k + 1)));
        num(f[0])?;
        out.push((num(f[1])?, num(f[2])?));
    }
    Ok(out)
}

/// Reads inline JSON, or a path to a JSON file when the text does not start
/// with `{` or `[`.
pub fn load_json<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, Error> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Parse(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

/// Rounds a float joint onto the lattice `1/den`, putting the rounding slack
/// on the last entry so the result sums to exactly one.
pub fn rationalize_joint(u: &JointDistribution<f64>, den: i64) -> Result<JointDistribution<Rational>, Error> {
    let e = u.matrix().entries();
    let mut ks: Vec<i64> = e.iter().map(|x| (x * den as f64).floor() as i64).collect();
    let last = ks.len() - 1;
    ks[last] = den - ks[..last].iter().sum::<i64>();
    JointDistribution::new(Matrix::new(u.c(), ks.into_iter().map(|k| ratio(k, den)).collect())?)
}

/// Column-wise version of [`rationalize_joint`] for strategies.
pub fn rationalize_stochastic(s: &ColumnStochastic<f64>, den: i64) -> Result<ColumnStochastic<Rational>, Error> {
    let c = s.c();
    let mut m = Matrix::zeros(c);
    for j in 0..c {
        let mut used = 0;
        for i in 0..c {
            let k = if i + 1 == c { den - used } else { (s.matrix().get(i, j) * den as f64).floor() as i64 };
            used += k;
            m.set(i, j, ratio(k, den));
        }
    }
    ColumnStochastic::new(m)
}
