//! The `peerpred` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vmi_core::contour::{density_heatmap_grid, marching_squares, slice_grid, SliceGrid};
use vmi_core::estimator::exact_expectation;
use vmi_core::joint::{random_joint, random_stochastic};
use vmi_core::mechanism::{
    run_mechanism, simulate, truthfulness_audit, truthfulness_audit_exact, AuditReport, MechanismSpec,
};
use vmi_core::optimizer::{
    approximation_sweep, compute_vstar, dmi_counterexample_check, reference_effort_model, find_equilibria,
    select_equilibrium, threshold_payments, EffortModel, PaymentScheme,
};
use vmi_core::scalar::format_rational;
use vmi_core::vmi::{vmi_numeric, vmi_symbolic, DensitySpec, ParityMode, DEFAULT_BUDGET};
use vmi_core::{ColumnStochastic, Error, JointDistribution};

use crate::emit::{contour_svg, grid_csv, grid_json, lower_set_overlay, sweep_csv, Overlay};
use crate::formats::{
    joint_f64, joint_rational, load_json, parse_batch_csv, rationalize_joint, rationalize_stochastic, DensityJson,
    EffortModelJson, MeasureJson, MechConfig, Rows,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for violated preconditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_config() => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "peerpred", version, about = "Volume mutual information and peer-prediction mechanisms")]
pub struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Use exact rational arithmetic where the command supports it.
    #[arg(long, global = true)]
    pub rational: bool,
    #[command(subcommand)]
    pub command: Group,
}

#[derive(Debug, Subcommand)]
pub enum Group {
    /// Mutual-information measures.
    #[command(subcommand)]
    Mi(MiCmd),
    /// Volume mutual information.
    #[command(subcommand)]
    Vmi(VmiCmd),
    /// Payment mechanisms.
    #[command(subcommand)]
    Mech(MechCmd),
    /// Effort-incentive optimisation.
    #[command(subcommand)]
    Opt(OptCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum MiCmd {
    /// Evaluate a measure at one joint distribution.
    Eval {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        joint: String,
    },
    /// Sample a binary measure on the slice p = p0.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub measure: String,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    #[arg(long, default_value_t = 101)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated contour levels for SVG output.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
    /// Joint whose lower-set parallelogram is drawn over an SVG.
    #[arg(long)]
    pub lower_set: Option<String>,
    /// Joint whose four pure-strategy images are drawn over an SVG.
    #[arg(long)]
    pub strategies_of: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum VmiCmd {
    /// Closed form and materialised polynomial of a polynomial density.
    Symbolic {
        #[arg(long)]
        density: String,
        /// Overrides the alphabet size of `uniform` and `plain` densities.
        #[arg(long = "C")]
        c: Option<usize>,
        /// odd_direct, even_times_dmi or squared; defaults by parity.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numeric VMI at one joint.
    Numeric {
        #[arg(long)]
        density: String,
        #[arg(long)]
        joint: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// The density itself on the slice p = p0.
    Heatmap {
        #[arg(long)]
        density: String,
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MechCmd {
    /// Simulate a two-agent mechanism, or pay one batch of reports.
    Run {
        #[arg(long)]
        config: String,
        /// `task,alice,bob` CSV; pays this batch instead of simulating.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check truthful reporting against random strategies.
    Audit {
        #[arg(long)]
        measure: String,
        /// A joint, or `random` for one drawn from `--seed`.
        #[arg(long)]
        joint: String,
        #[arg(long, default_value_t = 200)]
        strategies: usize,
        /// Random peer strategies checked after the truthful peer.
        #[arg(long, default_value_t = 0)]
        peers: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Lattice denominator used to make random strategies exact.
        #[arg(long, default_value_t = 1000)]
        denominator: i64,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Effort model JSON, or `reference`.
    #[arg(long, default_value = "reference")]
    pub model: String,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
}

#[derive(Debug, Subcommand)]
pub enum OptCmd {
    /// Best net value over all effort profiles.
    Vstar(ModelArgs),
    /// Threshold payments and the selected equilibrium.
    Threshold(ModelArgs),
    /// Dirichlet-VMI payments over increasing concentration.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [20u64, 40, 80])]
        alphas: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs a parsed command and returns what should go to standard output.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Group::Mi(c) => mi(cli, c),
        Group::Vmi(c) => vmi(cli, c),
        Group::Mech(c) => mech(cli, c),
        Group::Opt(c) => opt(c),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn format_for(path: &Path, f: Option<Format>) -> Result<Format> {
    if let Some(f) = f {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some("svg") => Ok(Format::Svg),
        _ => Err(CliError::Config(format!("cannot infer format of {}; pass --format", path.display()))),
    }
}

/// Nine levels evenly spread strictly inside the grid range.
fn default_levels(g: &SliceGrid) -> Vec<f64> {
    let (lo, hi) = (g.min(), g.max());
    if hi <= lo {
        return vec![lo];
    }
    (1..10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
}

fn emit_grid(g: &SliceGrid, out: &Path, format: Option<Format>, levels: &[f64], overlays: &[Overlay]) -> Result<String> {
    let text = match format_for(out, format)? {
        Format::Csv => grid_csv(g),
        Format::Json => grid_json(g),
        Format::Svg => {
            let lv = if levels.is_empty() { default_levels(g) } else { levels.to_vec() };
            let contours = marching_squares(g, &lv)?;
            contour_svg(Some(g), &contours, overlays, &g.label)
        }
    };
    write(out, &text)?;
    Ok(pretty(&json!({ "label": g.label, "n": g.n, "p0": g.p0, "min": g.min(), "max": g.max(), "out": out })))
}

fn mi(cli: &Cli, cmd: &MiCmd) -> Result<String> {
    match cmd {
        MiCmd::Eval { measure, joint } => {
            let mj: MeasureJson = load_json(measure)?;
            let m = mj.build()?;
            let rows: Rows = load_json(joint)?;
            let u = joint_f64(&rows)?;
            let exact = if cli.rational {
                let v = m.eval_exact(joint_rational(&rows)?.matrix()).ok_or(Error::NotPolynomial(m.name()))?;
                Some(format_rational(&v))
            } else {
                None
            };
            Ok(pretty(&json!({ "measure": m.name(), "value": m.eval(u.matrix())?, "exact": exact })))
        }
        MiCmd::Grid(a) => {
            let m = load_json::<MeasureJson>(&a.measure)?.build()?;
            let g = slice_grid(&m, a.p0, a.n)?;
            let mut overlays = Vec::new();
            if let Some(j) = &a.lower_set {
                overlays.push(lower_set_overlay(&joint_f64(&load_json(j)?)?, "#c0392b")?);
            }
            if let Some(j) = &a.strategies_of {
                let mut o = lower_set_overlay(&joint_f64(&load_json(j)?)?, "#e6c229")?;
                o.name = "pure strategies".into();
                overlays.push(o);
            }
            emit_grid(&g, &a.out, a.format, &a.levels, &overlays)
        }
    }
}

fn density(arg: &str, c: Option<usize>) -> Result<DensitySpec> {
    let mut d: DensityJson = load_json(arg)?;
    if let Some(k) = c {
        match &mut d {
            DensityJson::Uniform { c } | DensityJson::Plain { c } => *c = k,
            _ => {}
        }
    }
    let spec = d.build()?;
    if let Some(k) = c {
        if spec.c() != k {
            return Err(Error::DimensionMismatch { expected: k, found: spec.c() }.into());
        }
    }
    Ok(spec)
}

fn vmi(cli: &Cli, cmd: &VmiCmd) -> Result<String> {
    match cmd {
        VmiCmd::Symbolic { density: d, c, mode, out } => {
            let spec = density(d, *c)?;
            let w = spec.as_polynomial().ok_or(Error::NotPolynomial("density"))?;
            let mode = match mode {
                Some(m) => ParityMode::parse(m).ok_or_else(|| CliError::Config(format!("unknown mode {m:?}")))?,
                None => ParityMode::polynomial_for(spec.c()),
            };
            let f = vmi_symbolic(&w, mode)?;
            let p = f.materialize();
            let v = json!({
                "C": f.c,
                "mode": f.mode.name(),
                "closed_form": f.to_text(),
                "coef": format_rational(&f.coef),
                "radical_pow": f.radical_pow,
                "Q": f.q.to_text(),
                "degree": f.degree,
                "polynomial": p.poly.to_text(),
                "polynomial_radical_pow": p.radical_pow,
            });
            let text = pretty(&v);
            if let Some(o) = out {
                write(o, &text)?;
            }
            Ok(text)
        }
        VmiCmd::Numeric { density: d, joint, budget } => {
            let spec = density(d, None)?;
            let u = joint_f64(&load_json(joint)?)?;
            let e = vmi_numeric(&spec, u.matrix(), *budget, cli.seed)?;
            Ok(pretty(&json!({ "value": e.value, "std_error": e.std_error, "evaluations": e.evaluations })))
        }
        VmiCmd::Heatmap { density: d, p0, n, out, format, levels } => {
            let g = density_heatmap_grid(&density(d, None)?, *p0, *n)?;
            emit_grid(&g, out, *format, levels, &[])
        }
    }
}

fn mechanism_spec(cfg: &MechConfig, c: usize) -> Result<MechanismSpec> {
    if cfg.literal {
        if !matches!(cfg.measure, MeasureJson::Vmistar) {
            return Err(CliError::Config("literal payment is only defined for VMISTAR".into()));
        }
        return Ok(MechanismSpec::vmi_star(cfg.tasks, cfg.scale)?);
    }
    let m = cfg.measure.build()?;
    let policy = cfg.policy.as_ref().map(|p| p.build()).unwrap_or_default();
    Ok(MechanismSpec::new(&m, c, cfg.tasks, policy, cfg.scale)?)
}

fn audit_json(r: &AuditReport) -> Value {
    json!({
        "checked": r.checked,
        "violations": r.violations.len(),
        "max_gain": r.max_gain,
        "measure_at_U": r.measure_at_u,
        "truthful_minus_uninformative": r.uninformative_gaps,
        "passed": r.passed(),
    })
}

fn mech(cli: &Cli, cmd: &MechCmd) -> Result<String> {
    match cmd {
        MechCmd::Run { config, reports, out } => {
            let cfg: MechConfig = load_json(config)?;
            let u = joint_f64(&cfg.joint)?;
            let spec = mechanism_spec(&cfg, u.c())?;
            let seed = if cli.seed != 0 { cli.seed } else { cfg.seed };
            let v = match reports {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
                    let pairs = parse_batch_csv(&text)?;
                    let rep = vec![pairs.iter().map(|x| x.0).collect(), pairs.iter().map(|x| x.1).collect()];
                    let o = run_mechanism(&spec, &rep, seed)?;
                    let pairs: Vec<Value> =
                        o.pairs.iter().map(|p| json!({ "i": p.i, "j": p.j, "value": p.value, "order": p.order })).collect();
                    json!({ "payments": o.payments, "pairs": pairs })
                }
                None => {
                    let profiles = cfg.agents.iter().map(|a| a.build(u.c())).collect::<std::result::Result<Vec<_>, _>>()?;
                    let stats = simulate(&u, &profiles, &spec, cfg.replicates, seed)?;
                    let agents: Vec<Value> = stats
                        .iter()
                        .map(|s| json!({ "mean": s.mean, "std_error": s.std_error, "exact": s.exact, "replicates": s.replicates }))
                        .collect();
                    let mut v = json!({ "tasks": spec.tasks(), "agents": agents });
                    if cli.rational {
                        if let vmi_core::mechanism::PaymentRule::Estimator(est) = spec.rule() {
                            let e = exact_expectation(est, joint_rational(&cfg.joint)?.matrix(), spec.tasks())?;
                            v["truthful_expectation"] = json!(format_rational(&e));
                        }
                    }
                    v
                }
            };
            let text = pretty(&v);
            if let Some(o) = out {
                write(o, &text)?;
            }
            Ok(text)
        }
        MechCmd::Audit { measure, joint, strategies, peers, tol, denominator } => {
            let mj: MeasureJson = load_json(measure)?;
            let m = mj.build()?;
            let c = mj.alphabet().unwrap_or(2);
            let u = if joint == "random" { random_joint(c, cli.seed) } else { joint_f64(&load_json(joint)?)? };
            let c = u.c();
            let strat: Vec<ColumnStochastic<f64>> =
                (0..*strategies as u64).map(|k| random_stochastic(c, cli.seed.wrapping_add(1 + k))).collect();
            let mut peer = vec![ColumnStochastic::identity(c)];
            peer.extend((0..*peers as u64).map(|k| random_stochastic(c, cli.seed.wrapping_add(1_000_003 + k))));
            let report = if cli.rational {
                let ur: JointDistribution<_> = if joint == "random" {
                    rationalize_joint(&u, *denominator)?
                } else {
                    joint_rational(&load_json(joint)?)?
                };
                let sr = strat.iter().map(|s| rationalize_stochastic(s, *denominator)).collect::<std::result::Result<Vec<_>, _>>()?;
                let pr = peer.iter().map(|s| rationalize_stochastic(s, *denominator)).collect::<std::result::Result<Vec<_>, _>>()?;
                truthfulness_audit_exact(&m, &ur, &sr, &pr)?
            } else {
                truthfulness_audit(&m, &u, &strat, &peer, *tol)?
            };
            Ok(pretty(&audit_json(&report)))
        }
    }
}

fn model(arg: &str) -> Result<EffortModel> {
    if arg == "reference" {
        return Ok(reference_effort_model());
    }
    Ok(load_json::<EffortModelJson>(arg)?.build()?)
}

fn opt(cmd: &OptCmd) -> Result<String> {
    match cmd {
        OptCmd::Vstar(a) => {
            let m = model(&a.model)?;
            let v = compute_vstar(&m)?;
            Ok(pretty(&json!({ "vstar": v.value, "a": v.a, "b": v.b, "Ustar": v.ustar.matrix().rows(), "degenerate": v.degenerate })))
        }
        OptCmd::Threshold(a) => {
            let m = model(&a.model)?;
            let scheme = threshold_payments(&m, a.eps)?;
            let levels = match &scheme {
                PaymentScheme::Threshold { levels, .. } => *levels,
                PaymentScheme::MeasureBacked { .. } => unreachable!("threshold scheme"),
            };
            let eq = find_equilibria(&m, &scheme, a.delta)?;
            let sel = select_equilibrium(&eq)?;
            let mut v = json!({
                "levels": levels,
                "equilibria": eq.iter().map(|o| [o.a, o.b]).collect::<Vec<_>>(),
                "chosen": [sel.chosen.a, sel.chosen.b],
                "alice_utility": sel.chosen.alice_utility,
                "bob_utility": sel.chosen.bob_utility,
                "requester_utility": sel.guarantee,
            });
            if let Ok(d) = dmi_counterexample_check(&m) {
                v["dmi_check"] = json!({
                    "cheaper": d.cheaper,
                    "optimal": d.optimal,
                    "det_cheaper": d.det_cheaper,
                    "det_optimal": d.det_optimal,
                    "payments_equal": d.payments_equal(),
                    "capped_utility": d.capped_utility,
                    "vstar": d.vstar,
                });
            }
            Ok(pretty(&v))
        }
        OptCmd::Sweep { model: a, alphas, budget, out } => {
            let m = model(&a.model)?;
            let s = approximation_sweep(&m, a.eps, a.delta, alphas, *budget)?;
            let csv = sweep_csv(&s);
            if let Some(o) = out {
                write(o, &csv)?;
            }
            Ok(csv)
        }
    }
}
