//! Randomized checks of the rearrangement and kernel inequalities.
//!
//! Every suite produces, per trial, a list of probes `lhs ≤ rhs` and scores
//! them with the scale-normalized slack `(rhs - lhs) / max(lhs, rhs, 1e-300)`.
//! A trial passes when its worst binding slack is at least `-tolerance`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use orlicz_lorentz::funcspace::{quadrature::integrate_fn, AnalyticKernel, Monotonicity, QuadratureSpec};
use orlicz_lorentz::operators::{apply_kernel, convolution_star_integral, oneil_majorant};
use orlicz_lorentz::rearrange::{
    bivariate_rearrangement, decreasing_rearrangement, discretize_kernel, iterated_rearrangement, BivariateMode,
    KernelGridSpec,
};
use orlicz_lorentz::scalar::{compensated_sum, normalized_slack};
use orlicz_lorentz::{AnalyticFunction64, Grid2DKernel64, Kernel64, StepFunction64};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{HarnessError, Result};
use crate::generate::{random_decreasing_step, random_lattice_kernel, random_kernel_profile, random_step, trial_rng};
use crate::inputs::{step_profile, KernelSpec, ProfileSpec};
use crate::scenario::Scenario;

pub const CSV_HEADER: &str = "scenario,trial,probe,lhs,rhs,slack,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oneil2,
    HlpChain,
    Majorization16,
    OneilKernelBound,
    Sandwich,
    TighterBound,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Oneil2,
        Suite::HlpChain,
        Suite::Majorization16,
        Suite::OneilKernelBound,
        Suite::Sandwich,
        Suite::TighterBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Oneil2 => "oneil2",
            Suite::HlpChain => "hlp_chain",
            Suite::Majorization16 => "majorization16",
            Suite::OneilKernelBound => "oneil_kernel_bound",
            Suite::Sandwich => "sandwich",
            Suite::TighterBound => "tighter_bound",
        }
    }

    /// `1e-9` for slab arithmetic and closed forms, `1e-6` once quadrature enters.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::OneilKernelBound => 1e-6,
            _ => 1e-9,
        }
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub trial: usize,
    pub probe: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Row {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{}",
            csv_field(&self.scenario),
            self.trial,
            csv_field(&self.probe),
            self.lhs,
            self.rhs,
            self.slack,
            self.verdict
        )
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    /// Minimum binding slack; `0` for a trial without binding probes.
    pub worst_slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureWitness {
    pub trial: usize,
    pub probe: String,
    pub slack: f64,
    pub inputs: Value,
}

/// Summary of the binding slacks over all trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub scenario: String,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_slack: f64,
    pub trials: Vec<TrialResult>,
    pub gap: GapStats,
    pub failures: Vec<FailureWitness>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

struct Probe {
    label: String,
    lhs: f64,
    rhs: f64,
    binding: bool,
}

impl Probe {
    fn new(label: String, lhs: f64, rhs: f64) -> Self {
        Self { label, lhs, rhs, binding: true }
    }

    fn info(label: String, lhs: f64, rhs: f64) -> Self {
        Self { label, lhs, rhs, binding: false }
    }
}

#[derive(Default)]
struct Trial {
    probes: Vec<Probe>,
    inputs: Value,
    /// Combined across trials by maximum.
    metrics: Vec<(String, f64)>,
}

fn run_trials<F>(suite: Suite, sc: &Scenario, tolerance: f64, one: F) -> Result<SuiteResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Trial> + Sync,
{
    let outs: Vec<Result<Trial>> = (0..sc.trials)
        .into_par_iter()
        .map(|i| one(&mut trial_rng(sc.seed, i as u64)))
        .collect();
    let mut res = SuiteResult {
        suite,
        scenario: sc.name.clone(),
        tolerance,
        pass: true,
        worst_slack: 0.0,
        trials: Vec::with_capacity(sc.trials),
        gap: GapStats { count: 0, min: 0.0, mean: 0.0, max: 0.0 },
        failures: Vec::new(),
        metrics: BTreeMap::new(),
        notes: Vec::new(),
        rows: Vec::new(),
    };
    let mut all = Vec::new();
    for (i, out) in outs.into_iter().enumerate() {
        let trial = out?;
        let mut worst: Option<(f64, usize)> = None;
        for (j, p) in trial.probes.iter().enumerate() {
            let slack = normalized_slack(p.lhs, p.rhs);
            let ok = slack >= -tolerance;
            let verdict = match (p.binding, ok) {
                (false, _) => "info",
                (true, true) => "pass",
                (true, false) => "fail",
            };
            if p.binding {
                all.push(slack);
                // NaN slacks count as the worst possible.
                let key = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
                if worst.map_or(true, |(w, _)| key < w) {
                    worst = Some((key, j));
                }
            }
            res.rows.push(Row {
                scenario: sc.name.clone(),
                trial: i,
                probe: p.label.clone(),
                lhs: p.lhs,
                rhs: p.rhs,
                slack,
                verdict: verdict.into(),
            });
        }
        let worst_slack = worst.map_or(0.0, |(w, _)| w);
        let pass = worst_slack >= -tolerance;
        if !pass {
            let (_, j) = worst.expect("a failing trial has a binding probe");
            res.failures.push(FailureWitness {
                trial: i,
                probe: trial.probes[j].label.clone(),
                slack: worst_slack,
                inputs: trial.inputs.clone(),
            });
        }
        for (name, v) in trial.metrics {
            let e = res.metrics.entry(name).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
        res.pass &= pass;
        res.worst_slack = if i == 0 { worst_slack } else { res.worst_slack.min(worst_slack) };
        res.trials.push(TrialResult { trial: i, worst_slack, pass });
    }
    if !all.is_empty() {
        let finite: Vec<f64> = all.iter().copied().filter(|s| !s.is_nan()).collect();
        res.gap = GapStats {
            count: all.len(),
            min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            mean: compensated_sum(finite.iter().copied()) / finite.len().max(1) as f64,
            max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
    }
    if sc.trials == 0 {
        res.notes.push("no trials requested".into());
    }
    Ok(res)
}

pub fn verify_inequality_suite(suite: Suite, sc: &Scenario) -> Result<SuiteResult> {
    match suite {
        Suite::Oneil2 => oneil2(sc),
        Suite::HlpChain => hlp_chain(sc),
        Suite::Majorization16 => majorization16(sc),
        Suite::OneilKernelBound => oneil_kernel_bound(sc),
        Suite::Sandwich => sandwich(sc),
        Suite::TighterBound => tighter_bound(sc),
    }
}

fn probe_count(sc: &Scenario) -> usize {
    sc.grids.probes.unwrap_or(20)
}

fn slab_count(sc: &Scenario) -> usize {
    sc.inputs.slabs.unwrap_or(8)
}

/// Uniform on `(0, hi]`.
fn unit_open(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    hi * (1.0 - rng.random_range(0.0..1.0))
}

fn probes_t(sc: &Scenario, rng: &mut ChaCha8Rng, hi: f64) -> Vec<f64> {
    match &sc.grids.t {
        Some(t) => t.clone(),
        None => (0..probe_count(sc)).map(|_| unit_open(rng, hi)).collect(),
    }
}

fn step_pair(sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<(StepFunction64, StepFunction64)> {
    match (&sc.inputs.f, &sc.inputs.g) {
        (Some(f), Some(g)) => Ok((f.clone(), g.clone())),
        (None, None) => {
            let n = slab_count(sc);
            let nf = rng.random_range(1..=n.max(1));
            let ng = rng.random_range(1..=n.max(1));
            Ok((random_step(rng, nf)?, random_step(rng, ng)?))
        }
        _ => Err(HarnessError::input("give both inputs.f and inputs.g, or neither for random pairs")),
    }
}

fn pair_horizon(f: &StepFunction64, g: &StepFunction64) -> f64 {
    let h = 1.25 * (f.support_end() + g.support_end());
    if h > 0.0 {
        h
    } else {
        1.0
    }
}

fn oneil2(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::Oneil2;
    run_trials(suite, sc, sc.tolerance.unwrap_or(suite.default_tolerance()), |rng| {
        let (f, g) = step_pair(sc, rng)?;
        let mut probes = Vec::new();
        for t in probes_t(sc, rng, pair_horizon(&f, &g)) {
            let lhs = convolution_star_integral(&f, &g, t);
            let rhs = oneil_majorant(&f, &g, t)?.rhs;
            probes.push(Probe::new(format!("t={t:e}"), lhs, rhs));
        }
        Ok(Trial { probes, inputs: json!({ "f": f, "g": g }), ..Default::default() })
    })
}

/// Terms of the two-step derivation at `t`, with `P = f* g*`, `F`, `G` the primitives:
/// `A = ∫₀ᵗ∫ₛᵗ P = ∫₀ᵗ r P(r) dr`, `B = ∫₀ᵗ f*(s) ∫ₛᵗ g*`, `C = F(t) G(t)`
/// and `T = ∫ₜ^∞ P`.
struct ChainTerms {
    a: f64,
    b: f64,
    c: f64,
    tail: f64,
}

fn chain_terms(fs: &StepFunction64, gs: &StepFunction64, t: f64) -> ChainTerms {
    let p = fs.product(gs);
    let a = compensated_sum(p.slabs().map(|(lo, hi, v)| {
        let (lo, hi) = (lo.min(t), hi.min(t));
        v * (hi * hi - lo * lo) / 2.0
    }));
    let gt = gs.cumulative(t);
    let mut bps: Vec<f64> = fs.common_breakpoints(gs).into_iter().filter(|s| *s < t).collect();
    bps.push(t);
    let b = compensated_sum(bps.windows(2).map(|w| {
        let (lo, hi) = (w[0], w[1]);
        // G is linear on [lo, hi], so the midpoint rule is exact.
        fs.eval(lo) * (hi - lo) * (gt - 0.5 * (gs.cumulative(lo) + gs.cumulative(hi)))
    }));
    ChainTerms {
        a,
        b,
        c: fs.cumulative(t) * gt,
        tail: p.integral_over(t, p.support_end().max(t)),
    }
}

fn hlp_chain(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::HlpChain;
    run_trials(suite, sc, sc.tolerance.unwrap_or(suite.default_tolerance()), |rng| {
        let (f, g) = step_pair(sc, rng)?;
        let fs = decreasing_rearrangement(&f).star;
        let gs = decreasing_rearrangement(&g).star;
        let mut probes = Vec::new();
        for t in probes_t(sc, rng, pair_horizon(&f, &g)) {
            if !(t > 0.0) {
                return Err(HarnessError::arg(format!("probe t must be positive, got {t}")));
            }
            let ChainTerms { a, b, c, tail } = chain_terms(&fs, &gs, t);
            let tt = t * tail;
            probes.push(Probe::new(format!("t={t:e};first_step"), a + tt, b + tt));
            probes.push(Probe::new(format!("t={t:e};second_step"), b + tt, c + tt));
            let star = convolution_star_integral(&f, &g, t);
            probes.push(Probe::new(format!("t={t:e};integrand_domination"), star, c + a + tt));
        }
        Ok(Trial { probes, inputs: json!({ "f": f, "g": g }), ..Default::default() })
    })
}

/// `T_K f` for a grid kernel, exact on the row grid of `K`.
fn grid_image(k: &Grid2DKernel64, f: &StepFunction64) -> Result<StepFunction64> {
    let values = (0..k.nx()).map(|i| k.row_section(i).product(f).integral()).collect();
    Ok(StepFunction64::new(k.x_breakpoints().to_vec(), values)?)
}

fn majorization16(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::Majorization16;
    let cells = sc.inputs.grid.unwrap_or(64);
    let fixed = match &sc.inputs.kernel {
        None => None,
        Some(KernelSpec::Grid(g)) => Some((g.clone(), false)),
        Some(other) => {
            let spec = KernelGridSpec { cells, ..Default::default() };
            Some((discretize_kernel(&other.to_kernel()?, &spec)?, true))
        }
    };
    let discretized = fixed.as_ref().is_some_and(|(_, d)| *d);
    let tol = sc.tolerance.unwrap_or(if discretized { 1e-6 } else { suite.default_tolerance() });
    let mut res = run_trials(suite, sc, tol, |rng| {
        let k = match &fixed {
            Some((k, _)) => k.clone(),
            None => random_lattice_kernel(rng, cells)?,
        };
        let f = match &sc.inputs.f {
            Some(f) => f.clone(),
            None => random_step(rng, slab_count(sc))?,
        };
        let fstar = decreasing_rearrangement(&f).star;
        let left = decreasing_rearrangement(&grid_image(&k, &f)?);
        let right = decreasing_rearrangement(&grid_image(&iterated_rearrangement(&k), &fstar)?);
        let hi = 1.2 * k.x_breakpoints()[k.nx()];
        let mut probes = Vec::new();
        for t in probes_t(sc, rng, hi) {
            probes.push(Probe::new(format!("t={t:e}"), left.double_star(t)?, right.double_star(t)?));
        }
        Ok(Trial { probes, inputs: json!({ "kernel": k, "f": f }), ..Default::default() })
    })?;
    if discretized {
        res.notes.push(format!("analytic kernel discretized on {cells} log-spaced cells per axis"));
    }
    Ok(res)
}

fn decreasing_profile(spec: &ProfileSpec) -> Result<AnalyticFunction64> {
    let k = spec.to_analytic()?;
    if k.monotone() != Monotonicity::Decreasing {
        return Err(HarnessError::input("the kernel profile k must be nonincreasing"));
    }
    Ok(k)
}

fn radial_profile_input(sc: &Scenario) -> Result<ProfileSpec> {
    match (&sc.inputs.kernel, &sc.inputs.profile) {
        (Some(KernelSpec::Radial { profile }), None) => Ok(profile.clone()),
        (Some(KernelSpec::Riesz { exponent }), None) => Ok(ProfileSpec::Power { exponent: -2.0 * exponent }),
        (Some(_), _) => Err(HarnessError::input("this suite needs a radial kernel k(sqrt(x² + y²))")),
        (None, Some(p)) => Ok(p.clone()),
        (None, None) => Ok(ProfileSpec::Exp { rate: 1.0 }),
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Quadrature of a fallible integrand; the first error wins.
fn quad(h: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let err: RefCell<Option<HarnessError>> = RefCell::new(None);
    let g = |y: f64| match h(y) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let v = integrate_fn(&g, a, b, breaks, &QuadratureSpec::default())?.value();
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `∫₀^∞ K*(xy) f*(y) dy` with `K*` from `mode`; `kink` maps a profile kink
/// `s` to the matching `y`.
fn oneil_rhs(
    kernel: &Kernel64,
    fstar: &StepFunction64,
    x: f64,
    mode: BivariateMode,
    profile_kinks: &[f64],
) -> Result<f64> {
    let scale = match mode {
        BivariateMode::SqrtProfile => 1.0,
        BivariateMode::Planar => std::f64::consts::PI / 4.0,
    };
    let breaks: Vec<f64> = profile_kinks.iter().map(|s| scale * s * s / x).collect();
    let h = |y: f64| Ok(bivariate_rearrangement(kernel, x * y, mode)?);
    let mut terms = Vec::new();
    for (a, b, v) in fstar.slabs().filter(|s| s.2 > 0.0) {
        terms.push(v * quad(&h, a, b, &breaks)?);
    }
    Ok(compensated_sum(terms))
}

fn oneil_kernel_bound(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::OneilKernelBound;
    let k = decreasing_profile(&radial_profile_input(sc)?)?;
    let kinks = k.kinks().to_vec();
    let kernel: Kernel64 = AnalyticKernel::radial(k).into();
    let mut res = run_trials(suite, sc, sc.tolerance.unwrap_or(suite.default_tolerance()), |rng| {
        let fstar = match &sc.inputs.f {
            Some(f) => decreasing_rearrangement(f).star,
            None => random_decreasing_step(rng, slab_count(sc))?,
        };
        let xs: Vec<f64> = match &sc.grids.x {
            Some(x) => x.clone(),
            None => (0..probe_count(sc)).map(|_| log_uniform(rng, 1e-2, 1e2)).collect(),
        };
        let q = QuadratureSpec::default();
        let mut probes = Vec::new();
        for x in xs {
            if !(x > 0.0) {
                return Err(HarnessError::arg(format!("probe x must be positive, got {x}")));
            }
            let inner = |y: f64| Ok(apply_kernel(&kernel, &fstar, y, &q)?);
            let lhs = quad(&inner, 0.0, x, &[])? / x;
            let sqrt = oneil_rhs(&kernel, &fstar, x, BivariateMode::SqrtProfile, &kinks)?;
            let planar = oneil_rhs(&kernel, &fstar, x, BivariateMode::Planar, &kinks)?;
            probes.push(Probe::new(format!("x={x:e};sqrt_profile"), lhs, sqrt));
            probes.push(Probe::info(format!("x={x:e};planar"), lhs, planar));
        }
        Ok(Trial { probes, inputs: json!({ "f_star": fstar }), ..Default::default() })
    })?;
    res.notes.push("binding check uses K*(t) = k(t^{1/2}); rows marked info use the planar rearrangement".into());
    let planar_worst = res
        .rows
        .iter()
        .filter(|r| r.verdict == "info")
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    if planar_worst.is_finite() {
        res.metrics.insert("planar_worst_slack".into(), planar_worst);
    }
    Ok(res)
}

fn point_count(sc: &Scenario, default: usize) -> usize {
    sc.inputs.points.unwrap_or(default)
}

fn sandwich(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::Sandwich;
    let spec = sc.inputs.kernel.clone().unwrap_or(KernelSpec::Riesz { exponent: 0.75 });
    if spec != (KernelSpec::Riesz { exponent: 0.75 }) {
        return Err(HarnessError::input("the sandwich bounds are stated for (x² + y²)^{-3/4} only"));
    }
    let kernel = spec.to_kernel()?;
    let c = 2f64.powf(0.75);
    let n = point_count(sc, 10_000);
    let mut res = run_trials(suite, sc, sc.tolerance.unwrap_or(suite.default_tolerance()), |rng| {
        let mut probes = Vec::with_capacity(2 * n + probe_count(sc));
        for _ in 0..n {
            let (x, y) = (unit_open(rng, 10.0), unit_open(rng, 10.0));
            let k = kernel.eval(x, y);
            let s = (x + y).powf(-1.5);
            probes.push(Probe::new(format!("lower@{x:e};{y:e}"), s / c, k));
            probes.push(Probe::new(format!("upper@{x:e};{y:e}"), k, c * s));
        }
        let mut gap: f64 = 0.0;
        for _ in 0..probe_count(sc) {
            let x = unit_open(rng, 10.0);
            let k = kernel.eval(x, x);
            let upper = c * (2.0 * x).powf(-1.5);
            gap = gap.max((upper - k).abs() / k);
            probes.push(Probe::new(format!("equality@{x:e}"), k, upper));
        }
        Ok(Trial {
            probes,
            inputs: json!({ "points": n }),
            metrics: vec![("upper_equality_gap".into(), gap)],
        })
    })?;
    res.notes.push("equality rows probe the upper bound on the diagonal x = y".into());
    Ok(res)
}

fn tighter_bound(sc: &Scenario) -> Result<SuiteResult> {
    let suite = Suite::TighterBound;
    let fixed = match (&sc.inputs.kernel, &sc.inputs.profile) {
        (None, None) => None,
        _ => Some(decreasing_profile(&radial_profile_input(sc)?)?),
    };
    let n = point_count(sc, 1000);
    run_trials(suite, sc, sc.tolerance.unwrap_or(suite.default_tolerance()), |rng| {
        let (k, inputs) = match &fixed {
            Some(k) => (k.clone(), Value::Null),
            None => {
                let s = random_kernel_profile(rng, slab_count(sc))?;
                (step_profile(&s), json!({ "profile": s }))
            }
        };
        let mut probes = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, y) = (unit_open(rng, 10.0), unit_open(rng, 10.0));
            probes.push(Probe::new(format!("{x:e};{y:e}"), k.eval(x.hypot(y)), k.eval((x * y).sqrt())));
        }
        Ok(Trial { probes, inputs, ..Default::default() })
    })
}
