//! Scenario configs: parsing, dispatch to suites and checkers, report files.

use std::fs;
use std::path::Path;

use orlicz_lorentz::conditions::{
    check_growth, check_power_conditions, check_theorem10, check_theorem12, check_theorem2, check_theorem4_orlicz,
    check_theorem7, kantorovich_probe, ConditionGrids, ConditionReport, PointStatus, PowerParams, Verdict,
    WeightedSetup,
};
use orlicz_lorentz::funcspace::AnalyticKernel;
use orlicz_lorentz::operators::build_hardy_kernels;
use orlicz_lorentz::scalar::normalized_slack;
use orlicz_lorentz::{Kernel64, NFunction64, Weight64};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::best_constant::{estimate_best_constant, BestConstant};
use crate::error::{HarnessError, Result};
use crate::generate::{random_kernel_profile, trial_rng};
use crate::inputs::{require, step_profile, Inputs, KernelSpec, WeightSpec};
use crate::suites::{rows_to_csv, verify_inequality_suite, Row, Suite, SuiteResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteId {
    Oneil2,
    HlpChain,
    Majorization16,
    OneilKernelBound,
    Sandwich,
    TighterBound,
    /// Growth condition on a kernel, or on `k(x+y)` and its `M₁`, `M₂` for random `k`.
    Growth,
    Kantorovich,
    /// Power-case conditions on a profile `k*`.
    PowerConditions,
    /// Orlicz conditions on a profile `k*`.
    OrliczPotential,
    HardyType,
    Averaging,
    DualHardy,
    PowerDual,
    BestConstant,
}

impl SuiteId {
    pub fn as_str(self) -> &'static str {
        match self.inequality() {
            Some(s) => s.as_str(),
            None => match self {
                SuiteId::Growth => "growth",
                SuiteId::Kantorovich => "kantorovich",
                SuiteId::PowerConditions => "power_conditions",
                SuiteId::OrliczPotential => "orlicz_potential",
                SuiteId::HardyType => "hardy_type",
                SuiteId::Averaging => "averaging",
                SuiteId::DualHardy => "dual_hardy",
                SuiteId::PowerDual => "power_dual",
                SuiteId::BestConstant => "best_constant",
                _ => unreachable!(),
            },
        }
    }

    pub fn inequality(self) -> Option<Suite> {
        Some(match self {
            SuiteId::Oneil2 => Suite::Oneil2,
            SuiteId::HlpChain => Suite::HlpChain,
            SuiteId::Majorization16 => Suite::Majorization16,
            SuiteId::OneilKernelBound => Suite::OneilKernelBound,
            SuiteId::Sandwich => Suite::Sandwich,
            SuiteId::TighterBound => Suite::TighterBound,
            _ => return None,
        })
    }
}

impl From<Suite> for SuiteId {
    fn from(s: Suite) -> Self {
        match s {
            Suite::Oneil2 => SuiteId::Oneil2,
            Suite::HlpChain => SuiteId::HlpChain,
            Suite::Majorization16 => SuiteId::Majorization16,
            Suite::OneilKernelBound => SuiteId::OneilKernelBound,
            Suite::Sandwich => SuiteId::Sandwich,
            Suite::TighterBound => SuiteId::TighterBound,
        }
    }
}

/// What the scenario is expected to observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Divergent,
    Violated,
}

/// Probe grids. Unset grids fall back to each suite's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Random probes per trial when `t` or `x` is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub suite: SuiteId,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub expect: Expect,
    /// Overrides the suite tolerance on normalized slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, suite: SuiteId) -> Self {
        Self {
            name: name.into(),
            suite,
            inputs: Inputs::default(),
            seed: 0,
            trials: 1,
            grids: Grids::default(),
            expect: Expect::Pass,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

/// Command-line overrides applied to every scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub probes: Option<usize>,
    pub tolerance: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, sc: &mut Scenario) {
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        if let Some(t) = self.trials {
            sc.trials = t;
        }
        if let Some(p) = self.probes {
            sc.grids.probes = Some(p);
        }
        if let Some(t) = self.tolerance {
            sc.tolerance = Some(t);
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) && !name.starts_with('.')
}

/// Parses a config, filling default names `<suite>_<index>`.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg: Config = serde_json::from_str(text).map_err(|e| HarnessError::parse(&e))?;
    let mut seen = std::collections::BTreeSet::new();
    for (i, sc) in cfg.scenarios.iter_mut().enumerate() {
        if sc.name.is_empty() {
            sc.name = format!("{}_{i}", sc.suite.as_str());
        }
        if !valid_name(&sc.name) || sc.name == "summary" {
            return Err(HarnessError::arg(format!(
                "scenario name {:?} must be nonempty, use only [A-Za-z0-9_.-] and not be \"summary\"",
                sc.name
            )));
        }
        if !seen.insert(sc.name.clone()) {
            return Err(HarnessError::arg(format!("duplicate scenario name {:?}", sc.name)));
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Suite(SuiteResult),
    Check(ConditionReport),
    BestConstant(BestConstant),
}

impl Outcome {
    /// `pass`, `violated` or the checker verdict.
    pub fn observed(&self) -> &'static str {
        match self {
            Outcome::Suite(r) => {
                if r.pass {
                    "pass"
                } else {
                    "violated"
                }
            }
            Outcome::Check(r) => r.verdict.as_str(),
            Outcome::BestConstant(_) => "pass",
        }
    }

    pub fn meets(&self, expect: Expect) -> bool {
        match (self, expect) {
            (Outcome::Suite(r), Expect::Pass) => r.pass,
            (Outcome::Suite(r), Expect::Violated) => !r.pass,
            (Outcome::Suite(_), Expect::Divergent) => false,
            (Outcome::Check(r), Expect::Pass) => {
                matches!(r.verdict, Verdict::HoldsEstimated | Verdict::InconclusiveGrowth)
            }
            (Outcome::Check(r), Expect::Divergent) => r.verdict == Verdict::DivergentTerm,
            (Outcome::Check(r), Expect::Violated) => r.verdict == Verdict::ViolatedWitness,
            (Outcome::BestConstant(_), e) => e == Expect::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub observed: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

/// Runs one scenario; runtime failures become a report with `ok = false`.
pub fn run_scenario_spec(sc: &Scenario) -> ScenarioReport {
    match execute(sc) {
        Ok((outcome, rows)) => ScenarioReport {
            scenario: sc.clone(),
            observed: outcome.observed().into(),
            ok: outcome.meets(sc.expect),
            error: None,
            outcome: Some(outcome),
            rows,
        },
        Err(e) => ScenarioReport {
            scenario: sc.clone(),
            observed: "error".into(),
            ok: false,
            error: Some(e.to_string()),
            outcome: None,
            rows: Vec::new(),
        },
    }
}

pub fn execute(sc: &Scenario) -> Result<(Outcome, Vec<Row>)> {
    if let Some(s) = sc.suite.inequality() {
        let mut r = verify_inequality_suite(s, sc)?;
        let rows = std::mem::take(&mut r.rows);
        return Ok((Outcome::Suite(r), rows));
    }
    if sc.suite == SuiteId::BestConstant {
        let what = "best_constant";
        let op = require(&sc.inputs.operator, "operator", what)?.to_operator()?;
        let rho1 = require(&sc.inputs.rho1, "rho1", what)?;
        let rho2 = sc.inputs.rho2.as_ref().unwrap_or(rho1);
        let family = require(&sc.inputs.family, "family", what)?;
        let r = estimate_best_constant(&op, rho1, rho2, family)?;
        let rows = r
            .ratios
            .iter()
            .enumerate()
            .map(|(i, q)| Row {
                scenario: sc.name.clone(),
                trial: 0,
                probe: format!("member_{i}"),
                lhs: q.unwrap_or(f64::NAN),
                rhs: r.estimate,
                slack: q.map_or(f64::NAN, |q| normalized_slack(q, r.estimate)),
                verdict: if q.is_some() { "finite" } else { "skipped" }.into(),
            })
            .collect();
        return Ok((Outcome::BestConstant(r), rows));
    }
    let report = run_checker(sc)?;
    let mut rows = Vec::new();
    let summary_only = sc.suite == SuiteId::Growth;
    report_rows(&report, &sc.name, summary_only, &mut rows);
    Ok((Outcome::Check(report), rows))
}

fn status_str(s: PointStatus) -> &'static str {
    match s {
        PointStatus::Finite => "finite",
        PointStatus::Divergent => "divergent",
        PointStatus::Violated => "violated",
    }
}

fn trial_of(id: &str) -> usize {
    id.split('.')
        .find_map(|part| part.strip_prefix("trial_").and_then(|n| n.parse().ok()))
        .unwrap_or(0)
}

/// One row per grid point, or one per leaf report when `summary_only`.
fn report_rows(r: &ConditionReport, scenario: &str, summary_only: bool, out: &mut Vec<Row>) {
    let trial = trial_of(&r.condition_id);
    if summary_only && r.sub_reports.is_empty() {
        out.push(Row {
            scenario: scenario.into(),
            trial,
            probe: r.condition_id.clone(),
            lhs: r.best_constant,
            rhs: 0.0,
            slack: -r.best_constant,
            verdict: r.verdict.as_str().into(),
        });
    } else if !summary_only {
        for p in &r.constants {
            let coords: Vec<String> = p.coords.iter().map(|c| format!("{c:e}")).collect();
            let slack = if p.constant.is_finite() && r.best_constant.is_finite() {
                normalized_slack(p.constant, r.best_constant)
            } else {
                f64::NAN
            };
            out.push(Row {
                scenario: scenario.into(),
                trial,
                probe: format!("{}@{}", r.condition_id, coords.join(";")),
                lhs: p.constant,
                rhs: r.best_constant,
                slack,
                verdict: status_str(p.status).into(),
            });
        }
    }
    for s in &r.sub_reports {
        report_rows(s, scenario, summary_only, out);
    }
}

fn grids(sc: &Scenario) -> ConditionGrids {
    let d = ConditionGrids::default();
    ConditionGrids {
        lambda: sc.grids.lambda.clone().unwrap_or(d.lambda),
        x: sc.grids.x.clone().unwrap_or(d.x),
    }
}

fn weight(w: &Option<WeightSpec>) -> Result<Weight64> {
    w.clone().unwrap_or_default().to_weight()
}

fn nfunction<'a>(x: &'a Option<NFunction64>, name: &str, what: &str) -> Result<&'a NFunction64> {
    require(x, name, what)
}

fn kernel(sc: &Scenario, what: &str) -> Result<Kernel64> {
    require(&sc.inputs.kernel, "kernel", what)?.to_kernel()
}

fn params(sc: &Scenario, what: &str) -> Result<PowerParams> {
    let p = *require(&sc.inputs.params, "params", what)?;
    p.validate()?;
    Ok(p)
}

fn run_checker(sc: &Scenario) -> Result<ConditionReport> {
    let i = &sc.inputs;
    let what = sc.suite.as_str();
    Ok(match sc.suite {
        SuiteId::Growth => growth(sc)?,
        SuiteId::Kantorovich => {
            let k = match &i.kernel {
                Some(k) => k.to_kernel()?,
                None => KernelSpec::Riesz { exponent: 0.75 }.to_kernel()?,
            };
            let p = i.params.unwrap_or(PowerParams { p: 2.0, q: 2.0, r: None });
            let eps = sc.grids.eps.clone().unwrap_or_else(|| (3..=10).map(|k| 0.5f64.powi(k)).collect());
            kantorovich_probe(&k, &p, &eps)?
        }
        SuiteId::PowerConditions => {
            let k = require(&i.profile, "profile", what)?.to_func()?;
            check_power_conditions(&k, &params(sc, what)?, &grids(sc).x)?
        }
        SuiteId::OrliczPotential => {
            let k = require(&i.profile, "profile", what)?.to_func()?;
            check_theorem4_orlicz(&k, nfunction(&i.phi1, "phi1", what)?, nfunction(&i.phi2, "phi2", what)?, &grids(sc))?
        }
        SuiteId::HardyType => {
            let setup = WeightedSetup {
                phi1: nfunction(&i.phi1, "phi1", what)?.clone(),
                phi2: nfunction(&i.phi2, "phi2", what)?.clone(),
                w: weight(&i.w)?,
                t_w: weight(&i.t_w)?,
                u: weight(&i.u)?,
                v: weight(&i.v)?,
                kernel: kernel(sc, what)?,
            };
            check_theorem2(&setup, &grids(sc))?
        }
        SuiteId::Averaging => check_theorem7(
            nfunction(&i.phi, "phi", what)?,
            &weight(&i.u)?,
            &grids(sc),
            i.form.unwrap_or_default(),
        )?,
        SuiteId::DualHardy => check_theorem10(
            &kernel(sc, what)?,
            nfunction(&i.phi1, "phi1", what)?,
            nfunction(&i.phi2, "phi2", what)?,
            &weight(&i.u1)?,
            &weight(&i.u2)?,
            &grids(sc),
        )?,
        SuiteId::PowerDual => check_theorem12(
            &kernel(sc, what)?,
            &params(sc, what)?,
            &weight(&i.u1)?,
            &weight(&i.u2)?,
            &grids(sc).x,
        )?,
        _ => unreachable!("suites and best_constant are dispatched before checkers"),
    })
}

/// Ordered triples `y < z < x`, log-uniform on `[1e-3, 1e3]`.
fn random_triples(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = [0.0; 3];
        for x in &mut v {
            *x = 10f64.powf(rng.random_range(-3.0..3.0));
        }
        v.sort_by(f64::total_cmp);
        if v[0] < v[1] && v[1] < v[2] {
            out.push((v[0], v[1], v[2]));
        }
    }
    out
}

/// Drops per-triple constants; the worst triple stays as the witness.
fn compact(mut r: ConditionReport) -> ConditionReport {
    let n = r.constants.len();
    r.constants.clear();
    r.with_metric("triples", n as f64)
}

/// With a kernel: the growth condition on random triples. Without: per
/// trial a random nonincreasing step `k`, checked on `k(x+y)` and on the
/// `M₁`, `M₂` built from it.
fn growth(sc: &Scenario) -> Result<ConditionReport> {
    let n = sc.inputs.points.unwrap_or(1000);
    let fixed = match &sc.inputs.kernel {
        Some(k) => Some(k.to_kernel()?),
        None => None,
    };
    let slabs = sc.inputs.slabs.unwrap_or(8);
    let trials: Vec<Result<ConditionReport>> = (0..sc.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(sc.seed, t as u64);
            let id = format!("growth.trial_{t}");
            match &fixed {
                Some(k) => {
                    let triples = random_triples(&mut rng, n);
                    Ok(compact(check_growth(&format!("{id}.kernel"), &|x, y| k.eval(x, y), &triples)))
                }
                None => {
                    let profile = random_kernel_profile(&mut rng, slabs)?;
                    let l: Kernel64 = AnalyticKernel::sum_of_arguments(step_profile(&profile)).into();
                    let hk = build_hardy_kernels(&l)?;
                    let triples = random_triples(&mut rng, n);
                    let kids = vec![
                        compact(check_growth(&format!("{id}.kernel"), &|x, y| l.eval(x, y), &triples)),
                        compact(check_growth(&format!("{id}.m1"), &|x, y| hk.m1(x, y), &triples)),
                        compact(check_growth(&format!("{id}.m2"), &|x, y| hk.m2(x, y), &triples)),
                    ];
                    Ok(ConditionReport::combine(id, kids))
                }
            }
        })
        .collect();
    let kids = trials.into_iter().collect::<Result<Vec<_>>>()?;
    let mut r = ConditionReport::combine("growth", kids);
    r.notes.push(format!("{n} random ordered triples per trial on [1e-3, 1e3]"));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub name: String,
    pub suite: SuiteId,
    pub expect: Expect,
    pub observed: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub ok: bool,
    pub scenarios: Vec<SummaryEntry>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

/// Writes `<name>.json` and `<name>.csv` into `out`.
pub fn write_report(report: &ScenarioReport, out: &Path) -> Result<()> {
    let name = &report.scenario.name;
    write(&out.join(format!("{name}.json")), &(serde_json::to_string_pretty(report)? + "\n"))?;
    write(&out.join(format!("{name}.csv")), &rows_to_csv(&report.rows))
}

/// Runs every scenario of a parsed config, writing reports and `summary.json` into `out`.
pub fn run_config(cfg: &Config, out: &Path, overrides: &Overrides) -> Result<RunSummary> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(format!("creating {}", out.display()), e))?;
    let mut entries = Vec::with_capacity(cfg.scenarios.len());
    for sc in &cfg.scenarios {
        let mut sc = sc.clone();
        overrides.apply(&mut sc);
        let report = run_scenario_spec(&sc);
        write_report(&report, out)?;
        entries.push(SummaryEntry {
            name: sc.name.clone(),
            suite: sc.suite,
            expect: sc.expect,
            observed: report.observed.clone(),
            ok: report.ok,
            error: report.error.clone(),
        });
    }
    let summary = RunSummary { ok: entries.iter().all(|e| e.ok), scenarios: entries };
    write(&out.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(summary)
}

/// Reads and parses `path` before touching `out`, so a bad config writes nothing.
pub fn run_scenario(path: &Path, out: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let text =
        fs::read_to_string(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    let cfg = parse_config(&text)?;
    run_config(&cfg, out, overrides)
}
