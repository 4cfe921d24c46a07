//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use orlicz_lorentz::conditions::kantorovich_inner_norm;
use orlicz_lorentz::funcspace::{AnalyticFunction, Func, QuadratureSpec};
use orlicz_lorentz::orlicz::{gauge_norm_with, NFunction, Weight};
use orlicz_lorentz::rearrange::{decreasing_rearrangement, distribution, radial_profile};
use orlicz_lorentz::scalar::normalized_slack;
use orlicz_lorentz_harness::generate::{random_step, trial_rng};
use orlicz_lorentz_harness::inputs::{KernelSpec, ProfileSpec};
use orlicz_lorentz_harness::scenario::Overrides;
use orlicz_lorentz_harness::{run_scenario, verify_inequality_suite, Scenario, Suite, SuiteResult};
use rand::RngExt;
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn suite(suite: Suite, seed: u64, trials: usize, edit: impl FnOnce(&mut Scenario)) -> Result<SuiteResult, String> {
    let mut sc = Scenario::new(suite.as_str(), suite.into());
    sc.seed = seed;
    sc.trials = trials;
    edit(&mut sc);
    verify_inequality_suite(suite, &sc).map_err(|e| e.to_string())
}

fn suite_passes(r: &SuiteResult, probes: usize) -> Result<(), String> {
    ensure(r.pass, format!("worst slack {:e} below -{:e}", r.worst_slack, r.tolerance))?;
    ensure(r.gap.count >= probes, format!("only {} probes evaluated", r.gap.count))
}

fn rearrangement_exactness() -> Check {
    let mut rng = trial_rng(101, 0);
    let mut worst_hl: f64 = f64::INFINITY;
    for i in 0..500 {
        let n = rng.random_range(1..=40);
        let f = random_step(&mut rng, n).map_err(|e| e.to_string())?;
        let n = rng.random_range(1..=40);
        let g = random_step(&mut rng, n).map_err(|e| e.to_string())?;
        let fs = decreasing_rearrangement(&f).star;
        ensure(fs.is_nonincreasing(), format!("f* not nonincreasing for step {i}"))?;
        let scale = f.support_end().max(1.0);
        let mut levels = f.values().to_vec();
        levels.push(rng.random_range(0.0..4.0));
        for lam in levels {
            let (a, b) = (distribution(&f, lam).unwrap(), distribution(&fs, lam).unwrap());
            ensure((a - b).abs() <= 1e-12 * scale, format!("step {i}: μ_f({lam}) = {a}, μ_f*({lam}) = {b}"))?;
        }
        let gs = decreasing_rearrangement(&g).star;
        let slack = normalized_slack(f.product(&g).integral(), fs.product(&gs).integral());
        worst_hl = worst_hl.min(slack);
        ensure(slack >= -1e-12, format!("step {i}: Hardy–Littlewood slack {slack:e}"))?;
    }
    Ok(format!("500 steps, worst Hardy–Littlewood slack {worst_hl:e}"))
}

fn oneil_suite() -> Check {
    let r = suite(Suite::Oneil2, 2, 200, |_| {})?;
    suite_passes(&r, 200 * 20)?;
    let fixture = suite(Suite::Oneil2, 0, 1, |sc| {
        let chi = orlicz_lorentz::StepFunction64::indicator(0.0, 1.0).unwrap();
        sc.inputs.f = Some(chi.clone());
        sc.inputs.g = Some(chi);
        sc.grids.t = Some(vec![1.0]);
    })?;
    let row = &fixture.rows[0];
    ensure(row.lhs == 0.75 && row.rhs == 1.0, format!("fixture gives ({}, {})", row.lhs, row.rhs))?;
    Ok(format!("worst slack {:e}; fixture (3/4, 1) exact", r.worst_slack))
}

fn hlp_chain() -> Check {
    let r = suite(Suite::HlpChain, 2, 200, |_| {})?;
    suite_passes(&r, 200 * 20 * 3)?;
    Ok(format!("worst slack {:e}", r.worst_slack))
}

fn majorization() -> Check {
    let r = suite(Suite::Majorization16, 3, 100, |sc| sc.inputs.grid = Some(64))?;
    suite_passes(&r, 100 * 20)?;
    Ok(format!("worst slack {:e}", r.worst_slack))
}

fn luxemburg_vs_lp() -> Check {
    let mut rng = trial_rng(105, 0);
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = rng.random_range(1..=30);
        let f = random_step(&mut rng, n).map_err(|e| e.to_string())?;
        let n = rng.random_range(1..=30);
        let u = random_step(&mut rng, n).map_err(|e| e.to_string())?;
        let p = rng.random_range(1.1..=4.0);
        let phi = NFunction::power(p).unwrap();
        let got = gauge_norm_with(&Func::Step(f.clone()), &phi, &Weight::step(u.clone()), &q, 1e-10)
            .map_err(|e| e.to_string())?;
        let want = f.combine(&u, |a, w| a.powf(p) * w).unwrap().integral().powf(1.0 / p);
        let err = if want == 0.0 { got.abs() } else { (got - want).abs() / want };
        worst = worst.max(err);
        ensure(err <= 1e-8, format!("triple {i}: p = {p}, gauge {got} vs {want}"))?;
    }
    Ok(format!("200 triples, worst relative error {worst:e}"))
}

/// `k*(t) = inf{λ : ω_n r(λ)^n ≤ t}` by bisection, `r(λ)` the largest `s` with `k(s) > λ`.
fn distribution_oracle(k: &dyn Fn(f64) -> f64, n: u32, t: f64) -> f64 {
    let omega = if n == 1 { 2.0 } else { std::f64::consts::PI };
    let radius = |lam: f64| {
        let (mut lo, mut hi) = (0.0, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if k(mid) > lam {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let (mut lo, mut hi) = (0.0, k(0.0) + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if omega * radius(mid).powi(n as i32) <= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn radial_formula() -> Check {
    let exp = AnalyticFunction::exp_decay(1.0_f64);
    let chi = AnalyticFunction::new(|s: f64| if s < 1.0 { 1.0 } else { 0.0 }).decreasing().with_kinks(vec![1.0]);
    let cases: [(&str, &AnalyticFunction<f64>, &dyn Fn(f64) -> f64); 2] =
        [("exp", &exp, &|s: f64| (-s).exp()), ("indicator", &chi, &|s: f64| if s < 1.0 { 1.0 } else { 0.0 })];
    let mut worst: f64 = 0.0;
    for (name, k, raw) in cases {
        for n in [1u32, 2] {
            for i in 0..50 {
                let t = 0.05 + 0.13 * i as f64;
                let got = radial_profile(k, n, t).map_err(|e| e.to_string())?;
                let want = distribution_oracle(raw, n, t);
                // The oracle only approaches zero beyond the support.
                let err = (got - want).abs() / want.max(1e-12);
                worst = worst.max(err);
                ensure(err <= 1e-6, format!("{name}, n = {n}, t = {t}: {got} vs {want}"))?;
            }
        }
    }
    Ok(format!("200 probes, worst relative error {worst:e}"))
}

struct ExamplesRun {
    dir: tempfile::TempDir,
}

impl ExamplesRun {
    fn new() -> Result<Self, String> {
        let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper_examples.json");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary = run_scenario(&config, dir.path(), &Overrides::default()).map_err(|e| e.to_string())?;
        for e in &summary.scenarios {
            if let Some(err) = &e.error {
                return Err(format!("{}: {err}", e.name));
            }
        }
        Ok(Self { dir })
    }

    fn report(&self, name: &str) -> Result<Value, String> {
        let text = fs::read_to_string(self.dir.path().join(format!("{name}.json"))).map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }

    fn csvs(&self) -> Result<Vec<(String, Vec<u8>)>, String> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.dir.path()).map_err(|e| e.to_string())? {
            let p = entry.map_err(|e| e.to_string())?.path();
            if p.extension().is_some_and(|x| x == "csv") {
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                out.push((name, fs::read(&p).map_err(|e| e.to_string())?));
            }
        }
        out.sort();
        Ok(out)
    }
}

fn find_report<'a>(v: &'a Value, id: &str) -> Option<&'a Value> {
    if v["condition_id"] == id {
        return Some(v);
    }
    v["sub_reports"].as_array()?.iter().find_map(|s| find_report(s, id))
}

fn kernel_triples(v: &Value) -> f64 {
    let own = match v["condition_id"].as_str() {
        Some(id) if id.ends_with(".kernel") => v["metrics"]["triples"].as_f64().unwrap_or(0.0),
        _ => 0.0,
    };
    own + v["sub_reports"].as_array().map_or(0.0, |s| s.iter().map(kernel_triples).sum())
}

fn growth(run: &ExamplesRun) -> Check {
    let random = run.report("growth_random_profiles")?;
    ensure(random["observed"] == "holds_estimated", format!("random profiles: {}", random["observed"]))?;
    let triples = kernel_triples(&random["outcome"]);
    ensure(triples >= 100.0 * 1000.0, format!("only {triples} triples checked"))?;
    let sq = run.report("growth_squared_difference")?;
    ensure(sq["observed"] == "violated_witness", format!("(x - y)²: {}", sq["observed"]))?;
    Ok(format!("{triples} triples hold; (x - y)² violated_witness"))
}

fn sandwich(run: &ExamplesRun) -> Check {
    let r = run.report("sandwich")?;
    let o = &r["outcome"];
    ensure(o["pass"] == true, format!("worst slack {}", o["worst_slack"]))?;
    let gap = o["metrics"]["upper_equality_gap"].as_f64().ok_or("no upper_equality_gap")?;
    ensure(gap <= 1e-12, format!("equality gap {gap:e}"))?;
    ensure(o["gap"]["count"].as_u64() >= Some(2 * 10_000), "fewer than 10⁴ points")?;
    Ok(format!("worst slack {}, equality gap {gap:e}", o["worst_slack"]))
}

fn kantorovich(run: &ExamplesRun) -> Check {
    let k = KernelSpec::Riesz { exponent: 0.75 }.to_kernel().map_err(|e| e.to_string())?;
    for x in [1e-3, 0.01, 0.3, 1.0, 7.0, 100.0] {
        let n = kantorovich_inner_norm(&k, 2.0, x).map_err(|e| e.to_string())?;
        ensure((n * x - 1.0).abs() <= 1e-8, format!("N({x}) · x = {}", n * x))?;
    }
    let r = run.report("kantorovich")?;
    ensure(r["observed"] == "divergent_term", format!("verdict {}", r["observed"]))?;
    let metrics = r["outcome"]["metrics"].as_object().ok_or("no metrics")?;
    let ratios: Vec<f64> =
        metrics.iter().filter(|(k, _)| k.starts_with("ratio_")).filter_map(|(_, v)| v.as_f64()).collect();
    ensure(ratios.len() == 7, format!("{} ratios", ratios.len()))?;
    for r in &ratios {
        ensure((r - 2.0).abs() <= 0.2, format!("partial-integral ratio {r}"))?;
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    Ok(format!("N(x) · x = 1; ratios in [{lo:.4}, {hi:.4}]; divergent_term"))
}

fn hls_fixture(run: &ExamplesRun) -> Check {
    let r = run.report("hls_v_prime")?;
    let v = find_report(&r["outcome"], "family_v.first").ok_or("no family_v.first report")?;
    let c = v["best_constant"].as_f64().ok_or("best constant not finite")?;
    ensure((c - 16.0 / 15.0).abs() <= 1e-3, format!("sup = {c}"))?;
    Ok(format!("sup = {c}"))
}

fn best_constant(run: &ExamplesRun) -> Check {
    let r = run.report("hardy_best_constant")?;
    let est = r["outcome"]["estimate"].as_f64().ok_or("no estimate")?;
    ensure((1.8..2.0).contains(&est), format!("estimate {est}"))?;
    let ratios: Vec<f64> = r["outcome"]["ratios"].as_array().ok_or("no ratios")?.iter().filter_map(Value::as_f64).collect();
    ensure(ratios.len() == 3 && ratios.windows(2).all(|w| w[1] > w[0]), format!("ratios {ratios:?}"))?;
    Ok(format!("estimate {est:.4}, ratios {ratios:.4?}"))
}

fn exp_kernel_suites() -> Check {
    let exp = ProfileSpec::Exp { rate: 1.0 };
    let t = suite(Suite::TighterBound, 12, 100, |sc| {
        sc.inputs.profile = Some(exp.clone());
        sc.tolerance = Some(1e-6);
    })?;
    suite_passes(&t, 100 * 1000)?;
    let o = suite(Suite::OneilKernelBound, 12, 100, |sc| {
        sc.inputs.profile = Some(exp.clone());
        sc.tolerance = Some(1e-6);
    })?;
    suite_passes(&o, 100 * 20)?;
    Ok(format!("tighter_bound worst slack {:e}, oneil_kernel_bound worst slack {:e}", t.worst_slack, o.worst_slack))
}

fn determinism(first: &ExamplesRun) -> Check {
    let second = ExamplesRun::new()?;
    let (a, b) = (first.csvs()?, second.csvs()?);
    ensure(!a.is_empty(), "no CSVs written")?;
    ensure(a.len() == b.len(), "different CSV sets")?;
    for ((na, ca), (nb, cb)) in a.iter().zip(&b) {
        ensure(na == nb && ca == cb, format!("{na} differs between runs"))?;
    }
    Ok(format!("{} CSVs byte-identical", a.len()))
}

fn main() -> ExitCode {
    let run = ExamplesRun::new();
    let with_run = |f: fn(&ExamplesRun) -> Check| -> Check {
        match &run {
            Ok(r) => f(r),
            Err(e) => Err(format!("paper_examples run failed: {e}")),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("rearrangement exactness", Box::new(rearrangement_exactness)),
        ("oneil2 suite and fixture", Box::new(oneil_suite)),
        ("hlp chain", Box::new(hlp_chain)),
        ("majorization", Box::new(majorization)),
        ("luxemburg vs p-norm", Box::new(luxemburg_vs_lp)),
        ("radial profile", Box::new(radial_formula)),
        ("growth condition", Box::new(move || with_run(growth))),
        ("sandwich and equality", Box::new(move || with_run(sandwich))),
        ("kantorovich divergence", Box::new(move || with_run(kantorovich))),
        ("hls fixture", Box::new(move || with_run(hls_fixture))),
        ("hardy best constant", Box::new(move || with_run(best_constant))),
        ("exp kernel suites", Box::new(exp_kernel_suites)),
        ("determinism", Box::new(move || with_run(determinism))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let secs = || start.elapsed().as_secs_f64();
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({:.1}s)", i + 1, secs()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({:.1}s)", i + 1, secs());
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
