use crate::error::{Error, Result};
use crate::funcspace::{Func, Kernel, Monotonicity, TailHint};
use crate::operators::{build_hardy_kernels, hardy_i2};
use crate::orlicz::{NFunction, Weight};
use crate::scalar::log_grid;

use super::growth::{check_growth, grid_triples};
use super::report::{ConditionReport, Outcome, Verdict, Witness};
use super::solve::{integral, power_exponent, required_constant, scalar_required, tail};
use super::{x_axes, ConditionGrids, PowerParams};

/// `k*` with its primitives `Ik*` and `I₂k*`.
struct Profile<'a> {
    k: &'a Func<f64>,
    breaks: Vec<f64>,
    zero: bool,
    i2_table: Option<HermiteTable>,
}

/// Cubic Hermite table of `I₂k*` with derivative `Ik*` on log-spaced nodes.
struct HermiteTable {
    y: Vec<f64>,
    v: Vec<f64>,
    d: Vec<f64>,
}

impl HermiteTable {
    const LO: f64 = 1e-30;
    const HI: f64 = 1e10;
    const PER_DECADE: usize = 64;

    fn build(prof: &Profile<'_>) -> Result<Self> {
        let n = 40 * Self::PER_DECADE;
        let mut y = log_grid(Self::LO, Self::HI, n + 1);
        y.extend(prof.breaks.iter().copied().filter(|b| *b > Self::LO && *b < Self::HI));
        y.sort_by(f64::total_cmp);
        y.dedup();
        let d: Vec<f64> = y.iter().map(|t| prof.i1(*t)).collect();
        let mut v = Vec::with_capacity(y.len());
        let mut acc = integral(&|s| prof.i1(s), 0.0, y[0], &[])?;
        v.push(acc);
        for w in y.windows(2) {
            acc += integral(&|s| prof.i1(s), w[0], w[1], &[])?;
            v.push(acc);
        }
        Ok(Self { y, v, d })
    }

    fn eval(&self, t: f64) -> Option<f64> {
        if t > 0.0 && t < self.y[0] && self.v[0] > 0.0 && self.v[1] > self.v[0] {
            // Below the table: continue the local power law of the first cell.
            let a = (self.v[1] / self.v[0]).ln() / (self.y[1] / self.y[0]).ln();
            return Some(self.v[0] * (t / self.y[0]).powf(a));
        }
        if !(t >= self.y[0] && t <= *self.y.last().unwrap()) {
            return None;
        }
        let j = self.y.partition_point(|s| *s <= t).clamp(1, self.y.len() - 1);
        let (a, b) = (self.y[j - 1], self.y[j]);
        let h = b - a;
        let s = (t - a) / h;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s), s * (1.0 - s) * (1.0 - s));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        Some(h00 * self.v[j - 1] + h10 * h * self.d[j - 1] + h01 * self.v[j] + h11 * h * self.d[j])
    }
}

impl<'a> Profile<'a> {
    fn new(k: &'a Func<f64>) -> Result<Self> {
        let probes = log_grid(1e-6, 1e6, 61);
        let vals: Vec<f64> = probes.iter().map(|t| k.eval(*t)).collect();
        let ok = match k {
            Func::Step(f) => f.is_nonincreasing(),
            Func::Analytic(a) => {
                a.monotone() != Monotonicity::Increasing && vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
            }
        };
        if !ok {
            return Err(Error::pre("k* must be nonincreasing"));
        }
        let zero = k.is_identically_zero() || (matches!(k, Func::Analytic(_)) && vals.iter().all(|v| *v == 0.0));
        let mut prof = Self {
            k,
            breaks: k.kinks(),
            zero,
            i2_table: None,
        };
        if matches!(k, Func::Analytic(_)) && !zero {
            prof.i2_table = Some(HermiteTable::build(&prof)?);
        }
        Ok(prof)
    }

    fn i1(&self, y: f64) -> f64 {
        match self.k {
            Func::Step(f) => f.cumulative(y),
            Func::Analytic(_) => self
                .k
                .integrate(0.0, y, &super::solve::spec())
                .map(|r| r.value())
                .unwrap_or(f64::NAN),
        }
    }

    fn i2(&self, y: f64) -> f64 {
        match self.k {
            Func::Step(f) => hardy_i2(f, y).unwrap_or(f64::NAN),
            // I₂k*(y) = y·Ik*(y) - ∫₀^y s k*(s) ds.
            Func::Analytic(_) => {
                if let Some(v) = self.i2_table.as_ref().and_then(|t| t.eval(y)) {
                    return v;
                }
                let m = integral(&|s| s * self.k.eval(s), 0.0, y, &self.breaks).unwrap_or(f64::NAN);
                (y * self.i1(y) - m).max(0.0)
            }
        }
    }

    /// `K(x, y) = ∫_y^x k*` for `y < x`.
    fn kernel(&self, x: f64, y: f64) -> f64 {
        (self.i1(x) - self.i1(y)).max(0.0)
    }
}

fn ratio(lhs: f64, rhs: f64) -> Outcome {
    if lhs.is_nan() || lhs == f64::INFINITY {
        return Outcome::Divergent("left-hand integral diverges".into());
    }
    if lhs == 0.0 {
        return Outcome::Finite(0.0);
    }
    if rhs == 0.0 || rhs.is_nan() {
        return Outcome::Divergent("right-hand functional degenerates".into());
    }
    Outcome::Finite(lhs / rhs)
}

fn lambda_x(grids: &ConditionGrids, mut f: impl FnMut(f64, f64) -> Result<Outcome>) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for &lam in &grids.lambda {
        for &x in &grids.x {
            out.push(f(lam, x)?);
        }
    }
    Ok(out)
}

fn power_tail(phi: &NFunction<f64>, exponent: f64) -> Option<TailHint> {
    power_exponent(phi).map(|p| TailHint::Power { exponent: p * exponent })
}

fn zero_family(id: &str) -> ConditionReport {
    ConditionReport::trivial(id, Verdict::HoldsEstimated, 0.0, "k* vanishes identically; every left side is zero")
}

/// The four condition families for potential operators with nonincreasing
/// profile `k*`, using `K(x,y) = ∫_y^x k*`, `Ik*` and `I₂k*`.
///
/// With `α₁ = Φ₂∘Φ₁^{-1}(∫ₓ^∞ Φ₁(λ/y)dy)`, `α₂ = Ψ₁∘Ψ₂^{-1}(∫ₓ^∞ Ψ₂(λ/y)dy)`:
/// - v: `∫₀ˣ Ψ₂(cα₁K/λ) ≤ α₁` and `Ψ₂(cβ₁/λ) ≤ β₁`,
///   `β₁ = Φ₂∘Φ₁^{-1}(∫ₓ^∞ Φ₁((λ/y)(Ik*(y)-Ik*(x)))dy)`;
/// - vi: `∫₀ˣ Φ₁(cα₂K/λ) ≤ α₂` and `xΦ₁(cβ₂/λ) ≤ β₂`,
///   `β₂ = Ψ₁∘Ψ₂^{-1}(∫ₓ^∞ Ψ₂((λ/y)(Ik*(y)-Ik*(x)))dy)`;
/// - vii: `∫₀ˣ Ψ₂(cyα₁/(λI₂k*(y))) ≤ α₁`;
/// - viii: `∫₀ˣ Φ₁(cyα₂/(λIk*(y))) ≤ α₂`.
pub fn check_theorem4_orlicz(
    k_star: &Func<f64>,
    phi1: &NFunction<f64>,
    phi2: &NFunction<f64>,
    grids: &ConditionGrids,
) -> Result<ConditionReport> {
    phi1.validate()?;
    phi2.validate()?;
    grids.validate()?;
    let prof = Profile::new(k_star)?;
    if prof.zero {
        let fams = ["family_v", "family_vi", "family_vii", "family_viii"].map(zero_family).to_vec();
        return Ok(ConditionReport::combine("potential", fams));
    }
    let (psi1, psi2) = (phi1.complementary(), phi2.complementary());
    let kb = &prof.breaks;
    let alpha1 = |lam: f64, x: f64| -> Result<f64> {
        let i = tail(&|y| phi1.eval(lam / y), x, &[], power_tail(phi1, -1.0))?;
        Ok(phi2.eval(phi1.inverse(i)))
    };
    let alpha2 = |lam: f64, x: f64| -> Result<f64> {
        let i = tail(&|y| psi2.eval(lam / y), x, &[], power_tail(&psi2, -1.0))?;
        Ok(psi1.eval(psi2.inverse(i)))
    };
    let beta = |outer: &NFunction<f64>, lam: f64, x: f64| -> Result<f64> {
        let ix = prof.i1(x);
        tail(&|y| outer.eval(lam / y * (prof.i1(y) - ix).max(0.0)), x, kb, None)
    };
    let domain = |f: &NFunction<f64>, x: f64, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        integral(&|y| f.eval(g(y)), 0.0, x, kb)
    };
    let div = |name: &str, lam: f64, x: f64| Outcome::Divergent(format!("{name}({lam:e}, {x:e}) diverges"));

    let v1 = lambda_x(grids, |lam, x| {
        let a = alpha1(lam, x)?;
        if a == f64::INFINITY {
            return Ok(div("alpha1", lam, x));
        }
        let lhs = |c: f64| domain(&psi2, x, &|y| c * a * prof.kernel(x, y) / lam);
        required_constant(&lhs, a, power_exponent(&psi2))
    })?;
    let v2 = lambda_x(grids, |lam, x| {
        let b = phi2.eval(phi1.inverse(beta(phi1, lam, x)?));
        Ok(match b {
            b if b == f64::INFINITY => div("beta1", lam, x),
            b => scalar_required(&psi2, b / lam, b),
        })
    })?;
    let vi1 = lambda_x(grids, |lam, x| {
        let a = alpha2(lam, x)?;
        if a == f64::INFINITY {
            return Ok(div("alpha2", lam, x));
        }
        let lhs = |c: f64| domain(phi1, x, &|y| c * a * prof.kernel(x, y) / lam);
        required_constant(&lhs, a, power_exponent(phi1))
    })?;
    let vi2 = lambda_x(grids, |lam, x| {
        let b = psi1.eval(psi2.inverse(beta(&psi2, lam, x)?));
        Ok(match b {
            b if b == f64::INFINITY => div("beta2", lam, x),
            b => scalar_required(phi1, b / lam, b / x),
        })
    })?;
    let vii = lambda_x(grids, |lam, x| {
        let a = alpha1(lam, x)?;
        if a == f64::INFINITY {
            return Ok(div("alpha3", lam, x));
        }
        let lhs = |c: f64| domain(&psi2, x, &|y| c * y * a / (lam * prof.i2(y)));
        required_constant(&lhs, a, power_exponent(&psi2))
    })?;
    let viii = lambda_x(grids, |lam, x| {
        let a = alpha2(lam, x)?;
        if a == f64::INFINITY {
            return Ok(div("alpha4", lam, x));
        }
        let lhs = |c: f64| domain(phi1, x, &|y| c * y * a / (lam * prof.i1(y)));
        required_constant(&lhs, a, power_exponent(phi1))
    })?;
    let axes = || grids.axes("x");
    let fams = vec![
        ConditionReport::combine(
            "family_v",
            vec![
                ConditionReport::from_grid("family_v.first", axes(), v1),
                ConditionReport::from_grid("family_v.second", axes(), v2),
            ],
        ),
        ConditionReport::combine(
            "family_vi",
            vec![
                ConditionReport::from_grid("family_vi.first", axes(), vi1),
                ConditionReport::from_grid("family_vi.second", axes(), vi2),
            ],
        ),
        ConditionReport::from_grid("family_vii", axes(), vii),
        ConditionReport::from_grid("family_viii", axes(), viii),
    ];
    Ok(ConditionReport::combine("potential", fams).with_note("the α of the I₂k* family is read as α₁, that of the Ik* family as α₂"))
}

/// Power-case conditions as ratios `lhs(x)/rhs(x)` on `x_grid`:
/// - v.first: `∫₀ˣ K^{p′} / x^{p′/q′}`; v.second: `(∫ₓ^∞ ((Ik*(y)-Ik*(x))/y)^q)^{p′/q′} / x^{-1}`;
/// - vi.first: `∫₀ˣ K^q / x^{q′/r}`; vi.second: `(∫ₓ^∞ (…/y)^{p′})^{q/r′} / x^{-1}`;
/// - vii: `∫₀ˣ (y/I₂k*(y))^{p′} / x^{p/q′}`; viii: `∫₀ˣ (y/Ik*(y))^q / x^{q/r}`.
///
/// Checks needing `r` are skipped when it is absent and listed in the notes.
pub fn check_power_conditions(k_star: &Func<f64>, params: &PowerParams, x_grid: &[f64]) -> Result<ConditionReport> {
    params.validate()?;
    ConditionGrids {
        lambda: vec![1.0],
        x: x_grid.to_vec(),
    }
    .validate()?;
    let prof = Profile::new(k_star)?;
    let (p, q, pp, qp) = (params.p, params.q, params.p_prime(), params.q_prime());
    let ids_r = ["family_vi.first", "family_vi.second", "family_viii"];
    let mut skipped = Vec::new();
    if params.r.is_none() {
        skipped.extend(ids_r);
    }
    let all = ["family_v.first", "family_v.second", "family_vi.first", "family_vi.second", "family_vii", "family_viii"];
    if prof.zero {
        let kids = all.iter().filter(|id| !skipped.contains(id)).map(|id| zero_family(id)).collect();
        return Ok(finish_power(ConditionReport::combine("power", kids), &skipped));
    }
    let kb = &prof.breaks;
    let near = |x: f64, e: f64| -> Result<f64> { integral(&|y| prof.kernel(x, y).powf(e), 0.0, x, kb) };
    let far = |x: f64, e: f64| -> Result<f64> {
        let ix = prof.i1(x);
        tail(&|y| ((prof.i1(y) - ix).max(0.0) / y).powf(e), x, kb, None)
    };
    let run = |id: &str, f: &dyn Fn(f64) -> Result<Outcome>| -> Result<ConditionReport> {
        let out = x_grid.iter().map(|x| f(*x)).collect::<Result<Vec<_>>>()?;
        Ok(ConditionReport::from_grid(id, x_axes("x", x_grid), out))
    };
    let mut kids = vec![
        run("family_v.first", &|x| Ok(ratio(near(x, pp)?, x.powf(pp / qp))))?,
        run("family_v.second", &|x| Ok(ratio(far(x, q)?.powf(pp / qp), 1.0 / x)))?,
    ];
    if let (Some(r), Some(rp)) = (params.r, params.r_prime()) {
        kids.push(run("family_vi.first", &|x| Ok(ratio(near(x, q)?, x.powf(qp / r))))?);
        kids.push(run("family_vi.second", &|x| Ok(ratio(far(x, pp)?.powf(q / rp), 1.0 / x)))?);
    }
    kids.push(run("family_vii", &|x| {
        let l = integral(&|y| (y / prof.i2(y)).powf(pp), 0.0, x, kb)?;
        Ok(ratio(l, x.powf(p / qp)))
    })?);
    if let Some(r) = params.r {
        kids.push(run("family_viii", &|x| {
            let l = integral(&|y| (y / prof.i1(y)).powf(q), 0.0, x, kb)?;
            Ok(ratio(l, x.powf(q / r)))
        })?);
    }
    Ok(finish_power(ConditionReport::combine("power", kids), &skipped))
}

fn finish_power(mut r: ConditionReport, skipped: &[&str]) -> ConditionReport {
    r.metrics.insert("skipped_checks".into(), skipped.len() as f64);
    if !skipped.is_empty() {
        r.notes.push(format!("skipped without r: {}", skipped.join(", ")));
    }
    r
}

/// λ-free power-case conditions for `H₁`/`H₂` with weights `u₁`, `u₂`:
/// 1. `∫₀ˣ M₁(x,y)^q u₁^{1-q} ≤ c α₁^{1-q}`, `α₁ = (∫ₓ^∞ U₂^{-p′}u₂)^{q′/p′}`;
/// 2. `∫₀ˣ u₁^{1-q} ≤ c β₁^{1-q}`, `β₁ = (∫ₓ^∞ (M₁(x,y)/U₂(y))^{p′}u₂(y)dy)^{q′/p′}`;
/// 3. `∫₀^y M₂(y,x)^{p′} x^{-2} u₂(1/x)^{1-p′} ≤ c α₂^{1-p′}`, `α₂ = (∫_y^∞ x^{-2}u₁(1/x))^{p/q}`;
/// 4. `∫₀^y x^{-2} u₂(1/x)^{1-p′} ≤ c β₂^{1-p′}`, `β₂ = (∫_y^∞ M₂(x,y)^q x^{-2}u₁(1/x)dx)^{p/q}`.
pub fn check_theorem12(
    k: &Kernel<f64>,
    params: &PowerParams,
    u1: &Weight<f64>,
    u2: &Weight<f64>,
    x_grid: &[f64],
) -> Result<ConditionReport> {
    params.validate()?;
    ConditionGrids {
        lambda: vec![1.0],
        x: x_grid.to_vec(),
    }
    .validate()?;
    let hk = build_hardy_kernels(k)?;
    let stride = (x_grid.len() / 7).max(1);
    for (id, r) in [
        ("M1", check_growth("M1", &|x, y| hk.m1(x, y), &grid_triples(x_grid, stride))),
        ("M2", check_growth("M2", &|y, x| hk.m2(y, x), &grid_triples(x_grid, stride))),
    ] {
        if r.verdict == Verdict::ViolatedWitness {
            return Err(Error::pre(format!("growth condition fails for {id} at {:?}", r.witnesses[0].coords)));
        }
    }
    let (p, q, pp, qp) = (params.p, params.q, params.p_prime(), params.q_prime());
    let big_u1 = |y: f64| u1.cumulative(y).unwrap_or(f64::NAN);
    let big_u2 = |y: f64| u2.cumulative(y).unwrap_or(f64::NAN);
    let sorted = |mut v: Vec<f64>| {
        v.retain(|t| t.is_finite() && *t > 0.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let b1 = sorted(u1.density().kinks());
    let b2 = sorted(u2.density().kinks());
    let rb1 = sorted(b1.iter().map(|t| 1.0 / t).collect());
    let rb2 = sorted(b2.iter().map(|t| 1.0 / t).collect());
    let u2_end = u2.density().support_end();
    let tail2 = |h: &dyn Fn(f64) -> f64, x: f64| -> Result<f64> {
        match u2_end {
            Some(e) if e <= x => Ok(0.0),
            Some(e) => integral(h, x, e, &b2),
            None => tail(h, x, &b2, None),
        }
    };
    // a^e · u, zero where u vanishes and infinite where only a vanishes.
    let weighted = |a: f64, e: f64, u: f64| -> f64 {
        if u == 0.0 {
            0.0
        } else {
            a.powf(e) * u
        }
    };
    // m^e u^{1-e}, with 0·∞ read as 0.
    let dual = |m: f64, e: f64, u: f64| -> f64 {
        if m == 0.0 {
            0.0
        } else {
            m.powf(e) * u.powf(1.0 - e)
        }
    };
    let run = |id: &str, f: &dyn Fn(f64) -> Result<Outcome>| -> Result<ConditionReport> {
        let out = x_grid.iter().map(|x| f(*x)).collect::<Result<Vec<_>>>()?;
        let axis = if id.ends_with('3') || id.ends_with('4') { "y" } else { "x" };
        Ok(ConditionReport::from_grid(id, x_axes(axis, x_grid), out))
    };
    let divergent = |name: &str, x: f64| Outcome::Divergent(format!("{name}({x:e}) diverges"));
    let kids = vec![
        run("power_dual.1", &|x| {
            let a = tail2(&|y| weighted(big_u2(y), -pp, u2.eval(y)), x)?;
            if a == f64::INFINITY || a.is_nan() {
                return Ok(divergent("alpha1", x));
            }
            let lhs = integral(&|y| dual(hk.m1(x, y), q, u1.eval(y)), 0.0, x, &b1)?;
            Ok(ratio(lhs, a.powf(qp / pp).powf(1.0 - q)))
        })?,
        run("power_dual.2", &|x| {
            let b = tail2(&|y| weighted(hk.m1(x, y) / big_u2(y), pp, u2.eval(y)), x)?;
            if b == f64::INFINITY || b.is_nan() {
                return Ok(divergent("beta1", x));
            }
            let lhs = integral(&|y| dual(1.0, q, u1.eval(y)), 0.0, x, &b1)?;
            Ok(ratio(lhs, b.powf(qp / pp).powf(1.0 - q)))
        })?,
        run("power_dual.3", &|y| {
            // ∫_y^∞ x^{-2}u₁(1/x)dx = U₁(1/y).
            let a = big_u1(1.0 / y);
            if !a.is_finite() {
                return Ok(divergent("alpha2", y));
            }
            let lhs = integral(&|x| dual(hk.m2(y, x), pp, u2.eval(1.0 / x)) / (x * x), 0.0, y, &rb2)?;
            Ok(ratio(lhs, a.powf(p / q).powf(1.0 - pp)))
        })?,
        run("power_dual.4", &|y| {
            let b = tail(&|x| weighted(hk.m2(x, y), q, u1.eval(1.0 / x)) / (x * x), y, &rb1, None)?;
            if b == f64::INFINITY || b.is_nan() {
                return Ok(divergent("beta2", y));
            }
            let lhs = integral(&|x| dual(1.0, pp, u2.eval(1.0 / x)) / (x * x), 0.0, y, &rb2)?;
            Ok(ratio(lhs, b.powf(p / q).powf(1.0 - pp)))
        })?,
    ];
    Ok(ConditionReport::combine("power_dual", kids).with_note("U₂ is the cumulative of u₂"))
}

/// `N(x) = (∫₀^∞ K(x,y)^{p′} dy)^{1/p′}`.
pub fn kantorovich_inner_norm(k: &Kernel<f64>, p_prime: f64, x: f64) -> Result<f64> {
    let g = |y: f64| k.eval(x, y).powf(p_prime);
    let breaks: Vec<f64> = k.y_kinks(x).into_iter().filter(|t| *t > 0.0).collect();
    let i = match k.y_support_end(x) {
        Some(e) => integral(&g, 0.0, e, &breaks)?,
        None => {
            let hint = match k {
                Kernel::Analytic(a) => a.y_tail_exponent().map(|s| TailHint::Power { exponent: s * p_prime }),
                _ => None,
            };
            tail(&g, 0.0, &breaks, hint)?
        }
    };
    Ok(i.powf(1.0 / p_prime))
}

/// Mixed-norm probe `∫₀^∞ [∫₀^∞ K^{p′} dy]^{q/p′} dx` near the origin.
///
/// Tabulates `N(x)` on a log grid over `[1e-3, 1e3]`, fits the log-log
/// slope, and evaluates `P(ε) = ∫_ε^1 N^q` along `eps`. Partial integrals
/// whose increments do not decay signal divergence.
pub fn kantorovich_probe(k: &Kernel<f64>, params: &PowerParams, eps: &[f64]) -> Result<ConditionReport> {
    params.validate()?;
    if eps.len() < 3 || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::arg("eps must be at least three decreasing values in (0, 1)"));
    }
    let (pp, q) = (params.p_prime(), params.q);
    let xs = log_grid(1e-3, 1e3, 49);
    let norms = xs.iter().map(|x| kantorovich_inner_norm(k, pp, *x)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = norms.iter().position(|n| !n.is_finite()) {
        let outcomes: Vec<Outcome> = norms
            .iter()
            .map(|n| {
                if n.is_finite() {
                    Outcome::Finite(*n)
                } else {
                    Outcome::Divergent("inner integral diverges".into())
                }
            })
            .collect();
        return Ok(ConditionReport::from_grid("kantorovich.inner", x_axes("x", &xs), outcomes)
            .with_note(format!("inner integral diverges at x = {:e}", xs[i])));
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(&norms).filter(|(_, n)| **n > 0.0).map(|(x, n)| (x.ln(), n.ln())).collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let mut kinks = k.x_support_end().into_iter().collect::<Vec<_>>();
    kinks.push(1.0);
    let h = |x: f64| kantorovich_inner_norm(k, pp, x).map(|n| n.powf(q)).unwrap_or(f64::NAN);
    let mut partials = Vec::with_capacity(eps.len());
    let mut acc = integral(&h, eps[0], 1.0, &kinks)?;
    partials.push(acc);
    for w in eps.windows(2) {
        acc += integral(&h, w[1], w[0], &kinks)?;
        partials.push(acc);
    }
    let outcomes = partials.iter().map(|v| Outcome::Finite(*v)).collect();
    let mut r = ConditionReport::from_grid("kantorovich", x_axes("epsilon", eps), outcomes);
    r.best_constant = *partials.last().unwrap();
    r.metrics.insert("log_slope".into(), slope);
    for (i, w) in partials.windows(2).enumerate() {
        r.metrics.insert(format!("ratio_{i:02}"), w[1] / w[0]);
    }
    let n = partials.len();
    let (d_last, d_prev) = (partials[n - 1] - partials[n - 2], partials[n - 2] - partials[n - 3]);
    let rho = if d_prev > 0.0 { d_last / d_prev } else if d_last > 0.0 { f64::INFINITY } else { 0.0 };
    r.witnesses.clear();
    r.verdict = if !acc.is_finite() || rho >= 0.95 {
        r.witnesses.push(Witness {
            coords: vec![eps[n - 1]],
            detail: format!("partial outer integrals keep growing (increment ratio {rho:.3})"),
        });
        Verdict::DivergentTerm
    } else if d_last * rho / (1.0 - rho) > 1e-2 * acc.abs() {
        Verdict::InconclusiveGrowth
    } else {
        Verdict::HoldsEstimated
    };
    Ok(r)
}
