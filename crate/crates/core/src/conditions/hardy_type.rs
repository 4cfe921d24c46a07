use crate::error::{Error, Result};
use crate::funcspace::{Kernel, Monotonicity, TailHint};
use crate::operators::build_hardy_kernels;
use crate::orlicz::{composition_convexity_defect, NFunction, Weight};

use super::growth::{check_growth, grid_triples};
use super::report::{ConditionReport, Outcome, Verdict};
use super::solve::{integral, power_exponent, required_constant, scalar_required, tail};
use super::ConditionGrids;

/// Data of a two-weight Orlicz inequality `ρ_{Φ₁}(w T_K f) ≤ C ρ_{Φ₂}(u f)`
/// with range measure `t_w` and domain measure `v`.
#[derive(Debug, Clone)]
pub struct WeightedSetup {
    pub phi1: NFunction<f64>,
    pub phi2: NFunction<f64>,
    pub w: Weight<f64>,
    pub t_w: Weight<f64>,
    pub u: Weight<f64>,
    pub v: Weight<f64>,
    pub kernel: Kernel<f64>,
}

impl WeightedSetup {
    pub fn validate(&self) -> Result<()> {
        self.phi1.validate()?;
        self.phi2.validate()?;
        check_convex_composition(&self.phi1, &self.phi2)
    }
}

fn check_convex_composition(phi1: &NFunction<f64>, phi2: &NFunction<f64>) -> Result<()> {
    let defect = composition_convexity_defect(phi1, phi2, 1e-6, 1e6, 241);
    if defect < -1e-9 {
        return Err(Error::pre(format!(
            "Φ₁∘Φ₂^{{-1}} is not convex on the probe grid (second difference {defect:e})"
        )));
    }
    Ok(())
}

fn require_growth(id: &str, k: &dyn Fn(f64, f64) -> f64, grid: &[f64]) -> Result<()> {
    let stride = (grid.len() / 7).max(1);
    let r = check_growth(id, k, &grid_triples(grid, stride));
    if r.verdict == Verdict::ViolatedWitness {
        let w = &r.witnesses[0];
        return Err(Error::pre(format!("growth condition fails for {id} at (y,z,x) = {:?}", w.coords)));
    }
    Ok(())
}

fn merged(mut a: Vec<f64>, more: &[Vec<f64>]) -> Vec<f64> {
    for m in more {
        a.extend_from_slice(m);
    }
    a.retain(|t| t.is_finite() && *t > 0.0);
    a.sort_by(f64::total_cmp);
    a.dedup();
    a
}

fn min_end(ends: &[Option<f64>]) -> Option<f64> {
    ends.iter().flatten().copied().reduce(f64::min)
}

/// `∫ₓ^∞ h`, truncated at a known support end.
fn tail_to(h: &dyn Fn(f64) -> f64, x: f64, end: Option<f64>, breaks: &[f64], hint: Option<TailHint>) -> Result<f64> {
    match end {
        Some(e) if e <= x => Ok(0.0),
        Some(e) => integral(h, x, e, breaks),
        None => tail(h, x, breaks, hint),
    }
}

fn power_hint(h: Option<TailHint>) -> Option<f64> {
    match h {
        Some(TailHint::Power { exponent }) => Some(exponent),
        _ => None,
    }
}

/// Hint for `Φ(c·a(y))·b(y)` when `Φ` is a power and `a`, `b` have power tails.
fn composite_hint(phi: &NFunction<f64>, a: Option<f64>, b: Option<f64>) -> Option<TailHint> {
    let p = power_exponent(phi)?;
    Some(TailHint::Power {
        exponent: p * a? + b?,
    })
}

fn sweep(grids: &ConditionGrids, mut f: impl FnMut(f64, f64) -> Result<Outcome>) -> Result<Vec<Outcome>> {
    let mut out = Vec::with_capacity(grids.lambda.len() * grids.x.len());
    for &lam in &grids.lambda {
        for &x in &grids.x {
            out.push(f(lam, x)?);
        }
    }
    Ok(out)
}

fn divergent(name: &str, lam: f64, x: f64) -> Outcome {
    Outcome::Divergent(format!("{name}({lam:e}, {x:e}) diverges"))
}

/// Two-condition sweep for a generalized Hardy operator `T_K` with weights.
///
/// `α(λ,x) = Φ₂∘Φ₁^{-1}(∫ₓ^∞ Φ₁(λw) t_w)` and
/// `β(λ,x) = Φ₂∘Φ₁^{-1}(∫ₓ^∞ Φ₁(λw(y)K(y,x)) t_w(y) dy)`; at each grid
/// point the smallest `1/c` with
/// `∫₀ˣ Ψ₂(cαK(x,y)/(λuv)) v ≤ α` and `∫₀ˣ Ψ₂(cβ/(λuv)) v ≤ β` is reported.
/// For `K = χ_{(0,x)}(y)` only the first condition is evaluated.
pub fn check_theorem2(setup: &WeightedSetup, grids: &ConditionGrids) -> Result<ConditionReport> {
    setup.validate()?;
    grids.validate()?;
    let k = &setup.kernel;
    if k.monotone_flags() != (Monotonicity::Increasing, Monotonicity::Decreasing) {
        return Err(Error::pre("K must be flagged nondecreasing in x and nonincreasing in y"));
    }
    require_growth("K", &|x, y| k.eval(x, y), &grids.x)?;
    let hardy_only = matches!(k, Kernel::HardyIndicator);
    let (phi1, phi2) = (&setup.phi1, &setup.phi2);
    let psi2 = phi2.complementary();
    let homog = power_exponent(&psi2);
    let (w, t_w, u, v) = (&setup.w, &setup.t_w, &setup.u, &setup.v);
    let w_breaks = merged(w.density().kinks(), &[t_w.density().kinks()]);
    let w_end = min_end(&[w.density().support_end(), t_w.density().support_end()]);
    let uv_breaks = merged(u.density().kinks(), &[v.density().kinks()]);
    let alpha_hint = composite_hint(phi1, power_hint(w.density().tail_hint()), power_hint(t_w.density().tail_hint()));
    let domain = |c: f64, x: f64, top: f64, kx: &dyn Fn(f64) -> f64| -> Result<f64> {
        let h = |y: f64| {
            let vv = v.eval(y);
            if vv == 0.0 {
                return 0.0;
            }
            let kk = kx(y);
            if kk == 0.0 {
                return 0.0;
            }
            psi2.eval(c * top * kk / (u.eval(y) * vv)) * vv
        };
        let breaks = merged(uv_breaks.clone(), &[k.y_kinks(x)]);
        integral(&h, 0.0, x, &breaks)
    };
    let first = sweep(grids, |lam, x| {
        let ia = tail_to(&|y| phi1.eval(lam * w.eval(y)) * t_w.eval(y), x, w_end, &w_breaks, alpha_hint)?;
        if ia == f64::INFINITY {
            return Ok(divergent("alpha", lam, x));
        }
        let alpha = phi2.eval(phi1.inverse(ia));
        let lhs = |c: f64| domain(c, x, alpha / lam, &|y| k.eval(x, y));
        required_constant(&lhs, alpha, homog)
    })?;
    let mut children = vec![ConditionReport::from_grid("hardy_type.alpha", grids.axes("x"), first)];
    let mut notes = Vec::new();
    if hardy_only {
        notes.push("K = χ_(0,x)(y): only the α condition applies".to_string());
    } else {
        let end = min_end(&[w_end, k.x_support_end()]);
        let second = sweep(grids, |lam, x| {
            let breaks = merged(w_breaks.clone(), &[k.x_kinks(x)]);
            let ib = tail_to(&|y| phi1.eval(lam * w.eval(y) * k.eval(y, x)) * t_w.eval(y), x, end, &breaks, None)?;
            if ib == f64::INFINITY {
                return Ok(divergent("beta", lam, x));
            }
            let beta = phi2.eval(phi1.inverse(ib));
            let lhs = |c: f64| domain(c, x, beta / lam, &|_| 1.0);
            required_constant(&lhs, beta, homog)
        })?;
        children.push(ConditionReport::from_grid("hardy_type.beta", grids.axes("x"), second));
        notes.push("β(λ,x) = Φ₂∘Φ₁^{-1}(∫ₓ^∞ Φ₁(λw(y)K(y,x)) t_w(y) dy), with the integral over y supplied".to_string());
    }
    let mut r = ConditionReport::combine("hardy_type", children);
    r.notes.extend(notes);
    Ok(r)
}

/// Which transcription of the averaging-operator conditions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem7Form {
    /// Specialization of the general two-condition test to `K = χ_{(0,x)}(y)/x`:
    /// `α = ∫ₓ^∞ Ψ(λ/U)u`, `∫₀ˣ Φ(cα/λ)u ≤ α`; `β = ∫ₓ^∞ Φ(λ/y)u`, `∫₀ˣ Ψ(cβ/λ)u ≤ β`.
    #[default]
    Derived,
    /// `α = ∫₀^∞ Ψ(λu/U)`, `∫₀ˣ Φ(cα/λ)u ≤ α`; `∫₀ˣ Ψ(cβ/(λU))u ≤ β`.
    AsPrinted,
}

/// Conditions for `ρ_{Φ,u}(t^{-1}∫₀ᵗ f*) ≤ C ρ_{Φ,u}(f*)`.
pub fn check_theorem7(
    phi: &NFunction<f64>,
    u: &Weight<f64>,
    grids: &ConditionGrids,
    form: Theorem7Form,
) -> Result<ConditionReport> {
    phi.validate()?;
    grids.validate()?;
    if !u.has_infinite_mass() {
        return Err(Error::pre("the weight must satisfy ∫_{ℝ₊}u=∞"));
    }
    let psi = phi.complementary();
    let big_u = |y: f64| u.cumulative(y).unwrap_or(f64::NAN);
    let breaks = merged(u.density().kinks(), &[]);
    let e_u = power_hint(u.density().tail_hint()).filter(|e| *e > -1.0);
    let first = sweep(grids, |lam, x| {
        let ux = big_u(x);
        let alpha = match form {
            Theorem7Form::Derived => {
                let h = |y: f64| {
                    let uy = u.eval(y);
                    if uy == 0.0 {
                        0.0
                    } else {
                        psi.eval(lam / big_u(y)) * uy
                    }
                };
                let hint = composite_hint(&psi, e_u.map(|e| -(e + 1.0)), e_u);
                tail(&h, x, &breaks, hint)?
            }
            Theorem7Form::AsPrinted => {
                let h = |y: f64| psi.eval(lam * u.eval(y) / big_u(y));
                integral(&h, 0.0, 1.0, &breaks)? + tail(&h, 1.0, &breaks, None)?
            }
        };
        if alpha == f64::INFINITY {
            return Ok(divergent("alpha", lam, x));
        }
        Ok(scalar_required(phi, alpha / lam, alpha / ux))
    })?;
    let second = sweep(grids, |lam, x| {
        let hint = composite_hint(phi, Some(-1.0), e_u);
        let beta = tail(&|y| phi.eval(lam / y) * u.eval(y), x, &breaks, hint)?;
        if beta == f64::INFINITY {
            return Ok(divergent("beta", lam, x));
        }
        match form {
            Theorem7Form::Derived => Ok(scalar_required(&psi, beta / lam, beta / big_u(x))),
            Theorem7Form::AsPrinted => {
                let lhs = |c: f64| {
                    let h = |y: f64| {
                        let uy = u.eval(y);
                        if uy == 0.0 {
                            0.0
                        } else {
                            psi.eval(c * beta / (lam * big_u(y))) * uy
                        }
                    };
                    integral(&h, 0.0, x, &breaks)
                };
                required_constant(&lhs, beta, power_exponent(&psi))
            }
        }
    })?;
    let children = vec![
        ConditionReport::from_grid("averaging.alpha", grids.axes("x"), first),
        ConditionReport::from_grid("averaging.beta", grids.axes("x"), second),
    ];
    let note = match form {
        Theorem7Form::Derived => "derived form: α = ∫ₓ^∞ Ψ(λ/U)u, β-condition ∫₀ˣ Ψ(cβ/λ)u ≤ β",
        Theorem7Form::AsPrinted => "as-printed form: α = ∫₀^∞ Ψ(λu/U), β-condition ∫₀ˣ Ψ(cβ/(λU))u ≤ β",
    };
    Ok(ConditionReport::combine("averaging", children).with_note(note))
}

/// Four-condition sweep for `H₁`/`H₂` built from a kernel `L` nonincreasing
/// in both variables, with `M₁(x,y) = ∫₀ˣ L(y,z)dz`, `M₂(y,x) = M₁(1/x,1/y)`
/// and `U₂(y) = ∫₀^y u₂`.
pub fn check_theorem10(
    l: &Kernel<f64>,
    phi1: &NFunction<f64>,
    phi2: &NFunction<f64>,
    u1: &Weight<f64>,
    u2: &Weight<f64>,
    grids: &ConditionGrids,
) -> Result<ConditionReport> {
    phi1.validate()?;
    phi2.validate()?;
    grids.validate()?;
    check_convex_composition(phi1, phi2)?;
    let hk = build_hardy_kernels(l)?;
    require_growth("M1", &|x, y| hk.m1(x, y), &grids.x)?;
    require_growth("M2", &|y, x| hk.m2(y, x), &grids.x)?;
    let (psi1, psi2) = (phi1.complementary(), phi2.complementary());
    let big_u1 = |y: f64| u1.cumulative(y).unwrap_or(f64::NAN);
    let big_u2 = |y: f64| u2.cumulative(y).unwrap_or(f64::NAN);
    let b1 = merged(u1.density().kinks(), &[]);
    let b2 = merged(u2.density().kinks(), &[]);
    let recip = |b: &[f64]| merged(b.iter().map(|t| 1.0 / t).collect(), &[]);
    let (rb1, rb2) = (recip(&b1), recip(&b2));
    let u2_end = u2.density().support_end();
    let e_u2 = power_hint(u2.density().tail_hint()).filter(|e| *e > -1.0);
    // f(arg·m/u)·u, zero where u or m vanishes.
    let weighted = |f: &NFunction<f64>, arg: f64, m: f64, uu: f64| -> f64 {
        if uu == 0.0 || m == 0.0 {
            0.0
        } else {
            f.eval(arg * m / uu) * uu
        }
    };

    let c1 = sweep(grids, |lam, x| {
        let h = |y: f64| {
            let uy = u2.eval(y);
            if uy == 0.0 {
                0.0
            } else {
                psi2.eval(lam / big_u2(y)) * uy
            }
        };
        let hint = composite_hint(&psi2, e_u2.map(|e| -(e + 1.0)), e_u2);
        let i = tail_to(&h, x, u2_end, &b2, hint)?;
        if i == f64::INFINITY {
            return Ok(divergent("alpha1", lam, x));
        }
        let alpha = psi1.eval(psi2.inverse(i));
        let lhs = |c: f64| integral(&|y| weighted(phi1, c * alpha / lam, hk.m1(x, y), u1.eval(y)), 0.0, x, &b1);
        required_constant(&lhs, alpha, power_exponent(phi1))
    })?;
    let c2 = sweep(grids, |lam, x| {
        let h = |y: f64| {
            let uy = u2.eval(y);
            if uy == 0.0 {
                0.0
            } else {
                psi2.eval(lam * hk.m1(x, y) / big_u2(y)) * uy
            }
        };
        let i = tail_to(&h, x, u2_end, &b2, None)?;
        if i == f64::INFINITY {
            return Ok(divergent("beta1", lam, x));
        }
        let beta = psi1.eval(psi2.inverse(i));
        let lhs = |c: f64| integral(&|y| weighted(phi1, c * beta / lam, 1.0, u1.eval(y)), 0.0, x, &b1);
        required_constant(&lhs, beta, power_exponent(phi1))
    })?;
    // x^{-2} u₂(1/x) as the measure in the reflected variable.
    let refl2 = |x: f64| u2.eval(1.0 / x) / (x * x);
    let c3 = sweep(grids, |lam, y| {
        // ∫_y^∞ Φ₁(λ) x^{-2} u₁(1/x) dx = Φ₁(λ) U₁(1/y).
        let i = phi1.eval(lam) * big_u1(1.0 / y);
        if !i.is_finite() {
            return Ok(divergent("alpha2", lam, y));
        }
        let alpha = phi2.eval(phi1.inverse(i));
        let lhs = |c: f64| {
            let h = |x: f64| {
                let ux = u2.eval(1.0 / x);
                let m = hk.m2(y, x);
                if ux == 0.0 || m == 0.0 {
                    0.0
                } else {
                    psi2.eval(c * alpha * m / ux) * refl2(x)
                }
            };
            integral(&h, 0.0, y, &rb2)
        };
        required_constant(&lhs, alpha, power_exponent(&psi2))
    })?;
    let c4 = sweep(grids, |lam, y| {
        let h = |x: f64| {
            let ux = u1.eval(1.0 / x);
            if ux == 0.0 {
                0.0
            } else {
                phi1.eval(lam * hk.m2(x, y)) * ux / (x * x)
            }
        };
        let i = tail(&h, y, &rb1, None)?;
        if i == f64::INFINITY {
            return Ok(divergent("beta2", lam, y));
        }
        let beta = phi2.eval(phi1.inverse(i));
        let lhs = |c: f64| {
            let h = |x: f64| {
                let ux = u2.eval(1.0 / x);
                if ux == 0.0 {
                    0.0
                } else {
                    psi2.eval(c * beta / ux) * refl2(x)
                }
            };
            integral(&h, 0.0, y, &rb2)
        };
        required_constant(&lhs, beta, power_exponent(&psi2))
    })?;
    let children = vec![
        ConditionReport::from_grid("dual_hardy.1", grids.axes("x"), c1),
        ConditionReport::from_grid("dual_hardy.2", grids.axes("x"), c2),
        ConditionReport::from_grid("dual_hardy.3", grids.axes("y"), c3),
        ConditionReport::from_grid("dual_hardy.4", grids.axes("y"), c4),
    ];
    Ok(ConditionReport::combine("dual_hardy", children)
        .with_note("denominators use the cumulative U₂ of u₂"))
}
