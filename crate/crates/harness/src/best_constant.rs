//! Lower bounds for operator norms `sup ρ₁(T f) / ρ₂(f)` over a probe family.

use orlicz_lorentz::funcspace::{Func, Monotonicity};
use orlicz_lorentz::operators::OperatorSpec;
use orlicz_lorentz::orlicz::gauge_norm;
use orlicz_lorentz::rearrange::decreasing_rearrangement;
use orlicz_lorentz::{Error as CoreError, OperatorSpec64, StepFunction64};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::inputs::{NormSpec, ProbeInput, WeightSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestConstant {
    pub estimate: f64,
    /// `ρ₁(T f) / ρ₂(f)` per family member, `None` when skipped.
    pub ratios: Vec<Option<f64>>,
    pub notes: Vec<String>,
}

/// `ρ(f)`, or `ρ(f*)` for a Lorentz-type spec; `+inf` on norm overflow.
pub fn norm_of(f: Func<f64>, spec: &NormSpec) -> Result<f64> {
    let f = if spec.lorentz {
        match f {
            Func::Step(s) => Func::Step(decreasing_rearrangement(&s).star),
            Func::Analytic(a) if a.monotone() == Monotonicity::Decreasing => Func::Analytic(a),
            Func::Analytic(_) => {
                return Err(HarnessError::input(
                    "a Lorentz-type norm needs step data or a function flagged nonincreasing",
                ))
            }
        }
    } else {
        f
    };
    match gauge_norm(&f, &spec.phi, &spec.weight.to_weight()?) {
        Ok(v) => Ok(v),
        Err(CoreError::NormOverflow { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn step_ratio(op: &OperatorSpec64, rho1: &NormSpec, rho2: &NormSpec, f: &StepFunction64) -> Result<(f64, f64)> {
    let below = norm_of(f.clone().into(), rho2)?;
    if !(below > 0.0 && below.is_finite()) {
        return Ok((f64::NAN, below));
    }
    Ok((norm_of(op.image(f), rho1)?, below))
}

/// `(scale · ∫ f^p)^{1/p}` for a power `Φ` and unit weight.
fn power_spec(spec: &NormSpec) -> Option<(f64, f64)> {
    match spec.weight {
        WeightSpec::Unit => spec.phi.as_power(),
        _ => None,
    }
}

/// Closed forms for `f = t^a χ_{[0,e)}`:
/// `∫ f^p = e^{ap+1}/(ap+1)` and, with `Af(x) = x^a/(a+1)` on `(0,e)` and
/// `e^{a+1}/((a+1)x)` beyond, `∫ (Af)^p = e^{ap+1}(a+1)^{-p}(1/(ap+1) + 1/(p-1))`.
fn bump_norms(op: &OperatorSpec64, rho1: &NormSpec, rho2: &NormSpec, a: f64, e: f64) -> Option<(f64, f64)> {
    let (s1, p1) = power_spec(rho1)?;
    let (s2, p2) = power_spec(rho2)?;
    let lp = |s: f64, p: f64| {
        if a * p + 1.0 > 0.0 {
            (s * e.powf(a * p + 1.0) / (a * p + 1.0)).powf(1.0 / p)
        } else {
            f64::INFINITY
        }
    };
    let below = lp(s2, p2);
    let above = match op {
        OperatorSpec::Identity => lp(s1, p1),
        OperatorSpec::Zero => 0.0,
        OperatorSpec::Averaging => {
            if a * p1 + 1.0 > 0.0 {
                let i = e.powf(a * p1 + 1.0) * (a + 1.0).powf(-p1) * (1.0 / (a * p1 + 1.0) + 1.0 / (p1 - 1.0));
                (s1 * i).powf(1.0 / p1)
            } else {
                f64::INFINITY
            }
        }
        _ => return None,
    };
    Some((above, below))
}

pub fn estimate_best_constant(
    op: &OperatorSpec64,
    rho1: &NormSpec,
    rho2: &NormSpec,
    family: &[ProbeInput],
) -> Result<BestConstant> {
    let mut ratios = Vec::with_capacity(family.len());
    let mut notes = Vec::new();
    for (i, member) in family.iter().enumerate() {
        let (above, below) = match member {
            ProbeInput::Step(f) => step_ratio(op, rho1, rho2, f)?,
            ProbeInput::PowerBump { exponent, end } => {
                if !(*end > 0.0 && end.is_finite()) {
                    return Err(HarnessError::arg(format!("power bump needs 0 < end < inf, got {end}")));
                }
                match bump_norms(op, rho1, rho2, *exponent, *end) {
                    Some(v) => v,
                    None => {
                        notes.push(format!(
                            "member {i}: power bumps are evaluated in closed form for identity, zero and averaging operators under power N-functions with unit weight only; skipped"
                        ));
                        ratios.push(None);
                        continue;
                    }
                }
            }
        };
        if !(below > 0.0 && below.is_finite()) || !above.is_finite() {
            notes.push(format!("member {i}: norms not finite and positive (ρ₁(Tf) = {above}, ρ₂(f) = {below}); skipped"));
            ratios.push(None);
            continue;
        }
        ratios.push(Some(above / below));
    }
    let estimate = ratios.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !estimate.is_finite() {
        return Err(HarnessError::input("no member of the probe family has finite positive norms"));
    }
    Ok(BestConstant { estimate, ratios, notes })
}
