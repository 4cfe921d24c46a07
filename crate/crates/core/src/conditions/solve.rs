use crate::error::Result;
use crate::funcspace::{quadrature, QuadratureSpec, TailHint};
use crate::orlicz::NFunction;

use super::report::Outcome;

/// Tolerances for condition functionals; the tiny absolute tolerance keeps
/// small values and endpoint blow-ups visible.
pub(crate) fn spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_subdivisions: 2000,
    }
}

/// `∫ₐᵇ h`, `+inf` when divergent.
pub(crate) fn integral(h: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    Ok(quadrature::integrate_fn(h, a, b, breaks, &spec())?.value())
}

/// `∫ₐ^∞ h`, `+inf` when divergent.
pub(crate) fn tail(h: &dyn Fn(f64) -> f64, a: f64, breaks: &[f64], hint: Option<TailHint>) -> Result<f64> {
    Ok(quadrature::integrate_tail_fn(h, a, breaks, hint, &spec())?.value())
}

/// Exponent of `Φ` when it is a power.
pub(crate) fn power_exponent(phi: &NFunction<f64>) -> Option<f64> {
    phi.as_power().map(|(_, p)| p)
}

/// Smallest `C = 1/c` with `lhs(c) ≤ rhs`, for `lhs` nondecreasing in `c`
/// with `lhs(0) = 0`. `homogeneity = Some(p)` means `lhs(c) = c^p lhs(1)`.
pub(crate) fn required_constant(
    lhs: &dyn Fn(f64) -> Result<f64>,
    rhs: f64,
    homogeneity: Option<f64>,
) -> Result<Outcome> {
    if rhs.is_nan() || rhs == f64::INFINITY {
        return Ok(Outcome::Divergent("right-hand functional diverges".into()));
    }
    if let Some(p) = homogeneity {
        let l1 = lhs(1.0)?;
        if l1.is_nan() || l1 == f64::INFINITY {
            return Ok(Outcome::Divergent("left-hand integral diverges".into()));
        }
        if l1 == 0.0 {
            return Ok(Outcome::Finite(0.0));
        }
        if rhs == 0.0 {
            return Ok(Outcome::Violated("left side positive, right side zero".into()));
        }
        return Ok(Outcome::Finite((l1 / rhs).powf(1.0 / p)));
    }
    let ok = |c: f64| -> Result<Option<bool>> {
        let v = lhs(c)?;
        if v.is_nan() {
            return Ok(None);
        }
        Ok(Some(v <= rhs))
    };
    const CAP: i32 = 200;
    let (lo_c, hi_c) = (2f64.powi(-CAP), 2f64.powi(CAP));
    if ok(hi_c)? == Some(true) {
        return Ok(Outcome::Finite(0.0));
    }
    match ok(lo_c)? {
        Some(true) => {}
        Some(false) => {
            let v = lhs(lo_c)?;
            return Ok(if v == f64::INFINITY {
                Outcome::Divergent("left-hand integral diverges for every c".into())
            } else {
                Outcome::Violated("left side exceeds the right for every c".into())
            });
        }
        None => return Ok(Outcome::Divergent("left-hand integral is undefined".into())),
    }
    // Geometric bisection on c.
    let (mut lo, mut hi) = (lo_c.ln(), hi_c.ln());
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp())? == Some(true) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Outcome::Finite((-lo).exp()))
}

/// Smallest `C = 1/c` with `F(c a) ≤ b` for an N-function `F`.
pub(crate) fn scalar_required(f: &NFunction<f64>, a: f64, b: f64) -> Outcome {
    if a.is_nan() || b.is_nan() || a == f64::INFINITY {
        return Outcome::Divergent("functional diverges".into());
    }
    if a == 0.0 || b == f64::INFINITY {
        return Outcome::Finite(0.0);
    }
    if b == 0.0 {
        return Outcome::Violated("left side positive, right side zero".into());
    }
    Outcome::Finite(a / f.inverse(b))
}
