use crate::error::{Error, Result};
use crate::funcspace::{
    quadrature::{integrate_fn, integrate_tail_fn},
    AnalyticFunction, Func, QuadratureSpec, StepFunction, TailHint,
};
use crate::scalar::{compensated_sum, log_grid, Scalar};

use super::nfunction::NFunction;
use super::weight::Weight;

/// Bracketing cap: λ is searched in `[2^-200, 2^200]`.
const BRACKET_DOUBLINGS: i32 = 200;

/// Default relative width of the final λ interval.
pub const GAUGE_REL_TOL: f64 = 1e-10;

/// `λ ↦ ∫ Φ(f/λ) u` with the λ-independent work done once.
enum Modular<'a, S> {
    /// Slab values and slab masses `∫_slab u`.
    Slabs { values: Vec<S>, masses: Vec<S> },
    Analytic {
        f: &'a AnalyticFunction<S>,
        u: &'a Weight<S>,
        end: Option<S>,
        breaks: Vec<S>,
        hint: Option<TailHint>,
    },
}

fn composite_hint<S: Scalar>(f: &AnalyticFunction<S>, phi: &NFunction<S>, u: &Weight<S>) -> Option<TailHint> {
    let e = phi.small_argument_exponent()?;
    let tau = match u.density() {
        Func::Analytic(a) => match a.tail_hint()? {
            TailHint::Power { exponent } => exponent,
            TailHint::Exponential { .. } => return None,
        },
        Func::Step(_) => return None,
    };
    match f.tail_hint()? {
        TailHint::Power { exponent } => Some(TailHint::Power { exponent: exponent * e + tau }),
        TailHint::Exponential { rate } if tau == 0.0 => Some(TailHint::Exponential { rate: rate * e }),
        TailHint::Exponential { .. } => None,
    }
}

impl<'a, S: Scalar> Modular<'a, S> {
    fn prepare(f: &'a Func<S>, phi: &NFunction<S>, u: &'a Weight<S>) -> Result<Self> {
        match f {
            Func::Step(s) => {
                let mut values = Vec::with_capacity(s.num_slabs());
                let mut masses = Vec::with_capacity(s.num_slabs());
                for (a, b, v) in s.slabs() {
                    if v > S::zero() {
                        values.push(v);
                        masses.push(u.mass(a, b)?);
                    }
                }
                Ok(Modular::Slabs { values, masses })
            }
            Func::Analytic(a) => {
                let end = match (f.support_end(), u.density().support_end()) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
                let mut breaks = f.kinks();
                breaks.extend(u.density().kinks());
                breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
                breaks.dedup();
                Ok(Modular::Analytic {
                    f: a,
                    u,
                    end,
                    breaks,
                    hint: composite_hint(a, phi, u),
                })
            }
        }
    }

    fn eval(&self, phi: &NFunction<S>, lambda: S, q: &QuadratureSpec) -> Result<S> {
        match self {
            Modular::Slabs { values, masses } => {
                let mut terms = Vec::with_capacity(values.len());
                for (v, m) in values.iter().zip(masses) {
                    let t = phi.eval(*v / lambda) * *m;
                    if !t.is_finite() {
                        return Ok(S::infinity());
                    }
                    terms.push(t);
                }
                Ok(compensated_sum(terms))
            }
            Modular::Analytic { f, u, end, breaks, hint } => {
                // Purely relative tolerance keeps divergence visible at large λ.
                let q = &QuadratureSpec { abs_tol: 1e-300, ..*q };
                let g = |x: S| {
                    let w = u.eval(x);
                    if w == S::zero() {
                        S::zero()
                    } else {
                        phi.eval(f.eval(x) / lambda) * w
                    }
                };
                let r = match end {
                    Some(e) => integrate_fn(&g, S::zero(), *e, breaks, q)?,
                    None => {
                        let cut = breaks.last().copied().unwrap_or(S::one()).max(S::one());
                        let head = integrate_fn(&g, S::zero(), cut, breaks, q)?;
                        if head.is_divergent() {
                            return Ok(S::infinity());
                        }
                        let tail = integrate_tail_fn(&g, cut, &[], *hint, q)?;
                        if tail.is_divergent() {
                            return Ok(S::infinity());
                        }
                        return Ok(head.value() + tail.value());
                    }
                };
                Ok(r.value())
            }
        }
    }
}

/// `∫ Φ(f/λ) u`, with `+inf` for a divergent integral.
pub fn modular<S: Scalar>(f: &Func<S>, phi: &NFunction<S>, u: &Weight<S>, lambda: S) -> Result<S> {
    if !(lambda > S::zero()) {
        return Err(Error::arg(format!("modular needs λ > 0, got {lambda}")));
    }
    Modular::prepare(f, phi, u)?.eval(phi, lambda, &QuadratureSpec::default())
}

/// Luxemburg norm `inf{λ > 0 : ∫ Φ(f/λ) u ≤ 1}`.
///
/// Returns `+inf` when the modular diverges for every λ up to the bracket
/// cap, and [`Error::NormOverflow`] when it stays finite but above 1.
pub fn gauge_norm<S: Scalar>(f: &Func<S>, phi: &NFunction<S>, u: &Weight<S>) -> Result<S> {
    gauge_norm_with(f, phi, u, &QuadratureSpec::default(), GAUGE_REL_TOL)
}

pub fn gauge_norm_with<S: Scalar>(
    f: &Func<S>,
    phi: &NFunction<S>,
    u: &Weight<S>,
    q: &QuadratureSpec,
    rel_tol: f64,
) -> Result<S> {
    if f.is_identically_zero() {
        return Ok(S::zero());
    }
    let m = Modular::prepare(f, phi, u)?;
    if let Modular::Slabs { masses, .. } = &m {
        if masses.iter().all(|x| *x == S::zero()) {
            return Ok(S::zero());
        }
    }
    let eval = |l: S| m.eval(phi, l, q);
    let two = S::two();
    let (mut lo, mut hi);
    let at_one = eval(S::one())?;
    if at_one == S::infinity() && phi.is_globally_delta2() {
        return Ok(S::infinity());
    }
    if at_one > S::one() {
        lo = S::one();
        hi = two;
        let mut k = 1;
        loop {
            let v = eval(hi)?;
            if v <= S::one() {
                break;
            }
            if k >= BRACKET_DOUBLINGS {
                return if v.is_finite() {
                    Err(Error::NormOverflow { cap: hi.as_f64() })
                } else {
                    Ok(S::infinity())
                };
            }
            lo = hi;
            hi = hi * two;
            k += 1;
        }
    } else {
        hi = S::one();
        lo = S::half();
        let mut k = 1;
        while eval(lo)? <= S::one() {
            if k >= BRACKET_DOUBLINGS {
                return Ok(lo);
            }
            hi = lo;
            lo = lo * S::half();
            k += 1;
        }
    }
    // Invariant: modular(lo) > 1 >= modular(hi).
    let tol = S::lit(rel_tol);
    while hi - lo > tol * hi {
        let mid = (lo + hi) * S::half();
        if !(mid > lo && mid < hi) {
            break;
        }
        let v = eval(mid)?;
        if v == S::one() {
            return Ok(mid);
        }
        if v > S::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * S::half())
}

/// Estimated `sup Φ(2t)/Φ(t)` over a log grid on `[T, 10⁶ T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Estimate<S> {
    pub ratio: S,
    /// False when the ratio still grows over the last decade of the grid.
    pub bounded: bool,
}

pub fn delta2_ratio<S: Scalar>(phi: &NFunction<S>, t0: S, grid_size: usize) -> Result<Delta2Estimate<S>> {
    if !(t0 > S::zero()) {
        return Err(Error::arg("Δ₂ probe needs T > 0"));
    }
    if grid_size < 8 {
        return Err(Error::arg("Δ₂ probe needs at least 8 grid points"));
    }
    let grid = log_grid(t0, t0 * S::lit(1e6), grid_size);
    let ratios: Vec<S> = grid
        .iter()
        .map(|&t| {
            let (a, b) = (phi.eval(S::two() * t), phi.eval(t));
            if b.is_finite() && a.is_finite() { a / b } else { S::infinity() }
        })
        .collect();
    let ratio = ratios.iter().copied().fold(S::zero(), S::max);
    // Compare the last point with the one a decade earlier.
    let back = (grid_size - 1) / 6;
    let last = ratios[grid_size - 1];
    let earlier = ratios[grid_size - 1 - back];
    let bounded = last.is_finite() && last <= earlier * (S::one() + S::lit(1e-2));
    Ok(Delta2Estimate { ratio, bounded })
}

/// `t ↦ (1/t) ∫₀ᵗ h` as an analytic function.
pub fn running_average<S: Scalar>(h: &StepFunction<S>) -> AnalyticFunction<S> {
    let g = h.clone();
    let kinks = h.breakpoints()[1..].to_vec();
    let mut a = AnalyticFunction::new(move |t: S| {
        if t <= S::zero() {
            g.values().first().copied().unwrap_or(S::zero())
        } else {
            g.cumulative(t) / t
        }
    })
    .with_kinks(kinks);
    if !h.is_zero() {
        a = a.with_tail(TailHint::Power { exponent: -1.0 });
    }
    if h.is_nonincreasing() {
        a = a.decreasing();
    }
    a
}

/// Down-dual norm `ρ((1/t) ∫₀ᵗ h)`.
pub fn down_dual_norm<S: Scalar>(h: &StepFunction<S>, phi: &NFunction<S>, u: &Weight<S>) -> Result<S> {
    if h.is_zero() {
        return Ok(S::zero());
    }
    gauge_norm(&running_average(h).into(), phi, u)
}

/// Smallest normalized second difference of `Φ₁ ∘ Φ₂^{-1}` on a log grid
/// over `[lo, hi]`; nonnegative (up to rounding) iff the composition is
/// convex there.
pub fn composition_convexity_defect<S: Scalar>(
    phi1: &NFunction<S>,
    phi2: &NFunction<S>,
    lo: S,
    hi: S,
    n: usize,
) -> S {
    let h = |s: S| phi1.eval(phi2.inverse(s));
    let grid = log_grid(lo, hi, n.max(3));
    let mut worst = S::infinity();
    for w in grid.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let interp = h(a) + (h(c) - h(a)) * (b - a) / (c - a);
        let scale = h(c).abs().max(S::min_positive_value());
        worst = worst.min((interp - h(b)) / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq() -> NFunction<f64> {
        NFunction::power(2.0).unwrap()
    }

    fn chi(a: f64, b: f64) -> Func<f64> {
        StepFunction::indicator(a, b).unwrap().into()
    }

    fn two() -> Weight<f64> {
        Weight::new(AnalyticFunction::constant(2.0)).unwrap()
    }

    #[test]
    fn modular_examples() {
        assert_eq!(modular(&chi(0.0, 1.0), &sq(), &Weight::unit(), 1.0).unwrap(), 1.0);
        let v = modular(&chi(0.0, 1.0), &sq(), &two(), 2f64.sqrt()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let sing: Func<f64> = AnalyticFunction::power(-0.5).with_domain_end(1.0).into();
        assert_eq!(modular(&sing, &sq(), &Weight::unit(), 3.0).unwrap(), f64::INFINITY);
        assert!(modular(&chi(0.0, 1.0), &sq(), &Weight::unit(), 0.0).is_err());
    }

    #[test]
    fn gauge_examples() {
        let n = gauge_norm(&chi(0.0, 4.0), &sq(), &Weight::unit()).unwrap();
        assert!((n - 2.0).abs() < 1e-9);
        assert_eq!(gauge_norm(&StepFunction::zero().into(), &sq(), &Weight::unit()).unwrap(), 0.0);
        let n = gauge_norm(&chi(0.0, 1.0), &sq(), &two()).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-9);
        let sing: Func<f64> = AnalyticFunction::power(-0.5).with_domain_end(1.0).into();
        assert_eq!(gauge_norm(&sing, &sq(), &Weight::unit()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn analytic_input_norm() {
        // ‖e^{-t}‖₂ = 1/√2.
        let f: Func<f64> = AnalyticFunction::exp_decay(1.0).into();
        let n = gauge_norm(&f, &sq(), &Weight::unit()).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn delta2_examples() {
        let d = delta2_ratio(&NFunction::power(3.0_f64).unwrap(), 1.0, 61).unwrap();
        assert!((d.ratio - 8.0).abs() < 1e-12 && d.bounded);
        let d = delta2_ratio(&NFunction::<f64>::Exp, 1.0, 61).unwrap();
        assert!(!d.bounded);
        // φ(t) = 1 + ln t on [1, e^4], tabulated, with linear extension.
        let mut knots = vec![[0.0, 0.0], [1.0, 1.0]];
        for i in 1..=16 {
            let t = (i as f64 * 0.25).exp();
            knots.push([t, 1.0 + t.ln()]);
        }
        let g = NFunction::generic(knots).unwrap();
        let d = delta2_ratio(&g, 1.0, 61).unwrap();
        assert!(d.bounded && d.ratio < 4.0 + 1e-12, "{d:?}");
        let d = delta2_ratio(&NFunction::<f64>::LLogL, 1.0, 61).unwrap();
        assert!(d.bounded && d.ratio <= 4.0);
    }

    #[test]
    fn down_dual_examples() {
        let h = StepFunction::indicator(0.0_f64, 1.0).unwrap();
        let n = down_dual_norm(&h, &sq(), &Weight::unit()).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-8, "{n}");
        assert_eq!(down_dual_norm(&StepFunction::zero(), &sq(), &Weight::unit()).unwrap(), 0.0);
        let dec = StepFunction::new(vec![0.0, 1.0, 3.0], vec![3.0, 1.0]).unwrap();
        let dd = down_dual_norm(&dec, &sq(), &Weight::unit()).unwrap();
        let plain = gauge_norm(&dec.clone().into(), &sq(), &Weight::unit()).unwrap();
        assert!(dd >= plain);
    }

    #[test]
    fn convexity_of_compositions() {
        let p2 = NFunction::power(2.0_f64).unwrap();
        let p4 = NFunction::power(4.0_f64).unwrap();
        assert!(composition_convexity_defect(&p4, &p2, 1e-3, 1e3, 40) >= -1e-9);
        assert!(composition_convexity_defect(&p2, &p4, 1e-3, 1e3, 40) < -1e-3);
    }

    fn step_strategy() -> impl Strategy<Value = StepFunction<f64>> {
        prop::collection::vec((0.05f64..2.0, 0.0f64..5.0), 1..12).prop_map(|slabs| {
            let (lens, vals): (Vec<f64>, Vec<f64>) = slabs.into_iter().unzip();
            StepFunction::from_slabs(&lens, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn homogeneity_and_unit_ball(f in step_strategy(), c in 0.1f64..10.0, p in 1.1f64..4.0) {
            prop_assume!(!f.is_zero());
            let phi = NFunction::power(p).unwrap();
            let u = Weight::unit();
            let n = gauge_norm(&f.clone().into(), &phi, &u).unwrap();
            let nc = gauge_norm(&f.scaled(c).unwrap().into(), &phi, &u).unwrap();
            prop_assert!((nc - c * n).abs() <= 1e-8 * c * n);
            let m = modular(&f.into(), &phi, &u, n).unwrap();
            prop_assert!((m - 1.0).abs() <= 1e-6);
        }

        #[test]
        fn holder_young(f in step_strategy(), g in step_strategy(), p in 1.2f64..4.0) {
            let phi = NFunction::power(p).unwrap();
            let psi = phi.complementary();
            let u = Weight::step(StepFunction::new(vec![0.0, 1.0, 100.0], vec![0.5, 2.0]).unwrap());
            let lhs = f.product(&g).product(&StepFunction::new(vec![0.0, 1.0, 100.0], vec![0.5, 2.0]).unwrap()).integral();
            let rhs = 2.0 * gauge_norm(&f.into(), &phi, &u).unwrap() * gauge_norm(&g.into(), &psi, &u).unwrap();
            prop_assert!(rhs - lhs >= -1e-9 * rhs.max(lhs).max(1e-300));
        }
    }
}
