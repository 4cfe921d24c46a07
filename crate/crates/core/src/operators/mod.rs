//! Hardy operators, convolution, kernel operators and their associates.

mod convolution;
mod kernel_ops;
mod spec;

pub use convolution::{convolve, convolve_to_step};
pub use kernel_ops::{apply_kernel, associate_apply, build_hardy_kernels, midpoint_grid, s_transform, HardyKernels};
pub use spec::OperatorSpec;

use crate::error::{Error, Result};
use crate::funcspace::StepFunction;
use crate::rearrange::decreasing_rearrangement;
use crate::scalar::{compensated_sum, Scalar};

fn nonnegative<S: Scalar>(t: S) -> Result<()> {
    if t >= S::zero() {
        Ok(())
    } else {
        Err(Error::arg(format!("need t >= 0, got {t}")))
    }
}

/// `(I f)(t) = ∫₀ᵗ f`.
pub fn hardy_i<S: Scalar>(f: &StepFunction<S>, t: S) -> Result<S> {
    nonnegative(t)?;
    Ok(f.cumulative(t))
}

/// `(I₂ f)(t) = ∫₀ᵗ f(s)(t - s) ds`, slab by slab.
pub fn hardy_i2<S: Scalar>(f: &StepFunction<S>, t: S) -> Result<S> {
    nonnegative(t)?;
    Ok(compensated_sum(f.slabs().filter(|s| s.0 < t).map(|(a, b, v)| {
        let m = b.min(t);
        v * ((t - a) * (t - a) - (t - m) * (t - m)) * S::half()
    })))
}

/// The two sides of the rearrangement convolution bound at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneilMajorant<S> {
    /// `∫₀ᵗ f* ∫₀ᵗ g* + t ∫ₜ^∞ f* g*`.
    pub rhs: S,
    /// `f*(t) ∫₀ᵗ g* + g*(t) ∫₀ᵗ f* + ∫ₜ^∞ f* g*`.
    pub integrand: S,
}

pub fn oneil_majorant<S: Scalar>(f: &StepFunction<S>, g: &StepFunction<S>, t: S) -> Result<OneilMajorant<S>> {
    if !(t > S::zero()) {
        return Err(Error::arg("need t > 0"));
    }
    let fs = decreasing_rearrangement(f).star;
    let gs = decreasing_rearrangement(g).star;
    let prod = fs.product(&gs);
    let tail = prod.integral_over(t, prod.support_end().max(t));
    let (fi, gi) = (fs.cumulative(t), gs.cumulative(t));
    Ok(OneilMajorant {
        rhs: fi * gi + t * tail,
        integrand: fs.eval(t) * gi + gs.eval(t) * fi + tail,
    })
}

/// `∫₀ᵗ (f ∗ g)*`, exact.
pub fn convolution_star_integral<S: Scalar>(f: &StepFunction<S>, g: &StepFunction<S>, t: S) -> S {
    convolve(f, g).star_integral(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chi() -> StepFunction<f64> {
        StepFunction::indicator(0.0, 1.0).unwrap()
    }

    #[test]
    fn hardy_examples() {
        assert_eq!(hardy_i(&chi(), 0.5).unwrap(), 0.5);
        assert_eq!(hardy_i(&chi(), 3.0).unwrap(), 1.0);
        assert_eq!(hardy_i2(&chi(), 0.5).unwrap(), 0.125);
        assert_eq!(hardy_i2(&chi(), 2.0).unwrap(), 1.5);
        assert_eq!(hardy_i2(&StepFunction::zero(), 2.0).unwrap(), 0.0);
        assert!(hardy_i(&chi(), -1.0).is_err());
    }

    #[test]
    fn majorant_examples() {
        let m = oneil_majorant(&chi(), &chi(), 1.0).unwrap();
        assert_eq!(m.rhs, 1.0);
        let m = oneil_majorant(&chi(), &chi(), 0.5).unwrap();
        assert_eq!(m.rhs, 0.5);
        let m = oneil_majorant(&StepFunction::zero(), &chi(), 0.5).unwrap();
        assert_eq!((m.rhs, m.integrand), (0.0, 0.0));
        assert_eq!(convolution_star_integral(&chi(), &chi(), 1.0), 0.75);
    }

    fn step_strategy() -> impl Strategy<Value = StepFunction<f64>> {
        prop::collection::vec((0.05f64..2.0, 0.0f64..5.0), 1..12).prop_map(|slabs| {
            let (lens, vals): (Vec<f64>, Vec<f64>) = slabs.into_iter().unzip();
            StepFunction::from_slabs(&lens, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn i2_is_iterated_i(f in step_strategy(), t in 0.0f64..25.0) {
            // I(I f)(t) = ∫₀ᵗ F with F piecewise linear: trapezoids between breakpoints.
            let mut pts: Vec<f64> = f.breakpoints().iter().copied().filter(|b| *b < t).collect();
            pts.push(t);
            let iif: f64 = pts.windows(2).map(|w| (w[1] - w[0]) * (f.cumulative(w[0]) + f.cumulative(w[1])) / 2.0).sum();
            let v = hardy_i2(&f, t).unwrap();
            prop_assert!((v - iif).abs() <= 1e-12 * v.abs().max(1.0));
        }

        #[test]
        fn linearity(f in step_strategy(), g in step_strategy(), a in 0.0f64..3.0, b in 0.0f64..3.0, t in 0.0f64..20.0) {
            let comb = f.scaled(a).unwrap().sum(&g.scaled(b).unwrap());
            let lhs = hardy_i(&comb, t).unwrap();
            let rhs = a * hardy_i(&f, t).unwrap() + b * hardy_i(&g, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn domination_chain(f in step_strategy(), g in step_strategy(), t in 0.01f64..20.0) {
            let m = oneil_majorant(&f, &g, t).unwrap();
            let lhs = convolution_star_integral(&f, &g, t);
            let scale = m.rhs.max(lhs).max(1e-300);
            prop_assert!(m.rhs - lhs >= -1e-9 * scale);
        }
    }
}
