use crate::error::{Error, Result};
use crate::funcspace::{AnalyticFunction, Func, Kernel, QuadratureSpec, StepFunction};
use crate::orlicz::running_average;
use crate::scalar::Scalar;

use super::convolution::convolve;
use super::kernel_ops::{apply_kernel, associate_apply, s_transform, HardyKernels};
use super::{hardy_i, hardy_i2};

/// One of the operators acting on step data.
#[derive(Debug, Clone)]
pub enum OperatorSpec<S> {
    HardyI,
    HardyI2,
    /// `f ↦ k ∗ f`.
    Convolution(StepFunction<S>),
    Kernel(Kernel<S>),
    Associate(Kernel<S>),
    STransform(Kernel<S>),
    H1(HardyKernels<S>),
    H2(HardyKernels<S>),
    /// `f ↦ (1/x) ∫₀ˣ f`.
    Averaging,
    Identity,
    Zero,
}

impl<S: Scalar> OperatorSpec<S> {
    /// `(T f)(x)`.
    pub fn apply(&self, f: &StepFunction<S>, x: S, q: &QuadratureSpec) -> Result<S> {
        if !(x > S::zero()) {
            return Err(Error::arg("operators are evaluated at x > 0"));
        }
        match self {
            OperatorSpec::HardyI => hardy_i(f, x),
            OperatorSpec::HardyI2 => hardy_i2(f, x),
            OperatorSpec::Convolution(k) => Ok(convolve(k, f).eval(x)),
            OperatorSpec::Kernel(k) => apply_kernel(k, f, x, q),
            OperatorSpec::Associate(k) => associate_apply(k, f, x, q),
            OperatorSpec::STransform(k) => s_transform(k, f, x, q),
            OperatorSpec::H1(h) => h.h1(f, x),
            OperatorSpec::H2(h) => h.h2(f, x),
            OperatorSpec::Averaging => Ok(f.cumulative(x) / x),
            OperatorSpec::Identity => Ok(f.eval(x)),
            OperatorSpec::Zero => Ok(S::zero()),
        }
    }

    /// `T f` as a function, for norm computations.
    pub fn image(&self, f: &StepFunction<S>) -> Func<S> {
        match self {
            OperatorSpec::Identity => f.clone().into(),
            OperatorSpec::Zero => StepFunction::zero().into(),
            OperatorSpec::Averaging => running_average(f).into(),
            OperatorSpec::Convolution(k) => {
                let h = convolve(k, f);
                let (_, end) = h.support();
                let kinks: Vec<S> = h.knots().map(|(x, _)| x).collect();
                AnalyticFunction::new(move |x| h.eval(x)).with_domain_end(end).with_kinks(kinks).into()
            }
            _ => {
                let op = self.clone();
                let g = f.clone();
                let q = QuadratureSpec::default();
                let kinks = f.breakpoints()[1..].to_vec();
                AnalyticFunction::new(move |x: S| {
                    if x <= S::zero() {
                        return S::zero();
                    }
                    op.apply(&g, x, &q).unwrap_or(S::nan())
                })
                .with_kinks(kinks)
                .into()
            }
        }
    }
}
