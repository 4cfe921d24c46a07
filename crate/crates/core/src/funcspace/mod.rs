//! Function representations on the half line and the quadrature engine.

mod analytic;
mod kernel;
mod piecewise_linear;
pub mod quadrature;
mod step;

pub use analytic::{discretize, integrate, integrate_tail, AnalyticFunction, Evaluator, Func, Monotonicity};
pub use kernel::{AnalyticKernel, Grid2DKernel, Kernel, KernelEvaluator, KernelForm};
pub use piecewise_linear::PiecewiseLinear;
pub use quadrature::{Integral, QuadratureSpec, TailHint};
pub use step::StepFunction;
