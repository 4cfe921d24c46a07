//! Rearrangements, Orlicz gauge norms, integral operators on the half line
//! and checkers for the conditions under which those operators are bounded
//! between Orlicz–Lorentz spaces.
//!
//! Numerical types are generic over the scalar (`f32` or `f64`); the
//! aliases below fix the scalar. Condition checkers work in `f64`.

pub mod conditions;
pub mod error;
pub mod funcspace;
pub mod operators;
pub mod orlicz;
pub mod rearrange;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type StepFunction64 = funcspace::StepFunction<f64>;
pub type StepFunction32 = funcspace::StepFunction<f32>;
pub type AnalyticFunction64 = funcspace::AnalyticFunction<f64>;
pub type AnalyticFunction32 = funcspace::AnalyticFunction<f32>;
pub type Func64 = funcspace::Func<f64>;
pub type Func32 = funcspace::Func<f32>;
pub type Grid2DKernel64 = funcspace::Grid2DKernel<f64>;
pub type Grid2DKernel32 = funcspace::Grid2DKernel<f32>;
pub type AnalyticKernel64 = funcspace::AnalyticKernel<f64>;
pub type AnalyticKernel32 = funcspace::AnalyticKernel<f32>;
pub type Kernel64 = funcspace::Kernel<f64>;
pub type Kernel32 = funcspace::Kernel<f32>;
pub type PiecewiseLinear64 = funcspace::PiecewiseLinear<f64>;
pub type PiecewiseLinear32 = funcspace::PiecewiseLinear<f32>;
pub type NFunction64 = orlicz::NFunction<f64>;
pub type NFunction32 = orlicz::NFunction<f32>;
pub type Weight64 = orlicz::Weight<f64>;
pub type Weight32 = orlicz::Weight<f32>;
pub type OperatorSpec64 = operators::OperatorSpec<f64>;
pub type OperatorSpec32 = operators::OperatorSpec<f32>;
