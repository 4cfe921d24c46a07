//! JSON descriptors for functions, kernels, weights, norms and operators.

use orlicz_lorentz::conditions::{PowerParams, Theorem7Form};
use orlicz_lorentz::funcspace::{AnalyticFunction, AnalyticKernel, Func, Kernel};
use orlicz_lorentz::operators::OperatorSpec;
use orlicz_lorentz::orlicz::Weight;
use orlicz_lorentz::{AnalyticFunction64, Grid2DKernel64, Kernel64, NFunction64, OperatorSpec64, StepFunction64, Weight64};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn one() -> f64 {
    1.0
}

fn three_quarters() -> f64 {
    0.75
}

/// A one-variable profile such as a kernel profile `k` or `k*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `e^{-rate t}`.
    Exp {
        #[serde(default = "one")]
        rate: f64,
    },
    /// `t^exponent`.
    Power { exponent: f64 },
    /// `χ_{[0, end)}`.
    Indicator {
        #[serde(default = "one")]
        end: f64,
    },
    Step(StepFunction64),
}

/// Step data as an analytic function with exact primitive, zero past its support.
pub fn step_profile(s: &StepFunction64) -> AnalyticFunction64 {
    let (e, p) = (s.clone(), s.clone());
    let f = AnalyticFunction::new(move |t: f64| e.eval(t))
        .with_primitive(move |t: f64| p.cumulative(t.max(0.0)))
        .with_domain_end(s.support_end())
        .with_kinks(s.breakpoints()[1..].to_vec());
    if s.is_nonincreasing() {
        f.decreasing()
    } else {
        f
    }
}

impl ProfileSpec {
    pub fn to_analytic(&self) -> Result<AnalyticFunction64> {
        Ok(match self {
            ProfileSpec::Exp { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(HarnessError::arg(format!("exp profile needs rate > 0, got {rate}")));
                }
                AnalyticFunction::exp_decay(*rate)
            }
            ProfileSpec::Power { exponent } => AnalyticFunction::power(*exponent),
            ProfileSpec::Indicator { .. } | ProfileSpec::Step(_) => step_profile(&self.to_step()?.expect("step data")),
        })
    }

    /// Step data when the profile is piecewise constant.
    pub fn to_step(&self) -> Result<Option<StepFunction64>> {
        Ok(match self {
            ProfileSpec::Indicator { end } => Some(StepFunction64::indicator(0.0, *end)?),
            ProfileSpec::Step(s) => Some(s.clone()),
            _ => None,
        })
    }

    pub fn to_func(&self) -> Result<Func<f64>> {
        Ok(match self.to_step()? {
            Some(s) => s.into(),
            None => self.to_analytic()?.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `k(sqrt(x² + y²))`.
    Radial { profile: ProfileSpec },
    /// `k(x + y)`.
    SumOfArguments { profile: ProfileSpec },
    /// `(x² + y²)^{-exponent}`, radial with profile `s^{-2·exponent}`.
    Riesz {
        #[serde(default = "three_quarters")]
        exponent: f64,
    },
    /// `(x - y)²`.
    SquaredDifference,
    Grid(Grid2DKernel64),
    /// `χ_{(0,x)}(y) / x`.
    Averaging,
    /// `χ_{(0,x)}(y)`.
    HardyIndicator,
}

impl KernelSpec {
    pub fn to_kernel(&self) -> Result<Kernel64> {
        Ok(match self {
            KernelSpec::Radial { profile } => AnalyticKernel::radial(profile.to_analytic()?).into(),
            KernelSpec::SumOfArguments { profile } => AnalyticKernel::sum_of_arguments(profile.to_analytic()?).into(),
            KernelSpec::Riesz { exponent } => {
                if !(*exponent > 0.0) {
                    return Err(HarnessError::arg(format!("riesz kernel needs exponent > 0, got {exponent}")));
                }
                AnalyticKernel::radial(AnalyticFunction::power(-2.0 * exponent)).into()
            }
            KernelSpec::SquaredDifference => AnalyticKernel::new(|x: f64, y: f64| (x - y) * (x - y)).into(),
            KernelSpec::Grid(g) => g.clone().into(),
            KernelSpec::Averaging => Kernel::Averaging,
            KernelSpec::HardyIndicator => Kernel::HardyIndicator,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Unit,
    /// `t^exponent`.
    Power { exponent: f64 },
    Exp {
        #[serde(default = "one")]
        rate: f64,
    },
    Step(StepFunction64),
}

impl WeightSpec {
    pub fn to_weight(&self) -> Result<Weight64> {
        Ok(match self {
            WeightSpec::Unit => Weight::unit(),
            WeightSpec::Power { exponent } => Weight::new(AnalyticFunction::power(*exponent))?,
            WeightSpec::Exp { rate } => Weight::new(AnalyticFunction::exp_decay(*rate))?,
            WeightSpec::Step(s) => Weight::step(s.clone()),
        })
    }
}

/// `ρ_{Φ,u}`, applied to `f*` when `lorentz` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub phi: NFunction64,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub lorentz: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDesc {
    Identity,
    Zero,
    /// `f ↦ (1/x) ∫₀ˣ f`.
    Averaging,
    HardyI,
    HardyI2,
    Kernel { kernel: KernelSpec },
    Associate { kernel: KernelSpec },
    STransform { kernel: KernelSpec },
    /// `f ↦ k ∗ f`.
    Convolution { k: StepFunction64 },
}

impl OperatorDesc {
    pub fn to_operator(&self) -> Result<OperatorSpec64> {
        Ok(match self {
            OperatorDesc::Identity => OperatorSpec::Identity,
            OperatorDesc::Zero => OperatorSpec::Zero,
            OperatorDesc::Averaging => OperatorSpec::Averaging,
            OperatorDesc::HardyI => OperatorSpec::HardyI,
            OperatorDesc::HardyI2 => OperatorSpec::HardyI2,
            OperatorDesc::Kernel { kernel } => OperatorSpec::Kernel(kernel.to_kernel()?),
            OperatorDesc::Associate { kernel } => OperatorSpec::Associate(kernel.to_kernel()?),
            OperatorDesc::STransform { kernel } => OperatorSpec::STransform(kernel.to_kernel()?),
            OperatorDesc::Convolution { k } => OperatorSpec::Convolution(k.clone()),
        })
    }
}

/// A member of a best-constant probe family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeInput {
    Step(StepFunction64),
    /// `t^exponent χ_{[0, end)}`.
    PowerBump {
        exponent: f64,
        #[serde(default = "one")]
        end: f64,
    },
}

/// Everything a scenario may hand to a suite or checker. Each suite reads
/// the fields it needs and rejects the scenario when a required one is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<StepFunction64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<StepFunction64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<NFunction64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<NFunction64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<NFunction64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_w: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PowerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Theorem7Form>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<NormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<NormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<ProbeInput>>,
    /// Slab count of generated step functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slabs: Option<usize>,
    /// Cells per axis of generated or discretized kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Random points per trial for pointwise suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

pub(crate) fn require<'a, T>(x: &'a Option<T>, name: &str, what: &str) -> Result<&'a T> {
    x.as_ref().ok_or_else(|| HarnessError::input(format!("{what} needs inputs.{name}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use orlicz_lorentz::funcspace::Monotonicity;

    #[test]
    fn descriptors_parse() {
        let p: ProfileSpec = serde_json::from_str(r#"{"kind":"step","breakpoints":[0,1,3],"values":[2,1]}"#).unwrap();
        let a = p.to_analytic().unwrap();
        assert_eq!((a.eval(0.5), a.eval(2.0), a.eval(3.5)), (2.0, 1.0, 0.0));
        assert_eq!(a.monotone(), Monotonicity::Decreasing);
        let bad = serde_json::from_str::<ProfileSpec>(r#"{"kind":"step","breakpoints":[0,1],"values":[-1]}"#);
        assert!(bad.is_err());
        let k: KernelSpec = serde_json::from_str(r#"{"kind":"riesz"}"#).unwrap();
        let k = k.to_kernel().unwrap();
        assert!((k.eval(3.0, 4.0) - 25f64.powf(-0.75)).abs() < 1e-15);
        let w: NormSpec = serde_json::from_str(r#"{"phi":{"kind":"power","p":2}}"#).unwrap();
        assert!(w.weight.to_weight().unwrap().is_unit() && !w.lorentz);
        let op: OperatorDesc = serde_json::from_str(r#"{"kind":"kernel","kernel":{"kind":"averaging"}}"#).unwrap();
        assert!(matches!(op.to_operator().unwrap(), OperatorSpec::Kernel(Kernel::Averaging)));
    }

    #[test]
    fn step_profile_primitive() {
        let s = StepFunction64::new(vec![0.0, 1.0, 2.0], vec![3.0, 1.0]).unwrap();
        let a = step_profile(&s);
        let i = a.integrate(0.5, 1.5, &Default::default()).unwrap().value();
        assert!((i - 2.0).abs() < 1e-14);
    }
}
