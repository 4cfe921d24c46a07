use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_fn, integrate_tail_fn, Integral, QuadratureSpec, TailHint};
use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::scalar::{log_grid, Scalar};

pub type Evaluator<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// Declared monotonicity of a function or kernel axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Decreasing,
    Increasing,
    #[default]
    None,
}

/// Closed-form nonnegative function on `[0, domain_end)`, zero beyond.
#[derive(Clone)]
pub struct AnalyticFunction<S> {
    eval: Evaluator<S>,
    primitive: Option<Evaluator<S>>,
    domain_end: Option<S>,
    tail_hint: Option<TailHint>,
    monotone: Monotonicity,
    kinks: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for AnalyticFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFunction")
            .field("domain_end", &self.domain_end)
            .field("tail_hint", &self.tail_hint)
            .field("monotone", &self.monotone)
            .field("has_primitive", &self.primitive.is_some())
            .field("kinks", &self.kinks.len())
            .finish()
    }
}

impl<S: Scalar> AnalyticFunction<S> {
    pub fn new(f: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            primitive: None,
            domain_end: None,
            tail_hint: None,
            monotone: Monotonicity::None,
            kinks: Vec::new(),
        }
    }

    /// Antiderivative `P` with `P' = f` on the domain; used for exact integrals.
    pub fn with_primitive(mut self, p: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.primitive = Some(Arc::new(p));
        self
    }

    pub fn with_domain_end(mut self, end: S) -> Self {
        self.domain_end = Some(end);
        self
    }

    pub fn with_tail(mut self, hint: TailHint) -> Self {
        self.tail_hint = Some(hint);
        self
    }

    pub fn with_monotone(mut self, m: Monotonicity) -> Self {
        self.monotone = m;
        self
    }

    pub fn decreasing(self) -> Self {
        self.with_monotone(Monotonicity::Decreasing)
    }

    /// Points where the function is not smooth; quadrature splits there.
    pub fn with_kinks(mut self, mut kinks: Vec<S>) -> Self {
        kinks.retain(|k| k.is_finite() && *k > S::zero());
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kinks.dedup();
        self.kinks = kinks;
        self
    }

    /// `c` on all of `[0, inf)`.
    pub fn constant(c: S) -> Self {
        let exponent = 0.0;
        Self::new(move |_| c)
            .with_primitive(move |x| c * x)
            .with_tail(TailHint::Power { exponent })
            .with_monotone(Monotonicity::Decreasing)
    }

    /// `e^{-rate t}`.
    pub fn exp_decay(rate: S) -> Self {
        let r64 = rate.as_f64();
        Self::new(move |t: S| (-rate * t).exp())
            .with_primitive(move |t: S| -(-rate * t).exp() / rate)
            .with_tail(TailHint::Exponential { rate: r64 })
            .decreasing()
    }

    /// `t^exponent` on `(0, inf)`.
    pub fn power(exponent: S) -> Self {
        let e64 = exponent.as_f64();
        let prim = move |t: S| {
            if exponent == -S::one() {
                t.ln()
            } else {
                t.powf(exponent + S::one()) / (exponent + S::one())
            }
        };
        let mono = if exponent < S::zero() {
            Monotonicity::Decreasing
        } else if exponent > S::zero() {
            Monotonicity::Increasing
        } else {
            Monotonicity::None
        };
        let mut f = Self::new(move |t: S| t.powf(exponent))
            .with_tail(TailHint::Power { exponent: e64 })
            .with_monotone(mono);
        if exponent > -S::one() {
            f = f.with_primitive(move |t| if t <= S::zero() { S::zero() } else { prim(t) });
        }
        f
    }

    pub fn eval(&self, x: S) -> S {
        match self.domain_end {
            Some(end) if x >= end => S::zero(),
            _ if x < S::zero() => S::zero(),
            _ => (self.eval)(x),
        }
    }

    pub fn evaluator(&self) -> Evaluator<S> {
        self.eval.clone()
    }

    pub fn domain_end(&self) -> Option<S> {
        self.domain_end
    }

    pub fn tail_hint(&self) -> Option<TailHint> {
        if self.domain_end.is_some() {
            return None;
        }
        self.tail_hint
    }

    pub fn monotone(&self) -> Monotonicity {
        self.monotone
    }

    pub fn kinks(&self) -> &[S] {
        &self.kinks
    }

    pub fn has_primitive(&self) -> bool {
        self.primitive.is_some()
    }

    /// Spot-checks finiteness, nonnegativity and the monotone flag on a
    /// log grid over the domain.
    pub fn validate(&self) -> Result<()> {
        let hi = self.domain_end.unwrap_or(S::lit(1e6));
        let lo = (hi * S::lit(1e-9)).min(S::lit(1e-6));
        let grid = log_grid(lo, hi * S::lit(0.999_999), 64);
        let vals: Vec<S> = grid.iter().map(|&x| self.eval(x)).collect();
        if let Some((x, v)) = grid
            .iter()
            .zip(&vals)
            .find(|(_, v)| !v.is_finite() || **v < S::zero())
        {
            return Err(Error::EvaluatorFailure {
                cell_start: x.as_f64(),
                cell_end: x.as_f64(),
                detail: format!("value {v} is not finite and nonnegative"),
            });
        }
        let tol = |a: S, b: S| S::lit(1e-12) * a.abs().max(b.abs());
        let contradiction = match self.monotone {
            Monotonicity::Decreasing => vals.windows(2).any(|w| w[1] > w[0] + tol(w[0], w[1])),
            Monotonicity::Increasing => vals.windows(2).any(|w| w[1] + tol(w[0], w[1]) < w[0]),
            Monotonicity::None => false,
        };
        if contradiction {
            return Err(Error::pre(format!(
                "spot checks contradict the {:?} monotone flag",
                self.monotone
            )));
        }
        Ok(())
    }

    pub fn integrate(&self, a: S, b: S, q: &QuadratureSpec) -> Result<Integral<S>> {
        if !(S::zero() <= a && a <= b) {
            return Err(Error::arg(format!("need 0 <= a <= b, got [{a}, {b}]")));
        }
        let b = self.domain_end.map_or(b, |end| b.min(end));
        if a >= b {
            return Ok(Integral::exact(S::zero()));
        }
        if let Some(p) = &self.primitive {
            let v = p(b) - p(a);
            return Ok(if v.is_finite() {
                Integral::exact(v.max(S::zero()))
            } else {
                Integral::Divergent { partial: S::zero() }
            });
        }
        let g = |x: S| (self.eval)(x);
        integrate_fn(&g, a, b, &self.kinks, q)
    }

    pub fn integrate_tail(&self, a: S, q: &QuadratureSpec) -> Result<Integral<S>> {
        if !(a >= S::zero()) {
            return Err(Error::arg("tail integral needs a >= 0"));
        }
        if let Some(end) = self.domain_end {
            return self.integrate(a, end.max(a), q);
        }
        if let Some(TailHint::Power { exponent }) = self.tail_hint {
            if exponent >= -1.0 {
                return Ok(Integral::Divergent { partial: S::zero() });
            }
        }
        let g = |x: S| (self.eval)(x);
        integrate_tail_fn(&g, a, &self.kinks, self.tail_hint, q)
    }
}

/// A nonnegative function on the half line in either representation.
#[derive(Debug, Clone)]
pub enum Func<S> {
    Step(StepFunction<S>),
    Analytic(AnalyticFunction<S>),
}

impl<S: Scalar> From<StepFunction<S>> for Func<S> {
    fn from(f: StepFunction<S>) -> Self {
        Func::Step(f)
    }
}

impl<S: Scalar> From<AnalyticFunction<S>> for Func<S> {
    fn from(f: AnalyticFunction<S>) -> Self {
        Func::Analytic(f)
    }
}

impl<S: Scalar> Func<S> {
    pub fn eval(&self, x: S) -> S {
        match self {
            Func::Step(f) => f.eval(x),
            Func::Analytic(f) => f.eval(x),
        }
    }

    /// Breakpoints / kinks inside `(0, inf)`.
    pub fn kinks(&self) -> Vec<S> {
        match self {
            Func::Step(f) => f.breakpoints()[1..].to_vec(),
            Func::Analytic(f) => {
                let mut k = f.kinks().to_vec();
                if let Some(end) = f.domain_end() {
                    k.push(end);
                }
                k
            }
        }
    }

    /// End of the support if it is known to be bounded.
    pub fn support_end(&self) -> Option<S> {
        match self {
            Func::Step(f) => Some(f.support_end()),
            Func::Analytic(f) => f.domain_end(),
        }
    }

    pub fn tail_hint(&self) -> Option<TailHint> {
        match self {
            Func::Step(_) => None,
            Func::Analytic(f) => f.tail_hint(),
        }
    }

    pub fn monotone(&self) -> Monotonicity {
        match self {
            Func::Step(f) if f.is_nonincreasing() => Monotonicity::Decreasing,
            Func::Step(_) => Monotonicity::None,
            Func::Analytic(f) => f.monotone(),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(self, Func::Step(f) if f.is_zero())
    }

    pub fn integrate(&self, a: S, b: S, q: &QuadratureSpec) -> Result<Integral<S>> {
        integrate(self, a, b, q)
    }

    pub fn integrate_tail(&self, a: S, q: &QuadratureSpec) -> Result<Integral<S>> {
        integrate_tail(self, a, q)
    }
}

/// `∫ₐᵇ f`: exact slab sum for step data, adaptive quadrature otherwise.
pub fn integrate<S: Scalar>(f: &Func<S>, a: S, b: S, q: &QuadratureSpec) -> Result<Integral<S>> {
    if !(S::zero() <= a && a <= b) {
        return Err(Error::arg(format!("need 0 <= a <= b, got [{a}, {b}]")));
    }
    match f {
        Func::Step(s) => Ok(Integral::exact(s.integral_over(a, b))),
        Func::Analytic(g) => g.integrate(a, b, q),
    }
}

/// `∫ₐ^∞ f`; divergence is returned as [`Integral::Divergent`].
pub fn integrate_tail<S: Scalar>(f: &Func<S>, a: S, q: &QuadratureSpec) -> Result<Integral<S>> {
    if !(a >= S::zero()) {
        return Err(Error::arg("tail integral needs a >= 0"));
    }
    match f {
        Func::Step(s) => Ok(Integral::exact(s.integral_over(a, s.support_end().max(a)))),
        Func::Analytic(g) => g.integrate_tail(a, q),
    }
}

/// Cell averages of `f` on `grid` (strictly increasing from 0).
pub fn discretize<S: Scalar>(
    f: &AnalyticFunction<S>,
    grid: &[S],
    q: &QuadratureSpec,
) -> Result<StepFunction<S>> {
    if grid.len() < 2 || grid[0] != S::zero() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("discretize grid must be strictly increasing from 0"));
    }
    let mut values = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let cell_err = |detail: String| Error::EvaluatorFailure {
            cell_start: w[0].as_f64(),
            cell_end: w[1].as_f64(),
            detail,
        };
        let r = f.integrate(w[0], w[1], q).map_err(|e| cell_err(e.to_string()))?;
        if r.is_divergent() {
            return Err(cell_err("cell integral diverges".into()));
        }
        let v = r.value() / (w[1] - w[0]);
        if !v.is_finite() || v < S::zero() {
            return Err(cell_err(format!("cell average {v}")));
        }
        values.push(v);
    }
    StepFunction::new(grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn integrate_examples() {
        let chi: Func<f64> = StepFunction::indicator(0.0, 1.0).unwrap().into();
        assert_eq!(integrate(&chi, 0.0, 2.0, &q()).unwrap().value(), 1.0);
        assert_eq!(integrate(&chi, 0.0, 0.0, &q()).unwrap().value(), 0.0);
        let bare: Func<f64> = AnalyticFunction::new(|t: f64| (-t).exp()).into();
        let v = integrate(&bare, 0.0, 1.0, &q()).unwrap().value();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-11);
        assert!(integrate(&chi, 2.0, 1.0, &q()).is_err());
    }

    #[test]
    fn tail_examples() {
        let inv_sq: Func<f64> = AnalyticFunction::new(|t: f64| t.powi(-2)).into();
        assert!((integrate_tail(&inv_sq, 1.0, &q()).unwrap().value() - 1.0).abs() < 1e-10);
        let chi: Func<f64> = StepFunction::indicator(0.0, 1.0).unwrap().into();
        assert_eq!(integrate_tail(&chi, 2.0, &q()).unwrap().value(), 0.0);
        let harmonic: Func<f64> = AnalyticFunction::new(|t: f64| 1.0 / t).into();
        assert!(integrate_tail(&harmonic, 1.0, &q()).unwrap().is_divergent());
        let hinted: Func<f64> = AnalyticFunction::power(-1.0).into();
        assert!(integrate_tail(&hinted, 1.0, &q()).unwrap().is_divergent());
    }

    #[test]
    fn discretize_examples() {
        let c = AnalyticFunction::constant(2.5_f64);
        let s = discretize(&c, &[0.0, 0.5, 3.0], &q()).unwrap();
        assert_eq!(s.values(), &[2.5, 2.5]);
        let e = AnalyticFunction::new(|t: f64| (-t).exp());
        let s = discretize(&e, &[0.0, 1.0], &q()).unwrap();
        assert!((s.values()[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let chi = AnalyticFunction::constant(1.0_f64).with_domain_end(1.0);
        let s = discretize(&chi, &[0.0, 1.0, 2.0], &q()).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0]);
    }

    #[test]
    fn discretize_names_failing_cell() {
        let bad = AnalyticFunction::new(|t: f64| if t > 1.0 { f64::NAN } else { 1.0 });
        match discretize(&bad, &[0.0, 1.0, 2.0], &q()) {
            Err(Error::EvaluatorFailure { cell_start, cell_end, .. }) => {
                assert_eq!((cell_start, cell_end), (1.0, 2.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validate_catches_bad_flag() {
        let f = AnalyticFunction::new(|t: f64| t).decreasing();
        assert!(f.validate().is_err());
        assert!(AnalyticFunction::exp_decay(1.0_f64).validate().is_ok());
    }
}
