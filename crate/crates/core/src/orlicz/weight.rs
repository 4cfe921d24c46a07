use crate::error::{Error, Result};
use crate::funcspace::{AnalyticFunction, Func, QuadratureSpec, StepFunction};
use crate::scalar::Scalar;

/// A locally integrable weight `u ≥ 0` on the half line with its
/// cumulative `U(x) = ∫₀ˣ u`.
#[derive(Debug, Clone)]
pub struct Weight<S> {
    density: Func<S>,
    infinite_mass: bool,
}

impl<S: Scalar> Weight<S> {
    /// `u ≡ 1`.
    pub fn unit() -> Self {
        Self {
            density: AnalyticFunction::constant(S::one()).into(),
            infinite_mass: true,
        }
    }

    /// Weight with the total-mass flag determined from the tail integral.
    pub fn new(density: impl Into<Func<S>>) -> Result<Self> {
        let density = density.into();
        let q = QuadratureSpec::default();
        let infinite_mass = match &density {
            Func::Step(_) => false,
            Func::Analytic(a) => {
                a.validate()?;
                density.integrate_tail(S::one(), &q)?.is_divergent() && a.domain_end().is_none()
            }
        };
        Ok(Self { density, infinite_mass })
    }

    /// Weight with a caller-declared total-mass flag; checked against the
    /// tail integral when that is decidable.
    pub fn with_mass_flag(density: impl Into<Func<S>>, infinite_mass: bool) -> Result<Self> {
        let density = density.into();
        if let Func::Step(_) = density {
            if infinite_mass {
                return Err(Error::InvalidWeight("step weights have finite mass".into()));
            }
        }
        Ok(Self { density, infinite_mass })
    }

    pub fn step(u: StepFunction<S>) -> Self {
        Self {
            density: u.into(),
            infinite_mass: false,
        }
    }

    pub fn density(&self) -> &Func<S> {
        &self.density
    }

    /// `∫_{ℝ₊} u = ∞`.
    pub fn has_infinite_mass(&self) -> bool {
        self.infinite_mass
    }

    pub fn is_unit(&self) -> bool {
        match &self.density {
            Func::Analytic(a) => {
                a.domain_end().is_none()
                    && a.tail_hint() == Some(crate::funcspace::TailHint::Power { exponent: 0.0 })
                    && a.eval(S::one()) == S::one()
                    && a.eval(S::lit(123.5)) == S::one()
            }
            Func::Step(_) => false,
        }
    }

    pub fn eval(&self, x: S) -> S {
        self.density.eval(x)
    }

    /// `U(x)`, `+inf` if `u` is not integrable near 0.
    pub fn cumulative(&self, x: S) -> Result<S> {
        if !(x >= S::zero()) {
            return Err(Error::arg("cumulative weight needs x >= 0"));
        }
        Ok(self.density.integrate(S::zero(), x, &QuadratureSpec::default())?.value())
    }

    /// `∫ₐᵇ u`.
    pub fn mass(&self, a: S, b: S) -> Result<S> {
        Ok(self.density.integrate(a, b, &QuadratureSpec::default())?.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_and_cumulative() {
        let u = Weight::<f64>::unit();
        assert!(u.has_infinite_mass() && u.is_unit());
        assert_eq!(u.cumulative(3.0).unwrap(), 3.0);
        let e = Weight::new(AnalyticFunction::exp_decay(1.0_f64)).unwrap();
        assert!(!e.has_infinite_mass());
        let inv = Weight::new(AnalyticFunction::power(-1.0_f64)).unwrap();
        assert!(inv.has_infinite_mass());
        assert_eq!(inv.cumulative(1.0).unwrap(), f64::INFINITY);
        let s = Weight::step(StepFunction::indicator(0.0_f64, 1.0).unwrap());
        assert!(!s.has_infinite_mass());
        assert_eq!(s.cumulative(5.0).unwrap(), 1.0);
        assert!(Weight::with_mass_flag(StepFunction::indicator(0.0_f64, 1.0).unwrap(), true).is_err());
    }
}
