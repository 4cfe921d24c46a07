//! Semi-decision checkers for the boundedness conditions.
//!
//! Every checker sweeps a finite grid, computes at each point the smallest
//! constant that makes the inequality hold there, and reports the supremum
//! together with a verdict. A finite grid can exhibit a violation or a
//! divergent functional exactly but can only estimate that a condition
//! holds. Checkers work in `f64`.

mod growth;
mod hardy_type;
mod potential;
mod report;
mod solve;

pub use growth::{check_growth, grid_triples};
pub use hardy_type::{check_theorem10, check_theorem2, check_theorem7, Theorem7Form, WeightedSetup};
pub use potential::{
    check_power_conditions, check_theorem12, check_theorem4_orlicz, kantorovich_inner_norm, kantorovich_probe,
};
pub use report::{ConditionReport, GridAxes, Outcome, PointResult, PointStatus, RefinementStep, Verdict, Witness};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::log_grid;

/// Exponents `1 < p ≤ q < ∞` and the optional third index `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub r: Option<f64>,
}

impl PowerParams {
    pub fn new(p: f64, q: f64, r: Option<f64>) -> Result<Self> {
        let s = Self { p, q, r };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= self.q && self.q.is_finite()) {
            return Err(Error::arg(format!("need 1 < p <= q < inf, got p={}, q={}", self.p, self.q)));
        }
        if let Some(r) = self.r {
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::arg(format!("need 1 < r < inf, got r={r}")));
            }
        }
        Ok(())
    }

    pub fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn q_prime(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn r_prime(&self) -> Option<f64> {
        self.r.map(|r| r / (r - 1.0))
    }
}

/// The `λ` and `x` sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGrids {
    pub lambda: Vec<f64>,
    pub x: Vec<f64>,
}

impl Default for ConditionGrids {
    fn default() -> Self {
        Self {
            lambda: log_grid(1e-4, 1e4, 25),
            x: log_grid(1e-3, 1e3, 49),
        }
    }
}

impl ConditionGrids {
    pub fn log(lambda: (f64, f64, usize), x: (f64, f64, usize)) -> Self {
        Self {
            lambda: log_grid(lambda.0, lambda.1, lambda.2),
            x: log_grid(x.0, x.1, x.2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("lambda", &self.lambda), ("x", &self.x)] {
            if g.is_empty() || g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::arg(format!("{name} grid must be nonempty and positive")));
            }
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::arg(format!("{name} grid must be increasing")));
            }
        }
        Ok(())
    }

    fn axes(&self, second: &str) -> GridAxes {
        GridAxes {
            names: vec!["lambda".into(), second.into()],
            values: vec![self.lambda.clone(), self.x.clone()],
        }
    }
}

fn x_axes(name: &str, x: &[f64]) -> GridAxes {
    GridAxes {
        names: vec![name.into()],
        values: vec![x.to_vec()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_params() {
        let p = PowerParams::new(4.0 / 3.0, 4.0, None).unwrap();
        assert!((1.0 / p.p + 1.0 / p.p_prime() - 1.0).abs() < 1e-14);
        assert!((1.0 / p.q + 1.0 / p.q_prime() - 1.0).abs() < 1e-14);
        assert!(PowerParams::new(2.0, 1.5, None).is_err());
        assert!(PowerParams::new(1.0, 2.0, None).is_err());
        assert!(PowerParams::new(2.0, 2.0, Some(0.5)).is_err());
        assert_eq!(PowerParams::new(2.0, 3.0, Some(3.0)).unwrap().r_prime(), Some(1.5));
    }

    #[test]
    fn default_grids() {
        let g = ConditionGrids::default();
        assert_eq!((g.lambda.len(), g.x.len()), (25, 49));
        assert!((g.x[24] - 1.0).abs() < 1e-12);
        g.validate().unwrap();
        assert!(ConditionGrids { lambda: vec![], x: vec![1.0] }.validate().is_err());
    }
}
