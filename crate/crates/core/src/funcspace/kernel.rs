use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::analytic::{AnalyticFunction, Monotonicity};
use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cellwise-constant kernel `K(x, y)` on a rectangular grid, zero outside.
///
/// `cell_values[i][j]` is the value on `[x_i, x_{i+1}) × [y_j, y_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "GridRepr<S>",
    into = "GridRepr<S>",
    bound(serialize = "S: Scalar", deserialize = "S: Scalar")
)]
pub struct Grid2DKernel<S> {
    x_breakpoints: Vec<S>,
    y_breakpoints: Vec<S>,
    cell_values: Vec<Vec<S>>,
    monotone_x: Monotonicity,
    monotone_y: Monotonicity,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct GridRepr<S> {
    x_breakpoints: Vec<S>,
    y_breakpoints: Vec<S>,
    cell_values: Vec<Vec<S>>,
    #[serde(default)]
    monotone_x: Monotonicity,
    #[serde(default)]
    monotone_y: Monotonicity,
}

impl<S: Scalar> TryFrom<GridRepr<S>> for Grid2DKernel<S> {
    type Error = Error;

    fn try_from(r: GridRepr<S>) -> Result<Self> {
        Grid2DKernel::new(r.x_breakpoints, r.y_breakpoints, r.cell_values)?
            .with_flags(r.monotone_x, r.monotone_y)
    }
}

impl<S: Scalar> From<Grid2DKernel<S>> for GridRepr<S> {
    fn from(k: Grid2DKernel<S>) -> Self {
        GridRepr {
            x_breakpoints: k.x_breakpoints,
            y_breakpoints: k.y_breakpoints,
            cell_values: k.cell_values,
            monotone_x: k.monotone_x,
            monotone_y: k.monotone_y,
        }
    }
}

fn check_axis<S: Scalar>(bps: &[S], name: &str) -> Result<()> {
    if bps.len() < 2 || bps[0] != S::zero() {
        return Err(Error::InvalidKernel(format!(
            "{name} breakpoints must start at 0 and have at least two entries"
        )));
    }
    if bps.iter().any(|t| !t.is_finite()) || bps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidKernel(format!(
            "{name} breakpoints must be finite and strictly increasing"
        )));
    }
    Ok(())
}

impl<S: Scalar> Grid2DKernel<S> {
    pub fn new(x_breakpoints: Vec<S>, y_breakpoints: Vec<S>, cell_values: Vec<Vec<S>>) -> Result<Self> {
        check_axis(&x_breakpoints, "x")?;
        check_axis(&y_breakpoints, "y")?;
        let (nx, ny) = (x_breakpoints.len() - 1, y_breakpoints.len() - 1);
        if cell_values.len() != nx || cell_values.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidKernel(format!(
                "cell_values must be {nx} rows of {ny} entries"
            )));
        }
        if cell_values.iter().flatten().any(|v| !v.is_finite() || *v < S::zero()) {
            return Err(Error::InvalidKernel("cell values must be finite and nonnegative".into()));
        }
        Ok(Self {
            x_breakpoints,
            y_breakpoints,
            cell_values,
            monotone_x: Monotonicity::None,
            monotone_y: Monotonicity::None,
        })
    }

    /// Declares per-axis monotonicity; rejected if the data contradicts it.
    pub fn with_flags(mut self, mx: Monotonicity, my: Monotonicity) -> Result<Self> {
        self.monotone_x = mx;
        self.monotone_y = my;
        let ok_x = match mx {
            Monotonicity::Decreasing => self.is_nonincreasing_in_x(),
            Monotonicity::Increasing => self.is_nondecreasing_in_x(),
            Monotonicity::None => true,
        };
        let ok_y = match my {
            Monotonicity::Decreasing => self.is_nonincreasing_in_y(),
            Monotonicity::Increasing => self.transpose().is_nondecreasing_in_x(),
            Monotonicity::None => true,
        };
        if ok_x && ok_y {
            Ok(self)
        } else {
            Err(Error::InvalidKernel("cell values contradict monotone flags".into()))
        }
    }

    /// Samples `k` at cell midpoints.
    pub fn from_midpoints(x_breakpoints: Vec<S>, y_breakpoints: Vec<S>, k: impl Fn(S, S) -> S) -> Result<Self> {
        let mid = |b: &[S], i: usize| (b[i] + b[i + 1]) * S::half();
        let values = (0..x_breakpoints.len().saturating_sub(1))
            .map(|i| {
                (0..y_breakpoints.len().saturating_sub(1))
                    .map(|j| k(mid(&x_breakpoints, i), mid(&y_breakpoints, j)))
                    .collect()
            })
            .collect();
        Self::new(x_breakpoints, y_breakpoints, values)
    }

    /// Value `c` on the single cell `[x0, x1) × [y0, y1)`.
    pub fn single_cell(x0: S, x1: S, y0: S, y1: S, c: S) -> Result<Self> {
        let axis = |a: S, b: S| {
            if a == S::zero() {
                (vec![a, b], 0)
            } else {
                (vec![S::zero(), a, b], 1)
            }
        };
        let (xb, ix) = axis(x0, x1);
        let (yb, iy) = axis(y0, y1);
        let mut values = vec![vec![S::zero(); yb.len() - 1]; xb.len() - 1];
        values[ix][iy] = c;
        Self::new(xb, yb, values)
    }

    pub fn x_breakpoints(&self) -> &[S] {
        &self.x_breakpoints
    }

    pub fn y_breakpoints(&self) -> &[S] {
        &self.y_breakpoints
    }

    pub fn cell_values(&self) -> &[Vec<S>] {
        &self.cell_values
    }

    pub fn nx(&self) -> usize {
        self.x_breakpoints.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_breakpoints.len() - 1
    }

    pub fn monotone_flags(&self) -> (Monotonicity, Monotonicity) {
        (self.monotone_x, self.monotone_y)
    }

    fn locate(bps: &[S], x: S) -> Option<usize> {
        if x < S::zero() || x >= *bps.last().unwrap() {
            None
        } else {
            Some(bps.partition_point(|t| *t <= x) - 1)
        }
    }

    pub fn row_index(&self, x: S) -> Option<usize> {
        Self::locate(&self.x_breakpoints, x)
    }

    pub fn col_index(&self, y: S) -> Option<usize> {
        Self::locate(&self.y_breakpoints, y)
    }

    pub fn eval(&self, x: S, y: S) -> S {
        match (self.row_index(x), self.col_index(y)) {
            (Some(i), Some(j)) => self.cell_values[i][j],
            _ => S::zero(),
        }
    }

    /// `y ↦ K(x, y)` for `x` in row `i`.
    pub fn row_section(&self, i: usize) -> StepFunction<S> {
        StepFunction::new(self.y_breakpoints.clone(), self.cell_values[i].clone())
            .expect("rows of a valid grid are valid steps")
    }

    /// `x ↦ K(x, y)` for `y` in column `j`.
    pub fn column_section(&self, j: usize) -> StepFunction<S> {
        StepFunction::new(
            self.x_breakpoints.clone(),
            self.cell_values.iter().map(|r| r[j]).collect(),
        )
        .expect("columns of a valid grid are valid steps")
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.ny())
            .map(|j| self.cell_values.iter().map(|r| r[j]).collect())
            .collect();
        Self {
            x_breakpoints: self.y_breakpoints.clone(),
            y_breakpoints: self.x_breakpoints.clone(),
            cell_values: values,
            monotone_x: self.monotone_y,
            monotone_y: self.monotone_x,
        }
    }

    pub fn is_nonincreasing_in_x(&self) -> bool {
        self.cell_values
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b <= a))
    }

    fn is_nondecreasing_in_x(&self) -> bool {
        self.cell_values
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b >= a))
    }

    pub fn is_nonincreasing_in_y(&self) -> bool {
        self.cell_values.iter().all(|r| r.windows(2).all(|w| w[1] <= w[0]))
    }

    /// Symmetric under `(x, y) -> (y, x)`.
    pub fn is_symmetric(&self) -> bool {
        self.x_breakpoints == self.y_breakpoints && self.transpose().cell_values == self.cell_values
    }

    /// `(value, area)` for every cell with positive value.
    pub fn weighted_cells(&self) -> Vec<(S, S)> {
        let mut out = Vec::new();
        for (i, row) in self.cell_values.iter().enumerate() {
            let dx = self.x_breakpoints[i + 1] - self.x_breakpoints[i];
            for (j, &v) in row.iter().enumerate() {
                if v > S::zero() {
                    out.push((v, dx * (self.y_breakpoints[j + 1] - self.y_breakpoints[j])));
                }
            }
        }
        out
    }
}

pub type KernelEvaluator<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;

/// Structural form of an analytic kernel, when known.
#[derive(Clone)]
pub enum KernelForm<S> {
    General,
    /// `K(x, y) = k(sqrt(x² + y²))`.
    Radial(AnalyticFunction<S>),
    /// `K(x, y) = k(x + y)`.
    SumOfArguments(AnalyticFunction<S>),
}

/// Closed-form kernel `K(x, y)`.
#[derive(Clone)]
pub struct AnalyticKernel<S> {
    eval: KernelEvaluator<S>,
    monotone_x: Monotonicity,
    monotone_y: Monotonicity,
    /// `K(x, y) ~ C(x) y^exponent` as `y -> inf`.
    y_tail_exponent: Option<f64>,
    form: KernelForm<S>,
}

impl<S> fmt::Debug for AnalyticKernel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match self.form {
            KernelForm::General => "general",
            KernelForm::Radial(_) => "radial",
            KernelForm::SumOfArguments(_) => "sum_of_arguments",
        };
        f.debug_struct("AnalyticKernel")
            .field("monotone_x", &self.monotone_x)
            .field("monotone_y", &self.monotone_y)
            .field("y_tail_exponent", &self.y_tail_exponent)
            .field("form", &form)
            .finish()
    }
}

impl<S: Scalar> AnalyticKernel<S> {
    pub fn new(k: impl Fn(S, S) -> S + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(k),
            monotone_x: Monotonicity::None,
            monotone_y: Monotonicity::None,
            y_tail_exponent: None,
            form: KernelForm::General,
        }
    }

    pub fn with_flags(mut self, mx: Monotonicity, my: Monotonicity) -> Self {
        self.monotone_x = mx;
        self.monotone_y = my;
        self
    }

    pub fn with_y_tail_exponent(mut self, exponent: f64) -> Self {
        self.y_tail_exponent = Some(exponent);
        self
    }

    /// `k(sqrt(x² + y²))`; monotone flags follow those of `k`.
    pub fn radial(k: AnalyticFunction<S>) -> Self {
        let inner = k.clone();
        let m = k.monotone();
        let tail = match k.tail_hint() {
            Some(super::quadrature::TailHint::Power { exponent }) => Some(exponent),
            _ => None,
        };
        let mut out = Self::new(move |x: S, y: S| inner.eval(x.hypot(y))).with_flags(m, m);
        out.y_tail_exponent = tail;
        out.form = KernelForm::Radial(k);
        out
    }

    /// `k(x + y)`.
    pub fn sum_of_arguments(k: AnalyticFunction<S>) -> Self {
        let inner = k.clone();
        let m = k.monotone();
        let tail = match k.tail_hint() {
            Some(super::quadrature::TailHint::Power { exponent }) => Some(exponent),
            _ => None,
        };
        let mut out = Self::new(move |x: S, y: S| inner.eval(x + y)).with_flags(m, m);
        out.y_tail_exponent = tail;
        out.form = KernelForm::SumOfArguments(k);
        out
    }

    pub fn eval(&self, x: S, y: S) -> S {
        (self.eval)(x, y)
    }

    pub fn evaluator(&self) -> KernelEvaluator<S> {
        self.eval.clone()
    }

    pub fn monotone_flags(&self) -> (Monotonicity, Monotonicity) {
        (self.monotone_x, self.monotone_y)
    }

    pub fn y_tail_exponent(&self) -> Option<f64> {
        self.y_tail_exponent
    }

    pub fn form(&self) -> &KernelForm<S> {
        &self.form
    }
}

/// Any bivariate kernel the operators accept.
#[derive(Debug, Clone)]
pub enum Kernel<S> {
    Grid(Grid2DKernel<S>),
    Analytic(AnalyticKernel<S>),
    /// `χ_{(0,x)}(y) / x`.
    Averaging,
    /// `χ_{(0,x)}(y)`.
    HardyIndicator,
}

impl<S: Scalar> From<Grid2DKernel<S>> for Kernel<S> {
    fn from(k: Grid2DKernel<S>) -> Self {
        Kernel::Grid(k)
    }
}

impl<S: Scalar> From<AnalyticKernel<S>> for Kernel<S> {
    fn from(k: AnalyticKernel<S>) -> Self {
        Kernel::Analytic(k)
    }
}

impl<S: Scalar> Kernel<S> {
    pub fn eval(&self, x: S, y: S) -> S {
        match self {
            Kernel::Grid(g) => g.eval(x, y),
            Kernel::Analytic(a) => a.eval(x, y),
            Kernel::Averaging => {
                if y > S::zero() && y < x {
                    S::one() / x
                } else {
                    S::zero()
                }
            }
            Kernel::HardyIndicator => {
                if y > S::zero() && y < x {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }

    /// Points in `y` where `K(x, ·)` may jump.
    pub fn y_kinks(&self, x: S) -> Vec<S> {
        match self {
            Kernel::Grid(g) => g.y_breakpoints()[1..].to_vec(),
            // Analytic kernels are split on the diagonal, where structure
            // such as χ_{(0,x)}(y) usually sits.
            Kernel::Analytic(_) => vec![x],
            Kernel::Averaging | Kernel::HardyIndicator => vec![x],
        }
    }

    /// Points in `x` where `K(·, y)` may jump.
    pub fn x_kinks(&self, y: S) -> Vec<S> {
        match self {
            Kernel::Grid(g) => g.x_breakpoints()[1..].to_vec(),
            Kernel::Analytic(_) => vec![y],
            Kernel::Averaging | Kernel::HardyIndicator => vec![y],
        }
    }

    /// Largest `y` with `K(x, y) > 0`, if bounded.
    pub fn y_support_end(&self, x: S) -> Option<S> {
        match self {
            Kernel::Grid(g) => Some(*g.y_breakpoints().last().unwrap()),
            Kernel::Analytic(_) => None,
            Kernel::Averaging | Kernel::HardyIndicator => Some(x),
        }
    }

    pub fn x_support_end(&self) -> Option<S> {
        match self {
            Kernel::Grid(g) => Some(*g.x_breakpoints().last().unwrap()),
            _ => None,
        }
    }

    pub fn monotone_flags(&self) -> (Monotonicity, Monotonicity) {
        match self {
            Kernel::Grid(g) => g.monotone_flags(),
            Kernel::Analytic(a) => a.monotone_flags(),
            Kernel::Averaging => (Monotonicity::None, Monotonicity::None),
            Kernel::HardyIndicator => (Monotonicity::Increasing, Monotonicity::Decreasing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid2DKernel::<f64>::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![1.0, 2.0]]).is_err());
        assert!(Grid2DKernel::<f64>::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![-1.0]]).is_err());
        let k = Grid2DKernel::<f64>::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(k.clone().with_flags(Monotonicity::Decreasing, Monotonicity::None).is_err());
        assert!(k.with_flags(Monotonicity::Increasing, Monotonicity::None).is_ok());
    }

    #[test]
    fn grid_eval_and_sections() {
        let k = Grid2DKernel::single_cell(1.0_f64, 2.0, 1.0, 2.0, 3.0).unwrap();
        assert_eq!(k.eval(1.5, 1.5), 3.0);
        assert_eq!(k.eval(0.5, 1.5), 0.0);
        assert_eq!(k.eval(2.0, 1.5), 0.0);
        assert_eq!(k.row_section(1).values(), &[0.0, 3.0]);
        assert_eq!(k.transpose().eval(1.5, 1.5), 3.0);
    }

    #[test]
    fn grid_json_round_trip() {
        let k = Grid2DKernel::single_cell(0.0_f64, 1.0, 0.0, 1.0, 1.0).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: Grid2DKernel<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        let bad = r#"{"x_breakpoints":[0,1],"y_breakpoints":[0,1],"cell_values":[[1,2]]}"#;
        assert!(serde_json::from_str::<Grid2DKernel<f64>>(bad).is_err());
    }

    #[test]
    fn special_kernels() {
        let avg = Kernel::<f64>::Averaging;
        assert_eq!(avg.eval(2.0, 1.0), 0.5);
        assert_eq!(avg.eval(2.0, 3.0), 0.0);
        let r = AnalyticKernel::radial(AnalyticFunction::exp_decay(1.0_f64));
        assert!((r.eval(3.0, 4.0) - (-5.0f64).exp()).abs() < 1e-15);
    }
}
