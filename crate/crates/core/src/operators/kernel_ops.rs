use crate::error::{Error, Result};
use crate::funcspace::{
    quadrature::integrate_fn, Grid2DKernel, Kernel, KernelForm, Monotonicity, QuadratureSpec, StepFunction,
};
use crate::scalar::{compensated_sum, Scalar};

fn positive<S: Scalar>(x: S, what: &str) -> Result<()> {
    if x > S::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} must be positive and finite, got {x}")))
    }
}

/// `∫ₐᵇ h` by quadrature split at `breaks`, with `+inf` for divergence.
fn quad<S: Scalar>(h: &dyn Fn(S) -> S, a: S, b: S, breaks: &[S], q: &QuadratureSpec) -> Result<S> {
    Ok(integrate_fn(h, a, b, breaks, q)?.value())
}

/// Slab-wise `Σ v ∫_slab k(s) ds` for step `f`.
fn against_step<S: Scalar>(
    f: &StepFunction<S>,
    k: &dyn Fn(S) -> S,
    breaks: &[S],
    q: &QuadratureSpec,
) -> Result<S> {
    let mut terms = Vec::with_capacity(f.num_slabs());
    for (a, b, v) in f.slabs().filter(|s| s.2 > S::zero()) {
        let t = v * quad(k, a, b, breaks, q)?;
        if !t.is_finite() {
            return Ok(S::infinity());
        }
        terms.push(t);
    }
    Ok(compensated_sum(terms))
}

/// `(T_K f)(x) = ∫ K(x, y) f(y) dy`.
pub fn apply_kernel<S: Scalar>(kernel: &Kernel<S>, f: &StepFunction<S>, x: S, q: &QuadratureSpec) -> Result<S> {
    positive(x, "x")?;
    match kernel {
        Kernel::Grid(g) => Ok(match g.row_index(x) {
            Some(i) => g.row_section(i).product(f).integral(),
            None => S::zero(),
        }),
        Kernel::Averaging => Ok(f.cumulative(x) / x),
        Kernel::HardyIndicator => Ok(f.cumulative(x)),
        Kernel::Analytic(a) => {
            if let KernelForm::SumOfArguments(k) = a.form() {
                if k.has_primitive() {
                    // ∫ₐᵇ k(x + y) dy through the primitive of k.
                    let mut terms = Vec::new();
                    for (lo, hi, v) in f.slabs().filter(|s| s.2 > S::zero()) {
                        let r = k.integrate(x + lo, x + hi, q)?;
                        terms.push(v * r.value());
                    }
                    let s = compensated_sum(terms);
                    return Ok(if s.is_finite() { s } else { S::infinity() });
                }
            }
            let k = |y: S| a.eval(x, y);
            against_step(f, &k, &kernel.y_kinks(x), q)
        }
    }
}

/// `(T'_K g)(y) = ∫ K(x, y) g(x) dx`.
pub fn associate_apply<S: Scalar>(kernel: &Kernel<S>, g: &StepFunction<S>, y: S, q: &QuadratureSpec) -> Result<S> {
    positive(y, "y")?;
    match kernel {
        Kernel::Grid(k) => Ok(match k.col_index(y) {
            Some(j) => k.column_section(j).product(g).integral(),
            None => S::zero(),
        }),
        Kernel::Averaging => Ok(compensated_sum(g.slabs().filter(|s| s.1 > y).map(|(a, b, v)| {
            v * (b / a.max(y)).ln()
        }))),
        Kernel::HardyIndicator => Ok(g.integral_over(y, g.support_end().max(y))),
        Kernel::Analytic(a) => {
            let k = |x: S| a.eval(x, y);
            against_step(g, &k, &kernel.x_kinks(y), q)
        }
    }
}

/// `(Sg)(x) = ∫₀ˣ (T'_K g)(z) dz`.
pub fn s_transform<S: Scalar>(kernel: &Kernel<S>, g: &StepFunction<S>, x: S, q: &QuadratureSpec) -> Result<S> {
    positive(x, "x")?;
    match kernel {
        Kernel::Averaging => {
            let tail = associate_apply(kernel, g, x, q)?;
            Ok(g.cumulative(x) + x * tail)
        }
        // ∫₀ˣ ∫_z^∞ g = ∫ g(s) min(s, x) ds.
        Kernel::HardyIndicator => Ok(compensated_sum(g.slabs().map(|(a, b, v)| {
            let lo = a.min(x);
            let hi = b.min(x);
            v * ((hi * hi - lo * lo) * S::half() + x * (b - b.min(x).max(a)))
        }))),
        Kernel::Grid(k) => {
            let yb = k.y_breakpoints();
            let mut terms = Vec::new();
            for j in 0..k.ny() {
                let overlap = yb[j + 1].min(x) - yb[j];
                if overlap <= S::zero() {
                    break;
                }
                terms.push(k.column_section(j).product(g).integral() * overlap);
            }
            Ok(compensated_sum(terms))
        }
        Kernel::Analytic(_) => {
            let failure = std::cell::RefCell::new(None);
            let h = |z: S| {
                if z <= S::zero() {
                    return S::zero();
                }
                match associate_apply(kernel, g, z, q) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        S::nan()
                    }
                }
            };
            let breaks: Vec<S> = g.breakpoints()[1..].to_vec();
            // The inner integrals carry their own error, so the outer rule
            // cannot resolve below it.
            let outer = q.with_rel_tol(q.rel_tol.max(1e-6));
            let r = integrate_fn(&h, S::zero(), x, &breaks, &outer);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(r?.value())
        }
    }
}

/// `M₁` and `M₂` of a nonincreasing kernel `L`, with the operators `H₁`, `H₂`.
///
/// `M₁(x, y) = ∫₀ˣ L(y, z) dz` and `M₂(y, x) = ∫₀^{1/x} L(1/y, z) dz = M₁(1/x, 1/y)`.
#[derive(Debug, Clone)]
pub struct HardyKernels<S> {
    l: Kernel<S>,
    /// For grid `L`: per row, cumulative integrals at the column breakpoints.
    row_cumulative: Vec<Vec<S>>,
    q: QuadratureSpec,
}

pub fn build_hardy_kernels<S: Scalar>(l: &Kernel<S>) -> Result<HardyKernels<S>> {
    let q = QuadratureSpec::default();
    match l {
        Kernel::Grid(g) => {
            if !(g.is_nonincreasing_in_x() && g.is_nonincreasing_in_y()) {
                return Err(Error::pre("L must be nonincreasing in both variables"));
            }
            let yb = g.y_breakpoints();
            let row_cumulative = g
                .cell_values()
                .iter()
                .map(|row| {
                    let mut acc = S::zero();
                    let mut out = vec![S::zero()];
                    for (j, v) in row.iter().enumerate() {
                        acc += *v * (yb[j + 1] - yb[j]);
                        out.push(acc);
                    }
                    out
                })
                .collect();
            Ok(HardyKernels { l: l.clone(), row_cumulative, q })
        }
        Kernel::Analytic(a) => {
            if a.monotone_flags() != (Monotonicity::Decreasing, Monotonicity::Decreasing) {
                return Err(Error::pre("L must be flagged nonincreasing in both variables"));
            }
            Ok(HardyKernels { l: l.clone(), row_cumulative: Vec::new(), q })
        }
        Kernel::Averaging | Kernel::HardyIndicator => {
            Err(Error::pre("L must be nonincreasing in both variables"))
        }
    }
}

impl<S: Scalar> HardyKernels<S> {
    pub fn kernel(&self) -> &Kernel<S> {
        &self.l
    }

    /// `M₁(x, y) = ∫₀ˣ L(y, z) dz`.
    pub fn m1(&self, x: S, y: S) -> S {
        if !(x > S::zero()) || y < S::zero() {
            return S::zero();
        }
        match &self.l {
            Kernel::Grid(g) => {
                let Some(i) = g.row_index(y) else { return S::zero() };
                let yb = g.y_breakpoints();
                let cum = &self.row_cumulative[i];
                match g.col_index(x) {
                    None => *cum.last().unwrap(),
                    Some(j) => cum[j] + g.cell_values()[i][j] * (x - yb[j]),
                }
            }
            Kernel::Analytic(a) => {
                if let KernelForm::SumOfArguments(k) = a.form() {
                    if k.has_primitive() {
                        return k.integrate(y, y + x, &self.q).map(|r| r.value()).unwrap_or(S::nan());
                    }
                }
                let h = |z: S| a.eval(y, z);
                integrate_fn(&h, S::zero(), x, &[], &self.q).map(|r| r.value()).unwrap_or(S::nan())
            }
            _ => unreachable!("rejected at construction"),
        }
    }

    /// `M₂(y, x) = M₁(1/x, 1/y)`.
    pub fn m2(&self, y: S, x: S) -> S {
        if !(x > S::zero() && y > S::zero()) {
            return S::zero();
        }
        self.m1(x.recip(), y.recip())
    }

    /// `(H₁ f)(x) = ∫₀ˣ M₁(x, y) f(y) dy`.
    pub fn h1(&self, f: &StepFunction<S>, x: S) -> Result<S> {
        positive(x, "x")?;
        match &self.l {
            Kernel::Grid(g) => {
                // M₁(x, ·) is constant on the rows of L.
                let xb = g.x_breakpoints();
                let mut terms = Vec::new();
                for i in 0..g.nx() {
                    let (a, b) = (xb[i], xb[i + 1].min(x));
                    if b <= a {
                        break;
                    }
                    terms.push(self.m1(x, (a + b) * S::half()) * f.integral_over(a, b));
                }
                Ok(compensated_sum(terms))
            }
            _ => {
                let h = |y: S| self.m1(x, y) * f.eval(y);
                let breaks: Vec<S> = f.breakpoints()[1..].to_vec();
                quad(&h, S::zero(), x, &breaks, &self.q)
            }
        }
    }

    /// `(H₂ g)(y) = ∫₀^y M₂(y, x) g(x) dx`.
    pub fn h2(&self, g: &StepFunction<S>, y: S) -> Result<S> {
        positive(y, "y")?;
        let mut breaks: Vec<S> = g.breakpoints()[1..].to_vec();
        if let Kernel::Grid(l) = &self.l {
            breaks.extend(l.y_breakpoints()[1..].iter().map(|z| z.recip()));
            breaks.extend(l.x_breakpoints()[1..].iter().map(|z| z.recip()));
        }
        let h = |x: S| self.m2(y, x) * g.eval(x);
        quad(&h, S::zero(), y, &breaks, &self.q)
    }
}

/// Grid kernel from cell averages of an analytic kernel on the given grids,
/// using the cell midpoint.
pub fn midpoint_grid<S: Scalar>(kernel: &Kernel<S>, xs: Vec<S>, ys: Vec<S>) -> Result<Grid2DKernel<S>> {
    Grid2DKernel::from_midpoints(xs, ys, |x, y| kernel.eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{AnalyticFunction, AnalyticKernel};

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn chi() -> StepFunction<f64> {
        StepFunction::indicator(0.0, 1.0).unwrap()
    }

    fn unit_square() -> Kernel<f64> {
        Grid2DKernel::single_cell(0.0, 1.0, 0.0, 1.0, 1.0).unwrap().into()
    }

    fn exp_sum() -> Kernel<f64> {
        AnalyticKernel::sum_of_arguments(AnalyticFunction::exp_decay(1.0)).into()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_kernel(&Kernel::Averaging, &chi(), 2.0, &q()).unwrap(), 0.5);
        assert_eq!(apply_kernel(&unit_square(), &chi(), 0.5, &q()).unwrap(), 1.0);
        let e1 = (-1.0f64).exp();
        let expected = e1 * (1.0 - e1);
        let v = apply_kernel(&exp_sum(), &chi(), 1.0, &q()).unwrap();
        assert!((v - expected).abs() < 1e-14);
        let general: Kernel<f64> = AnalyticKernel::new(|x: f64, y: f64| (-(x + y)).exp()).into();
        let v = apply_kernel(&general, &chi(), 1.0, &q()).unwrap();
        assert!((v - expected).abs() < 1e-12);
        assert!(apply_kernel(&unit_square(), &chi(), 0.0, &q()).is_err());
    }

    #[test]
    fn associate_examples() {
        let g = StepFunction::new(vec![0.0, 0.5, 2.0], vec![2.0, 1.0]).unwrap();
        let v = associate_apply(&unit_square(), &g, 0.5, &q()).unwrap();
        assert_eq!(v, g.integral_over(0.0, 1.0));
        assert_eq!(associate_apply(&unit_square(), &g, 1.5, &q()).unwrap(), 0.0);
    }

    #[test]
    fn s_transform_examples() {
        let v = s_transform(&Kernel::Averaging, &chi(), 0.5, &q()).unwrap();
        assert!((v - (0.5 + 0.5 * 2f64.ln())).abs() < 1e-15);
        for &x in &[1.0, 3.0] {
            assert!((s_transform(&Kernel::Averaging, &chi(), x, &q()).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(s_transform(&Kernel::Averaging, &StepFunction::zero(), 0.7, &q()).unwrap(), 0.0);
    }

    #[test]
    fn s_transform_general_matches_closed_form() {
        // The averaging kernel written as an analytic kernel goes through quadrature.
        let avg: Kernel<f64> =
            AnalyticKernel::new(|x: f64, y: f64| if y < x { 1.0 / x } else { 0.0 }).into();
        let g = StepFunction::new(vec![0.0, 0.5, 2.0], vec![2.0, 1.0]).unwrap();
        for &x in &[0.3, 2.5] {
            let exact = s_transform(&Kernel::Averaging, &g, x, &q()).unwrap();
            let numeric = s_transform(&avg, &g, x, &q()).unwrap();
            assert!((exact - numeric).abs() < 1e-5 * exact, "x={x}: {exact} vs {numeric}");
        }
        let hardy = s_transform(&Kernel::HardyIndicator, &g, 1.0, &q()).unwrap();
        let ind: Kernel<f64> = AnalyticKernel::new(|x: f64, y: f64| if y < x { 1.0 } else { 0.0 }).into();
        let numeric = s_transform(&ind, &g, 1.0, &q()).unwrap();
        assert!((hardy - numeric).abs() < 1e-5, "{hardy} vs {numeric}");
    }

    #[test]
    fn hardy_kernels_from_exp_sum() {
        let hk = build_hardy_kernels(&exp_sum()).unwrap();
        for &(x, y) in &[(0.5, 0.2), (2.0, 1.0), (3.0, 0.1)] {
            let m1 = (-y as f64).exp() * (1.0 - (-x as f64).exp());
            assert!((hk.m1(x, y) - m1).abs() < 1e-14);
            let m2 = (-1.0 / y as f64).exp() * (1.0 - (-1.0 / x as f64).exp());
            assert!((hk.m2(y, x) - m2).abs() < 1e-14);
        }
    }

    #[test]
    fn hardy_kernels_unit_square() {
        let hk = build_hardy_kernels(&unit_square()).unwrap();
        for &x in &[0.25_f64, 0.5, 1.0, 2.0] {
            let expected = x.min(1.0) * x.min(1.0);
            assert!((hk.h1(&chi(), x).unwrap() - expected).abs() < 1e-15);
        }
        assert!(build_hardy_kernels(&Kernel::<f64>::HardyIndicator).is_err());
        let bad = Grid2DKernel::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(build_hardy_kernels(&bad.into()).is_err());
    }

    #[test]
    fn h2_matches_quadrature_of_definition() {
        let hk = build_hardy_kernels(&exp_sum()).unwrap();
        let g = StepFunction::new(vec![0.0, 0.5, 2.0], vec![2.0, 1.0]).unwrap();
        let y = 1.5_f64;
        let direct = |x: f64| (-1.0 / y).exp() * (1.0 - (-1.0 / x).exp()) * g.eval(x);
        let expected = integrate_fn(&direct, 0.0, y, &[0.5], &q()).unwrap().value();
        assert!((hk.h2(&g, y).unwrap() - expected).abs() < 1e-10);
    }
}
