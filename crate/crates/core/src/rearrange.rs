//! Distribution functions and decreasing rearrangements.
//!
//! Everything on step data is exact slab arithmetic: `f*` is obtained by
//! sorting slabs by value, and the iterated rearrangement of a grid kernel
//! sorts each section and re-grids on the union of the resulting
//! breakpoints. Ties merge into a single slab, so `f*` is the
//! right-continuous inverse `inf{λ : μ_f(λ) ≤ t}`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::funcspace::{
    quadrature::integrate_fn, AnalyticFunction, Grid2DKernel, Kernel, KernelForm, Monotonicity,
    QuadratureSpec, StepFunction, TailHint,
};
use crate::scalar::{compensated_sum, Scalar};

/// `f*` together with the measure of the support of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementResult<S> {
    pub star: StepFunction<S>,
    pub total_measure: S,
}

impl<S: Scalar> RearrangementResult<S> {
    /// `f**(t) = (1/t) ∫₀ᵗ f*`.
    pub fn double_star(&self, t: S) -> Result<S> {
        if !(t > S::zero()) {
            return Err(Error::arg("f** needs t > 0"));
        }
        Ok(self.star.cumulative(t) / t)
    }
}

/// `μ_f(λ) = |{x : f(x) > λ}|`.
pub fn distribution<S: Scalar>(f: &StepFunction<S>, lambda: S) -> Result<S> {
    if !(lambda >= S::zero()) {
        return Err(Error::arg("distribution needs λ >= 0"));
    }
    Ok(compensated_sum(
        f.slabs().filter(|(_, _, v)| *v > lambda).map(|(a, b, _)| b - a),
    ))
}

/// Sorts `(value, length)` pairs by value, merges ties and drops zeros.
fn sorted_slabs<S: Scalar>(pairs: impl Iterator<Item = (S, S)>) -> (Vec<S>, Vec<S>) {
    let mut v: Vec<(S, S)> = pairs.filter(|(val, len)| *val > S::zero() && *len > S::zero()).collect();
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut lengths: Vec<S> = Vec::with_capacity(v.len());
    let mut values: Vec<S> = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let val = v[i].0;
        let mut acc = Vec::new();
        while i < v.len() && v[i].0 == val {
            acc.push(v[i].1);
            i += 1;
        }
        values.push(val);
        lengths.push(compensated_sum(acc));
    }
    (lengths, values)
}

/// `f*`: slabs sorted by value, lengths preserved; exact.
pub fn decreasing_rearrangement<S: Scalar>(f: &StepFunction<S>) -> RearrangementResult<S> {
    let (lengths, values) = sorted_slabs(f.slabs().map(|(a, b, v)| (v, b - a)));
    let star = StepFunction::from_slabs(&lengths, values).expect("sorted slabs form a valid step");
    let total_measure = f.support_measure();
    RearrangementResult { star, total_measure }
}

/// `f**(t) = (1/t) ∫₀ᵗ f*`.
pub fn double_star<S: Scalar>(f: &StepFunction<S>, t: S) -> Result<S> {
    decreasing_rearrangement(f).double_star(t)
}

/// `Γ(n/2 + 1)^{1/n} / sqrt(π)`: the radius of the ball of volume `t` in
/// `R^n` is this constant times `t^{1/n}`.
pub fn radial_dilation(n: u32) -> f64 {
    let n = n as f64;
    libm::tgamma(n / 2.0 + 1.0).powf(1.0 / n) / std::f64::consts::PI.sqrt()
}

/// Rearrangement of `x ↦ k(|x|)` on `R^n`:
/// `k*(t) = k(Γ(n/2+1)^{1/n} π^{-1/2} t^{1/n})`.
pub fn radial_profile<S: Scalar>(k: &AnalyticFunction<S>, n: u32, t: S) -> Result<S> {
    if k.monotone() != Monotonicity::Decreasing {
        return Err(Error::pre("radial_profile needs a profile flagged decreasing"));
    }
    if n == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    if !(t > S::zero()) {
        return Err(Error::arg("radial_profile needs t > 0"));
    }
    let c = S::lit(radial_dilation(n));
    Ok(k.eval(c * t.powf(S::one() / S::from_count(n as usize))))
}

/// Sorted union of breakpoints with near-duplicates (within `1e-12` of the
/// span) merged.
fn merged_union<S: Scalar>(mut pts: Vec<S>) -> Vec<S> {
    pts.push(S::zero());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let span = pts.last().copied().unwrap_or(S::zero());
    let tol = S::lit(1e-12) * span;
    let mut out: Vec<S> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&q) if p - q <= tol => {}
            _ => out.push(p),
        }
    }
    if out.len() == 1 {
        out.push(S::one());
    }
    out
}

fn regrid<S: Scalar>(sections: &[StepFunction<S>], grid: &[S]) -> Vec<Vec<S>> {
    sections
        .iter()
        .map(|s| {
            grid.windows(2)
                .map(|w| s.eval((w[0] + w[1]) * S::half()))
                .collect()
        })
        .collect()
}

/// Rearranges every row of `k` in its second variable.
fn rearrange_rows<S: Scalar>(k: &Grid2DKernel<S>) -> Grid2DKernel<S> {
    let stars: Vec<StepFunction<S>> = (0..k.nx())
        .map(|i| decreasing_rearrangement(&k.row_section(i)).star)
        .collect();
    let union = merged_union(stars.iter().flat_map(|s| s.breakpoints().to_vec()).collect());
    let values = regrid(&stars, &union);
    Grid2DKernel::new(k.x_breakpoints().to_vec(), union, values).expect("row rearrangement is a valid grid")
}

/// `L(t, s) = (K^{*₂})^{*₁}(t, s)`: each `x`-section is rearranged in `y`,
/// then each resulting `s`-section is rearranged in `x`.
pub fn iterated_rearrangement<S: Scalar>(k: &Grid2DKernel<S>) -> Grid2DKernel<S> {
    let stage1 = rearrange_rows(k);
    let stage2 = rearrange_rows(&stage1.transpose()).transpose();
    stage2
        .with_flags(Monotonicity::Decreasing, Monotonicity::Decreasing)
        .expect("iterated rearrangement is nonincreasing in both variables")
}

/// Log-spaced grid `{0} ∪ [lo, hi]` used to discretize analytic kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGridSpec {
    pub lo: f64,
    pub hi: f64,
    /// Number of cells per axis.
    pub cells: usize,
}

impl Default for KernelGridSpec {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 1e3, cells: 256 }
    }
}

impl KernelGridSpec {
    pub fn breakpoints<S: Scalar>(&self) -> Result<Vec<S>> {
        if !(self.lo > 0.0 && self.hi > self.lo) || self.cells < 2 {
            return Err(Error::arg("kernel grid needs 0 < lo < hi and at least two cells"));
        }
        let mut b = vec![S::zero()];
        b.extend(crate::scalar::log_grid(S::lit(self.lo), S::lit(self.hi), self.cells));
        Ok(b)
    }
}

/// Midpoint discretization of any kernel on `spec` in both variables.
pub fn discretize_kernel<S: Scalar>(kernel: &Kernel<S>, spec: &KernelGridSpec) -> Result<Grid2DKernel<S>> {
    let b = spec.breakpoints::<S>()?;
    let g = Grid2DKernel::from_midpoints(b.clone(), b, |x, y| kernel.eval(x, y))?;
    let (mx, my) = kernel.monotone_flags();
    if (mx, my) != (Monotonicity::None, Monotonicity::None) {
        // Midpoint sampling preserves declared monotonicity.
        return g.with_flags(mx, my);
    }
    Ok(g)
}

/// Iterated rearrangement of an analytic kernel through [`discretize_kernel`].
pub fn iterated_rearrangement_of<S: Scalar>(kernel: &Kernel<S>, spec: &KernelGridSpec) -> Result<Grid2DKernel<S>> {
    Ok(iterated_rearrangement(&discretize_kernel(kernel, spec)?))
}

/// Which rearrangement of a bivariate kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BivariateMode {
    /// Rearrangement with respect to planar Lebesgue measure on the quarter plane.
    Planar,
    /// `K*(t) = k(t^{1/2})` for radial kernels `K = k(sqrt(x² + y²))`.
    SqrtProfile,
}

/// `K*(t) = inf{λ : |{(x, y) : K(x, y) > λ}| ≤ t}`.
pub fn bivariate_rearrangement<S: Scalar>(kernel: &Kernel<S>, t: S, mode: BivariateMode) -> Result<S> {
    if !(t > S::zero()) {
        return Err(Error::arg("bivariate rearrangement needs t > 0"));
    }
    match (kernel, mode) {
        (Kernel::Grid(g), BivariateMode::Planar) => Ok(grid_star(g, t)),
        (Kernel::Analytic(a), BivariateMode::SqrtProfile) => match a.form() {
            KernelForm::Radial(k) => Ok(k.eval(t.sqrt())),
            _ => Err(Error::pre("the sqrt-profile mode applies to radial kernels only")),
        },
        (Kernel::Analytic(a), BivariateMode::Planar) => match a.form() {
            KernelForm::Radial(k) => {
                check_profile_decays(k)?;
                // Quarter disc of radius r has area π r² / 4.
                Ok(k.eval(S::two() * (t / S::PI()).sqrt()))
            }
            KernelForm::SumOfArguments(k) => {
                check_profile_decays(k)?;
                // {x + y < r} has area r² / 2.
                Ok(k.eval((S::two() * t).sqrt()))
            }
            KernelForm::General => {
                let (mx, my) = a.monotone_flags();
                if mx != Monotonicity::Decreasing || my != Monotonicity::Decreasing {
                    return Err(Error::pre(
                        "planar rearrangement of a general analytic kernel needs it decreasing in both variables",
                    ));
                }
                let eval = a.evaluator();
                numeric_planar_star(&|x, y| eval(x, y), t)
            }
        },
        (Kernel::Grid(_), BivariateMode::SqrtProfile) => {
            Err(Error::pre("the sqrt-profile mode applies to radial kernels only"))
        }
        (Kernel::Averaging | Kernel::HardyIndicator, _) => Err(Error::NonRearrangeableLevel { level: 0.0 }),
    }
}

fn check_profile_decays<S: Scalar>(k: &AnalyticFunction<S>) -> Result<()> {
    if k.monotone() != Monotonicity::Decreasing {
        return Err(Error::pre("kernel profile must be flagged decreasing"));
    }
    if let Some(TailHint::Power { exponent }) = k.tail_hint() {
        if exponent >= 0.0 {
            let level = k.eval(S::lit(1e12)).as_f64();
            return Err(Error::NonRearrangeableLevel { level });
        }
    }
    Ok(())
}

fn grid_star<S: Scalar>(g: &Grid2DKernel<S>, t: S) -> S {
    let mut cells = g.weighted_cells();
    cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut acc = S::zero();
    for (v, area) in cells {
        acc += area;
        if acc > t {
            return v;
        }
    }
    S::zero()
}

/// Largest `s` with `g(s) > level` for nonincreasing `g`; `None` if unbounded.
fn level_edge<S: Scalar>(g: &dyn Fn(S) -> S, level: S) -> Option<S> {
    let tiny = S::lit(1e-300);
    if !(g(tiny) > level) {
        return Some(S::zero());
    }
    let mut hi = S::one();
    let cap = S::lit(1e15);
    while g(hi) > level {
        hi = hi * S::lit(4.0);
        if hi > cap {
            return None;
        }
    }
    let mut lo = if hi > S::one() { hi / S::lit(4.0) } else { tiny };
    if lo == tiny {
        // Search downward for a point above the level.
        let mut p = S::one();
        while !(g(p) > level) && p > tiny {
            p = p / S::lit(4.0);
        }
        lo = p;
    }
    for _ in 0..200 {
        let mid = if lo > S::zero() && hi / lo > S::lit(4.0) { (lo * hi).sqrt() } else { (lo + hi) * S::half() };
        if !(mid > lo && mid < hi) {
            break;
        }
        if g(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= S::lit(1e-14) * hi {
            break;
        }
    }
    Some(lo)
}

/// Planar measure of `{K > level}` for a kernel decreasing in both variables.
fn planar_measure<S: Scalar>(k: &dyn Fn(S, S) -> S, level: S) -> Result<S> {
    let x_end = level_edge(&|x| k(x, S::zero()), level)
        .ok_or(Error::NonRearrangeableLevel { level: level.as_f64() })?;
    if x_end == S::zero() {
        return Ok(S::zero());
    }
    // Probe for an unbounded section before integrating.
    let probe = x_end * S::half();
    if level_edge(&|y| k(probe, y), level).is_none() {
        return Err(Error::NonRearrangeableLevel { level: level.as_f64() });
    }
    let section = |x: S| level_edge(&|y| k(x, y), level).unwrap_or(S::infinity());
    let q = QuadratureSpec::default().with_rel_tol(1e-10);
    let r = integrate_fn(&section, S::zero(), x_end, &[], &q)?;
    if r.is_divergent() {
        return Err(Error::NonRearrangeableLevel { level: level.as_f64() });
    }
    Ok(r.value())
}

fn numeric_planar_star<S: Scalar>(k: &dyn Fn(S, S) -> S, t: S) -> Result<S> {
    // μ is nonincreasing in the level; bracket then bisect geometrically.
    let mut hi = S::one();
    while planar_measure(k, hi)? > t {
        hi = hi * S::lit(4.0);
        if hi > S::lit(1e200) {
            return Err(Error::arg("kernel level bracket overflow"));
        }
    }
    let mut lo = hi / S::lit(4.0);
    while planar_measure(k, lo)? <= t {
        lo = lo / S::lit(4.0);
        if lo < S::lit(1e-200) {
            return Ok(S::zero());
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if planar_measure(k, mid)? > t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= S::lit(1e-11) * hi {
            break;
        }
    }
    Ok(hi)
}
