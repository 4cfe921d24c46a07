use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

use super::step::StepFunction;

/// Nonnegative continuous piecewise-linear function on the real line,
/// linear between consecutive knots and zero outside `[x_0, x_n]`.
///
/// Exact container for convolutions of step functions; its distribution
/// function and rearrangement integrals have closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<S> {
    xs: Vec<S>,
    ys: Vec<S>,
}

impl<S: Scalar> PiecewiseLinear<S> {
    pub fn new(xs: Vec<S>, ys: Vec<S>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::arg("knot vectors must be nonempty and of equal length"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("knots must be finite and strictly increasing"));
        }
        if ys.iter().any(|y| !y.is_finite() || *y < S::zero()) {
            return Err(Error::arg("knot values must be finite and nonnegative"));
        }
        Ok(Self { xs, ys })
    }

    pub fn knots(&self) -> impl Iterator<Item = (S, S)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn support(&self) -> (S, S) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segments(&self) -> impl Iterator<Item = (S, S, S, S)> + '_ {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (x[0], x[1], y[0], y[1]))
    }

    pub fn eval(&self, x: S) -> S {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return S::zero();
        }
        let k = self.xs.partition_point(|t| *t <= x);
        if k == 0 {
            return S::zero();
        }
        if k == self.xs.len() {
            return *self.ys.last().unwrap();
        }
        let (x0, x1, y0, y1) = (self.xs[k - 1], self.xs[k], self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn integral(&self) -> S {
        compensated_sum(self.segments().map(|(x0, x1, y0, y1)| (x1 - x0) * (y0 + y1) * S::half()))
    }

    /// Exact `∫ₐᵇ h`.
    pub fn integral_over(&self, a: S, b: S) -> S {
        compensated_sum(self.segments().filter_map(|(x0, x1, y0, y1)| {
            let lo = x0.max(a);
            let hi = x1.min(b);
            if hi <= lo {
                return None;
            }
            let at = |x: S| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            Some((hi - lo) * (at(lo) + at(hi)) * S::half())
        }))
    }

    /// `|{x : h(x) > λ}|`.
    pub fn distribution(&self, lambda: S) -> S {
        compensated_sum(self.segments().map(|(x0, x1, y0, y1)| {
            let dx = x1 - x0;
            match (y0 > lambda, y1 > lambda) {
                (true, true) => dx,
                (false, false) => S::zero(),
                (true, false) => dx * (y0 - lambda) / (y0 - y1),
                (false, true) => dx * (y1 - lambda) / (y1 - y0),
            }
        }))
    }

    /// `∫ (h - λ)₊`.
    fn excess(&self, lambda: S) -> S {
        compensated_sum(self.segments().map(|(x0, x1, y0, y1)| {
            let dx = x1 - x0;
            match (y0 > lambda, y1 > lambda) {
                (true, true) => dx * ((y0 + y1) * S::half() - lambda),
                (false, false) => S::zero(),
                (true, false) => dx * (y0 - lambda) / (y0 - y1) * (y0 - lambda) * S::half(),
                (false, true) => dx * (y1 - lambda) / (y1 - y0) * (y1 - lambda) * S::half(),
            }
        }))
    }

    /// `|{x : h(x) >= λ}|`, the left limit of the distribution at `λ > 0`.
    fn distribution_ge(&self, lambda: S) -> S {
        compensated_sum(self.segments().map(|(x0, x1, y0, y1)| {
            let dx = x1 - x0;
            match (y0 >= lambda, y1 >= lambda) {
                (true, true) => dx,
                (false, false) => S::zero(),
                (true, false) => dx * (y0 - lambda) / (y0 - y1),
                (false, true) => dx * (y1 - lambda) / (y1 - y0),
            }
        }))
    }

    /// Decreasing rearrangement `h*(t) = inf{λ ≥ 0 : μ(λ) ≤ t}`, exact.
    pub fn star(&self, t: S) -> S {
        let mut levels: Vec<S> = self.ys.iter().copied().filter(|y| *y > S::zero()).collect();
        levels.push(S::zero());
        levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
        levels.dedup();
        // Invariant at each window: μ(hi) <= t.
        for w in levels.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            let mu_hi_left = self.distribution_ge(hi);
            if t < mu_hi_left {
                return hi;
            }
            let mu_lo = self.distribution(lo);
            if mu_lo > t {
                // μ is linear on (lo, hi) between these two limits.
                return lo + (hi - lo) * (mu_lo - t) / (mu_lo - mu_hi_left);
            }
        }
        S::zero()
    }

    /// `∫₀ᵗ h*`, exact.
    pub fn star_integral(&self, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        let lambda = self.star(t);
        self.excess(lambda) + lambda * t
    }

    /// Cell averages on `resolution` equal cells over `[0, x_n]`.
    pub fn to_step(&self, resolution: usize) -> Result<StepFunction<S>> {
        if resolution == 0 {
            return Err(Error::arg("resolution must be positive"));
        }
        let (lo, hi) = self.support();
        if lo < S::zero() {
            return Err(Error::arg("resampling needs support in [0, inf)"));
        }
        let h = hi / S::from_count(resolution);
        let bps: Vec<S> = (0..=resolution)
            .map(|i| if i == resolution { hi } else { h * S::from_count(i) })
            .collect();
        let values = bps
            .windows(2)
            .map(|w| (self.integral_over(w[0], w[1]) / (w[1] - w[0])).max(S::zero()))
            .collect();
        StepFunction::new(bps, values)
    }
}
