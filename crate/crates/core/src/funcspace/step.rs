use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Nonnegative piecewise-constant function on `[0, inf)`.
///
/// Slab `i` is `[breakpoints[i], breakpoints[i+1])` with value `values[i]`;
/// the function is zero from the last breakpoint on. The zero function has
/// the single breakpoint `0` and no slabs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "StepRepr<S>",
    into = "StepRepr<S>",
    bound(serialize = "S: Scalar", deserialize = "S: Scalar")
)]
pub struct StepFunction<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct StepRepr<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> TryFrom<StepRepr<S>> for StepFunction<S> {
    type Error = Error;

    fn try_from(r: StepRepr<S>) -> Result<Self> {
        StepFunction::new(r.breakpoints, r.values)
    }
}

impl<S: Scalar> From<StepFunction<S>> for StepRepr<S> {
    fn from(f: StepFunction<S>) -> Self {
        StepRepr {
            breakpoints: f.breakpoints,
            values: f.values,
        }
    }
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidStepFunction(m.to_string()));
        if breakpoints.is_empty() {
            return bad("no breakpoints");
        }
        if breakpoints.len() != values.len() + 1 {
            return bad("expected one more breakpoint than values");
        }
        if breakpoints[0] != S::zero() {
            return bad("first breakpoint must be 0");
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return bad("breakpoints must be finite");
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("breakpoints must be strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite() || *v < S::zero()) {
            return bad("values must be finite and nonnegative");
        }
        Ok(Self { breakpoints, values })
    }

    /// Builds from consecutive slab lengths starting at 0.
    pub fn from_slabs(lengths: &[S], values: Vec<S>) -> Result<Self> {
        if lengths.len() != values.len() {
            return Err(Error::InvalidStepFunction(
                "lengths and values differ in length".into(),
            ));
        }
        let mut bps = Vec::with_capacity(lengths.len() + 1);
        bps.push(S::zero());
        let mut acc = S::zero();
        for &l in lengths {
            acc += l;
            bps.push(acc);
        }
        Self::new(bps, values)
    }

    pub fn zero() -> Self {
        Self {
            breakpoints: vec![S::zero()],
            values: Vec::new(),
        }
    }

    /// `c` on `[0, len)`.
    pub fn constant(c: S, len: S) -> Result<Self> {
        Self::new(vec![S::zero(), len], vec![c])
    }

    /// Characteristic function of `[a, b)`.
    pub fn indicator(a: S, b: S) -> Result<Self> {
        if !(a >= S::zero() && b > a) {
            return Err(Error::arg("indicator needs 0 <= a < b"));
        }
        if a == S::zero() {
            Self::new(vec![a, b], vec![S::one()])
        } else {
            Self::new(vec![S::zero(), a, b], vec![S::zero(), S::one()])
        }
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn num_slabs(&self) -> usize {
        self.values.len()
    }

    /// Right end of the last slab.
    pub fn support_end(&self) -> S {
        *self.breakpoints.last().expect("nonempty")
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == S::zero())
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::zero(), S::max)
    }

    /// `(start, end, value)` for every slab.
    pub fn slabs(&self) -> impl Iterator<Item = (S, S, S)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.breakpoints[i], self.breakpoints[i + 1], v))
    }

    /// Index of the slab containing `x`, if any.
    pub fn slab_index(&self, x: S) -> Option<usize> {
        if x < S::zero() || x >= self.support_end() {
            return None;
        }
        let k = self.breakpoints.partition_point(|t| *t <= x);
        Some(k - 1)
    }

    pub fn eval(&self, x: S) -> S {
        self.slab_index(x).map_or(S::zero(), |i| self.values[i])
    }

    /// Exact `∫₀^∞ f`, compensated.
    pub fn integral(&self) -> S {
        compensated_sum(self.slabs().map(|(a, b, v)| v * (b - a)))
    }

    /// Exact `∫ₐᵇ f` for `0 <= a <= b` (either may exceed the support).
    pub fn integral_over(&self, a: S, b: S) -> S {
        compensated_sum(self.slabs().filter_map(|(s, e, v)| {
            let lo = s.max(a);
            let hi = e.min(b);
            (hi > lo).then(|| v * (hi - lo))
        }))
    }

    /// `∫₀ᵗ f`.
    pub fn cumulative(&self, t: S) -> S {
        if t <= S::zero() {
            S::zero()
        } else {
            self.integral_over(S::zero(), t)
        }
    }

    /// Lebesgue measure of `{f > 0}`.
    pub fn support_measure(&self) -> S {
        compensated_sum(
            self.slabs()
                .filter(|(_, _, v)| *v > S::zero())
                .map(|(a, b, _)| b - a),
        )
    }

    pub fn scaled(&self, c: S) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|v| *v * c).collect(),
        )
    }

    /// Sorted union of both breakpoint sets.
    pub fn common_breakpoints(&self, other: &Self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), Some(&y)) if y < x => {
                    j += 1;
                    y
                }
                (Some(&x), Some(_)) => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    /// Pointwise combination `op(f, g)` on the common refinement.
    /// `op(0, 0)` must be 0 (checked) so the result keeps compact support.
    pub fn combine(&self, other: &Self, op: impl Fn(S, S) -> S) -> Result<Self> {
        if op(S::zero(), S::zero()) != S::zero() {
            return Err(Error::arg("combine: op(0, 0) must vanish"));
        }
        let bps = self.common_breakpoints(other);
        let values = bps
            .windows(2)
            .map(|w| {
                let mid = (w[0] + w[1]) * S::half();
                op(self.eval(mid), other.eval(mid))
            })
            .collect();
        Self::new(bps, values)
    }

    pub fn product(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a * b).expect("product of valid steps")
    }

    pub fn sum(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b).expect("sum of valid steps")
    }

    /// Merges adjacent equal slabs and trims trailing zero slabs.
    pub fn simplified(&self) -> Self {
        let mut bps = vec![S::zero()];
        let mut vals: Vec<S> = Vec::new();
        for (_, e, v) in self.slabs() {
            if vals.last() == Some(&v) {
                *bps.last_mut().unwrap() = e;
            } else {
                vals.push(v);
                bps.push(e);
            }
        }
        while vals.last() == Some(&S::zero()) {
            vals.pop();
            bps.pop();
        }
        Self {
            breakpoints: bps,
            values: vals,
        }
    }

    /// Checks `values` is nonincreasing.
    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StepFunction<f64> {
        StepFunction::new(vec![0.0, 1.0, 2.0, 2.5], vec![3.0, 1.0, 5.0]).unwrap()
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(StepFunction::<f64>::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(StepFunction::<f64>::new(vec![0.0, 2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(StepFunction::<f64>::new(vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(StepFunction::<f64>::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::<f64>::new(vec![0.0, f64::INFINITY], vec![1.0]).is_err());
    }

    #[test]
    fn eval_and_integrals() {
        let f = sample();
        assert_eq!(f.eval(0.5), 3.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.4), 5.0);
        assert_eq!(f.eval(2.5), 0.0);
        assert_eq!(f.integral(), 3.0 + 1.0 + 2.5);
        assert_eq!(f.integral_over(0.5, 1.5), 1.5 + 0.5);
        assert_eq!(f.cumulative(10.0), f.integral());
    }

    #[test]
    fn indicator_mass() {
        let chi = StepFunction::<f64>::indicator(0.0, 1.0).unwrap();
        assert_eq!(chi.integral_over(0.0, 2.0), 1.0);
        assert_eq!(chi.integral_over(0.0, 0.0), 0.0);
        let shifted = StepFunction::<f64>::indicator(1.0, 2.0).unwrap();
        assert_eq!(shifted.values(), &[0.0, 1.0]);
    }

    #[test]
    fn combine_refines() {
        let f = sample();
        let g = StepFunction::indicator(0.5, 2.2).unwrap();
        let p = f.product(&g);
        assert!((p.integral() - (0.5 * 3.0 + 1.0 + 0.2 * 5.0)).abs() < 1e-14);
        assert!(f.combine(&g, |a, b| a + b + 1.0).is_err());
    }

    #[test]
    fn simplify_merges_and_trims() {
        let f = StepFunction::new(vec![0.0, 1.0, 2.0, 3.0], vec![2.0, 2.0, 0.0]).unwrap();
        let s = f.simplified();
        assert_eq!(s.breakpoints(), &[0.0, 2.0]);
        assert_eq!(s.values(), &[2.0]);
    }

    #[test]
    fn json_shape() {
        let f = sample();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0,1.0,2.0,2.5],"values":[3.0,1.0,5.0]}"#);
        let back: StepFunction<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<StepFunction<f64>>(
            r#"{"breakpoints":[1.0,2.0],"values":[1.0]}"#
        )
        .is_err());
    }
}
