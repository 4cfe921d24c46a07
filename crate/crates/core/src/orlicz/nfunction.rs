use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An N-function `Φ(t) = ∫₀ᵗ φ` with `φ` nondecreasing from 0 onto `[0, inf)`.
///
/// `Exp` is `e^t - 1 - t` and `LLogL` is `(1 + t) ln(1 + t) - t`; the two are
/// complementary. `Generic` tabulates `φ` as a piecewise-linear map through
/// `phi_knots`, extended beyond the last knot with the last slope. Equal
/// consecutive abscissae encode a jump of `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NFunctionRepr<S>", into = "NFunctionRepr<S>", bound = "S: Scalar")]
pub enum NFunction<S> {
    /// `scale · t^p`, `p > 1`.
    Power { p: S, scale: S },
    Exp,
    LLogL,
    Generic { phi_knots: Vec<[S; 2]> },
}

fn unit<S: Scalar>() -> S {
    S::one()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar")]
enum NFunctionRepr<S> {
    Power {
        p: S,
        #[serde(default = "unit")]
        scale: S,
    },
    Exp,
    #[serde(rename = "llogl")]
    LLogL,
    Generic { phi_knots: Vec<[S; 2]> },
}

impl<S: Scalar> TryFrom<NFunctionRepr<S>> for NFunction<S> {
    type Error = Error;
    fn try_from(r: NFunctionRepr<S>) -> Result<Self> {
        let f = match r {
            NFunctionRepr::Power { p, scale } => NFunction::Power { p, scale },
            NFunctionRepr::Exp => NFunction::Exp,
            NFunctionRepr::LLogL => NFunction::LLogL,
            NFunctionRepr::Generic { phi_knots } => NFunction::Generic { phi_knots },
        };
        f.validate()?;
        Ok(f)
    }
}

impl<S: Scalar> From<NFunction<S>> for NFunctionRepr<S> {
    fn from(f: NFunction<S>) -> Self {
        match f {
            NFunction::Power { p, scale } => NFunctionRepr::Power { p, scale },
            NFunction::Exp => NFunctionRepr::Exp,
            NFunction::LLogL => NFunctionRepr::LLogL,
            NFunction::Generic { phi_knots } => NFunctionRepr::Generic { phi_knots },
        }
    }
}

/// Evaluates the piecewise-linear map through `knots` (columns `a`, `b`)
/// at `x`, extended linearly past the last knot.
fn pl_eval<S: Scalar>(knots: &[[S; 2]], a: usize, b: usize, x: S) -> S {
    let i = knots.partition_point(|k| k[a] <= x).saturating_sub(1);
    let n = knots.len();
    let (lo, hi) = if i + 1 >= n { (knots[n - 2], knots[n - 1]) } else { (knots[i], knots[i + 1]) };
    if hi[a] == lo[a] {
        return hi[b];
    }
    lo[b] + (hi[b] - lo[b]) * (x - lo[a]) / (hi[a] - lo[a])
}

/// `∫₀ˣ` of the same map.
fn pl_integral<S: Scalar>(knots: &[[S; 2]], a: usize, b: usize, x: S) -> S {
    let mut acc = S::zero();
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if x <= lo[a] {
            return acc;
        }
        if hi[a] == lo[a] {
            continue;
        }
        let end = x.min(hi[a]);
        let at_end = lo[b] + (hi[b] - lo[b]) * (end - lo[a]) / (hi[a] - lo[a]);
        acc += (end - lo[a]) * (lo[b] + at_end) * S::half();
        if x <= hi[a] {
            return acc;
        }
    }
    let (lo, hi) = (knots[knots.len() - 2], knots[knots.len() - 1]);
    let slope = (hi[b] - lo[b]) / (hi[a] - lo[a]);
    let d = x - hi[a];
    acc + hi[b] * d + slope * d * d * S::half()
}

/// Largest-bracket bisection for the inverse of an increasing `f` with
/// `f(0) = 0`.
fn invert_increasing<S: Scalar>(f: impl Fn(S) -> S, y: S) -> S {
    if y <= S::zero() {
        return S::zero();
    }
    if !y.is_finite() {
        return S::infinity();
    }
    let mut hi = S::one();
    while f(hi) < y {
        hi = hi * S::two();
        if !hi.is_finite() {
            return S::infinity();
        }
    }
    let mut lo = hi * S::half();
    while f(lo) >= y && lo > S::min_positive_value() {
        hi = lo;
        lo = lo * S::half();
    }
    for _ in 0..200 {
        let mid = (lo + hi) * S::half();
        if !(mid > lo && mid < hi) {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * S::half()
}

impl<S: Scalar> NFunction<S> {
    /// `t^p`.
    pub fn power(p: S) -> Result<Self> {
        Self::scaled_power(p, S::one())
    }

    /// `scale · t^p`.
    pub fn scaled_power(p: S, scale: S) -> Result<Self> {
        let f = NFunction::Power { p, scale };
        f.validate()?;
        Ok(f)
    }

    pub fn generic(phi_knots: Vec<[S; 2]>) -> Result<Self> {
        let f = NFunction::Generic { phi_knots };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NFunction::Power { p, scale } => {
                if !(*p > S::one() && p.is_finite()) {
                    return Err(Error::InvalidNFunction(format!("power exponent must exceed 1, got {p}")));
                }
                if !(*scale > S::zero() && scale.is_finite()) {
                    return Err(Error::InvalidNFunction(format!("scale must be positive, got {scale}")));
                }
                Ok(())
            }
            NFunction::Exp | NFunction::LLogL => Ok(()),
            NFunction::Generic { phi_knots: k } => {
                if k.len() < 2 {
                    return Err(Error::InvalidNFunction("need at least two knots".into()));
                }
                if k[0] != [S::zero(), S::zero()] {
                    return Err(Error::InvalidNFunction("first knot must be (0, 0)".into()));
                }
                if k.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidNFunction("knots must be finite".into()));
                }
                if k.windows(2).any(|w| w[1][0] < w[0][0] || w[1][1] < w[0][1]) {
                    return Err(Error::InvalidNFunction("knots must be nondecreasing in both coordinates".into()));
                }
                if k.windows(2).any(|w| w[1] == w[0]) {
                    return Err(Error::InvalidNFunction("repeated knot".into()));
                }
                let (lo, hi) = (k[k.len() - 2], k[k.len() - 1]);
                if !(hi[0] > lo[0] && hi[1] > lo[1]) {
                    return Err(Error::InvalidNFunction(
                        "last segment must have a finite positive slope".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The generator `φ`.
    pub fn phi(&self, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        match self {
            NFunction::Power { p, scale } => *scale * *p * t.powf(*p - S::one()),
            NFunction::Exp => t.exp_m1(),
            NFunction::LLogL => t.ln_1p(),
            NFunction::Generic { phi_knots } => pl_eval(phi_knots, 0, 1, t),
        }
    }

    /// `φ^{-1}`, the generator of the complementary function.
    pub fn phi_inverse(&self, s: S) -> S {
        if s <= S::zero() {
            return S::zero();
        }
        match self {
            NFunction::Power { p, scale } => (s / (*scale * *p)).powf(S::one() / (*p - S::one())),
            NFunction::Exp => s.ln_1p(),
            NFunction::LLogL => s.exp_m1(),
            NFunction::Generic { phi_knots } => pl_eval(phi_knots, 1, 0, s),
        }
    }

    /// `Φ(t)`; `+inf` on overflow.
    pub fn eval(&self, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        if !t.is_finite() {
            return S::infinity();
        }
        match self {
            NFunction::Power { p, scale } => *scale * t.powf(*p),
            NFunction::Exp => {
                if t < S::lit(1e-4) {
                    // Series avoids cancellation in e^t - 1 - t.
                    t * t * S::half() * (S::one() + t / S::lit(3.0) * (S::one() + t / S::lit(4.0)))
                } else {
                    t.exp() - S::one() - t
                }
            }
            NFunction::LLogL => {
                if t < S::lit(1e-4) {
                    t * t * S::half() * (S::one() - t / S::lit(3.0) * (S::one() - t / S::two()))
                } else {
                    (S::one() + t) * t.ln_1p() - t
                }
            }
            NFunction::Generic { phi_knots } => pl_integral(phi_knots, 0, 1, t),
        }
    }

    /// `Φ^{-1}(y)`.
    pub fn inverse(&self, y: S) -> S {
        if y <= S::zero() {
            return S::zero();
        }
        match self {
            NFunction::Power { p, scale } => (y / *scale).powf(S::one() / *p),
            _ => invert_increasing(|t| self.eval(t), y),
        }
    }

    /// The complementary function `Ψ(s) = ∫₀ˢ φ^{-1}`.
    pub fn complementary(&self) -> Self {
        match self {
            NFunction::Power { p, scale } => {
                let q = *p / (*p - S::one());
                let b = (*scale * *p).powf(-(q - S::one())) / q;
                NFunction::Power { p: q, scale: b }
            }
            NFunction::Exp => NFunction::LLogL,
            NFunction::LLogL => NFunction::Exp,
            NFunction::Generic { phi_knots } => NFunction::Generic {
                phi_knots: phi_knots.iter().map(|k| [k[1], k[0]]).collect(),
            },
        }
    }

    /// `Φ(2t) ≤ C Φ(t)` for all `t > 0`, so a divergent modular diverges
    /// for every λ.
    pub fn is_globally_delta2(&self) -> bool {
        match self {
            NFunction::Power { .. } | NFunction::LLogL => true,
            NFunction::Exp => false,
            NFunction::Generic { phi_knots } => phi_knots[1][1] > S::zero(),
        }
    }

    /// `(scale, p)` when `Φ` is a power.
    pub fn as_power(&self) -> Option<(S, S)> {
        match self {
            NFunction::Power { p, scale } => Some((*scale, *p)),
            _ => None,
        }
    }

    /// Exponent `e` with `Φ(s) ≍ s^e` as `s → 0`, if known.
    pub fn small_argument_exponent(&self) -> Option<f64> {
        match self {
            NFunction::Power { p, .. } => Some(p.as_f64()),
            NFunction::Exp | NFunction::LLogL => Some(2.0),
            NFunction::Generic { phi_knots } => {
                let first = phi_knots[1];
                if first[0] == S::zero() {
                    Some(1.0)
                } else if first[1] > S::zero() {
                    Some(2.0)
                } else {
                    None
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn square_and_its_complement() {
        let phi = NFunction::power(2.0_f64).unwrap();
        let psi = phi.complementary();
        for &s in &[0.1, 1.0, 3.0, 17.0] {
            assert!(close(psi.eval(s), s * s / 4.0, 1e-14));
            // Young's equality at t = φ(s).
            let t = phi.phi(s);
            assert!(close(s * t, phi.eval(s) + psi.eval(t), 1e-14));
        }
    }

    #[test]
    fn normalized_power_complement() {
        let p = 3.0_f64;
        let phi = NFunction::scaled_power(p, 1.0 / p).unwrap();
        let psi = phi.complementary();
        let q = p / (p - 1.0);
        for &s in &[0.2, 1.0, 5.0] {
            assert!(close(psi.eval(s), s.powf(q) / q, 1e-14));
        }
        let back = psi.complementary();
        for &s in &[0.2, 1.0, 5.0] {
            assert!(close(back.eval(s), phi.eval(s), 1e-13));
        }
    }

    #[test]
    fn exp_and_llogl_are_complementary() {
        let e = NFunction::<f64>::Exp;
        let l = e.complementary();
        assert_eq!(l, NFunction::LLogL);
        for &s in &[1e-6, 0.3, 2.0, 10.0] {
            assert!(close(e.phi_inverse(e.phi(s)), s, 1e-12));
            let t = e.phi(s);
            assert!(close(s * t, e.eval(s) + l.eval(t), 1e-10));
        }
        assert!(close(e.eval(1e-5), (1e-5f64).exp_m1() - 1e-5, 1e-9));
        assert!(close(e.inverse(e.eval(2.5)), 2.5, 1e-12));
    }

    #[test]
    fn generic_matches_square() {
        // φ(t) = 2t tabulated on [0, 1] and extended with slope 2.
        let g = NFunction::generic(vec![[0.0, 0.0], [1.0, 2.0]]).unwrap();
        for &t in &[0.5_f64, 1.0, 3.0] {
            assert!(close(g.eval(t), t * t, 1e-14));
            assert!(close(g.inverse(t * t), t, 1e-12));
        }
        let psi = g.complementary();
        assert!(close(psi.eval(3.0), 9.0 / 4.0, 1e-14));
        assert_eq!(psi.complementary(), g);
    }

    #[test]
    fn generic_with_jump() {
        // φ jumps from 1 to 2 at t = 1.
        let g = NFunction::generic(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 2.0], [2.0, 3.0]]).unwrap();
        assert!(close(g.eval(1.0), 0.5, 1e-15));
        assert!(close(g.eval(2.0), 0.5 + 2.5, 1e-15));
        assert!(close(g.phi_inverse(1.5), 1.0, 1e-15));
        assert!(NFunction::generic(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).is_err());
        assert!(NFunction::generic(vec![[0.0, 0.0], [1.0, 1.0], [0.5, 2.0]]).is_err());
    }

    #[test]
    fn json_descriptors() {
        let p: NFunction<f64> = serde_json::from_str(r#"{"kind":"power","p":2.0}"#).unwrap();
        assert_eq!(p, NFunction::power(2.0).unwrap());
        let g: NFunction<f64> =
            serde_json::from_str(r#"{"kind":"generic","phi_knots":[[0,0],[1,2]]}"#).unwrap();
        assert!(matches!(g, NFunction::Generic { .. }));
        let e: NFunction<f64> = serde_json::from_str(r#"{"kind":"llogl"}"#).unwrap();
        assert_eq!(e, NFunction::LLogL);
        assert!(serde_json::from_str::<NFunction<f64>>(r#"{"kind":"power","p":0.5}"#).is_err());
        let round: NFunction<f64> = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(round, g);
    }

    fn generic_strategy() -> impl Strategy<Value = NFunction<f64>> {
        prop::collection::vec((0.01f64..2.0, 0.0f64..2.0), 1..6).prop_map(|steps| {
            let mut knots = vec![[0.0, 0.0]];
            let (mut t, mut v) = (0.0, 0.0);
            for (dt, dv) in steps {
                t += dt;
                v += dv;
                knots.push([t, v]);
            }
            let last = *knots.last().unwrap();
            knots.push([last[0] + 1.0, last[1] + 1.0]);
            NFunction::generic(knots).unwrap()
        })
    }

    proptest! {
        #[test]
        fn young_inequality(f in generic_strategy(), s in 0.0f64..10.0, t in 0.0f64..10.0) {
            let psi = f.complementary();
            prop_assert!(f.eval(s) + psi.eval(t) - s * t >= -1e-9);
        }

        #[test]
        fn double_complement_is_identity(f in generic_strategy(), s in 0.0f64..10.0) {
            let back = f.complementary().complementary();
            prop_assert!((back.eval(s) - f.eval(s)).abs() <= 1e-9 * (1.0 + f.eval(s)));
        }

        #[test]
        fn convex_and_inverse(f in generic_strategy(), a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let mid = f.eval((a + b) / 2.0);
            prop_assert!(mid <= (f.eval(a) + f.eval(b)) / 2.0 + 1e-12);
            let y = f.eval(a);
            if y > 0.0 {
                prop_assert!((f.eval(f.inverse(y)) - y).abs() <= 1e-10 * y);
            }
        }
    }
}
