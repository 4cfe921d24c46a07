//! Adaptive Gauss–Kronrod quadrature with divergence detection.
//!
//! Finite intervals are bisected greedily (largest error first) with a
//! 7/15-point Gauss–Kronrod pair. When the subdivision budget runs out, the
//! worst interval is examined: if it hugs an endpoint where the integrand
//! blows up like `d^{-alpha}` with `alpha` close to 1 or larger, the result
//! is reported as [`Integral::Divergent`]; otherwise a quadrature failure is
//! raised with the partial estimate.
//!
//! Semi-infinite intervals use a power or exponential tail hint when one is
//! available (finite cut plus closed-form tail) and otherwise the map
//! `s -> a + s/(1-s)` onto `[0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let q = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::arg("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::arg("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    /// Same spec with a looser relative tolerance.
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Known decay of a function at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailHint {
    /// `f(x) ~ C x^exponent`.
    Power { exponent: f64 },
    /// `f(x) ~ C e^{-rate x}`, `rate > 0`.
    Exponential { rate: f64 },
}

/// Outcome of a definite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integral<S> {
    Finite {
        value: S,
        error: S,
        subdivisions: usize,
    },
    /// The integral is `+inf`; `partial` is the last finite estimate seen.
    Divergent { partial: S },
}

impl<S: Scalar> Integral<S> {
    pub fn exact(value: S) -> Self {
        Integral::Finite {
            value,
            error: S::zero(),
            subdivisions: 0,
        }
    }

    /// The value, with divergence mapped to `+inf`.
    pub fn value(&self) -> S {
        match *self {
            Integral::Finite { value, .. } => value,
            Integral::Divergent { .. } => S::infinity(),
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Integral::Divergent { .. })
    }

    pub fn error_estimate(&self) -> S {
        match *self {
            Integral::Finite { error, .. } => error,
            Integral::Divergent { .. } => S::infinity(),
        }
    }

    fn add(self, other: Self) -> Self {
        match (self, other) {
            (
                Integral::Finite {
                    value: v1,
                    error: e1,
                    subdivisions: n1,
                },
                Integral::Finite {
                    value: v2,
                    error: e2,
                    subdivisions: n2,
                },
            ) => Integral::Finite {
                value: v1 + v2,
                error: e1 + e2,
                subdivisions: n1 + n2,
            },
            (a, b) => Integral::Divergent {
                partial: finite_part(a) + finite_part(b),
            },
        }
    }
}

fn finite_part<S: Scalar>(i: Integral<S>) -> S {
    match i {
        Integral::Finite { value, .. } => value,
        Integral::Divergent { partial } => partial,
    }
}

// Kronrod 15-point abscissae (nonnegative half) and weights; Gauss 7-point weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Piece<S> {
    a: S,
    b: S,
    value: S,
    error: S,
    infinite: bool,
}

fn gk15<S: Scalar>(g: &dyn Fn(S) -> S, a: S, b: S) -> Result<Piece<S>> {
    let center = (a + b) * S::half();
    let half = (b - a) * S::half();
    let mut fv1 = [S::zero(); 7];
    let mut fv2 = [S::zero(); 7];
    let mut infinite = false;
    let mut check = |y: S, x: S| -> Result<S> {
        if y.is_nan() || y < S::zero() && !y.is_finite() {
            return Err(Error::EvaluatorFailure {
                cell_start: a.as_f64(),
                cell_end: b.as_f64(),
                detail: format!("integrand is {} at x = {}", y, x),
            });
        }
        if y.is_infinite() {
            infinite = true;
            return Ok(S::zero());
        }
        Ok(y)
    };
    let fc = check(g(center), center)?;
    let mut resk = fc * S::lit(WGK[7]);
    let mut resg = fc * S::lit(WG[3]);
    let mut resabs = resk.abs();
    for j in 0..7 {
        let dx = half * S::lit(XGK[j]);
        let (x1, x2) = (center - dx, center + dx);
        let f1 = check(g(x1), x1)?;
        let f2 = check(g(x2), x2)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += S::lit(WGK[j]) * (f1 + f2);
        resabs += S::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += S::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let reskh = resk * S::half();
    let mut resasc = S::lit(WGK[7]) * (fc - reskh).abs();
    for j in 0..7 {
        resasc += S::lit(WGK[j]) * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let habs = half.abs();
    let value = resk * half;
    resabs *= habs;
    resasc *= habs;
    let mut err = ((resk - resg) * half).abs();
    if resasc != S::zero() && err != S::zero() {
        let scale = (S::lit(200.0) * err / resasc).powf(S::lit(1.5));
        err = resasc * scale.min(S::one());
    }
    let floor = S::lit(50.0) * S::epsilon() * resabs;
    if resabs > S::min_positive_value() / (S::lit(50.0) * S::epsilon()) {
        err = err.max(floor);
    }
    Ok(Piece {
        a,
        b,
        value,
        error: err,
        infinite,
    })
}

/// Slope `alpha` of `g(e + dir*d) ~ d^{-alpha}` as `d -> 0`.
fn endpoint_blowup<S: Scalar>(g: &dyn Fn(S) -> S, e: S, dir: S, width: S) -> Option<f64> {
    let e64 = e.as_f64();
    let w = width.as_f64();
    let floor = (e64.abs() * 1e-13).max(1e-290);
    let mut pts = Vec::new();
    let mut d = w * 1e-2;
    while d > floor && pts.len() < 8 {
        let x = e + dir * S::lit(d);
        let y = g(x).as_f64();
        if y.is_infinite() {
            return Some(f64::INFINITY);
        }
        if y.is_finite() && y > 0.0 {
            pts.push((d.ln(), y.ln()));
        }
        d *= 1e-2;
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len();
    let slopes: Vec<f64> = pts
        .windows(2)
        .skip(n.saturating_sub(4))
        .map(|w| -(w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    Some(slopes.iter().sum::<f64>() / slopes.len() as f64)
}

/// Exponent above which an endpoint blow-up is treated as non-integrable.
pub const DIVERGENCE_SLOPE: f64 = 0.985;

/// Adaptive quadrature of `g` over `[a, b]`, split initially at `breaks`.
pub fn integrate_fn<S: Scalar>(
    g: &dyn Fn(S) -> S,
    a: S,
    b: S,
    breaks: &[S],
    q: &QuadratureSpec,
) -> Result<Integral<S>> {
    q.validate()?;
    if !(a <= b) {
        return Err(Error::arg(format!("integration bounds reversed: {a} > {b}")));
    }
    if a == b {
        return Ok(Integral::exact(S::zero()));
    }
    let mut nodes = vec![a];
    let mut inner: Vec<S> = breaks.iter().copied().filter(|t| *t > a && *t < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    nodes.extend(inner);
    nodes.push(b);

    let mut pieces = Vec::with_capacity(nodes.len() + q.max_subdivisions);
    for w in nodes.windows(2) {
        pieces.push(gk15(g, w[0], w[1])?);
    }
    let abs_tol = S::lit(q.abs_tol);
    let rel_tol = S::lit(q.rel_tol);
    let mut best: Option<(S, S)> = None;
    let mut subdivisions = 0usize;
    loop {
        if pieces.iter().any(|p| p.infinite) {
            let partial = pieces.iter().filter(|p| !p.infinite).map(|p| p.value).sum();
            return Ok(Integral::Divergent { partial });
        }
        let total: S = pieces.iter().map(|p| p.value).collect::<CompensatedSum<S>>().value();
        let err: S = pieces.iter().map(|p| p.error).sum();
        match best {
            Some((_, e)) if e <= err => {}
            _ => best = Some((total, err)),
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Integral::Finite {
                value: total,
                error: err,
                subdivisions,
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .expect("at least one piece");
        let p = pieces[worst];
        let mid = (p.a + p.b) * S::half();
        let too_narrow = !(mid > p.a && mid < p.b);
        if subdivisions >= q.max_subdivisions || too_narrow {
            return classify_failure(g, &pieces[worst], &nodes, best.unwrap(), total);
        }
        pieces.swap_remove(worst);
        pieces.push(gk15(g, p.a, mid)?);
        pieces.push(gk15(g, mid, p.b)?);
        subdivisions += 1;
    }
}

fn classify_failure<S: Scalar>(
    g: &dyn Fn(S) -> S,
    worst: &Piece<S>,
    nodes: &[S],
    best: (S, S),
    total: S,
) -> Result<Integral<S>> {
    // Endpoints the worst cell has collapsed onto (within 1e-6 of the span).
    let near = |e: S, x: S, span: S| (x - e).abs() <= S::lit(1e-6) * span;
    let touching: Vec<(S, S)> = nodes
        .windows(2)
        .flat_map(|w| {
            let span = w[1] - w[0];
            let mut v = Vec::new();
            if worst.a >= w[0] && worst.b <= w[1] {
                if near(w[0], worst.a, span) {
                    v.push((w[0], S::one()));
                }
                if near(w[1], worst.b, span) {
                    v.push((w[1], -S::one()));
                }
            }
            v
        })
        .collect();
    for (e, dir) in touching {
        // Probe on a window wider than the last tiny cell.
        let span = nodes
            .windows(2)
            .find(|w| (dir > S::zero() && w[0] == e) || (dir < S::zero() && w[1] == e))
            .map(|w| w[1] - w[0])
            .unwrap_or(worst.b - worst.a);
        if let Some(alpha) = endpoint_blowup(g, e, dir, span) {
            if alpha >= DIVERGENCE_SLOPE {
                return Ok(Integral::Divergent { partial: total });
            }
        }
    }
    Err(Error::QuadratureFailure {
        a: nodes[0].as_f64(),
        b: nodes[nodes.len() - 1].as_f64(),
        partial: best.0.as_f64(),
        error_estimate: best.1.as_f64(),
    })
}

/// `∫ₐ^∞ g`, using `hint` for the tail when available.
pub fn integrate_tail_fn<S: Scalar>(
    g: &dyn Fn(S) -> S,
    a: S,
    breaks: &[S],
    hint: Option<TailHint>,
    q: &QuadratureSpec,
) -> Result<Integral<S>> {
    q.validate()?;
    if !(a >= S::zero()) {
        return Err(Error::arg("tail integral needs a >= 0"));
    }
    match hint {
        Some(TailHint::Power { exponent }) if exponent >= -1.0 => {
            let probe_end = a.max(S::one()) * S::two();
            let head = integrate_fn(g, a, probe_end, breaks, q)?;
            Ok(Integral::Divergent {
                partial: finite_part(head),
            })
        }
        Some(h) => tail_by_cut(g, a, breaks, h, q),
        None => tail_by_transform(g, a, breaks, q),
    }
}

fn tail_by_cut<S: Scalar>(
    g: &dyn Fn(S) -> S,
    a: S,
    breaks: &[S],
    hint: TailHint,
    q: &QuadratureSpec,
) -> Result<Integral<S>> {
    let closed_tail = |c: S| -> S {
        let gc = g(c);
        match hint {
            TailHint::Power { exponent } => gc * c / S::lit(-exponent - 1.0),
            TailHint::Exponential { rate } => gc / S::lit(rate),
        }
    };
    let last_break = breaks.iter().copied().fold(a, S::max);
    let mut c = last_break.max(a).max(S::one()) * S::two();
    let mut head = integrate_fn(g, a, c, breaks, q)?;
    let mut total = head.add(Integral::exact(closed_tail(c)));
    for _ in 0..60 {
        let c_next = c * S::lit(4.0);
        let piece = integrate_fn(g, c, c_next, breaks, q)?;
        head = head.add(piece);
        let next_total = head.add(Integral::exact(closed_tail(c_next)));
        if next_total.is_divergent() {
            return Ok(next_total);
        }
        let diff = (next_total.value() - total.value()).abs();
        let target = S::lit(q.abs_tol).max(S::lit(q.rel_tol) * next_total.value().abs());
        total = next_total;
        c = c_next;
        if diff <= target {
            if let Integral::Finite {
                value,
                error,
                subdivisions,
            } = total
            {
                return Ok(Integral::Finite {
                    value,
                    error: error + diff,
                    subdivisions,
                });
            }
        }
    }
    Err(Error::QuadratureFailure {
        a: a.as_f64(),
        b: f64::INFINITY,
        partial: total.value().as_f64(),
        error_estimate: f64::NAN,
    })
}

fn tail_by_transform<S: Scalar>(
    g: &dyn Fn(S) -> S,
    a: S,
    breaks: &[S],
    q: &QuadratureSpec,
) -> Result<Integral<S>> {
    let one = S::one();
    let h = move |s: S| -> S {
        let om = one - s;
        if om <= S::zero() {
            return S::zero();
        }
        let x = a + s / om;
        let y = g(x);
        if y == S::zero() {
            S::zero()
        } else {
            y / (om * om)
        }
    };
    let sbreaks: Vec<S> = breaks
        .iter()
        .filter(|t| **t > a)
        .map(|t| (*t - a) / (one + *t - a))
        .collect();
    integrate_fn(&h, S::zero(), one, &sbreaks, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn smooth_integrand() {
        let r = integrate_fn(&|t: f64| (-t).exp(), 0.0, 1.0, &[], &q()).unwrap();
        assert!((r.value() - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let r = integrate_fn(&|t: f64| t.powf(-0.5), 0.0, 1.0, &[], &q()).unwrap();
        assert!((r.value() - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn nonintegrable_endpoint_is_divergent() {
        let r = integrate_fn(&|t: f64| 1.0 / t, 0.0, 1.0, &[], &q()).unwrap();
        assert!(r.is_divergent());
        let r = integrate_fn(&|t: f64| 1.0 / (1.0 - t).powi(2), 0.0, 1.0, &[], &q()).unwrap();
        assert!(r.is_divergent());
    }

    #[test]
    fn jump_at_break_is_exact() {
        let g = |t: f64| if t < 0.3 { 2.0 } else { 1.0 };
        let r = integrate_fn(&g, 0.0, 1.0, &[0.3], &q()).unwrap();
        assert!((r.value() - 1.3).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(integrate_fn(&|t: f64| t, 1.0, 0.0, &[], &q()).is_err());
    }

    #[test]
    fn tails() {
        let hinted = integrate_tail_fn(
            &|t: f64| t.powi(-2),
            1.0,
            &[],
            Some(TailHint::Power { exponent: -2.0 }),
            &q(),
        )
        .unwrap();
        assert!((hinted.value() - 1.0).abs() < 1e-12);
        let bare = integrate_tail_fn(&|t: f64| t.powi(-2), 1.0, &[], None, &q()).unwrap();
        assert!((bare.value() - 1.0).abs() < 1e-10);
        let harmonic = integrate_tail_fn(&|t: f64| 1.0 / t, 1.0, &[], None, &q()).unwrap();
        assert!(harmonic.is_divergent());
        let harmonic_hint = integrate_tail_fn(
            &|t: f64| 1.0 / t,
            1.0,
            &[],
            Some(TailHint::Power { exponent: -1.0 }),
            &q(),
        )
        .unwrap();
        assert!(harmonic_hint.is_divergent());
        let exp = integrate_tail_fn(
            &|t: f64| (-t).exp(),
            0.0,
            &[],
            Some(TailHint::Exponential { rate: 1.0 }),
            &q(),
        )
        .unwrap();
        assert!((exp.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_budget_never_worsens_error() {
        let g = |t: f64| t.powf(-0.9);
        let mut last = f64::INFINITY;
        for n in [4usize, 8, 16, 32, 64, 128] {
            let spec = QuadratureSpec::new(1e-300, 1e-300, n).unwrap();
            let err = match integrate_fn(&g, 0.0, 1.0, &[], &spec) {
                Ok(r) => r.error_estimate(),
                Err(Error::QuadratureFailure { error_estimate, .. }) => error_estimate,
                Err(e) => panic!("{e}"),
            };
            assert!(err <= last, "{n}: {err} > {last}");
            last = err;
        }
    }
}
