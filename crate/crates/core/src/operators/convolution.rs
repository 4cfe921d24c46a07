use crate::error::Result;
use crate::funcspace::{PiecewiseLinear, StepFunction};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

/// Exact `f ∗ g` for step data on the half line.
///
/// Each slab pair contributes a trapezoid in `x`; the sweep accumulates the
/// slope changes `±v·w` at the four corners `a+c, a+d, b+c, b+d`.
pub fn convolve<S: Scalar>(f: &StepFunction<S>, g: &StepFunction<S>) -> PiecewiseLinear<S> {
    let mut events: Vec<(S, S)> = Vec::with_capacity(4 * f.num_slabs() * g.num_slabs());
    for (a, b, v) in f.slabs().filter(|s| s.2 > S::zero()) {
        for (c, d, w) in g.slabs().filter(|s| s.2 > S::zero()) {
            let h = v * w;
            events.push((a + c, h));
            events.push((a + d, -h));
            events.push((b + c, -h));
            events.push((b + d, h));
        }
    }
    if events.is_empty() {
        return PiecewiseLinear::new(vec![S::zero()], vec![S::zero()]).expect("single zero knot");
    }
    events.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut xs: Vec<S> = Vec::new();
    let mut deltas: Vec<S> = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        let mut acc = Vec::new();
        while i < events.len() && events[i].0 == x {
            acc.push(events[i].1);
            i += 1;
        }
        xs.push(x);
        deltas.push(compensated_sum(acc));
    }
    let mut ys = Vec::with_capacity(xs.len());
    let mut y = S::zero();
    let mut slope = CompensatedSum::new();
    for k in 0..xs.len() {
        if k > 0 {
            y += slope.value() * (xs[k] - xs[k - 1]);
        }
        ys.push(y.max(S::zero()));
        slope.add(deltas[k]);
    }
    // The last knot closes every trapezoid.
    if let Some(last) = ys.last_mut() {
        *last = S::zero();
    }
    PiecewiseLinear::new(xs, ys).expect("sweep produces increasing knots")
}

/// `f ∗ g` resampled to cell averages on `resolution` equal cells.
pub fn convolve_to_step<S: Scalar>(
    f: &StepFunction<S>,
    g: &StepFunction<S>,
    resolution: usize,
) -> Result<StepFunction<S>> {
    convolve(f, g).to_step(resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangle() {
        let chi = StepFunction::indicator(0.0_f64, 1.0).unwrap();
        let h = convolve(&chi, &chi);
        assert_eq!(h.eval(1.0), 1.0);
        assert_eq!(h.eval(0.5), 0.5);
        assert_eq!(h.integral(), 1.0);
        for &t in &[0.0, 0.5, 1.5] {
            assert!((h.star(t) - (1.0 - t / 2.0)).abs() < 1e-15);
        }
        assert!(convolve_to_step(&chi, &chi, 0).is_err());
        let z = convolve(&StepFunction::zero(), &chi);
        assert_eq!(z.eval(0.3), 0.0);
    }

    #[test]
    fn oracle_by_direct_overlap() {
        let f = StepFunction::<f64>::new(vec![0.0, 0.5, 2.0], vec![2.0, 1.0]).unwrap();
        let g = StepFunction::new(vec![0.0, 1.0, 1.5, 3.0], vec![1.0, 0.0, 4.0]).unwrap();
        let h = convolve(&f, &g);
        for i in 0..50 {
            let x = 0.1 * i as f64;
            let mut direct = 0.0_f64;
            for (a, b, v) in f.slabs() {
                for (c, d, w) in g.slabs() {
                    let lo = a.max(x - d);
                    let hi = b.min(x - c);
                    direct += v * w * (hi - lo).max(0.0);
                }
            }
            assert!((h.eval(x) - direct).abs() < 1e-12, "x={x}");
        }
        assert!((h.integral() - f.integral() * g.integral()).abs() < 1e-12);
    }

    fn step_strategy() -> impl Strategy<Value = StepFunction<f64>> {
        prop::collection::vec((0.05f64..2.0, 0.0f64..5.0), 1..10).prop_map(|slabs| {
            let (lens, vals): (Vec<f64>, Vec<f64>) = slabs.into_iter().unzip();
            StepFunction::from_slabs(&lens, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn commutative(f in step_strategy(), g in step_strategy()) {
            let (fg, gf) = (convolve(&f, &g), convolve(&g, &f));
            let scale = f.max_value() * g.max_value() * f.support_end().min(g.support_end()) + 1e-300;
            for i in 0..40 {
                let x = 0.1 * i as f64;
                prop_assert!((fg.eval(x) - gf.eval(x)).abs() <= 1e-12 * scale);
            }
        }
    }
}
