use orlicz_lorentz::funcspace::{AnalyticFunction, StepFunction};
use orlicz_lorentz::rearrange::{decreasing_rearrangement, distribution, radial_dilation, radial_profile};
use orlicz_lorentz::scalar::normalized_slack;
use proptest::prelude::*;

fn step() -> impl Strategy<Value = StepFunction<f64>> {
    prop::collection::vec((0.01f64..3.0, 0.0f64..10.0), 1..40).prop_map(|s| {
        let (lens, vals): (Vec<f64>, Vec<f64>) = s.into_iter().unzip();
        StepFunction::from_slabs(&lens, vals).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equimeasurable_and_monotone(f in step(), lambda in 0.0f64..10.0) {
        let fs = decreasing_rearrangement(&f).star;
        prop_assert!(fs.is_nonincreasing());
        let (a, b) = (distribution(&f, lambda).unwrap(), distribution(&fs, lambda).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * f.support_end().max(1.0));
        for v in f.values() {
            let (a, b) = (distribution(&f, *v).unwrap(), distribution(&fs, *v).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * f.support_end().max(1.0));
        }
        prop_assert!((fs.integral() - f.integral()).abs() <= 1e-12 * f.integral().max(1.0));
    }

    #[test]
    fn hardy_littlewood(f in step(), g in step()) {
        let lhs = f.product(&g).integral();
        let rhs = decreasing_rearrangement(&f).star.product(&decreasing_rearrangement(&g).star).integral();
        prop_assert!(normalized_slack(lhs, rhs) >= -1e-12);
    }
}

/// `k*(t) = inf{λ : μ(λ) ≤ t}` with `μ(λ) = ω_n r(λ)^n`, by bisection on `λ`.
fn distribution_oracle(k: &dyn Fn(f64) -> f64, n: u32, t: f64) -> f64 {
    let omega = std::f64::consts::PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0 + 1.0);
    let radius = |lam: f64| {
        // Largest s with k(s) > λ, for nonincreasing k.
        let (mut lo, mut hi) = (0.0, 1e3);
        if k(hi) > lam {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if k(mid) > lam {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mu = |lam: f64| omega * radius(lam).powi(n as i32);
    let (mut lo, mut hi) = (0.0, k(0.0) + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mu(mid) <= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn radial_profile_matches_distribution_inversion() {
    let exp = AnalyticFunction::exp_decay(1.0_f64);
    let chi = AnalyticFunction::new(|s: f64| if s < 1.0 { 1.0 } else { 0.0 }).decreasing().with_kinks(vec![1.0]);
    let profiles: [(&AnalyticFunction<f64>, &dyn Fn(f64) -> f64); 2] =
        [(&exp, &|s: f64| (-s).exp()), (&chi, &|s: f64| if s < 1.0 { 1.0 } else { 0.0 })];
    for (k, raw) in profiles {
        for n in [1u32, 2] {
            for i in 0..50 {
                let t = 0.05 + 0.13 * i as f64;
                let got = radial_profile(k, n, t).unwrap();
                let want = distribution_oracle(raw, n, t);
                if want < 1e-12 {
                    assert_eq!(got, 0.0, "n={n} t={t}");
                } else {
                    assert!((got - want).abs() <= 1e-6 * want, "n={n} t={t}: {got} vs {want}");
                }
            }
        }
    }
    assert!((radial_dilation(1) - 0.5).abs() < 1e-15);
    assert!((radial_dilation(2) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
}
