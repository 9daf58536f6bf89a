use ncwishart::specfun::{
    factorial, hyp0f1, laguerre, lower_incomplete_gamma, marcum_q, upper_incomplete_gamma,
};
use ncwishart::*;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = WishartSpec> {
    (1usize..=4, 0usize..=3)
        .prop_flat_map(|(s, extra)| {
            let t = s + extra;
            (Just(s), Just(t), proptest::collection::vec(0.05f64..25.0, 0..=s))
        })
        .prop_filter_map("distinct noncentrality eigenvalues", |(s, t, mut l)| {
            l.sort_by(|a, b| b.total_cmp(a));
            WishartSpec::new(s, t, l).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn incomplete_gammas_complete(p in 1u32..=30, x in 0.0f64..100.0) {
        let sum = lower_incomplete_gamma(p, x).unwrap() + upper_incomplete_gamma(p, x).unwrap();
        let want = factorial(p - 1);
        prop_assert!(((sum - want) / want).abs() <= 1e-12);
    }

    #[test]
    fn marcum_monotone_and_bounded(mu in 1u32..=8, a in 0.0f64..15.0, b in 0.0f64..15.0, da in 0.0f64..2.0, db in 0.0f64..2.0) {
        let q = marcum_q(mu, a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        // nonincreasing in b, nondecreasing in a (to rounding)
        prop_assert!(marcum_q(mu, a, b + db).unwrap() <= q * (1.0 + 1e-12) + 1e-300);
        prop_assert!(marcum_q(mu, a + da, b).unwrap() >= q * (1.0 - 1e-12));
    }

    #[test]
    fn hyp0f1_matches_series(b in 1u32..=12, x in 0.0f64..=50.0) {
        // Σ x^k / (k! (b)_k) with (b)_k the rising factorial
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        while term > 1e-18 * sum {
            term *= x / ((k + 1.0) * (f64::from(b) + k));
            sum += term;
            k += 1.0;
        }
        let got = hyp0f1(b, x).unwrap();
        prop_assert!(((got - sum) / sum).abs() <= 1e-13, "{} vs {}", got, sum);
    }

    #[test]
    fn laguerre_matches_direct_sum(k in 0u32..=12, n in 0u32..=6, x in -200.0f64..=200.0) {
        let mut sum = 0.0;
        let mut scale = 0.0;
        for i in 0..=k {
            let c = specfun::binomial(i64::from(k + n), i64::from(k - i)) * (-x).powi(i as i32) / factorial(i);
            sum += c;
            scale += c.abs();
        }
        let got = laguerre(k, n, x);
        prop_assert!((got - sum).abs() <= 1e-11 * scale, "{} vs {}", got, sum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdfs_monotone_bounded_and_interlaced(spec in spec_strategy(), x in 0.0f64..40.0, dx in 0.0f64..5.0) {
        let dist = EigenvalueDistribution::new(spec.clone()).unwrap();
        let lo = dist.cdf_all(x).unwrap();
        let hi = dist.cdf_all(x + dx).unwrap();
        for k in 0..spec.s() {
            prop_assert!((0.0..=1.0).contains(&lo[k]));
            prop_assert!(hi[k] >= lo[k] - 1e-10, "k={} {} -> {}", k + 1, lo[k], hi[k]);
        }
        // φ₁ ≥ φ₂ ≥ … implies F₁ ≤ F₂ ≤ …: each recursion increment is a probability
        for w in lo.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10, "{:?}", lo);
        }
    }

    #[test]
    fn asymptotic_coefficients_positive(spec in spec_strategy()) {
        for k in 1..=spec.s() {
            let c = asymptotic_coeffs(&spec, k).unwrap();
            prop_assert!(c.ln_a.is_finite());
            prop_assert_eq!(c.d as usize, (spec.s() - k + 1) * (spec.t() - k + 1) - 1);
        }
    }

    #[test]
    fn spectrum_depends_only_on_mean_singular_values(seed_a in any::<u64>(), seed_b in any::<u64>(), k in 0.01f64..20.0) {
        let sig = [2.9751, 2.2840, 0.9657];
        let a = spectrum_from_channel(&RiceanChannel::from_singulars(3, 5, k, &sig, seed_a).unwrap()).unwrap();
        let b = spectrum_from_channel(&RiceanChannel::from_singulars(3, 5, k, &sig, seed_b).unwrap()).unwrap();
        for (x, y) in a.lambdas().iter().zip(b.lambdas()) {
            prop_assert!(((x - y) / y).abs() < 1e-12);
        }
    }

    #[test]
    fn outage_is_a_probability(k_db in -10.0f64..10.0, g_db in -20.0f64..15.0, r in 1usize..=3) {
        let ch = RiceanChannel::from_singulars(3, 5, 10f64.powf(k_db / 10.0), &[2.9751, 2.2840, 0.9657], 1).unwrap();
        let sys = MbSystem::new(ch).unwrap();
        let v = sys.outage(r, 1.0, 10f64.powf(g_db / 10.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn asymptotic_outage_ignores_rank(k in 0.0f64..10.0, g in 1e-4f64..1.0, seed in any::<u64>()) {
        let one = RiceanChannel::from_singulars(3, 5, k, &[15f64.sqrt()], seed).unwrap();
        let three = RiceanChannel::from_singulars(3, 5, k, &[2.9751, 2.2840, 0.9657], seed).unwrap();
        let a = MbSystem::new(one).unwrap().outage_asymptotic(1.0, g).unwrap();
        let b = MbSystem::new(three).unwrap().outage_asymptotic(1.0, g).unwrap();
        prop_assert_eq!(a, b);
    }
}
