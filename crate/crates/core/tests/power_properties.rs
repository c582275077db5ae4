use forecast_core::power::{
    alpha_t_test, beat_fraction, inverse_normal_cdf, normal_cdf, required_sample_size, se_alpha_homogeneous,
    se_alpha_markets, t_from_summary, var_per_market_delta, QuantileRounding,
};
use forecast_core::PowerSpec;
use proptest::prelude::*;

proptest! {
    #[test]
    fn inverse_normal_round_trips(p in 1e-12f64..1.0 - 1e-12) {
        let z = inverse_normal_cdf(p);
        prop_assert!((normal_cdf(z) - p).abs() <= 1e-14 + 1e-12 * p.min(1.0 - p));
        prop_assert!((inverse_normal_cdf(1.0 - p) + z).abs() < 1e-9 * (1.0 + z.abs()));
    }

    #[test]
    fn variance_is_symmetric_in_benchmark_and_prediction(b in 0.0f64..=1.0, p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let v = var_per_market_delta(b, p, q).unwrap();
        prop_assert!((v - var_per_market_delta(p, b, q).unwrap()).abs() <= 1e-15);
        prop_assert!((v - var_per_market_delta(b, p, 1.0 - q).unwrap()).abs() <= 1e-15);
        prop_assert!(v <= (b - p).powi(2) + 1e-15);
    }

    #[test]
    fn homogeneous_se_matches_market_list(n in 1usize..200, d in 0.0f64..=0.5, q in 0.0f64..=1.0) {
        let b = vec![0.5; n];
        let p = vec![0.5 + d; n];
        let qs = vec![q; n];
        let a = se_alpha_homogeneous(n, d, q).unwrap();
        let m = se_alpha_markets(&b, &p, &qs).unwrap();
        prop_assert!((a - m).abs() <= 1e-12);
    }

    #[test]
    fn sample_size_satisfies_bound_and_is_minimal(alpha in 0.001f64..0.2, k in 1u64..20, exact in any::<bool>()) {
        let mut spec = PowerSpec::with_alpha_star(alpha);
        if exact {
            spec.quantiles = QuantileRounding::Exact;
        }
        let s = required_sample_size(&spec, k).unwrap();
        let se = |n: u64| se_alpha_homogeneous(n as usize, spec.boldness, spec.q_bar).unwrap();
        // α*/SE(n) ≥ z_{1−κ} + z_π at n, and fails one step earlier.
        prop_assert!(alpha / se(s.n) >= spec.z_sum() * (1.0 - 1e-12));
        if s.n > 1 {
            prop_assert!(alpha / se(s.n - 1) < spec.z_sum());
        }
        prop_assert_eq!(s.rounds, s.n.div_ceil(k));
    }

    #[test]
    fn halving_alpha_quadruples_n_bound(alpha in 0.001f64..0.2) {
        let a = PowerSpec::with_alpha_star(alpha).n_bound();
        let b = PowerSpec::with_alpha_star(alpha / 2.0).n_bound();
        prop_assert!((b / a - 4.0).abs() < 1e-9);
    }

    #[test]
    fn t_test_consistent_with_summary(xs in prop::collection::vec(-0.5f64..0.5, 2..60)) {
        let r = alpha_t_test(&xs).unwrap();
        if !r.is_degenerate() {
            let (t, p) = t_from_summary(r.mean_alpha, r.std_error, xs.len());
            prop_assert!((t - r.t_stat).abs() < 1e-9 * (1.0 + t.abs()));
            prop_assert!((p - r.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            let n = alpha_t_test(&neg).unwrap();
            prop_assert!((n.t_stat + r.t_stat).abs() < 1e-9 * (1.0 + t.abs()));
        }
        let beat = beat_fraction(&xs).unwrap();
        prop_assert_eq!(beat, xs.iter().filter(|x| **x > 0.0).count() as f64 / xs.len() as f64);
    }
}

#[test]
fn constant_series() {
    let zero = alpha_t_test(&[0.0; 10]).unwrap();
    assert_eq!((zero.t_stat, zero.p_value), (0.0, 1.0));
    let pos = alpha_t_test(&[0.01; 10]).unwrap();
    assert_eq!((pos.t_stat, pos.p_value), (f64::INFINITY, 0.0));
    assert!(alpha_t_test(&[0.1]).is_err());
}

#[test]
fn invalid_specs_rejected() {
    for f in [
        |s: &mut PowerSpec| s.alpha_star = 0.0,
        |s: &mut PowerSpec| s.kappa = 1.0,
        |s: &mut PowerSpec| s.power = 0.0,
        |s: &mut PowerSpec| s.q_bar = 1.5,
        |s: &mut PowerSpec| s.boldness = -0.1,
    ] {
        let mut s = PowerSpec::with_alpha_star(0.02);
        f(&mut s);
        assert!(required_sample_size(&s, 7).is_err());
    }
    assert!(required_sample_size(&PowerSpec::with_alpha_star(0.02), 0).is_err());
}
