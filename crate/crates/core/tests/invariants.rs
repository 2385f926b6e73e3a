use proptest::prelude::*;
use shecheck::harness::{mc_aggregate, rate_fit, trend_violations};
use shecheck::kernels::{
    cov_spacetime, increment_second_moment, increment_second_moment_expanded, tail_ratio, variance, CovQuery,
};
use shecheck::numeric::pairwise_sum;
use shecheck::qcov::{spatial_qv, temporal_qv, Path};
use shecheck::QuadratureConfig;

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_symmetric_and_bounded(t in 0.01f64..4.0, s in 0.01f64..4.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let a = cov_spacetime(&CovQuery::new(t, x, s, y).unwrap(), &q()).unwrap().value;
        let b = cov_spacetime(&CovQuery::new(s, y, t, x).unwrap(), &q()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        prop_assert!(a > 0.0);
        let cs = (variance(t).unwrap() * variance(s).unwrap()).sqrt();
        prop_assert!(a <= cs * (1.0 + 1e-12));
    }

    #[test]
    fn covariance_is_translation_invariant(t in 0.05f64..2.0, s in 0.05f64..2.0, d in -1.0f64..1.0, shift in -3.0f64..3.0) {
        let a = cov_spacetime(&CovQuery::new(t, 0.0, s, d).unwrap(), &q()).unwrap().value;
        let b = cov_spacetime(&CovQuery::new(t, shift, s, shift + d).unwrap(), &q()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn tail_ratio_in_unit_interval_and_decreasing(t in 0.05f64..5.0, d in 0.0f64..5.0, step in 0.01f64..1.0) {
        let a = tail_ratio(t, d, &q()).unwrap().value;
        let b = tail_ratio(t, d + step, &q()).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a + 1e-14);
    }

    #[test]
    fn increment_moment_two_ways(t in 0.05f64..3.0, s in 0.05f64..3.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let a = increment_second_moment(t, x, s, y, &q()).unwrap().value;
        let b = increment_second_moment_expanded(t, x, s, y, &q()).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-9 * (variance(t).unwrap() + variance(s).unwrap()));
    }

    #[test]
    fn aggregate_mean_within_range(v in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let a = mc_aggregate(&v).unwrap();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a.mean >= lo - 1e-9 && a.mean <= hi + 1e-9);
        let se = a.stderr.unwrap();
        prop_assert!(se >= 0.0);
        prop_assert!((a.ci_high.unwrap() - a.mean - 1.96 * se).abs() <= 1e-9 * (1.0 + se));
    }

    #[test]
    fn pairwise_sum_matches_naive(v in prop::collection::vec(-1.0f64..1.0, 0..500)) {
        let naive: f64 = v.iter().sum();
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * v.len().max(1) as f64);
    }

    #[test]
    fn power_law_rates_recovered(alpha in 0.1f64..3.0, c in 0.01f64..10.0) {
        let levels: Vec<f64> = (3..9).map(|e| 2f64.powi(-e)).collect();
        let gaps: Vec<f64> = levels.iter().map(|l| c * l.powf(alpha)).collect();
        let fit = rate_fit(&levels, &gaps).unwrap();
        prop_assert!((fit.alpha - alpha).abs() < 1e-9);
        prop_assert!(fit.r2 > 1.0 - 1e-9);
        prop_assert_eq!(trend_violations(&gaps), 0);
    }

    #[test]
    fn quadratic_variation_nonnegative_and_exact_for_lines(slope in -5.0f64..5.0, noise in prop::collection::vec(-1.0f64..1.0, 257)) {
        let c: Vec<f64> = (0..257).map(|i| i as f64 / 256.0).collect();
        let line: Vec<f64> = c.iter().map(|x| slope * x).collect();
        let p = Path::new(&c, &line).unwrap();
        // (1/δ) ∫_0^x (slope δ)² dy = slope² δ x.
        let expected = slope * slope * 0.0625 * 0.5;
        prop_assert!((spatial_qv(&p, 0.5, 0.0625).unwrap() - expected).abs() < 1e-9 * (1.0 + expected));
        let p = Path::new(&c, &noise).unwrap();
        prop_assert!(spatial_qv(&p, 0.5, 0.03125).unwrap() >= 0.0);
        prop_assert!(temporal_qv(&p, 0.5, 0.03125).unwrap() >= 0.0);
    }
}
