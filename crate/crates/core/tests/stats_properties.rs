mod common;

use common::mwu_null_counts;
use mdpdt::stats::{kolmogorov_smirnov_test, mwu_exact_p_value, mwu_normal_p_value, TwoSampleTest};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec((0i32..8).prop_map(f64::from), 2..25),
        prop::collection::vec(-100.0f64..100.0, 2..25),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn swapping_samples(a in sample(), b in sample()) {
        for t in TwoSampleTest::ALL {
            if let (Ok(ab), Ok(ba)) = (t.run(&a, &b), t.run(&b, &a)) {
                prop_assert_eq!(ab.p_value, ba.p_value, "{:?}", t);
                prop_assert_eq!(ab.statistic.abs(), ba.statistic.abs(), "{:?}", t);
                if matches!(t, TwoSampleTest::StudentT | TwoSampleTest::Welch) {
                    prop_assert_eq!(ab.statistic, -ba.statistic);
                }
            }
        }
    }

    #[test]
    fn rank_tests_ignore_monotone_transforms(a in sample(), b in sample()) {
        let f = |x: &f64| x * x * x + 3.0 * x + 7.0;
        let (fa, fb): (Vec<f64>, Vec<f64>) = (a.iter().map(f).collect(), b.iter().map(f).collect());
        for t in [TwoSampleTest::MannWhitney, TwoSampleTest::KolmogorovSmirnov] {
            let (x, y) = (t.run(&a, &b).unwrap(), t.run(&fa, &fb).unwrap());
            prop_assert_eq!(x.p_value, y.p_value);
            prop_assert_eq!(x.statistic, y.statistic);
        }
    }

    #[test]
    fn ks_statistic_range(a in sample(), b in sample()) {
        let d = kolmogorov_smirnov_test(&a, &b).unwrap().statistic;
        prop_assert!((0.0..=1.0).contains(&d));
        let same_ecdf = a.iter().chain(&b).all(|&x| {
            let fa = a.iter().filter(|&&v| v <= x).count() * b.len();
            let fb = b.iter().filter(|&&v| v <= x).count() * a.len();
            fa == fb
        });
        prop_assert_eq!(d == 0.0, same_ecdf);
    }
}

#[test]
fn ks_zero_for_permuted_copies() {
    let a = [3.0, 1.0, 2.0, 2.0];
    let b = [2.0, 2.0, 3.0, 1.0];
    assert_eq!(kolmogorov_smirnov_test(&a, &b).unwrap().statistic, 0.0);
}

/// Every achievable U for tie-free samples, sizes with n1 + n2 <= 20 where
/// the smaller sample has at least 3 values (or 2 against at least 4).
#[test]
fn normal_approximation_tracks_exact_distribution() {
    let mut worst: f64 = 0.0;
    for n1 in 2..=10 {
        for n2 in n1..=20 - n1 {
            if n1 == 2 && n2 < 4 {
                continue;
            }
            let (_, reps) = mwu_null_counts(n1, n2);
            for mask in reps.into_iter().flatten() {
                let (mut a, mut b) = (Vec::new(), Vec::new());
                for i in 0..n1 + n2 {
                    if mask >> i & 1 == 1 {
                        a.push(i as f64)
                    } else {
                        b.push(i as f64)
                    }
                }
                let d = (mwu_exact_p_value(&a, &b).unwrap() - mwu_normal_p_value(&a, &b).unwrap()).abs();
                assert!(d <= 0.05, "n1={n1} n2={n2} {a:?}: gap {d}");
                worst = worst.max(d);
            }
        }
    }
    assert!(worst > 0.0);
}
