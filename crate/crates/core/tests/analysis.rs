use proptest::prelude::*;
use rand::Rng;

use snp_core::analysis::{composition, pearson};
use snp_testkit::rng;

/// Textbook `cov(x, y) / (sd(x) sd(y))` with explicit `n - 1` normalisation.
fn oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
    let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sy = (ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sx * sy)
}

#[test]
fn random_pairs_match_direct_formula() {
    let mut r = rng(21);
    for _ in 0..200 {
        let n = r.random_range(2..50);
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x + r.random_range(-5.0..5.0)).collect();
        assert!((pearson(&xs, &ys).unwrap() - oracle(&xs, &ys)).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn scale_and_shift_invariance(
        xs in prop::collection::vec(-100.0f64..100.0, 3..40),
        noise_seed in any::<u64>(),
        a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        b in -100.0f64..100.0,
    ) {
        let mut r = rng(noise_seed);
        let ys: Vec<f64> = xs.iter().map(|_| r.random_range(-1.0..1.0)).collect();
        let base = pearson(&xs, &ys);
        prop_assume!(base.is_ok());
        let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let expected = base.unwrap() * a.signum();
        prop_assert!((pearson(&moved, &ys).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn composition_ignores_order(seed in any::<u64>()) {
        let pool = snp_testkit::blob_pool(
            &[
                snp_testkit::Blob::new("a", 4, 3, vec![0.0]),
                snp_testkit::Blob::new("b", 3, 2, vec![1.0]),
                snp_testkit::Blob::new("c", 2, 2, vec![2.0]),
            ],
            3,
        );
        let mut r = rng(seed);
        let mut selected: Vec<usize> = (0..pool.len()).filter(|_| r.random_bool(0.6)).collect();
        prop_assume!(!selected.is_empty());
        let report = composition(&pool, &selected).unwrap();
        let total: f64 = report.datasets.iter().map(|d| d.image_fraction).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        let id_total: f64 = report.datasets.iter().map(|d| d.identity_fraction).sum();
        prop_assert!((id_total - 1.0).abs() <= 1e-9);
        selected.reverse();
        prop_assert_eq!(composition(&pool, &selected).unwrap(), report);
    }
}
