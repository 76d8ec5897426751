use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

use snp_core::fid::{fid, fid_from_moments, trace_sqrt_product};
use snp_core::GaussianStats;
use snp_testkit::{gaussian_point, random_spd, rng};

/// Diagonalizes the non-symmetric product directly; its eigenvalues are the
/// squares of the eigenvalues of `(Σs Σt)^½`.
fn dense_trace_sqrt(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d = a.nrows();
    let to_na = |m: &Array2<f64>| DMatrix::from_fn(d, d, |i, j| m[[i, j]]);
    let product = to_na(a) * to_na(b);
    product
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.max(0.0).sqrt())
        .sum()
}

fn stats_of(points: &[Vec<f32>]) -> GaussianStats {
    GaussianStats::from_descriptors(points[0].len(), points.iter().map(Vec::as_slice)).unwrap()
}

fn sample(rng: &mut impl Rng, n: usize, center: &[f64], spread: f64) -> Vec<Vec<f32>> {
    (0..n).map(|_| gaussian_point(rng, center, spread)).collect()
}

#[test]
fn trace_sqrt_matches_dense_oracle() {
    let mut r = rng(1);
    for _ in 0..200 {
        let d = r.random_range(1..=8);
        let a = random_spd(&mut r, d, 0.05);
        let b = random_spd(&mut r, d, 0.05);
        let ours = trace_sqrt_product(a.view(), b.view()).unwrap();
        let oracle = dense_trace_sqrt(&a, &b);
        let rel = (ours - oracle).abs() / oracle;
        assert!(rel <= 1e-8, "d={d}: {ours} vs {oracle} (rel {rel:e})");
    }
}

#[test]
fn trace_sqrt_of_equal_matrices_is_the_trace() {
    let mut r = rng(2);
    for d in 1..=10 {
        let c = random_spd(&mut r, d, 0.1);
        let trace: f64 = c.diag().sum();
        let value = trace_sqrt_product(c.view(), c.view()).unwrap();
        assert!((value - trace).abs() <= 1e-8 * trace, "d={d}");
    }
}

#[test]
fn covariance_matches_two_pass_oracle() {
    let mut r = rng(3);
    let sd = [1.0, 2.0, 0.5];
    let points: Vec<Vec<f32>> = (0..100)
        .map(|_| sd.iter().map(|s| (s * snp_testkit::normal(&mut r)) as f32).collect())
        .collect();
    let (mean, cov) = stats_of(&points).mean_cov().unwrap();

    let n = points.len() as f64;
    let mut oracle_mean = Array1::<f64>::zeros(3);
    for p in &points {
        for (m, &v) in oracle_mean.iter_mut().zip(p) {
            *m += v as f64 / n;
        }
    }
    let mut oracle = Array2::<f64>::zeros((3, 3));
    for p in &points {
        for i in 0..3 {
            for j in 0..3 {
                oracle[[i, j]] +=
                    (p[i] as f64 - oracle_mean[i]) * (p[j] as f64 - oracle_mean[j]) / (n - 1.0);
            }
        }
    }
    for (a, b) in mean.iter().zip(&oracle_mean) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in cov.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    // And the sample covariance is near the generating one.
    for i in 0..3 {
        let rel = (cov[[i, i]] - sd[i] * sd[i]).abs() / (sd[i] * sd[i]);
        assert!(rel < 0.5, "variance {i}: {}", cov[[i, i]]);
    }
}

#[test]
fn merging_fifty_singletons_equals_direct_accumulation() {
    let mut r = rng(4);
    let points = sample(&mut r, 50, &[1.0, -2.0, 3.0, 0.0], 1.5);
    let mut merged = GaussianStats::empty(4);
    for p in &points {
        merged = merged.merge(&stats_of(std::slice::from_ref(p))).unwrap();
    }
    let direct = stats_of(&points);
    assert_eq!(merged.count(), direct.count());
    for (a, b) in merged.sum().iter().zip(direct.sum()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
    for (a, b) in merged.sum_outer().iter().zip(direct.sum_outer()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn closed_forms_from_stats() {
    // 1-D: N(0,1) vs N(3,1) from symmetric samples with exact moments.
    let a: Vec<Vec<f32>> = vec![vec![-1.0], vec![1.0]];
    let b: Vec<Vec<f32>> = vec![vec![2.0], vec![4.0]];
    // Two-point sets: means 0 and 3, unbiased variance 2 each.
    let value = fid(&stats_of(&a), &stats_of(&b)).unwrap();
    assert!((value - 9.0).abs() < 1e-12, "{value}");
}

/// SPD matrix with a random eigenbasis and eigenvalues in `[0.25, 2.5]`.
/// A ridge of `εI` shifts FID by `ε Σ (r + 1/r - 2)` over eigenvalue ratios
/// `r`, so the `10 ε d` bound needs spectra within a factor of about 10.
fn banded_spd(rng: &mut impl Rng, d: usize) -> Array2<f64> {
    let q = DMatrix::from_fn(d, d, |_, _| snp_testkit::normal(rng)).qr().q();
    let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.25..2.5)).collect();
    Array2::from_shape_fn((d, d), |(i, j)| (0..d).map(|k| q[(i, k)] * lambda[k] * q[(j, k)]).sum())
}

fn assert_symmetric_nonnegative(seed: u64, d: usize, n: usize) {
    let mut r = rng(seed);
    let ca: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    let cb: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    let a = stats_of(&sample(&mut r, n, &ca, 1.0));
    let b = stats_of(&sample(&mut r, n, &cb, 0.7));
    let ab = fid(&a, &b).unwrap();
    let ba = fid(&b, &a).unwrap();
    assert!(ab >= 0.0 && ba >= 0.0);
    assert!((ab - ba).abs() <= 1e-6 * (1.0 + ab), "{ab} vs {ba}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fid_is_symmetric_and_nonnegative(seed in any::<u64>(), d in 1usize..7, n in 2usize..40) {
        assert_symmetric_nonnegative(seed, d, n);
    }

    #[test]
    fn ridge_moves_fid_by_at_most_ten_eps_d(seed in any::<u64>(), d in 1usize..7) {
        let mut r = rng(seed);
        let cs = banded_spd(&mut r, d);
        let ct = banded_spd(&mut r, d);
        let ms: Array1<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let mt: Array1<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let ridge = Array2::<f64>::eye(d) * eps;
        let base = fid_from_moments(ms.view(), cs.view(), mt.view(), ct.view()).unwrap();
        let shifted = fid_from_moments(ms.view(), (&cs + &ridge).view(), mt.view(), (&ct + &ridge).view()).unwrap();
        prop_assert!((base - shifted).abs() <= 10.0 * eps * d as f64);
    }

    #[test]
    fn split_merge_fid_matches_union(seed in any::<u64>(), cut in 2usize..38) {
        let mut r = rng(seed);
        let pts = sample(&mut r, 40, &[0.5, 1.0, -1.0], 1.0);
        let target = stats_of(&sample(&mut r, 30, &[0.0, 0.0, 0.0], 1.0));
        let merged = stats_of(&pts[..cut]).merge(&stats_of(&pts[cut..])).unwrap();
        let direct = stats_of(&pts);
        let a = fid(&merged, &target).unwrap();
        let b = fid(&direct, &target).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
    }
}

#[test]
fn rank_deficient_cluster_is_allowed() {
    // Fewer samples than dimensions: covariance is singular but FID exists.
    let mut r = rng(9);
    let few = stats_of(&sample(&mut r, 3, &[0.0; 6], 1.0));
    let many = stats_of(&sample(&mut r, 50, &[0.0; 6], 1.0));
    let value = fid(&few, &many).unwrap();
    assert!(value.is_finite() && value >= 0.0);
}
