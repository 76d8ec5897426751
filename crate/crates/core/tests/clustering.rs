use std::collections::BTreeMap;

use ndarray::Array1;
use proptest::prelude::*;
use rand::Rng;

use snp_core::cluster::{id_average, kmeans};
use snp_testkit::{gaussian_point, pool_from_rows, rng};

fn sq(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum-inertia 2-partition by enumerating every labeling.
fn best_two_partition(points: &[Array1<f64>]) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 1u32..(1 << n) - 1 {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut inertia = 0.0;
        for c in 0..2 {
            let members: Vec<&Array1<f64>> =
                points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            let mean = members.iter().fold(Array1::zeros(points[0].len()), |acc, p| acc + *p)
                / members.len() as f64;
            inertia += members.iter().map(|p| sq(p, &mean)).sum::<f64>();
        }
        if inertia < best.1 {
            best = (labels, inertia);
        }
    }
    best
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y) || a.iter().zip(b).all(|(x, y)| x != y)
}

#[test]
fn separated_blobs_match_the_exhaustive_partition() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let n = r.random_range(4..=10);
        let pts: Vec<Array1<f64>> = (0..n)
            .map(|i| {
                let center = if i % 2 == 0 { [0.0, 0.0] } else { [8.0, 8.0] };
                Array1::from_iter(gaussian_point(&mut r, &center, 0.6).iter().map(|&v| v as f64))
            })
            .collect();
        let map: BTreeMap<u64, Array1<f64>> =
            pts.iter().cloned().enumerate().map(|(i, p)| (i as u64, p)).collect();
        let part = kmeans(&map, 2, seed).unwrap();
        let labels: Vec<usize> = part.assignment.values().copied().collect();
        let (oracle, oracle_inertia) = best_two_partition(&pts);
        assert!(same_partition(&labels, &oracle), "seed {seed}");
        assert!((part.final_inertia() - oracle_inertia).abs() < 1e-9);
        let blobs: Vec<usize> = (0..n).map(|i| i % 2).collect();
        assert!(same_partition(&labels, &blobs));
    }
}

#[test]
fn id_average_matches_direct_sum() {
    let mut r = rng(5);
    let rows: Vec<(u64, Vec<f32>)> = (0..10)
        .map(|i| (i % 3, gaussian_point(&mut r, &[1.0, -1.0, 0.5], 2.0)))
        .collect();
    let pool = pool_from_rows(rows.clone());
    let averages = id_average::<f64>(&pool);
    for local in 0..3u64 {
        let members: Vec<&Vec<f32>> = rows.iter().filter(|(id, _)| *id == local).map(|(_, d)| d).collect();
        let mut oracle = [0.0f64; 3];
        for m in &members {
            for (o, &v) in oracle.iter_mut().zip(m.iter()) {
                *o += v as f64;
            }
        }
        let got = &averages[&local];
        for (g, o) in got.iter().zip(oracle) {
            assert!((g - o / members.len() as f64).abs() < 1e-12);
        }
    }
}

fn random_points(seed: u64, n: usize, d: usize) -> BTreeMap<u64, Array1<f64>> {
    let mut r = rng(seed);
    (0..n as u64)
        .map(|i| {
            let center: Vec<f64> = (0..d).map(|_| r.random_range(-5.0..5.0)).collect();
            let p = gaussian_point(&mut r, &center, 1.0);
            (i * 7 + 3, Array1::from_iter(p.iter().map(|&v| v as f64)))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lloyd_invariants(seed in any::<u64>(), n in 5usize..60, d in 1usize..5, k in 1usize..6) {
        prop_assume!(k <= n);
        let pts = random_points(seed, n, d);
        let part = kmeans(&pts, k, seed ^ 0xabc).unwrap();

        for w in part.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        let members = part.members();
        prop_assert!(members.iter().all(|m| !m.is_empty()));
        prop_assert_eq!(part.assignment.len(), n);
        if part.converged {
            for (c, ids) in members.iter().enumerate() {
                let mean: Array1<f64> = ids.iter().fold(Array1::zeros(d), |acc, id| acc + &pts[id]) / ids.len() as f64;
                for (a, b) in mean.iter().zip(part.centroids.row(c)) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
        let again = kmeans(&pts, k, seed ^ 0xabc).unwrap();
        prop_assert_eq!(part, again);
    }
}

#[test]
fn seed_changes_only_the_seeding() {
    let pts = random_points(11, 40, 3);
    let a = kmeans(&pts, 4, 1).unwrap();
    let b = kmeans(&pts, 4, 1).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.seed, 1);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let pts = random_points(12, 300, 4);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
    let a = single.install(|| kmeans(&pts, 7, 3).unwrap());
    let b = many.install(|| kmeans(&pts, 7, 3).unwrap());
    assert_eq!(a, b);
}
