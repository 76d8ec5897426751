//! Synthetic Gaussian pools, targets and matrices for tests.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use snp_core::model::NO_IDENTITY;
use snp_core::{merge_pools, EmbeddingRecord, SourcePool, TargetSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `center + spread * N(0, I)` as an `f32` descriptor.
pub fn gaussian_point(rng: &mut impl Rng, center: &[f64], spread: f64) -> Vec<f32> {
    center
        .iter()
        .map(|&c| (c + spread * normal(rng)) as f32)
        .collect()
}

/// A group of identities scattered around one center.
#[derive(Debug, Clone)]
pub struct Blob {
    pub name: String,
    pub identities: usize,
    pub images_per_identity: usize,
    pub center: Vec<f64>,
    /// Spread of identity means around `center`.
    pub identity_spread: f64,
    /// Spread of images around their identity mean.
    pub image_spread: f64,
}

impl Blob {
    pub fn new(name: &str, identities: usize, images_per_identity: usize, center: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            identities,
            images_per_identity,
            center,
            identity_spread: 0.5,
            image_spread: 0.5,
        }
    }

    pub fn spreads(mut self, identity_spread: f64, image_spread: f64) -> Self {
        self.identity_spread = identity_spread;
        self.image_spread = image_spread;
        self
    }

    /// A single-dataset pool fragment.
    pub fn pool(&self, rng: &mut impl Rng) -> SourcePool {
        let mut records = Vec::with_capacity(self.identities * self.images_per_identity);
        for id in 0..self.identities {
            let id_center: Vec<f64> = self
                .center
                .iter()
                .map(|&c| c + self.identity_spread * normal(rng))
                .collect();
            for img in 0..self.images_per_identity {
                records.push(EmbeddingRecord::new(
                    0,
                    id as u64,
                    format!("{}/{id}/{img}.jpg", self.name),
                    gaussian_point(rng, &id_center, self.image_spread),
                ));
            }
        }
        SourcePool::from_local_records(vec![self.name.clone()], records).expect("valid blob")
    }
}

/// One dataset per blob, merged in order.
pub fn blob_pool(blobs: &[Blob], seed: u64) -> SourcePool {
    let mut rng = rng(seed);
    merge_pools(blobs.iter().map(|b| b.pool(&mut rng)).collect()).expect("same dimension")
}

/// `n` unlabeled points from `N(center, spread^2 I)`.
pub fn gaussian_target(center: &[f64], spread: f64, n: usize, seed: u64) -> TargetSet {
    let mut rng = rng(seed);
    let records = (0..n)
        .map(|i| {
            EmbeddingRecord::new(0, NO_IDENTITY, format!("t{i}"), gaussian_point(&mut rng, center, spread))
        })
        .collect();
    TargetSet::new(records).expect("valid target")
}

/// `A Aᵀ / d + ridge I` with Gaussian `A`.
pub fn random_spd(rng: &mut impl Rng, d: usize, ridge: f64) -> Array2<f64> {
    let a = Array2::from_shape_fn((d, d), |_| normal(rng));
    let mut s = a.dot(&a.t()) / d as f64;
    for i in 0..d {
        s[[i, i]] += ridge;
    }
    s
}

/// `count` descriptors of dimension `d` with components in `[-scale, scale)`.
pub fn uniform_points(rng: &mut impl Rng, count: usize, d: usize, scale: f64) -> Vec<Vec<f32>> {
    (0..count)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale) as f32).collect())
        .collect()
}

/// A single-dataset pool from explicit `(local identity, descriptor)` rows.
pub fn pool_from_rows(rows: Vec<(u64, Vec<f32>)>) -> SourcePool {
    let records = rows
        .into_iter()
        .enumerate()
        .map(|(i, (id, d))| EmbeddingRecord::new(0, id, format!("r{i}"), d))
        .collect();
    SourcePool::from_local_records(vec!["synthetic".into()], records).expect("valid rows")
}

/// A target set as a one-identity pool, so it can be written with the pool
/// writers and read back with `read_target`.
pub fn target_pool(target: &TargetSet) -> SourcePool {
    let records = target
        .records()
        .iter()
        .map(|r| EmbeddingRecord::new(0, 0, r.image_key.clone(), r.descriptor.clone()))
        .collect();
    SourcePool::from_local_records(vec!["target".into()], records).expect("valid target")
}
