//! Budgeted pruning: sample identities, seed one image per identity, then
//! grow the image set by farthest point sampling in descriptor space.
//!
//! Farthest point sampling is the greedy 2-approximation to K-center: each
//! step adds the candidate whose distance to its nearest selected image is
//! largest. A per-candidate nearest-distance cache keeps each step at
//! `O(|universe| * d)`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Budget, SourcePool};
use crate::rng::SeededRng;
use crate::scalar::{squared_distance_f32, Scalar};

/// Uniform sample of `n` identities without replacement, returned in
/// ascending order.
///
/// The candidates are sorted ascending, then a partial Fisher-Yates shuffle
/// runs over them: for `i` in `0..n`, swap position `i` with
/// `i + below(len - i)`. When `n` covers every candidate, all are returned
/// and no randomness is consumed.
pub fn sample_identities(identity_ids: &[u64], n: usize, seed: u64) -> Vec<u64> {
    let mut ids = identity_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if n >= ids.len() {
        return ids;
    }
    let mut rng = SeededRng::new(seed);
    for i in 0..n {
        let j = i + rng.below_usize(ids.len() - i);
        ids.swap(i, j);
    }
    ids.truncate(n);
    ids.sort_unstable();
    ids
}

/// Incremental farthest point sampler over a fixed universe of pool records.
#[derive(Debug, Clone)]
pub struct FarthestPointSampler<'a, T> {
    pool: &'a SourcePool,
    /// Ascending record indices.
    universe: Vec<usize>,
    selected: Vec<bool>,
    /// Squared distance from each universe member to its nearest selected
    /// member.
    nearest: Vec<T>,
    remaining: usize,
}

impl<'a, T: Scalar> FarthestPointSampler<'a, T> {
    /// `initial` must be non-empty and contained in `universe`.
    pub fn new(pool: &'a SourcePool, universe: &[usize], initial: &[usize]) -> Result<Self> {
        let mut universe = universe.to_vec();
        universe.sort_unstable();
        universe.dedup();
        if initial.is_empty() {
            return Err(Error::InvalidArgument(
                "farthest point sampling needs at least one starting point".to_string(),
            ));
        }
        if let Some(&bad) = universe.iter().find(|&&r| r >= pool.len()) {
            return Err(Error::InvalidArgument(format!("record index {bad} is out of range")));
        }
        let mut sampler = Self {
            pool,
            selected: vec![false; universe.len()],
            nearest: vec![T::infinity(); universe.len()],
            remaining: universe.len(),
            universe,
        };
        for &record in initial {
            let pos = sampler.position(record).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "starting record {record} is not part of the sampling universe"
                ))
            })?;
            sampler.add(pos);
        }
        Ok(sampler)
    }

    fn position(&self, record: usize) -> Option<usize> {
        self.universe.binary_search(&record).ok()
    }

    fn add(&mut self, pos: usize) {
        if self.selected[pos] {
            return;
        }
        self.selected[pos] = true;
        self.remaining -= 1;
        let anchor = &self.pool.record(self.universe[pos]).descriptor;
        let pool = self.pool;
        let universe = &self.universe;
        self.nearest
            .par_iter_mut()
            .with_min_len(512)
            .enumerate()
            .for_each(|(i, cached)| {
                let dist: T = squared_distance_f32(&pool.record(universe[i]).descriptor, anchor);
                if dist < *cached {
                    *cached = dist;
                }
            });
    }

    /// Adds the farthest remaining candidate and returns its record index,
    /// or `None` once the whole universe is selected. Ties go to the lowest
    /// record index.
    pub fn step(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let selected = &self.selected;
        let (pos, _) = self
            .nearest
            .par_iter()
            .with_min_len(512)
            .enumerate()
            .filter(|(i, _)| !selected[*i])
            .map(|(i, &d)| (i, d))
            .reduce(
                || (usize::MAX, T::neg_infinity()),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        self.add(pos);
        Some(self.universe[pos])
    }

    pub fn universe(&self) -> &[usize] {
        &self.universe
    }

    pub fn selected_count(&self) -> usize {
        self.universe.len() - self.remaining
    }

    /// Euclidean distance from each universe member (in universe order) to
    /// its nearest selected member.
    pub fn nearest_distances(&self) -> Vec<T> {
        self.nearest.iter().map(|d| d.sqrt()).collect()
    }

    /// Current cover radius of the selection over the universe.
    pub fn cover_radius(&self) -> T {
        self.nearest
            .iter()
            .fold(T::zero(), |m, &d| m.max(d))
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult<T> {
    /// Seed images (in identity order) followed by `fps_order`; or, when the
    /// sampled identities fit the image budget, all their images ascending.
    pub selected: Vec<usize>,
    /// Sampled identities, ascending.
    pub id_sample: Vec<u64>,
    pub seed_images: BTreeMap<u64, usize>,
    pub fps_order: Vec<usize>,
    pub seed: u64,
    /// Number of images of the sampled identities.
    pub universe_size: usize,
    pub cover_radius: T,
}

/// Picks one image per identity (identities ascending, uniform within each
/// identity's images) and then runs farthest point sampling up to `m`
/// images. When all images of `ids` fit into `m`, every one is kept.
pub fn fps_prune<T: Scalar>(
    pool: &SourcePool,
    ids: &[u64],
    m: usize,
    seed: u64,
) -> Result<PruneResult<T>> {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::InvalidArgument("no identities to prune".to_string()));
    }
    if m < ids.len() {
        return Err(Error::InvalidArgument(format!(
            "image budget {m} cannot hold one seed image for each of {} identities",
            ids.len()
        )));
    }

    let mut rng = SeededRng::new(seed);
    let mut universe = Vec::new();
    let mut seed_images = BTreeMap::new();
    for &id in &ids {
        let images = pool.images_of(id);
        if images.is_empty() {
            return Err(Error::InvalidArgument(format!("identity {id} is not in the pool")));
        }
        seed_images.insert(id, images[rng.below_usize(images.len())]);
        universe.extend_from_slice(images);
    }
    universe.sort_unstable();
    let seeds: Vec<usize> = seed_images.values().copied().collect();

    if universe.len() <= m {
        return Ok(PruneResult {
            universe_size: universe.len(),
            selected: universe,
            id_sample: ids,
            seed_images,
            fps_order: Vec::new(),
            seed,
            cover_radius: T::zero(),
        });
    }

    let mut sampler = FarthestPointSampler::<T>::new(pool, &universe, &seeds)?;
    let mut fps_order = Vec::with_capacity(m - seeds.len());
    while sampler.selected_count() < m {
        match sampler.step() {
            Some(record) => fps_order.push(record),
            None => break,
        }
    }
    let mut selected = seeds;
    selected.extend_from_slice(&fps_order);
    Ok(PruneResult {
        selected,
        id_sample: ids,
        seed_images,
        fps_order,
        seed,
        universe_size: universe.len(),
        cover_radius: sampler.cover_radius(),
    })
}

/// Samples identities under `budget` and prunes their images.
pub fn budgeted_prune<T: Scalar>(
    pool: &SourcePool,
    searched_ids: &[u64],
    budget: Budget,
    id_seed: u64,
    fps_seed: u64,
) -> Result<PruneResult<T>> {
    let ids = sample_identities(searched_ids, budget.identities(), id_seed);
    fps_prune(pool, &ids, budget.images(), fps_seed)
}

/// Largest distance from a universe record to its nearest selected record.
pub fn kcenter_radius<T: Scalar>(
    pool: &SourcePool,
    selected: &[usize],
    universe: &[usize],
) -> Result<T> {
    if selected.is_empty() || universe.is_empty() {
        return Err(Error::InvalidArgument(
            "cover radius needs non-empty selected and universe sets".to_string(),
        ));
    }
    if let Some(&bad) = selected.iter().chain(universe).find(|&&r| r >= pool.len()) {
        return Err(Error::InvalidArgument(format!("record index {bad} is out of range")));
    }
    let worst = universe
        .par_iter()
        .map(|&u| {
            let x = &pool.record(u).descriptor;
            selected
                .iter()
                .map(|&s| squared_distance_f32::<T>(x, &pool.record(s).descriptor))
                .fold(T::infinity(), T::min)
        })
        .reduce(T::zero, T::max);
    Ok(worst.sqrt())
}
