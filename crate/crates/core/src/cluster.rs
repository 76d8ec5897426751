//! Identity clustering: ID-averaged descriptors partitioned by k-means.
//!
//! Seeding is k-means++ driven by [`SeededRng`]; Lloyd iterations use the
//! squared Euclidean metric on raw (unnormalized) descriptors. Ties go to
//! the lowest cluster index. A cluster that empties out is refilled with
//! the point currently farthest from its own centroid, so every returned
//! cluster is non-empty.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SourcePool;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

pub const DEFAULT_CLUSTERS: usize = 50;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Mean descriptor of every identity, keyed (and ordered) by identity id.
pub fn id_average<T: Scalar>(pool: &SourcePool) -> BTreeMap<u64, Array1<T>> {
    let d = pool.dimension();
    pool.id_index()
        .iter()
        .map(|(&id, rows)| {
            let mut acc = Array1::<T>::zeros(d);
            for &r in rows {
                for (a, &v) in acc.iter_mut().zip(&pool.record(r).descriptor) {
                    *a += T::widen(v);
                }
            }
            let n = T::from_count(rows.len() as u64);
            acc.mapv_inplace(|v| v / n);
            (id, acc)
        })
        .collect()
}

/// Identities assigned to `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition<T> {
    pub k: usize,
    pub assignment: BTreeMap<u64, usize>,
    /// `k x d`, row `c` is the centroid of cluster `c`.
    pub centroids: Array2<T>,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after every centroid update, in order.
    pub inertia_history: Vec<T>,
}

impl<T: Scalar> ClusterPartition<T> {
    /// Identities of each cluster, in ascending identity order.
    pub fn members(&self) -> Vec<Vec<u64>> {
        let mut members = vec![Vec::new(); self.k];
        for (&id, &c) in &self.assignment {
            members[c].push(id);
        }
        members
    }

    pub fn final_inertia(&self) -> T {
        self.inertia_history.last().copied().unwrap_or_else(T::zero)
    }

    /// Writes the `identity,cluster` dump.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = ::csv::Writer::from_writer(out);
        let err = |e: ::csv::Error| Error::format("partition csv", e.to_string());
        writer.write_record(["identity", "cluster"]).map_err(err)?;
        for (id, c) in &self.assignment {
            writer
                .write_record([id.to_string(), c.to_string()])
                .map_err(err)?;
        }
        writer
            .flush()
            .map_err(|e| Error::format("partition csv", e.to_string()))
    }
}

fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

/// Nearest centroid; the lowest index wins ties.
fn nearest<T: Scalar>(point: ArrayView1<'_, T>, centroids: &Array2<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let dist = sq_dist(point, centroid);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to the squared
/// distance to the closest centre chosen so far.
fn seed_centroids<T: Scalar>(points: &Array2<T>, k: usize, rng: &mut SeededRng) -> Array2<T> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.below_usize(n);
    chosen.push(first);
    is_chosen[first] = true;

    let mut closest: Vec<T> = points
        .rows()
        .into_iter()
        .map(|p| sq_dist(p, points.row(first)))
        .collect();

    while chosen.len() < k {
        let total: T = closest.iter().copied().sum();
        let pick = if total > T::zero() {
            let u = T::lit(rng.unit_f64()) * total;
            let mut cumulative = T::zero();
            let mut pick = None;
            for (i, &w) in closest.iter().enumerate() {
                cumulative += w;
                if cumulative > u && w > T::zero() {
                    pick = Some(i);
                    break;
                }
            }
            // Round-off can leave u at the very top of the range.
            pick.unwrap_or_else(|| {
                closest
                    .iter()
                    .rposition(|&w| w > T::zero())
                    .expect("positive total has a positive weight")
            })
        } else {
            // Every remaining point coincides with a centre.
            is_chosen
                .iter()
                .position(|&c| !c)
                .expect("k <= n leaves an unchosen point")
        };
        chosen.push(pick);
        is_chosen[pick] = true;
        for (c, p) in closest.iter_mut().zip(points.rows()) {
            let dist = sq_dist(p, points.row(pick));
            if dist < *c {
                *c = dist;
            }
        }
    }

    let d = points.ncols();
    let mut centroids = Array2::zeros((k, d));
    for (mut row, &i) in centroids.rows_mut().into_iter().zip(&chosen) {
        row.assign(&points.row(i));
    }
    centroids
}

/// Returns whether any assignment changed.
fn assign<T: Scalar>(
    points: &Array2<T>,
    centroids: &Array2<T>,
    labels: &mut [usize],
    distances: &mut [T],
) -> bool {
    let fresh: Vec<(usize, T)> = (0..points.nrows())
        .into_par_iter()
        .map(|i| nearest(points.row(i), centroids))
        .collect();
    let mut changed = false;
    for ((label, dist), (c, dd)) in labels.iter_mut().zip(distances.iter_mut()).zip(fresh) {
        if *label != c {
            changed = true;
            *label = c;
        }
        *dist = dd;
    }
    changed
}

/// Moves the farthest-from-centroid point of a multi-member cluster into
/// each empty cluster. Returns whether anything moved.
fn repair_empty<T: Scalar>(
    points: &Array2<T>,
    centroids: &mut Array2<T>,
    labels: &mut [usize],
    distances: &mut [T],
) -> bool {
    let k = centroids.nrows();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut repaired = false;
    for empty in 0..k {
        if sizes[empty] != 0 {
            continue;
        }
        let mut donor: Option<(usize, T)> = None;
        for (i, (&l, &dist)) in labels.iter().zip(distances.iter()).enumerate() {
            if sizes[l] > 1 && donor.is_none_or(|(_, best)| dist > best) {
                donor = Some((i, dist));
            }
        }
        let (i, _) = donor.expect("k <= n leaves a cluster with two members");
        log::debug!("k-means: refilling empty cluster {empty} with point {i}");
        sizes[labels[i]] -= 1;
        sizes[empty] = 1;
        labels[i] = empty;
        distances[i] = T::zero();
        centroids.row_mut(empty).assign(&points.row(i));
        repaired = true;
    }
    repaired
}

/// Centroids as the means of their members. Returns the inertia.
fn update<T: Scalar>(points: &Array2<T>, centroids: &mut Array2<T>, labels: &[usize]) -> T {
    let k = centroids.nrows();
    let mut sums = Array2::<T>::zeros(centroids.raw_dim());
    let mut sizes = vec![0u64; k];
    for (p, &l) in points.rows().into_iter().zip(labels) {
        let mut row = sums.row_mut(l);
        row += &p;
        sizes[l] += 1;
    }
    for (c, (mut row, &size)) in centroids.rows_mut().into_iter().zip(&sizes).enumerate() {
        if size > 0 {
            let n = T::from_count(size);
            row.assign(&sums.row(c).mapv(|v| v / n));
        }
    }
    points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, centroids.row(l)))
        .sum()
}

/// Partitions `points` into `k` non-empty clusters.
///
/// Deterministic in `(points, k, seed)`: points are visited in ascending
/// identity order and all randomness comes from `seed`.
pub fn kmeans<T: Scalar>(
    points: &BTreeMap<u64, Array1<T>>,
    k: usize,
    seed: u64,
) -> Result<ClusterPartition<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("cluster count must be >= 1".to_string()));
    }
    if points.len() < k {
        return Err(Error::InvalidArgument(format!(
            "cannot form {k} clusters from {} identities",
            points.len()
        )));
    }
    let d = points.values().next().map(Array1::len).unwrap_or(0);
    if let Some(bad) = points.values().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            context: "k-means input".to_string(),
            expected: d,
            found: bad.len(),
        });
    }

    let ids: Vec<u64> = points.keys().copied().collect();
    let n = ids.len();
    let mut data = Array2::<T>::zeros((n, d));
    for (mut row, p) in data.rows_mut().into_iter().zip(points.values()) {
        row.assign(p);
    }

    let mut rng = SeededRng::new(seed);
    let mut centroids = seed_centroids(&data, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut distances = vec![T::zero(); n];
    assign(&data, &centroids, &mut labels, &mut distances);

    let mut inertia_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        repair_empty(&data, &mut centroids, &mut labels, &mut distances);
        inertia_history.push(update(&data, &mut centroids, &labels));
        if !assign(&data, &centroids, &mut labels, &mut distances) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("k-means stopped after {MAX_LLOYD_ITERATIONS} iterations without converging");
        repair_empty(&data, &mut centroids, &mut labels, &mut distances);
        inertia_history.push(update(&data, &mut centroids, &labels));
    }

    Ok(ClusterPartition {
        k,
        assignment: ids.into_iter().zip(labels).collect(),
        centroids,
        seed,
        iterations,
        converged,
        inertia_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EmbeddingRecord;
    use ndarray::array;

    fn points(rows: &[&[f64]]) -> BTreeMap<u64, Array1<f64>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| (i as u64 * 10, Array1::from_vec(r.to_vec())))
            .collect()
    }

    #[test]
    fn averages_identities() {
        let pool = SourcePool::from_local_records(
            vec!["a".into()],
            vec![
                EmbeddingRecord::new(0, 1, "x", vec![0.0, 0.0]),
                EmbeddingRecord::new(0, 1, "y", vec![2.0, 2.0]),
                EmbeddingRecord::new(0, 2, "z", vec![5.0, -1.0]),
            ],
        )
        .unwrap();
        let avg = id_average::<f64>(&pool);
        assert_eq!(avg[&1], array![1.0, 1.0]);
        assert_eq!(avg[&2], array![5.0, -1.0]);
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let pts = points(&[&[0.0, 0.0], &[2.0, 0.0], &[4.0, 6.0]]);
        let part = kmeans(&pts, 1, 3).unwrap();
        assert!(part.assignment.values().all(|&c| c == 0));
        assert_eq!(part.centroids.row(0), array![2.0, 2.0]);
    }

    #[test]
    fn one_point_per_cluster() {
        let pts = points(&[&[0.0], &[1.0], &[5.0], &[9.0]]);
        let part = kmeans(&pts, 4, 11).unwrap();
        assert_eq!(part.final_inertia(), 0.0);
        let mut clusters: Vec<usize> = part.assignment.values().copied().collect();
        clusters.sort();
        assert_eq!(clusters, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = points(&[&[1.0], &[1.0], &[1.0], &[2.0]]);
        let part = kmeans(&pts, 3, 0).unwrap();
        assert!(part.members().iter().all(|m| !m.is_empty()));
    }

    #[test]
    fn too_few_points() {
        let pts = points(&[&[0.0], &[1.0]]);
        assert!(kmeans(&pts, 3, 0).is_err());
        assert!(kmeans(&pts, 0, 0).is_err());
    }

    #[test]
    fn partition_csv() {
        let pts = points(&[&[0.0], &[10.0]]);
        let part = kmeans(&pts, 2, 5).unwrap();
        let mut out = Vec::new();
        part.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("identity,cluster\n0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
