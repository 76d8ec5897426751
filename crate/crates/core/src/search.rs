//! Target-specific subset search.
//!
//! Clusters are ranked by their own FID to the target, then unioned in that
//! order. The union is tracked as merged [`GaussianStats`] (never by
//! re-reading images) and the prefix with the lowest FID wins. Every
//! prefix is visited; there is no early exit.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::cluster::ClusterPartition;
use crate::error::{Error, Result};
use crate::fid::TargetMoments;
use crate::model::{SourcePool, TargetSet};
use crate::scalar::Scalar;
use crate::stats::GaussianStats;

/// Images of one cluster after small clusters have been folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGroup {
    pub cluster: usize,
    /// Ascending.
    pub identities: Vec<u64>,
    /// Ascending record indices.
    pub records: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGroups {
    /// One entry per surviving cluster, ascending cluster index.
    pub groups: Vec<ClusterGroup>,
    /// `(small cluster, receiving cluster)` for clusters with fewer than two
    /// images.
    pub absorbed: Vec<(usize, usize)>,
}

/// Splits the pool's images by cluster. Clusters with fewer than two images
/// (no covariance) are folded into the valid cluster with the nearest
/// centroid, lowest index on ties.
pub fn cluster_groups<T: Scalar>(
    pool: &SourcePool,
    partition: &ClusterPartition<T>,
) -> Result<ClusterGroups> {
    let members = partition.members();
    let image_counts: Vec<usize> = members
        .iter()
        .map(|ids| ids.iter().map(|&id| pool.images_of(id).len()).sum())
        .collect();
    let valid: Vec<usize> = (0..partition.k).filter(|&c| image_counts[c] >= 2).collect();
    if valid.is_empty() {
        return Err(Error::InsufficientSamples {
            what: "every cluster".to_string(),
            needed: 2,
            got: image_counts.iter().copied().max().unwrap_or(0) as u64,
        });
    }

    let mut owner: Vec<usize> = (0..partition.k).collect();
    let mut absorbed = Vec::new();
    for c in (0..partition.k).filter(|&c| image_counts[c] < 2) {
        let centroid = partition.centroids.row(c);
        let mut best = (valid[0], T::infinity());
        for &v in &valid {
            let dist: T = centroid
                .iter()
                .zip(partition.centroids.row(v).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            if dist < best.1 {
                best = (v, dist);
            }
        }
        log::warn!(
            "cluster {c} has {} image(s); merged into cluster {} before ranking",
            image_counts[c],
            best.0
        );
        owner[c] = best.0;
        absorbed.push((c, best.0));
    }

    let mut slot_of = vec![usize::MAX; partition.k];
    let mut groups: Vec<ClusterGroup> = valid
        .iter()
        .enumerate()
        .map(|(slot, &c)| {
            slot_of[c] = slot;
            ClusterGroup {
                cluster: c,
                identities: Vec::new(),
                records: Vec::new(),
            }
        })
        .collect();

    let mut group_of_identity: HashMap<u64, usize> = HashMap::with_capacity(partition.assignment.len());
    for (&id, &c) in &partition.assignment {
        let slot = slot_of[owner[c]];
        group_of_identity.insert(id, slot);
        groups[slot].identities.push(id);
    }
    for (i, record) in pool.records().iter().enumerate() {
        let slot = *group_of_identity.get(&record.identity_id).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "identity {} of record {i} is missing from the cluster partition",
                record.identity_id
            ))
        })?;
        groups[slot].records.push(i);
    }
    Ok(ClusterGroups { groups, absorbed })
}

/// Statistics of every group, accumulated in record order.
fn group_stats<T: Scalar>(pool: &SourcePool, groups: &[ClusterGroup]) -> Result<Vec<GaussianStats<T>>> {
    groups
        .par_iter()
        .map(|g| {
            GaussianStats::accumulate(pool.dimension(), g.records.iter().map(|&r| pool.record(r)))
        })
        .collect()
}

fn target_moments<T: Scalar>(pool: &SourcePool, target: &TargetSet) -> Result<TargetMoments<T>> {
    target.check_compatible(pool)?;
    let stats = GaussianStats::accumulate(target.dimension(), target.records())?;
    TargetMoments::new(&stats)
}

/// `(cluster, fid)` sorted by FID ascending, ties by cluster index.
fn rank<T: Scalar>(
    groups: &[ClusterGroup],
    stats: &[GaussianStats<T>],
    target: &TargetMoments<T>,
) -> Result<Vec<(usize, usize, T)>> {
    let fids: Vec<T> = stats
        .par_iter()
        .map(|s| target.fid_of(s))
        .collect::<Result<_>>()?;
    let mut ranked: Vec<(usize, usize, T)> = groups
        .iter()
        .zip(fids)
        .enumerate()
        .map(|(slot, (g, f))| (g.cluster, slot, f))
        .collect();
    ranked.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .expect("FID is finite")
            .then(a.0.cmp(&b.0))
    });
    Ok(ranked)
}

/// FID of each cluster to the target, ascending (ties by cluster index).
pub fn cluster_fids<T: Scalar>(
    pool: &SourcePool,
    partition: &ClusterPartition<T>,
    target: &TargetSet,
) -> Result<Vec<(usize, T)>> {
    let groups = cluster_groups(pool, partition)?;
    let moments = target_moments(pool, target)?;
    let stats = group_stats(pool, &groups.groups)?;
    Ok(rank(&groups.groups, &stats, &moments)?
        .into_iter()
        .map(|(c, _, f)| (c, f))
        .collect())
}

/// Length of the prefix kept by the running-minimum rule: starting from
/// `ε = ∞`, a prefix replaces the incumbent only when strictly better.
pub fn best_prefix_len<T: Scalar>(cumulative_fids: &[T]) -> Option<usize> {
    let mut best = None;
    let mut epsilon = T::infinity();
    for (i, &f) in cumulative_fids.iter().enumerate() {
        if f < epsilon {
            epsilon = f;
            best = Some(i + 1);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep<T> {
    pub cluster: usize,
    /// FID of the union of this cluster and every cluster before it.
    pub cumulative_fid: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<T> {
    /// Every surviving cluster with its own FID, ascending.
    pub ranking: Vec<(usize, T)>,
    /// The kept prefix of `ranking`.
    pub selected_clusters: Vec<usize>,
    pub best_fid: T,
    pub trace: Vec<TraceStep<T>>,
    /// Identities of the kept clusters, ascending.
    pub identity_ids: Vec<u64>,
    /// Image count of the kept clusters.
    pub image_count: usize,
    pub absorbed: Vec<(usize, usize)>,
}

/// Ranks clusters, grows the union prefix by prefix, and keeps the prefix
/// with the smallest FID to the target.
pub fn greedy_search<T: Scalar>(
    pool: &SourcePool,
    partition: &ClusterPartition<T>,
    target: &TargetSet,
) -> Result<SearchResult<T>> {
    let groups = cluster_groups(pool, partition)?;
    let moments = target_moments(pool, target)?;
    let stats = group_stats(pool, &groups.groups)?;
    let ranked = rank(&groups.groups, &stats, &moments)?;

    let mut running = GaussianStats::empty(pool.dimension());
    let mut trace = Vec::with_capacity(ranked.len());
    for &(cluster, slot, _) in &ranked {
        running.absorb(&stats[slot])?;
        let cumulative_fid = moments.fid_of(&running)?;
        log::debug!("search: +cluster {cluster} -> FID {cumulative_fid}");
        trace.push(TraceStep {
            cluster,
            cumulative_fid,
        });
    }

    let fids: Vec<T> = trace.iter().map(|s| s.cumulative_fid).collect();
    let keep = best_prefix_len(&fids)
        .ok_or_else(|| Error::Numeric("no prefix produced a finite FID".to_string()))?;

    let mut identity_ids = Vec::new();
    let mut image_count = 0;
    let mut selected_clusters = Vec::with_capacity(keep);
    for &(cluster, slot, _) in &ranked[..keep] {
        selected_clusters.push(cluster);
        identity_ids.extend_from_slice(&groups.groups[slot].identities);
        image_count += groups.groups[slot].records.len();
    }
    identity_ids.sort_unstable();

    Ok(SearchResult {
        ranking: ranked.iter().map(|&(c, _, f)| (c, f)).collect(),
        selected_clusters,
        best_fid: fids[keep - 1],
        trace,
        identity_ids,
        image_count,
        absorbed: groups.absorbed,
    })
}

/// Maps each identity of a search result to the record indices it owns.
pub fn selected_images(pool: &SourcePool, identity_ids: &[u64]) -> BTreeMap<u64, Vec<usize>> {
    identity_ids
        .iter()
        .map(|&id| (id, pool.images_of(id).to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_minimum_rule() {
        assert_eq!(best_prefix_len(&[30.0, 22.0, 25.0, 27.0]), Some(2));
        assert_eq!(best_prefix_len(&[5.0, 4.0, 3.0, 2.0]), Some(4));
        assert_eq!(best_prefix_len(&[1.0, 2.0, 3.0]), Some(1));
        // A tie does not replace the incumbent.
        assert_eq!(best_prefix_len(&[3.0, 2.0, 2.0]), Some(2));
        assert_eq!(best_prefix_len::<f64>(&[]), None);
    }
}
