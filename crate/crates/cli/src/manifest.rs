//! The JSON record of a run. Field order is fixed by declaration order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PARTITION_FILE: &str = "partition.csv";

/// Name of the only field that differs between otherwise identical runs.
pub const TIMESTAMP_FIELD: &str = "created_unix_secs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub created_unix_secs: u64,
    pub command: String,
    pub config: RunConfig,
    pub conventions: Conventions,
    pub pool: PoolSummary,
    pub target: TargetSummary,
    pub search: SearchSummary,
    pub prune: Option<PruneSummary>,
    pub composition: CompositionSummary,
    pub selected: Vec<SelectedImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub covariance: String,
    pub cluster_metric: String,
    pub fps_metric: String,
    pub cluster_init: String,
    pub max_lloyd_iterations: usize,
    pub rng: String,
    pub identity_namespace_bits: u32,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            covariance: "unbiased (n-1)".to_string(),
            cluster_metric: "squared euclidean on raw descriptors".to_string(),
            fps_metric: "euclidean on raw descriptors".to_string(),
            cluster_init: "k-means++".to_string(),
            max_lloyd_iterations: snp_core::cluster::MAX_LLOYD_ITERATIONS,
            rng: "splitmix64".to_string(),
            identity_namespace_bits: snp_core::model::LOCAL_ID_BITS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub datasets: Vec<String>,
    pub records: usize,
    pub identities: usize,
    pub dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFid {
    pub cluster: usize,
    pub fid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub prefix: usize,
    pub cluster: usize,
    pub cumulative_fid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Absorbed {
    pub cluster: usize,
    pub into: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansSummary {
    pub clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    /// Absent when the search stage was read from another manifest.
    pub kmeans: Option<KmeansSummary>,
    pub absorbed: Vec<Absorbed>,
    pub ranking: Vec<ClusterFid>,
    pub trace: Vec<TraceEntry>,
    pub selected_clusters: Vec<usize>,
    pub best_fid: f64,
    pub identity_count: usize,
    pub image_count: usize,
    /// Namespaced identity ids, ascending.
    pub identity_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedImage {
    pub identity: u64,
    pub record: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSummary {
    pub identity_budget: usize,
    pub image_budget: usize,
    /// Sampled identities (namespaced), ascending.
    pub id_sample: Vec<u64>,
    pub universe_size: usize,
    /// Record indices into the pool.
    pub seed_images: Vec<SeedImage>,
    pub fps_order: Vec<usize>,
    pub cover_radius: f64,
    /// FID of the pruned set to the target; absent with fewer than 2 images.
    pub fid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetShare {
    pub dataset: String,
    pub images: usize,
    pub image_fraction: f64,
    pub identities: usize,
    pub identity_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionSummary {
    pub total_images: usize,
    pub total_identities: usize,
    pub datasets: Vec<DatasetShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedImage {
    pub dataset: String,
    /// Dataset-local identity label.
    pub identity: u64,
    pub image_key: String,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("invalid manifest {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Drops the timestamp line so two manifests can be compared byte for byte.
pub fn strip_timestamp(json: &str) -> String {
    let key = format!("\"{TIMESTAMP_FIELD}\"");
    json.lines()
        .filter(|line| !line.trim_start().starts_with(&key))
        .collect::<Vec<_>>()
        .join("\n")
}
