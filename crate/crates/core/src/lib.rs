//! Target-specific training-set search over pools of image embeddings.
//!
//! The pipeline has two stages. The search stage clusters identities by
//! their mean descriptor, ranks the clusters by Fréchet distance (FID) to an
//! unlabeled target set, and keeps the union of the best-ranked clusters
//! that minimizes the distance. The pruning stage then cuts that union down
//! to a budget of `n` identities and `m` images, first sampling identities
//! uniformly and then choosing images by farthest point sampling.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the pipeline uses.

pub mod analysis;
pub mod cluster;
pub mod error;
pub mod fid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod prune;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use model::{merge_pools, Budget, EmbeddingRecord, SourcePool, TargetSet};
pub use rng::SeededRng;
pub use scalar::Scalar;

pub type GaussianStats = stats::GaussianStats<f64>;
pub type ClusterPartition = cluster::ClusterPartition<f64>;
pub type SearchResult = search::SearchResult<f64>;
pub type PruneResult = prune::PruneResult<f64>;
pub type TargetMoments = fid::TargetMoments<f64>;
