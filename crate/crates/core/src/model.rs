//! Domain types shared by every stage: records, pools, targets, budgets.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

/// Bits reserved for the per-dataset local identity inside a pool-wide
/// identity id. The dataset index lives in the bits above.
pub const LOCAL_ID_BITS: u32 = 40;
pub const LOCAL_ID_MASK: u64 = (1u64 << LOCAL_ID_BITS) - 1;
/// Largest dataset index that still fits above the local id bits.
pub const MAX_DATASETS: usize = 1 << (64 - LOCAL_ID_BITS);
/// Identity id carried by target records, which are unlabeled.
pub const NO_IDENTITY: u64 = u64::MAX;

/// Builds the pool-wide identity id for `local_id` in dataset `dataset_index`.
pub fn namespaced_identity(dataset_index: u32, local_id: u64) -> u64 {
    ((dataset_index as u64) << LOCAL_ID_BITS) | (local_id & LOCAL_ID_MASK)
}

/// Splits a pool-wide identity id into `(dataset_index, local_id)`.
pub fn split_identity(identity_id: u64) -> (u32, u64) {
    (
        (identity_id >> LOCAL_ID_BITS) as u32,
        identity_id & LOCAL_ID_MASK,
    )
}

/// One image: where it came from, who it shows, and its descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub dataset_id: u32,
    pub identity_id: u64,
    pub image_key: String,
    pub descriptor: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn new(
        dataset_id: u32,
        identity_id: u64,
        image_key: impl Into<String>,
        descriptor: Vec<f32>,
    ) -> Self {
        Self {
            dataset_id,
            identity_id,
            image_key: image_key.into(),
            descriptor,
        }
    }

    pub fn dimension(&self) -> usize {
        self.descriptor.len()
    }
}

/// Checks the per-record invariants shared by pools and targets.
///
/// `row` numbering is 1-based and only used for diagnostics.
pub(crate) fn check_record(
    context: &str,
    row: usize,
    record: &EmbeddingRecord,
    dimension: usize,
) -> Result<()> {
    if record.descriptor.len() != dimension {
        return Err(Error::DimensionMismatch {
            context: format!("{context} row {row}"),
            expected: dimension,
            found: record.descriptor.len(),
        });
    }
    if let Some(column) = record.descriptor.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.to_string(),
            row,
            column,
        });
    }
    if record.image_key.is_empty() {
        return Err(Error::format(
            context,
            format!("row {row} has an empty image key"),
        ));
    }
    Ok(())
}

/// An indexed, immutable collection of labeled records from one or more
/// datasets. Identity ids are namespaced by dataset (see
/// [`namespaced_identity`]), so grouping by identity never mixes datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePool {
    datasets: Vec<String>,
    records: Vec<EmbeddingRecord>,
    id_index: BTreeMap<u64, Vec<usize>>,
    dimension: usize,
}

impl SourcePool {
    /// Validates `records` against every pool invariant and builds the
    /// identity index. Identity ids are taken as given; use
    /// [`SourcePool::from_local_records`] when ids are still dataset-local.
    pub fn new(datasets: Vec<String>, records: Vec<EmbeddingRecord>) -> Result<Self> {
        let context = "source pool";
        let first = records
            .first()
            .ok_or_else(|| Error::NoRecords(context.to_string()))?;
        let dimension = first.dimension();
        if dimension == 0 {
            return Err(Error::format(context, "descriptor dimension must be >= 1"));
        }
        if datasets.len() > MAX_DATASETS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_DATASETS} datasets fit in a pool, got {}",
                datasets.len()
            )));
        }

        let mut keys: Vec<HashSet<&str>> = vec![HashSet::new(); datasets.len()];
        let mut id_index: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, record) in records.iter().enumerate() {
            check_record(context, i + 1, record, dimension)?;
            let ds = record.dataset_id as usize;
            if ds >= datasets.len() {
                return Err(Error::format(
                    context,
                    format!(
                        "row {} references dataset {ds} but only {} are named",
                        i + 1,
                        datasets.len()
                    ),
                ));
            }
            if split_identity(record.identity_id).0 != record.dataset_id {
                return Err(Error::format(
                    context,
                    format!(
                        "row {}: identity {} is not namespaced to dataset {ds}",
                        i + 1,
                        record.identity_id
                    ),
                ));
            }
            if !keys[ds].insert(record.image_key.as_str()) {
                return Err(Error::DuplicateKey {
                    dataset: datasets[ds].clone(),
                    key: record.image_key.clone(),
                });
            }
            id_index.entry(record.identity_id).or_default().push(i);
        }
        drop(keys);

        Ok(Self {
            datasets,
            records,
            id_index,
            dimension,
        })
    }

    /// Like [`SourcePool::new`], but `identity_id` holds a dataset-local
    /// label which is namespaced here.
    pub fn from_local_records(
        datasets: Vec<String>,
        mut records: Vec<EmbeddingRecord>,
    ) -> Result<Self> {
        for (i, record) in records.iter_mut().enumerate() {
            if record.identity_id > LOCAL_ID_MASK {
                return Err(Error::format(
                    "source pool",
                    format!(
                        "row {}: identity {} exceeds the {LOCAL_ID_BITS}-bit local id range",
                        i + 1,
                        record.identity_id
                    ),
                ));
            }
            record.identity_id = namespaced_identity(record.dataset_id, record.identity_id);
        }
        Self::new(datasets, records)
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> &EmbeddingRecord {
        &self.records[index]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Identity id to record indices (ascending), ordered by identity id.
    pub fn id_index(&self) -> &BTreeMap<u64, Vec<usize>> {
        &self.id_index
    }

    pub fn identity_count(&self) -> usize {
        self.id_index.len()
    }

    /// Record indices of one identity, or an empty slice if unknown.
    pub fn images_of(&self, identity_id: u64) -> &[usize] {
        self.id_index
            .get(&identity_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn dataset_name(&self, dataset_id: u32) -> &str {
        &self.datasets[dataset_id as usize]
    }

    /// Replaces every dataset name. Used when a single-dataset file is
    /// ingested under a user-chosen name.
    pub(crate) fn rename_datasets(&mut self, names: Vec<String>) {
        debug_assert_eq!(names.len(), self.datasets.len());
        self.datasets = names;
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<EmbeddingRecord>) {
        (self.datasets, self.records)
    }
}

/// Concatenates pools. Dataset tables are appended in input order and every
/// identity id is re-namespaced to its dataset's new position, so identities
/// from different parts never collide.
pub fn merge_pools(parts: Vec<SourcePool>) -> Result<SourcePool> {
    let dimension = parts
        .first()
        .map(SourcePool::dimension)
        .ok_or_else(|| Error::NoRecords("merge of zero pools".to_string()))?;

    let total: usize = parts.iter().map(SourcePool::len).sum();
    let mut datasets = Vec::new();
    let mut records = Vec::with_capacity(total);
    for (i, part) in parts.into_iter().enumerate() {
        if part.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                context: format!("pool part {i}"),
                expected: dimension,
                found: part.dimension(),
            });
        }
        let offset = datasets.len() as u32;
        let (names, part_records) = part.into_parts();
        datasets.extend(names);
        records.extend(part_records.into_iter().map(|mut r| {
            r.dataset_id += offset;
            r.identity_id = namespaced_identity(r.dataset_id, r.identity_id & LOCAL_ID_MASK);
            r
        }));
    }
    SourcePool::new(datasets, records)
}

/// Unlabeled embeddings of the deployment domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    records: Vec<EmbeddingRecord>,
    dimension: usize,
}

impl TargetSet {
    /// Needs at least two records so a covariance exists. Identity ids are
    /// ignored; image keys need not be unique.
    pub fn new(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let context = "target set";
        let dimension = records
            .first()
            .ok_or_else(|| Error::NoRecords(context.to_string()))?
            .dimension();
        if dimension == 0 {
            return Err(Error::format(context, "descriptor dimension must be >= 1"));
        }
        for (i, record) in records.iter().enumerate() {
            check_record(context, i + 1, record, dimension)?;
        }
        if records.len() < 2 {
            return Err(Error::InsufficientSamples {
                what: context.to_string(),
                needed: 2,
                got: records.len() as u64,
            });
        }
        Ok(Self { records, dimension })
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Fails unless this target lives in the same descriptor space as `pool`.
    pub fn check_compatible(&self, pool: &SourcePool) -> Result<()> {
        if self.dimension != pool.dimension() {
            return Err(Error::DimensionMismatch {
                context: "target vs pool".to_string(),
                expected: pool.dimension(),
                found: self.dimension,
            });
        }
        Ok(())
    }
}

/// At most `identities` identities and `images` images in the final set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    identities: usize,
    images: usize,
}

impl Budget {
    pub fn new(identities: usize, images: usize) -> Result<Self> {
        if identities == 0 {
            return Err(Error::InvalidArgument(
                "budget must allow at least one identity".to_string(),
            ));
        }
        if images < identities {
            return Err(Error::InvalidArgument(format!(
                "image budget {images} cannot cover one seed image for each of {identities} identities"
            )));
        }
        Ok(Self { identities, images })
    }

    pub fn identities(&self) -> usize {
        self.identities
    }

    pub fn images(&self) -> usize {
        self.images
    }
}
