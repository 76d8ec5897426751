//! Embedding file formats and ingestion.
//!
//! Two on-disk formats carry the same content: a little-endian binary
//! container ([`binary`]) and a headed CSV ([`delimited`]). Both hold a
//! dataset-name table plus one row per image.

pub mod binary;
pub mod delimited;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EmbeddingRecord, SourcePool, TargetSet, LOCAL_ID_MASK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// `.csv` (any case) is CSV; everything else is the binary container.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Binary => "binary",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (expected binary or csv)"
            ))),
        }
    }
}

/// Parsed file contents before any pool or target invariants are applied.
/// Identity ids are exactly as stored in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEmbeddings {
    pub datasets: Vec<String>,
    pub records: Vec<EmbeddingRecord>,
    pub dimension: usize,
}

/// What a reader should accept in the identity column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Labels {
    Required,
    Optional,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path, format: Format, labels: Labels) -> Result<RawEmbeddings> {
    let context = path.display().to_string();
    let reader = open(path)?;
    let empty = reader
        .get_ref()
        .metadata()
        .map(|m| m.len() == 0)
        .unwrap_or(false);
    if empty {
        return Err(Error::NoRecords(context));
    }
    let raw = match format {
        Format::Binary => binary::read(reader, &context)?,
        Format::Csv => delimited::read(reader, &context, labels)?,
    };
    if raw.records.is_empty() {
        return Err(Error::NoRecords(context));
    }
    Ok(raw)
}

/// Reads one dataset file into a pool fragment named `name`.
///
/// Identity labels in the file are treated as local to the dataset and
/// namespaced here. A file that itself holds several datasets keeps them
/// apart, named `name/<original>`.
pub fn ingest_dataset(path: &Path, name: &str, format: Format) -> Result<SourcePool> {
    let raw = read_raw(path, format, Labels::Required)?;
    let names = if raw.datasets.len() == 1 {
        vec![name.to_string()]
    } else {
        raw.datasets
            .iter()
            .map(|original| format!("{name}/{original}"))
            .collect()
    };
    let records = raw
        .records
        .into_iter()
        .map(|mut r| {
            r.identity_id &= LOCAL_ID_MASK;
            r
        })
        .collect();
    let mut pool = SourcePool::from_local_records(raw.datasets, records)
        .map_err(|e| attach_path(e, path))?;
    pool.rename_datasets(names);
    log::info!(
        "ingested {}: {} records, {} identities, d={}",
        path.display(),
        pool.len(),
        pool.identity_count(),
        pool.dimension()
    );
    Ok(pool)
}

/// Reads a file holding a complete pool, keeping its dataset table and ids.
pub fn read_pool(path: &Path, format: Format) -> Result<SourcePool> {
    let raw = read_raw(path, format, Labels::Required)?;
    match format {
        Format::Binary => SourcePool::new(raw.datasets, raw.records),
        // CSV stores dataset-local labels.
        Format::Csv => SourcePool::from_local_records(raw.datasets, raw.records),
    }
    .map_err(|e| attach_path(e, path))
}

/// Reads an unlabeled target set. Identity columns may be empty.
pub fn read_target(path: &Path, format: Format) -> Result<TargetSet> {
    let raw = read_raw(path, format, Labels::Optional)?;
    TargetSet::new(raw.records).map_err(|e| attach_path(e, path))
}

pub fn write_pool(path: &Path, pool: &SourcePool, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Binary => {
            binary::write(&mut out, pool.datasets(), pool.records(), pool.dimension())
                .map_err(|e| Error::io(path, e))?
        }
        Format::Csv => delimited::write(&mut out, pool.datasets(), pool.records(), pool.dimension())?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn attach_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Format { context, message } if !context.contains(&*path.to_string_lossy()) => {
            Error::Format {
                context: format!("{} ({context})", path.display()),
                message,
            }
        }
        Error::NonFinite {
            context,
            row,
            column,
        } => Error::NonFinite {
            context: format!("{} ({context})", path.display()),
            row,
            column,
        },
        other => other,
    }
}
