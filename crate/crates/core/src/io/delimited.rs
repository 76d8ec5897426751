//! CSV embedding format: header `dataset,identity,image_key,f0,...,f{d-1}`.
//!
//! The identity column holds the dataset-local label. Datasets are numbered
//! in order of first appearance.

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{Labels, RawEmbeddings};
use crate::error::{Error, Result};
use crate::model::{EmbeddingRecord, LOCAL_ID_MASK, NO_IDENTITY};

const FIXED_COLUMNS: [&str; 3] = ["dataset", "identity", "image_key"];

pub(crate) fn read<R: Read>(input: R, context: &str, labels: Labels) -> Result<RawEmbeddings> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let csv_err = |e: ::csv::Error| Error::format(context, e.to_string());

    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.len() < 4 || headers.iter().take(3).ne(FIXED_COLUMNS) {
        return Err(Error::format(
            context,
            "header must start with dataset,identity,image_key followed by f0..f{d-1}",
        ));
    }
    let dimension = headers.len() - 3;
    for (i, h) in headers.iter().skip(3).enumerate() {
        if h != format!("f{i}") {
            return Err(Error::format(
                context,
                format!("descriptor column {} is named {h:?}, expected \"f{i}\"", i + 3),
            ));
        }
    }

    let mut datasets: Vec<String> = Vec::new();
    let mut dataset_ids: HashMap<String, u32> = HashMap::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(csv_err)?;
        if row.len() != headers.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{context} row {row_no}"),
                expected: dimension,
                found: row.len().saturating_sub(3),
            });
        }
        let dataset = &row[0];
        let dataset_id = match dataset_ids.get(dataset) {
            Some(&id) => id,
            None => {
                let id = datasets.len() as u32;
                datasets.push(dataset.to_string());
                dataset_ids.insert(dataset.to_string(), id);
                id
            }
        };
        let identity_field = row[1].trim();
        let identity_id = if identity_field.is_empty() && labels == Labels::Optional {
            NO_IDENTITY
        } else {
            identity_field.parse::<u64>().map_err(|_| {
                Error::format(
                    context,
                    format!("row {row_no}: identity {identity_field:?} is not an unsigned integer"),
                )
            })?
        };
        let mut descriptor = Vec::with_capacity(dimension);
        for (column, field) in row.iter().skip(3).enumerate() {
            let value: f32 = field.trim().parse().map_err(|_| {
                Error::format(
                    context,
                    format!("row {row_no}: value {field:?} in column f{column} is not a number"),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: context.to_string(),
                    row: row_no,
                    column,
                });
            }
            descriptor.push(value);
        }
        records.push(EmbeddingRecord {
            dataset_id,
            identity_id,
            image_key: row[2].to_string(),
            descriptor,
        });
    }

    Ok(RawEmbeddings {
        datasets,
        records,
        dimension,
    })
}

/// Writes records with dataset-local identity labels. `f32` values use the
/// shortest representation that parses back to the same bits.
pub(crate) fn write<W: Write>(
    out: &mut W,
    datasets: &[String],
    records: &[EmbeddingRecord],
    dimension: usize,
) -> Result<()> {
    let mut writer = ::csv::Writer::from_writer(out);
    let csv_err = |e: ::csv::Error| Error::format("csv writer", e.to_string());
    let header = FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..dimension).map(|i| format!("f{i}")));
    writer.write_record(header).map_err(csv_err)?;
    for r in records {
        let identity = if r.identity_id == NO_IDENTITY {
            String::new()
        } else {
            (r.identity_id & LOCAL_ID_MASK).to_string()
        };
        let fields = [
            datasets[r.dataset_id as usize].clone(),
            identity,
            r.image_key.clone(),
        ]
        .into_iter()
        .chain(r.descriptor.iter().map(|v| v.to_string()));
        writer.write_record(fields).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::format("csv writer", e.to_string()))
}
