//! Correlation studies and selection composition.

use std::collections::BTreeSet;
use std::io::Read;

use crate::error::{Error, Result};
use crate::model::SourcePool;
use crate::scalar::Scalar;

/// Sample Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            context: "pearson series".to_string(),
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSamples {
            what: "pearson correlation".to_string(),
            needed: 2,
            got: xs.len() as u64,
        });
    }
    let n = T::from_count(xs.len() as u64);
    let mean_x = xs.iter().copied().sum::<T>() / n;
    let mean_y = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::InvalidArgument(
            "correlation is undefined for a series with zero variance".to_string(),
        ));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// One training set in a correlation study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub label: String,
    pub fid: f64,
    pub num_ids: f64,
    pub score: f64,
}

/// Reads the `label,fid,num_ids,score` CSV.
pub fn read_study<R: Read>(input: R) -> Result<Vec<StudyRow>> {
    let mut reader = ::csv::Reader::from_reader(input);
    let err = |e: ::csv::Error| Error::format("correlation csv", e.to_string());
    let headers = reader.headers().map_err(err)?.clone();
    if headers.iter().ne(["label", "fid", "num_ids", "score"]) {
        return Err(Error::format(
            "correlation csv",
            "header must be label,fid,num_ids,score",
        ));
    }
    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(err)?;
        let num = |col: usize| -> Result<f64> {
            let v: f64 = row[col].trim().parse().map_err(|_| {
                Error::format(
                    "correlation csv",
                    format!("row {}: {:?} is not a number", i + 1, &row[col]),
                )
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite {
                    context: "correlation csv".to_string(),
                    row: i + 1,
                    column: col,
                })
            }
        };
        rows.push(StudyRow {
            label: row[0].to_string(),
            fid: num(1)?,
            num_ids: num(2)?,
            score: num(3)?,
        });
    }
    Ok(rows)
}

/// The three pairwise correlations of a study. `None` where a series has no
/// variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyCorrelations {
    pub fid_vs_score: Option<f64>,
    pub num_ids_vs_score: Option<f64>,
    pub fid_vs_num_ids: Option<f64>,
}

pub fn correlate_study(rows: &[StudyRow]) -> Result<StudyCorrelations> {
    let fid: Vec<f64> = rows.iter().map(|r| r.fid).collect();
    let ids: Vec<f64> = rows.iter().map(|r| r.num_ids).collect();
    let score: Vec<f64> = rows.iter().map(|r| r.score).collect();
    let pair = |a: &[f64], b: &[f64]| match pearson(a, b) {
        Ok(r) => Ok(Some(r)),
        Err(Error::InvalidArgument(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(StudyCorrelations {
        fid_vs_score: pair(&fid, &score)?,
        num_ids_vs_score: pair(&ids, &score)?,
        fid_vs_num_ids: pair(&fid, &ids)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetShare {
    pub name: String,
    pub images: usize,
    pub image_fraction: f64,
    pub identities: usize,
    pub identity_fraction: f64,
}

/// Per-dataset make-up of a selection. Every dataset of the pool is listed,
/// including those that contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    pub datasets: Vec<DatasetShare>,
    pub total_images: usize,
    pub total_identities: usize,
}

impl CompositionReport {
    pub fn share(&self, name: &str) -> Option<&DatasetShare> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

pub fn composition(pool: &SourcePool, selected: &[usize]) -> Result<CompositionReport> {
    if selected.is_empty() {
        return Err(Error::InvalidArgument(
            "composition of an empty selection".to_string(),
        ));
    }
    let k = pool.datasets().len();
    let mut images = vec![0usize; k];
    let mut identities: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); k];
    for &i in selected {
        if i >= pool.len() {
            return Err(Error::InvalidArgument(format!(
                "record index {i} is out of range for a pool of {}",
                pool.len()
            )));
        }
        let record = pool.record(i);
        let ds = record.dataset_id as usize;
        images[ds] += 1;
        identities[ds].insert(record.identity_id);
    }
    let total_images: usize = images.iter().sum();
    let total_identities: usize = identities.iter().map(BTreeSet::len).sum();
    let datasets = pool
        .datasets()
        .iter()
        .zip(images)
        .zip(&identities)
        .map(|((name, imgs), ids)| DatasetShare {
            name: name.clone(),
            images: imgs,
            image_fraction: imgs as f64 / total_images as f64,
            identities: ids.len(),
            identity_fraction: ids.len() as f64 / total_identities as f64,
        })
        .collect();
    Ok(CompositionReport {
        datasets,
        total_images,
        total_identities,
    })
}
