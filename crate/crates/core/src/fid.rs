//! Fréchet distance between Gaussians fitted to two descriptor sets:
//!
//! `‖μs − μt‖² + Tr(Σs) + Tr(Σt) − 2·Tr((Σs Σt)^½)`
//!
//! The trace of the square root is taken through the symmetric matrix
//! `Σs^½ Σt Σs^½`, which shares its spectrum with `Σs Σt` but can be
//! diagonalized by a symmetric solver. Negative eigenvalues from round-off
//! or rank deficiency are clamped to zero.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues};
use crate::scalar::Scalar;
use crate::stats::GaussianStats;

/// Relative size of a negative eigenvalue that is reported as a warning.
const NEGATIVE_EIGENVALUE_WARN: f64 = 1e-6;
/// A negative FID smaller than this (relative to the magnitude of its terms,
/// floored at 1) is round-off and becomes zero.
const NEGATIVE_FID_TOLERANCE: f64 = 1e-8;

/// `Tr((Σs Σt)^½)` for symmetric positive semi-definite inputs.
pub fn trace_sqrt_product<T: Scalar>(cov_s: ArrayView2<'_, T>, cov_t: ArrayView2<'_, T>) -> Result<T> {
    let d = cov_s.nrows();
    for (name, m) in [("source covariance", &cov_s), ("target covariance", &cov_t)] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: format!("{name} shape"),
                expected: d,
                found: if m.nrows() != d { m.nrows() } else { m.ncols() },
            });
        }
    }

    let eig_s = symmetric_eigen(cov_s)?;
    warn_if_negative("source covariance", eig_s.eigenvalues.view());
    let sqrt_s = eig_s.reconstruct_with(|l| l.max(T::zero()).sqrt());

    let mut m = sqrt_s.dot(&cov_t).dot(&sqrt_s);
    symmetrize(&mut m);
    let spectrum = symmetric_eigenvalues(m.view())?;
    warn_if_negative("sqrt(source) * target * sqrt(source)", spectrum.view());
    Ok(spectrum.iter().map(|&l| l.max(T::zero()).sqrt()).sum())
}

fn symmetrize<T: Scalar>(m: &mut Array2<T>) {
    let d = m.nrows();
    let half = T::lit(0.5);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = (m[[i, j]] + m[[j, i]]) * half;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

fn warn_if_negative<T: Scalar>(what: &str, eigenvalues: ArrayView1<'_, T>) {
    let max = eigenvalues.iter().fold(T::zero(), |m, &v| m.max(v));
    let min = eigenvalues.iter().fold(T::zero(), |m, &v| m.min(v));
    if min < -T::lit(NEGATIVE_EIGENVALUE_WARN) * max {
        log::warn!(
            "{what}: eigenvalue {min:e} clamped to 0 (largest {max:e}); covariance is near-singular, \
             often because there are fewer samples than dimensions"
        );
    }
}

/// FID from explicit moments.
pub fn fid_from_moments<T: Scalar>(
    mean_s: ArrayView1<'_, T>,
    cov_s: ArrayView2<'_, T>,
    mean_t: ArrayView1<'_, T>,
    cov_t: ArrayView2<'_, T>,
) -> Result<T> {
    let d = mean_s.len();
    if mean_t.len() != d || cov_s.nrows() != d || cov_t.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "fid operands".to_string(),
            expected: d,
            found: if mean_t.len() != d { mean_t.len() } else { cov_t.nrows() },
        });
    }
    let mean_term: T = mean_s
        .iter()
        .zip(mean_t.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let trace_s: T = cov_s.diag().sum();
    let trace_t: T = cov_t.diag().sum();
    let cross = trace_sqrt_product(cov_s, cov_t)?;
    let value = mean_term + trace_s + trace_t - T::lit(2.0) * cross;
    if value >= T::zero() {
        return Ok(value);
    }
    let scale = T::one().max(mean_term + trace_s.abs() + trace_t.abs());
    if value > -T::lit(NEGATIVE_FID_TOLERANCE) * scale {
        Ok(T::zero())
    } else {
        Err(Error::Numeric(format!(
            "FID came out at {value:e}, far below zero; the covariances are not positive semi-definite"
        )))
    }
}

/// FID between the Gaussians fitted to two sets of statistics.
pub fn fid<T: Scalar>(source: &GaussianStats<T>, target: &GaussianStats<T>) -> Result<T> {
    if source.dimension() != target.dimension() {
        return Err(Error::DimensionMismatch {
            context: "fid".to_string(),
            expected: target.dimension(),
            found: source.dimension(),
        });
    }
    let (mean_s, cov_s) = source.mean_cov()?;
    let (mean_t, cov_t) = target.mean_cov()?;
    fid_from_moments(mean_s.view(), cov_s.view(), mean_t.view(), cov_t.view())
}

/// Moments of the target computed once and reused for many FID queries.
#[derive(Debug, Clone)]
pub struct TargetMoments<T> {
    pub mean: Array1<T>,
    pub cov: Array2<T>,
}

impl<T: Scalar> TargetMoments<T> {
    pub fn new(stats: &GaussianStats<T>) -> Result<Self> {
        let (mean, cov) = stats.mean_cov()?;
        Ok(Self { mean, cov })
    }

    pub fn fid_of(&self, source: &GaussianStats<T>) -> Result<T> {
        if source.dimension() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "fid".to_string(),
                expected: self.mean.len(),
                found: source.dimension(),
            });
        }
        let (mean_s, cov_s) = source.mean_cov()?;
        fid_from_moments(mean_s.view(), cov_s.view(), self.mean.view(), self.cov.view())
    }
}
