//! Mergeable Gaussian sufficient statistics.
//!
//! A [`GaussianStats`] holds `n`, `Σx` and `Σxxᵀ` for a set of descriptors.
//! Sums merge by addition, so the statistics of any union of clusters can
//! be assembled without touching the underlying images again.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::EmbeddingRecord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats<T> {
    count: u64,
    sum: Array1<T>,
    /// Always exactly symmetric.
    sum_outer: Array2<T>,
}

impl<T: Scalar> GaussianStats<T> {
    pub fn empty(dimension: usize) -> Self {
        Self {
            count: 0,
            sum: Array1::zeros(dimension),
            sum_outer: Array2::zeros((dimension, dimension)),
        }
    }

    /// Sums in iteration order. Every descriptor must have `dimension`
    /// components.
    pub fn from_descriptors<'a, I>(dimension: usize, descriptors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        let mut acc = Accumulator::new(dimension);
        for (row, x) in descriptors.into_iter().enumerate() {
            if x.len() != dimension {
                return Err(Error::DimensionMismatch {
                    context: format!("statistics input row {}", row + 1),
                    expected: dimension,
                    found: x.len(),
                });
            }
            acc.push(x);
        }
        Ok(acc.finish())
    }

    /// Statistics of `records`, summed in the given order.
    pub fn accumulate<'a, I>(dimension: usize, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a EmbeddingRecord>,
    {
        Self::from_descriptors(
            dimension,
            records.into_iter().map(|r| r.descriptor.as_slice()),
        )
    }

    pub fn dimension(&self) -> usize {
        self.sum.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> &Array1<T> {
        &self.sum
    }

    pub fn sum_outer(&self) -> &Array2<T> {
        &self.sum_outer
    }

    /// Statistics of the union of both underlying sets.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut merged = self.clone();
        merged.absorb(other)?;
        Ok(merged)
    }

    /// In-place [`GaussianStats::merge`].
    pub fn absorb(&mut self, other: &Self) -> Result<()> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                context: "merging statistics".to_string(),
                expected: self.dimension(),
                found: other.dimension(),
            });
        }
        self.count += other.count;
        self.sum += &other.sum;
        self.sum_outer += &other.sum_outer;
        Ok(())
    }

    fn require(&self, needed: u64) -> Result<()> {
        if self.count < needed {
            return Err(Error::InsufficientSamples {
                what: "mean/covariance".to_string(),
                needed,
                got: self.count,
            });
        }
        Ok(())
    }

    /// Sample mean. Needs `n >= 2` like the covariance, so both are always
    /// available together.
    pub fn mean(&self) -> Result<Array1<T>> {
        self.require(2)?;
        let n = T::from_count(self.count);
        Ok(self.sum.mapv(|s| s / n))
    }

    /// Mean and unbiased (`n - 1`) covariance.
    pub fn mean_cov(&self) -> Result<(Array1<T>, Array2<T>)> {
        let mean = self.mean()?;
        let d = self.dimension();
        let n = T::from_count(self.count);
        let denom = n - T::one();
        let mut cov = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let c = (self.sum_outer[[i, j]] - n * mean[i] * mean[j]) / denom;
                cov[[i, j]] = c;
                cov[[j, i]] = c;
            }
        }
        Ok((mean, cov))
    }
}

/// Row-wise accumulation into the upper triangle, mirrored once at the end.
struct Accumulator<T> {
    dimension: usize,
    count: u64,
    sum: Vec<T>,
    upper: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Accumulator<T> {
    fn new(dimension: usize) -> Self {
        Self {
            dimension,
            count: 0,
            sum: vec![T::zero(); dimension],
            upper: vec![T::zero(); dimension * dimension],
            scratch: vec![T::zero(); dimension],
        }
    }

    fn push(&mut self, x: &[f32]) {
        let d = self.dimension;
        for (s, &v) in self.scratch.iter_mut().zip(x) {
            *s = T::widen(v);
        }
        for (s, &v) in self.sum.iter_mut().zip(&self.scratch) {
            *s += v;
        }
        for i in 0..d {
            let xi = self.scratch[i];
            let row = &mut self.upper[i * d + i..(i + 1) * d];
            for (o, &xj) in row.iter_mut().zip(&self.scratch[i..]) {
                *o += xi * xj;
            }
        }
        self.count += 1;
    }

    fn finish(mut self) -> GaussianStats<T> {
        let d = self.dimension;
        for i in 0..d {
            for j in 0..i {
                self.upper[i * d + j] = self.upper[j * d + i];
            }
        }
        GaussianStats {
            count: self.count,
            sum: Array1::from_vec(self.sum),
            sum_outer: Array2::from_shape_vec((d, d), self.upper).expect("d*d buffer"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn stats(points: &[&[f32]]) -> GaussianStats<f64> {
        GaussianStats::from_descriptors(points[0].len(), points.iter().copied()).unwrap()
    }

    #[test]
    fn two_points_by_hand() {
        let s = stats(&[&[0.0, 0.0], &[2.0, 2.0]]);
        assert_eq!(s.count(), 2);
        assert_eq!(s.sum(), &array![2.0, 2.0]);
        assert_eq!(s.sum_outer(), &array![[4.0, 4.0], [4.0, 4.0]]);
        let (mean, cov) = s.mean_cov().unwrap();
        assert_eq!(mean, array![1.0, 1.0]);
        assert_eq!(cov, array![[2.0, 2.0], [2.0, 2.0]]);
    }

    #[test]
    fn empty_is_valid_but_unusable() {
        let s = GaussianStats::<f64>::from_descriptors(3, std::iter::empty()).unwrap();
        assert_eq!(s.count(), 0);
        assert!(s.mean().is_err());
    }

    #[test]
    fn single_record_has_no_mean() {
        let s = stats(&[&[1.0, 2.0]]);
        assert!(matches!(
            s.mean(),
            Err(Error::InsufficientSamples { needed: 2, got: 1, .. })
        ));
    }

    #[test]
    fn identical_points_have_zero_covariance() {
        let s = stats(&[&[3.0, -1.0], &[3.0, -1.0], &[3.0, -1.0]]);
        let (_, cov) = s.mean_cov().unwrap();
        assert!(cov.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let s = stats(&[&[1.0, 2.0], &[3.0, 5.0]]);
        assert_eq!(s.merge(&GaussianStats::empty(2)).unwrap(), s);
    }

    #[test]
    fn merge_matches_union() {
        let a = stats(&[&[1.0, 2.0], &[3.0, 5.0]]);
        let b = stats(&[&[-1.0, 0.5]]);
        let union = stats(&[&[1.0, 2.0], &[3.0, 5.0], &[-1.0, 0.5]]);
        assert_eq!(a.merge(&b).unwrap(), union);
    }

    #[test]
    fn merge_rejects_dimension_mismatch() {
        let a = GaussianStats::<f64>::empty(2);
        let b = GaussianStats::<f64>::empty(3);
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn rejects_ragged_input() {
        let rows: [&[f32]; 2] = [&[1.0, 2.0], &[1.0]];
        assert!(GaussianStats::<f64>::from_descriptors(2, rows).is_err());
    }

    #[test]
    fn stored_symmetric() {
        let s = stats(&[&[1.0, 2.0, 3.0], &[-4.0, 0.5, 9.0], &[0.1, 0.2, 0.3]]);
        let m = s.sum_outer();
        assert_eq!(m, &m.t().to_owned());
    }
}
