//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration (the EISPACK `tred2`/`tql2` pair). O(d^3), no pivoting, exact
//! orthogonal transforms, so the spectrum of a symmetric input is real.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// QL sweeps allowed per eigenvalue before giving up. Convergence is
/// normally reached in two or three.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues in ascending order; eigenvector `i` is column `i`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub eigenvalues: Array1<T>,
    pub eigenvectors: Array2<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// `Q f(Λ) Qᵀ` for a function applied to each eigenvalue.
    pub fn reconstruct_with(&self, mut f: impl FnMut(T) -> T) -> Array2<T> {
        let q = &self.eigenvectors;
        let scaled_cols: Array1<T> = self.eigenvalues.mapv(&mut f);
        let mut qs = q.clone();
        for (mut col, &s) in qs.columns_mut().into_iter().zip(scaled_cols.iter()) {
            col.mapv_inplace(|v| v * s);
        }
        qs.dot(&q.t())
    }
}

/// Full decomposition of a symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<'_, T>) -> Result<SymmetricEigen<T>> {
    let (eigenvalues, eigenvectors) = decompose(a, true)?;
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (ascending). Skips the eigenvector rotations in the QL
/// phase.
pub fn symmetric_eigenvalues<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array1<T>> {
    decompose(a, false).map(|(values, _)| values)
}

fn decompose<T: Scalar>(a: ArrayView2<'_, T>, want_vectors: bool) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "eigendecomposition (square matrix required)".to_string(),
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "eigendecomposition input has non-finite entries".to_string(),
        ));
    }

    let mut v = a.to_owned();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    if let Err(iterations) = ql_implicit(&mut v, &mut d, &mut e, want_vectors) {
        return Err(no_convergence(a, iterations));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let vectors = if want_vectors {
        Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]])
    } else {
        Array2::zeros((0, 0))
    };
    Ok((values, vectors))
}

fn no_convergence<T: Scalar>(a: ArrayView2<'_, T>, iterations: usize) -> Error {
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs().to_f64_lossy()));
    let diag = a.diag();
    let min_diag = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.to_f64_lossy()));
    let max_diag = diag
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(v.to_f64_lossy()));
    Error::EigenNoConvergence {
        dim: a.nrows(),
        iterations,
        max_abs,
        min_diag,
        max_diag,
    }
}

/// Householder reduction. On return `d` holds the diagonal, `e[1..]` the
/// sub-diagonal, and `v` the accumulated orthogonal transform.
fn tridiagonalize<T: Scalar>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
                v[[j, i]] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let updated = v[[k, j]] - (f * e[k] + g * d[k]);
                    v[[k, j]] = updated;
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = zero;
            }
        }
        d[i] = h;
    }

    // Accumulate the transforms.
    for i in 0..n.saturating_sub(1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    let updated = v[[k, j]] - g * d[k];
                    v[[k, j]] = updated;
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = zero;
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = zero;
}

/// Implicit QL on the tridiagonal form. `Err(iterations)` on non-convergence.
fn ql_implicit<T: Scalar>(
    v: &mut Array2<T>,
    d: &mut [T],
    e: &mut [T],
    want_vectors: bool,
) -> std::result::Result<(), usize> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(iterations - 1);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let vk1 = v[[k, i + 1]];
                            let vk = v[[k, i]];
                            v[[k, i + 1]] = s * vk + c * vk1;
                            v[[k, i]] = c * vk - s * vk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}
