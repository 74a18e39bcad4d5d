//! Small dense linear-algebra kernels used by PCA and the classifiers.
//!
//! Dimensions here are tiny (tens of columns), so plain cyclic Jacobi and
//! partial-pivot elimination are plenty.

use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Row `i` is the unit eigenvector for `values[i]`.
    pub vectors: Array2<T>,
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
///
/// Only the upper triangle is trusted; the input is symmetrized first.
pub fn symmetric_eigen<T: Scalar>(matrix: ArrayView2<'_, T>) -> SymmetricEigen<T> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "symmetric_eigen needs a square matrix");
    let half = T::of(0.5);
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| (matrix[[i, j]] + matrix[[j, i]]) * half);
    let mut v = Array2::<T>::eye(n);

    let scale = a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = T::epsilon() * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their original index order
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[c, order[r]]]);
    SymmetricEigen { values, vectors }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot vanishes.
pub fn solve<T: Scalar>(a: &Array2<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[[i, col]]
                .abs()
                .partial_cmp(&m[[j, col]].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[[pivot, col]].abs() <= T::min_positive_value() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap([pivot, k], [col, k]);
            }
            rhs.swap(pivot, col);
        }
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let delta = factor * m[[col, k]];
                m[[row, k]] = m[[row, k]] - delta;
            }
            rhs[row] = rhs[row] - factor * rhs[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc = acc - m[[row, k]] * x[k];
        }
        x[row] = acc / m[[row, row]];
    }
    Some(x)
}

/// Column means.
pub fn column_means<T: Scalar>(x: ArrayView2<'_, T>) -> Array1<T> {
    let n = T::of_usize(x.nrows().max(1));
    x.sum_axis(Axis(0)).mapv(|s| s / n)
}

/// Population (divide-by-n) column standard deviations.
pub fn column_stds<T: Scalar>(x: ArrayView2<'_, T>, means: &Array1<T>) -> Array1<T> {
    let n = T::of_usize(x.nrows().max(1));
    let mut out = Array1::zeros(x.ncols());
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        let ss: T = col.iter().map(|&v| (v - means[j]) * (v - means[j])).sum();
        out[j] = (ss / n).sqrt();
    }
    out
}

/// Population covariance of the columns of `x` (divide by n).
pub fn covariance<T: Scalar>(x: ArrayView2<'_, T>, means: &Array1<T>) -> Array2<T> {
    let centered = &x - &means.view().insert_axis(Axis(0));
    let n = T::of_usize(x.nrows().max(1));
    centered.t().dot(&centered).mapv(|v| v / n)
}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
