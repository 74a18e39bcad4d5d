use super::{PreprocessError, Result};
use crate::linalg::{column_means, covariance, symmetric_eigen};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};

pub const DEFAULT_TARGET_RATIO: f64 = 0.80;

/// Principal components kept to reach a target share of the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    mean: Array1<T>,
    /// k × d, orthonormal rows.
    components: Array2<T>,
    explained_ratio: Vec<T>,
    /// Variance captured by each kept component.
    explained_variance: Vec<T>,
    total_variance: T,
}

impl<T: Scalar> PcaModel<T> {
    pub fn mean(&self) -> &Array1<T> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<T> {
        &self.components
    }

    pub fn explained_ratio(&self) -> &[T] {
        &self.explained_ratio
    }

    pub fn explained_variance(&self) -> &[T] {
        &self.explained_variance
    }

    pub fn total_variance(&self) -> T {
        self.total_variance
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn cumulative_ratio(&self) -> T {
        self.explained_ratio.iter().copied().sum()
    }

    /// Centers with the training mean and projects onto the kept components.
    pub fn apply(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.ncols() != self.mean.len() {
            return Err(PreprocessError::Shape(format!(
                "PCA fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let centered = &x - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }
}

/// Fits PCA via eigendecomposition of the population covariance and keeps
/// the fewest components whose cumulative explained-variance ratio reaches
/// `target_ratio`.
///
/// Each component's sign is fixed so its largest-magnitude entry is
/// positive. Data with zero total variance yields a single axis-aligned
/// component with ratio 1.
pub fn fit_pca<T: Scalar>(train: ArrayView2<'_, T>, target_ratio: f64) -> Result<PcaModel<T>> {
    if train.nrows() < 2 {
        return Err(PreprocessError::Fit(format!(
            "PCA needs at least 2 training rows, got {}",
            train.nrows()
        )));
    }
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(PreprocessError::Fit(format!(
            "PCA target ratio must be in (0, 1], got {target_ratio}"
        )));
    }
    let d = train.ncols();
    if d == 0 {
        return Err(PreprocessError::Fit("PCA needs at least one column".into()));
    }
    let mean = column_means(train);
    let cov = covariance(train, &mean);
    let eig = symmetric_eigen(cov.view());
    let values: Vec<T> = eig.values.iter().map(|&v| v.max(T::zero())).collect();
    let total: T = values.iter().copied().sum();

    if total <= T::zero() {
        let mut components = Array2::zeros((1, d));
        components[[0, 0]] = T::one();
        return Ok(PcaModel {
            mean,
            components,
            explained_ratio: vec![T::one()],
            explained_variance: vec![T::zero()],
            total_variance: T::zero(),
        });
    }

    // rounding slack on the cumulative sum
    let slack = T::epsilon() * T::of(64.0) * T::of_usize(d);
    let target = T::of(target_ratio);
    let mut k = d;
    let mut cumulative = T::zero();
    for (i, &v) in values.iter().enumerate() {
        cumulative = cumulative + v / total;
        if cumulative + slack >= target {
            k = i + 1;
            break;
        }
    }

    let mut components = Array2::zeros((k, d));
    for i in 0..k {
        let row = eig.vectors.row(i);
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (j, &v)| {
                if v.abs() > best.1 {
                    (j, v.abs())
                } else {
                    best
                }
            })
            .0;
        let sign = if row[pivot] < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        for j in 0..d {
            components[[i, j]] = row[j] * sign;
        }
    }
    Ok(PcaModel {
        mean,
        components,
        explained_ratio: values[..k].iter().map(|&v| v / total).collect(),
        explained_variance: values[..k].to_vec(),
        total_variance: total,
    })
}

pub fn apply_pca<T: Scalar>(model: &PcaModel<T>, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
    model.apply(x)
}
