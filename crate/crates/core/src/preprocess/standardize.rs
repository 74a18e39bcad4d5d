use super::{PreprocessError, Result};
use crate::linalg::{column_means, column_stds};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Per-column z-scoring learned from training rows.
///
/// Zero-variance columns are centered but not scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    mean: Array1<T>,
    scale: Array1<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(train: ArrayView2<'_, T>) -> Result<Self> {
        if train.nrows() == 0 {
            return Err(PreprocessError::Fit(
                "standardizer needs at least one row".into(),
            ));
        }
        let mean = column_means(train);
        let scale = column_stds(train, &mean).mapv(|s| if s > T::zero() { s } else { T::one() });
        Ok(Self { mean, scale })
    }

    pub fn mean(&self) -> &Array1<T> {
        &self.mean
    }

    pub fn scale(&self) -> &Array1<T> {
        &self.scale
    }

    pub fn apply(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.ncols() != self.mean.len() {
            return Err(PreprocessError::Shape(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        Ok((&x - &self.mean.view().insert_axis(Axis(0))) / self.scale.view().insert_axis(Axis(0)))
    }
}

pub fn fit_standardizer<T: Scalar>(train: ArrayView2<'_, T>) -> Result<Standardizer<T>> {
    Standardizer::fit(train)
}

pub fn apply_standardizer<T: Scalar>(
    s: &Standardizer<T>,
    x: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    s.apply(x)
}
