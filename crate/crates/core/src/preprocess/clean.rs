use super::{PreprocessError, Result};
use crate::dataset::ModalityTable;
use crate::scalar::Scalar;
use ndarray::Array2;

/// Column filter + mean imputation learned from one table.
///
/// Constant columns (a single distinct observed value) and all-missing
/// columns are dropped; remaining gaps are filled with the observed mean of
/// the fitting table.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCleaner<T> {
    width: usize,
    keep: Vec<usize>,
    fill: Vec<T>,
    removed: Vec<String>,
}

impl<T: Scalar> ColumnCleaner<T> {
    pub fn fit(table: &ModalityTable<T>) -> Result<Self> {
        let mut keep = Vec::new();
        let mut fill = Vec::new();
        let mut removed = Vec::new();
        for (j, column) in table.samples().columns().into_iter().enumerate() {
            let observed: Vec<T> = column.iter().copied().filter(|v| !v.is_nan()).collect();
            let constant = observed.windows(2).all(|w| w[0] == w[1]);
            if observed.is_empty() || constant {
                removed.push(table.columns()[j].name.clone());
                continue;
            }
            let mean = observed.iter().copied().sum::<T>() / T::of_usize(observed.len());
            keep.push(j);
            fill.push(mean);
        }
        if keep.is_empty() {
            return Err(PreprocessError::EmptyTable {
                modality: table.name().to_string(),
            });
        }
        Ok(Self {
            width: table.n_features(),
            keep,
            fill,
            removed,
        })
    }

    pub fn removed(&self) -> &[String] {
        &self.removed
    }

    pub fn kept_columns(&self) -> &[usize] {
        &self.keep
    }

    pub fn apply(&self, table: &ModalityTable<T>) -> Result<ModalityTable<T>> {
        if table.n_features() != self.width {
            return Err(PreprocessError::Shape(format!(
                "modality `{}`: cleaner fitted on {} columns, got {}",
                table.name(),
                self.width,
                table.n_features()
            )));
        }
        let selected = table.select_columns(&self.keep)?;
        let mut samples: Array2<T> = selected.samples().clone();
        for (j, mut column) in samples.columns_mut().into_iter().enumerate() {
            for v in column.iter_mut() {
                if v.is_nan() {
                    *v = self.fill[j];
                }
            }
        }
        Ok(selected.with_samples(samples)?)
    }
}

/// Removes constant and all-missing columns and mean-imputes the rest.
pub fn drop_constant_and_null<T: Scalar>(
    table: &ModalityTable<T>,
) -> Result<(ModalityTable<T>, Vec<String>)> {
    let cleaner = ColumnCleaner::fit(table)?;
    let out = cleaner.apply(table)?;
    Ok((out, cleaner.removed))
}
