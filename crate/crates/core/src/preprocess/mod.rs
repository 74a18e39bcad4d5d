//! Feature preprocessing: temporal summaries, column cleaning, level
//! selection, standardization and PCA.
//!
//! Every fitted transform is immutable; `apply` takes `&self`, so a transform
//! fitted on a training split can be reused on the matching test split
//! without being altered.

mod clean;
mod pca;
mod standardize;
mod temporal;

pub use clean::{drop_constant_and_null, ColumnCleaner};
pub use pca::{apply_pca, fit_pca, PcaModel, DEFAULT_TARGET_RATIO};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};
pub use temporal::{
    autocorrelation, mask_descriptors, summarize_clips, summarize_temporal, Descriptor,
    TemporalClip,
};

use crate::dataset::{DatasetError, Level, ModalityTable};
use crate::scalar::Scalar;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("every column of modality `{modality}` was removed")]
    EmptyTable { modality: String },
    #[error("modality `{modality}` has no `{level}`-level columns")]
    Selection { modality: String, level: Level },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T, E = PreprocessError> = std::result::Result<T, E>;

/// Columns whose level tag equals `level`.
pub fn select_level<T: Scalar>(table: &ModalityTable<T>, level: Level) -> Result<ModalityTable<T>> {
    let keep: Vec<usize> = table
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.level == level)
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(PreprocessError::Selection {
            modality: table.name().to_string(),
            level,
        });
    }
    Ok(table.select_columns(&keep)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelFilter {
    #[default]
    All,
    High,
    Low,
}

/// Per-modality preprocessing settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOptions {
    pub level: LevelFilter,
    /// Descriptors to keep; `None` keeps every column.
    pub descriptors: Option<Vec<Descriptor>>,
    /// `None` disables PCA.
    pub pca_target: Option<f64>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            level: LevelFilter::All,
            descriptors: None,
            pca_target: Some(DEFAULT_TARGET_RATIO),
        }
    }
}

fn select<T: Scalar>(
    table: &ModalityTable<T>,
    opts: &PreprocessOptions,
) -> Result<ModalityTable<T>> {
    let table = match opts.level {
        LevelFilter::All => table.clone(),
        LevelFilter::High => select_level(table, Level::High)?,
        LevelFilter::Low => select_level(table, Level::Low)?,
    };
    match &opts.descriptors {
        Some(keep) => mask_descriptors(&table, keep),
        None => Ok(table),
    }
}

/// Whole per-modality chain fitted on training rows: selection, cleaning,
/// standardization and (for more than two columns) PCA.
#[derive(Debug, Clone)]
pub struct ModalityPreprocessor<T> {
    opts: PreprocessOptions,
    cleaner: ColumnCleaner<T>,
    standardizer: Standardizer<T>,
    pca: Option<PcaModel<T>>,
}

impl<T: Scalar> ModalityPreprocessor<T> {
    pub fn fit(train: &ModalityTable<T>, opts: &PreprocessOptions) -> Result<Self> {
        let selected = select(train, opts)?;
        let cleaner = ColumnCleaner::fit(&selected)?;
        let cleaned = cleaner.apply(&selected)?;
        let standardizer = Standardizer::fit(cleaned.samples().view())?;
        let pca = match opts.pca_target {
            Some(target) if cleaned.n_features() > 2 => {
                let z = standardizer.apply(cleaned.samples().view())?;
                Some(fit_pca(z.view(), target)?)
            }
            _ => None,
        };
        Ok(Self {
            opts: opts.clone(),
            cleaner,
            standardizer,
            pca,
        })
    }

    pub fn apply(&self, table: &ModalityTable<T>) -> Result<Array2<T>> {
        let selected = select(table, &self.opts)?;
        let cleaned = self.cleaner.apply(&selected)?;
        let z = self.standardizer.apply(cleaned.samples().view())?;
        match &self.pca {
            Some(p) => p.apply(z.view()),
            None => Ok(z),
        }
    }

    pub fn pca(&self) -> Option<&PcaModel<T>> {
        self.pca.as_ref()
    }

    pub fn output_width(&self) -> usize {
        self.pca
            .as_ref()
            .map_or(self.cleaner.kept_columns().len(), |p| p.n_components())
    }
}
