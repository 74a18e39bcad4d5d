//! Metrics and the cross-validated experiment harness.

pub mod cv;
mod experiment;
pub mod metrics;
mod report;

pub use experiment::{derive_seed, run_experiment, run_experiment_on_folds, SeedStream};
pub use report::{
    compare_markdown, config_fingerprint, report_markdown, write_predictions_csv, AttributeReport,
    EvaluationReport, FoldReport, MetricValue, OverallReport,
};

use crate::augment::AugmentError;
use crate::dataset::DatasetError;
use crate::fusion::FusionError;
use crate::preprocess::PreprocessError;
use metrics::MetricError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: FoldError,
    },
    #[error("every fold was skipped ({0} folds)")]
    AllFoldsSkipped(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Error)]
pub enum FoldError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
