//! Fairness auditing and MixFeat bias mitigation for small multimodal
//! tabular datasets.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); count-based
//! metrics are generic over [`scalar::Ratio`] so they can also run in exact
//! rational arithmetic.

pub mod augment;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod fusion;
pub mod linalg;
pub mod models;
pub mod preprocess;
pub mod scalar;
pub mod synthgen;

pub use config::PipelineConfig;
pub use eval::{run_experiment, EvaluationReport};
pub use scalar::{Ratio, Scalar};
pub use synthgen::SynthSpec;

pub type Dataset64 = dataset::Dataset<f64>;
pub type Dataset32 = dataset::Dataset<f32>;
pub type ModalityTable64 = dataset::ModalityTable<f64>;
pub type ModalityTable32 = dataset::ModalityTable<f32>;
pub type TrainedPredictor64 = models::TrainedPredictor<f64>;
pub type TrainedPredictor32 = models::TrainedPredictor<f32>;
pub type FusionModel64 = fusion::FusionModel<f64>;
pub type FusionModel32 = fusion::FusionModel<f32>;
pub type PcaModel64 = preprocess::PcaModel<f64>;
pub type PcaModel32 = preprocess::PcaModel<f32>;
