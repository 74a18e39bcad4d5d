//! Declarative description of one experiment run.

use crate::augment::{AugmentMethod, MixFeatConfig};
use crate::dataset::{load_dataset, Dataset, DatasetError};
use crate::eval::cv::{CvConfig, CvMode};
use crate::fusion::{FusionSpec, FusionStrategy};
use crate::models::PredictorSpec;
use crate::preprocess::{Descriptor, LevelFilter, PreprocessOptions, DEFAULT_TARGET_RATIO};
use crate::scalar::Scalar;
use crate::synthgen::{generate, SynthError, SynthSpec};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every other stream is derived from it.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub pca: PcaConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    #[serde(default)]
    pub model: PredictorSpec,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub cv: CvConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fairmix-out")
}

/// Exactly one of `manifest` or `synth`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// `None` uses every modality in dataset order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modalities: Option<Vec<String>>,
    pub level: LevelFilter,
    /// `None` keeps every column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptors: Option<Vec<Descriptor>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub enabled: bool,
    pub target_ratio: f64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            target_ratio: DEFAULT_TARGET_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentChoice {
    #[default]
    None,
    RandomOversample,
    Mixfeat,
}

impl AugmentChoice {
    pub const ALL: [AugmentChoice; 3] = [
        AugmentChoice::None,
        AugmentChoice::RandomOversample,
        AugmentChoice::Mixfeat,
    ];

    pub fn method(self) -> Option<AugmentMethod> {
        match self {
            AugmentChoice::None => None,
            AugmentChoice::RandomOversample => Some(AugmentMethod::RandomOversample),
            AugmentChoice::Mixfeat => Some(AugmentMethod::Mixfeat),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentChoice::None => "none",
            AugmentChoice::RandomOversample => "random_oversample",
            AugmentChoice::Mixfeat => "mixfeat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub method: AugmentChoice,
    pub beta_alpha: f64,
    pub beta_beta: f64,
    /// Replaces the master seed as the base of the augmentation stream.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let mix = MixFeatConfig::default();
        Self {
            method: AugmentChoice::None,
            beta_alpha: mix.beta_alpha,
            beta_beta: mix.beta_beta,
            seed: None,
        }
    }
}

impl AugmentConfig {
    pub fn mixfeat(&self, seed: u64) -> MixFeatConfig {
        MixFeatConfig {
            beta_alpha: self.beta_alpha,
            beta_beta: self.beta_beta,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub strategy: FusionStrategy,
    /// Meta-learner for the stacking strategies.
    pub meta: PredictorSpec,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            strategy: FusionStrategy::Early,
            meta: PredictorSpec::logistic(),
        }
    }
}

impl PipelineConfig {
    /// Defaults everywhere except the data source and seed.
    pub fn new(data: DataConfig, seed: u64) -> Self {
        Self {
            seed,
            output_dir: default_output_dir(),
            data,
            features: FeatureConfig::default(),
            pca: PcaConfig::default(),
            augment: AugmentConfig::default(),
            model: PredictorSpec::default(),
            fusion: FusionConfig::default(),
            cv: CvConfig::default(),
        }
    }

    pub fn synthetic(spec: SynthSpec, seed: u64) -> Self {
        Self::new(
            DataConfig {
                manifest: None,
                synth: Some(spec),
            },
            seed,
        )
    }

    /// Checks ranges and enum combinations that serde cannot.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        match (&self.data.manifest, &self.data.synth) {
            (Some(_), Some(_)) => {
                return bad("data: set either `manifest` or `synth`, not both".into())
            }
            (None, None) => return bad("data: one of `manifest` or `synth` is required".into()),
            (None, Some(spec)) => spec
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("data.synth: {e}")))?,
            (Some(_), None) => {}
        }
        if self.pca.enabled && !(self.pca.target_ratio > 0.0 && self.pca.target_ratio <= 1.0) {
            return bad(format!(
                "pca.target_ratio must be in (0, 1], got {}",
                self.pca.target_ratio
            ));
        }
        if let Some(m) = &self.features.modalities {
            if m.is_empty() {
                return bad("features.modalities is empty".into());
            }
        }
        if let Some(d) = &self.features.descriptors {
            if d.is_empty() {
                return bad("features.descriptors is empty".into());
            }
        }
        if self.augment.method != AugmentChoice::None {
            self.augment
                .mixfeat(0)
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("augment: {e}")))?;
        }
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("model: {e}")))?;
        if self.fusion.strategy.is_stacking() {
            self.fusion
                .meta
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("fusion.meta: {e}")))?;
        }
        if self.cv.mode == CvMode::Kfold && self.cv.k < 2 {
            return bad(format!("cv.k must be at least 2, got {}", self.cv.k));
        }
        Ok(())
    }

    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            level: self.features.level,
            descriptors: self.features.descriptors.clone(),
            pca_target: self.pca.enabled.then_some(self.pca.target_ratio),
        }
    }

    pub fn fusion_spec(&self) -> FusionSpec {
        FusionSpec {
            strategy: self.fusion.strategy,
            base_model: self.model.clone(),
            meta_model: self.fusion.meta.clone(),
        }
    }

    /// Same run with a different augmentation arm.
    pub fn with_augment(&self, method: AugmentChoice) -> Self {
        let mut c = self.clone();
        c.augment.method = method;
        c
    }

    /// Loads the manifest or draws the synthetic dataset.
    pub fn load_data<T: Scalar>(&self) -> Result<Dataset<T>, DataError> {
        match (&self.data.manifest, &self.data.synth) {
            (Some(path), _) => Ok(load_dataset(path)?),
            (None, Some(spec)) => Ok(generate(spec)?),
            (None, None) => Err(DataError::Dataset(DatasetError::Manifest(
                "no data source configured".into(),
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = PipelineConfig::synthetic(SynthSpec::default(), 1);
        c.validate().unwrap();
        assert_eq!(c.preprocess_options().pca_target, Some(0.8));
    }

    #[test]
    fn both_sources_rejected() {
        let mut c = PipelineConfig::synthetic(SynthSpec::default(), 1);
        c.data.manifest = Some("x.txt".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn pca_disabled() {
        let mut c = PipelineConfig::synthetic(SynthSpec::default(), 1);
        c.pca.enabled = false;
        c.pca.target_ratio = 7.0;
        c.validate().unwrap();
        assert_eq!(c.preprocess_options().pca_target, None);
    }
}
