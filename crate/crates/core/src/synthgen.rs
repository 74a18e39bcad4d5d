//! Seeded synthetic multimodal datasets with tunable group imbalance.
//!
//! Every subject draws one value per attribute and keeps it for all of its
//! sessions. Within a modality, the two classes are Gaussians whose means sit
//! `separation · noise_std` apart along a unit direction. That direction
//! blends a modality-wide axis with an axis private to each of the sample's
//! groups, so a model fitted mostly on one group transfers imperfectly to the
//! other.
//!
//! Group-keyed maps (`base_rate`, `separation`) take keys of the form
//! `"attribute=value"` plus an optional `"default"`. When a sample matches
//! several keys, separation takes the minimum and base rate the mean.

use crate::dataset::{ColumnMeta, Dataset, DatasetError, Level, ModalityTable, SampleMeta};
use crate::scalar::Scalar;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

pub const DEFAULT_KEY: &str = "default";
const DEFAULT_BASE_RATE: f64 = 0.5;
const DEFAULT_SEPARATION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub sessions_per_subject: usize,
    pub modality_dims: BTreeMap<String, usize>,
    /// Probability that a subject belongs to the majority group (value 1).
    pub attribute_props: BTreeMap<String, f64>,
    /// `P(label = 1)` per group key.
    pub base_rate: BTreeMap<String, f64>,
    /// Class-mean distance per group key, in within-class std units.
    pub separation: BTreeMap<String, f64>,
    pub noise_std: f64,
    /// 0 = every group shares one class axis, 1 = fully group-private axes.
    pub group_specificity: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_subjects: 40,
            sessions_per_subject: 4,
            modality_dims: BTreeMap::from([("audio".to_string(), 4), ("face".to_string(), 6)]),
            attribute_props: BTreeMap::from([("gender".to_string(), 0.8)]),
            base_rate: BTreeMap::from([(DEFAULT_KEY.to_string(), DEFAULT_BASE_RATE)]),
            separation: BTreeMap::from([(DEFAULT_KEY.to_string(), DEFAULT_SEPARATION)]),
            noise_std: 1.0,
            group_specificity: 0.5,
            seed: 0,
        }
    }
}

/// `"attribute=value"`.
pub fn group_key(attribute: &str, value: u8) -> String {
    format!("{attribute}={value}")
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SynthError::Spec(msg));
        if self.n_subjects == 0 {
            return bad("n_subjects must be at least 1".into());
        }
        if self.sessions_per_subject == 0 {
            return bad("sessions_per_subject must be at least 1".into());
        }
        if self.modality_dims.is_empty() {
            return bad("modality_dims is empty".into());
        }
        if let Some((m, _)) = self.modality_dims.iter().find(|(_, &d)| d == 0) {
            return bad(format!("modality `{m}` has dimension 0"));
        }
        for (a, &p) in &self.attribute_props {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("attribute_props.{a} = {p} is outside [0, 1]"));
            }
        }
        for (name, map) in [
            ("base_rate", &self.base_rate),
            ("separation", &self.separation),
        ] {
            for (key, &v) in map {
                self.check_key(name, key)?;
                let ok = if name == "base_rate" {
                    (0.0..=1.0).contains(&v)
                } else {
                    v.is_finite() && v >= 0.0
                };
                if !ok {
                    return bad(format!("{name}.\"{key}\" = {v} is out of range"));
                }
            }
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return bad(format!(
                "noise_std must be positive, got {}",
                self.noise_std
            ));
        }
        if !(0.0..=1.0).contains(&self.group_specificity) {
            return bad(format!(
                "group_specificity must be in [0, 1], got {}",
                self.group_specificity
            ));
        }
        Ok(())
    }

    fn check_key(&self, map: &str, key: &str) -> Result<()> {
        if key == DEFAULT_KEY {
            return Ok(());
        }
        let known = key
            .split_once('=')
            .is_some_and(|(a, v)| self.attribute_props.contains_key(a) && (v == "0" || v == "1"));
        if known {
            Ok(())
        } else {
            Err(SynthError::Spec(format!(
                "{map} key \"{key}\" is neither \"default\" nor \"<attribute>=<0|1>\" for a declared attribute"
            )))
        }
    }

    fn matching<'a>(&'a self, map: &'a BTreeMap<String, f64>, attrs: &[u8]) -> Vec<f64> {
        self.attribute_props
            .keys()
            .zip(attrs)
            .filter_map(|(a, &v)| map.get(&group_key(a, v)).copied())
            .collect()
    }

    /// Class-mean distance for a sample with the given attribute values
    /// (ordered like `attribute_props`).
    pub fn separation_for(&self, attrs: &[u8]) -> f64 {
        let hits = self.matching(&self.separation, attrs);
        if hits.is_empty() {
            self.separation
                .get(DEFAULT_KEY)
                .copied()
                .unwrap_or(DEFAULT_SEPARATION)
        } else {
            hits.into_iter().fold(f64::INFINITY, f64::min)
        }
    }

    pub fn base_rate_for(&self, attrs: &[u8]) -> f64 {
        let hits = self.matching(&self.base_rate, attrs);
        if hits.is_empty() {
            self.base_rate
                .get(DEFAULT_KEY)
                .copied()
                .unwrap_or(DEFAULT_BASE_RATE)
        } else {
            hits.iter().sum::<f64>() / hits.len() as f64
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_subjects * self.sessions_per_subject
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

struct Axes {
    shared: Vec<f64>,
    /// `[attribute][value]`
    private: Vec<[Vec<f64>; 2]>,
}

impl Axes {
    fn direction(&self, attrs: &[u8], specificity: f64) -> Vec<f64> {
        let mut dir: Vec<f64> = self
            .shared
            .iter()
            .map(|s| (1.0 - specificity) * s)
            .collect();
        if !attrs.is_empty() {
            let w = specificity / attrs.len() as f64;
            for (a, &v) in attrs.iter().enumerate() {
                for (k, x) in dir.iter_mut().enumerate() {
                    *x += w * self.private[a][usize::from(v)][k];
                }
            }
        }
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            dir.iter().map(|x| x / norm).collect()
        } else {
            self.shared.clone()
        }
    }
}

/// Draws the dataset described by `spec`. Empty attribute groups are logged,
/// not rejected.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let attributes: Vec<String> = spec.attribute_props.keys().cloned().collect();

    let axes: Vec<Axes> = spec
        .modality_dims
        .values()
        .map(|&d| Axes {
            shared: unit_vector(&mut rng, d),
            private: attributes
                .iter()
                .map(|_| [unit_vector(&mut rng, d), unit_vector(&mut rng, d)])
                .collect(),
        })
        .collect();

    let subject_attrs: Vec<Vec<u8>> = (0..spec.n_subjects)
        .map(|_| {
            spec.attribute_props
                .values()
                .map(|&p| u8::from(rng.gen::<f64>() < p))
                .collect()
        })
        .collect();
    for (a, name) in attributes.iter().enumerate() {
        for value in 0..=1u8 {
            if !subject_attrs.iter().any(|s| s[a] == value) {
                log::warn!("synthetic dataset has no subjects with {name}={value}");
            }
        }
    }

    let width = (spec.n_subjects.max(1) - 1).to_string().len().max(3);
    let mut meta = Vec::with_capacity(spec.n_rows());
    for (s, attrs) in subject_attrs.iter().enumerate() {
        let rate = spec.base_rate_for(attrs);
        for t in 0..spec.sessions_per_subject {
            meta.push(SampleMeta {
                sample_id: format!("subj{s:0width$}-s{t}"),
                subject_id: format!("subj{s:0width$}"),
                label: u8::from(rng.gen::<f64>() < rate),
                attributes: attrs.clone(),
            });
        }
    }

    let mut tables = Vec::with_capacity(spec.modality_dims.len());
    for ((name, &d), axes) in spec.modality_dims.iter().zip(&axes) {
        let mut x = Array2::<T>::zeros((meta.len(), d));
        for (r, m) in meta.iter().enumerate() {
            let dir = axes.direction(&m.attributes, spec.group_specificity);
            let half = 0.5 * spec.separation_for(&m.attributes) * spec.noise_std;
            let sign = if m.label == 1 { 1.0 } else { -1.0 };
            for k in 0..d {
                let noise: f64 = rng.sample(StandardNormal);
                x[[r, k]] = T::of(sign * half * dir[k] + spec.noise_std * noise);
            }
        }
        let high = d.div_ceil(2);
        let columns = (0..d)
            .map(|k| {
                let level = if k < high { Level::High } else { Level::Low };
                ColumnMeta::new(format!("{name}_f{k}"), level)
            })
            .collect();
        tables.push(ModalityTable::new(name.clone(), x, columns)?);
    }
    Ok(Dataset::new(tables, meta, attributes)?)
}
