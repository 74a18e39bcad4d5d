//! Data model for multimodal feature tables with labels and sensitive
//! attributes, plus manifest/CSV loading and export.

mod io;

pub use io::{load_dataset, write_dataset, Manifest, DEFAULT_PANAS_THRESHOLD};

use crate::scalar::Scalar;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("sample `{sample_id}` is missing from modality `{modality}`")]
    Alignment { modality: String, sample_id: String },
    #[error("{file}: row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        file: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// Interpretability tag of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Low,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Low => "low",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Level {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Level::High),
            "low" => Ok(Level::Low),
            other => Err(DatasetError::Schema(format!(
                "level must be `high` or `low`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMeta {
    pub name: String,
    pub level: Level,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, level: Level) -> Self {
        Self {
            name: name.into(),
            level,
        }
    }
}

/// Sample-by-feature matrix for one modality.
///
/// Missing cells are stored as NaN; every other value must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityTable<T> {
    name: String,
    samples: Array2<T>,
    columns: Vec<ColumnMeta>,
}

impl<T: Scalar> ModalityTable<T> {
    pub fn new(
        name: impl Into<String>,
        samples: Array2<T>,
        columns: Vec<ColumnMeta>,
    ) -> Result<Self> {
        let name = name.into();
        if samples.ncols() != columns.len() {
            return Err(DatasetError::Schema(format!(
                "modality `{name}`: {} columns of data but {} column records",
                samples.ncols(),
                columns.len()
            )));
        }
        if samples.nrows() == 0 {
            return Err(DatasetError::Schema(format!(
                "modality `{name}` has no rows"
            )));
        }
        if samples.iter().any(|v| v.is_infinite()) {
            return Err(DatasetError::Schema(format!(
                "modality `{name}` contains an infinite value"
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DatasetError::Schema(format!(
                    "modality `{name}`: duplicate feature name `{}`",
                    c.name
                )));
            }
        }
        Ok(Self {
            name,
            samples,
            columns,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Keeps the given column indices, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        let samples = self.samples.select(Axis(1), keep);
        let columns = keep.iter().map(|&j| self.columns[j].clone()).collect();
        Self::new(self.name.clone(), samples, columns)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.samples.select(Axis(0), rows),
            self.columns.clone(),
        )
    }

    /// Same columns, new values (row count may differ).
    pub fn with_samples(&self, samples: Array2<T>) -> Result<Self> {
        Self::new(self.name.clone(), samples, self.columns.clone())
    }

    pub fn into_parts(self) -> (String, Array2<T>, Vec<ColumnMeta>) {
        (self.name, self.samples, self.columns)
    }
}

/// Identity, outcome and group membership of one row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampleMeta {
    pub sample_id: String,
    pub subject_id: String,
    /// 1 = high-PA, 0 = low-PA.
    pub label: u8,
    /// Values aligned with [`Dataset::attributes`]; 1 = majority group.
    pub attributes: Vec<u8>,
}

/// A group with no members for some declared attribute or for the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerateGroup {
    /// `"label"` or an attribute name.
    pub variable: String,
    pub missing_value: u8,
}

impl fmt::Display for DegenerateGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no samples with {}={}",
            self.variable, self.missing_value
        )
    }
}

/// Row-aligned modality tables with per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    modalities: Vec<ModalityTable<T>>,
    meta: Vec<SampleMeta>,
    attributes: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        modalities: Vec<ModalityTable<T>>,
        meta: Vec<SampleMeta>,
        attributes: Vec<String>,
    ) -> Result<Self> {
        if modalities.is_empty() {
            return Err(DatasetError::Schema("dataset has no modalities".into()));
        }
        let n = meta.len();
        let mut names = HashSet::new();
        for m in &modalities {
            if m.n_samples() != n {
                return Err(DatasetError::Schema(format!(
                    "modality `{}` has {} rows, metadata has {n}",
                    m.name(),
                    m.n_samples()
                )));
            }
            if !names.insert(m.name()) {
                return Err(DatasetError::Schema(format!(
                    "duplicate modality `{}`",
                    m.name()
                )));
            }
        }
        let mut ids = HashSet::with_capacity(n);
        for s in &meta {
            if !ids.insert(s.sample_id.as_str()) {
                return Err(DatasetError::Schema(format!(
                    "duplicate sample_id `{}`",
                    s.sample_id
                )));
            }
            if s.label > 1 {
                return Err(DatasetError::Schema(format!(
                    "sample `{}`: label must be 0 or 1",
                    s.sample_id
                )));
            }
            if s.attributes.len() != attributes.len() {
                return Err(DatasetError::Schema(format!(
                    "sample `{}` has {} attribute values, {} declared",
                    s.sample_id,
                    s.attributes.len(),
                    attributes.len()
                )));
            }
            if s.attributes.iter().any(|&a| a > 1) {
                return Err(DatasetError::Schema(format!(
                    "sample `{}`: attribute values must be 0 or 1",
                    s.sample_id
                )));
            }
        }
        Ok(Self {
            modalities,
            meta,
            attributes,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.meta.len()
    }

    pub fn modalities(&self) -> &[ModalityTable<T>] {
        &self.modalities
    }

    pub fn modality(&self, name: &str) -> Option<&ModalityTable<T>> {
        self.modalities.iter().find(|m| m.name() == name)
    }

    pub fn modality_names(&self) -> Vec<&str> {
        self.modalities.iter().map(|m| m.name()).collect()
    }

    pub fn meta(&self) -> &[SampleMeta] {
        &self.meta
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.meta.iter().map(|m| m.label).collect()
    }

    /// Values of `label` and of every attribute that never occur.
    pub fn degenerate_groups(&self) -> Vec<DegenerateGroup> {
        let mut out = Vec::new();
        let mut check = |name: &str, values: &mut dyn Iterator<Item = u8>| {
            let mut seen = [false; 2];
            for v in values {
                seen[v as usize] = true;
            }
            for (v, present) in seen.iter().enumerate() {
                if !present {
                    out.push(DegenerateGroup {
                        variable: name.to_string(),
                        missing_value: v as u8,
                    });
                }
            }
        };
        check("label", &mut self.meta.iter().map(|m| m.label));
        for (a, name) in self.attributes.iter().enumerate() {
            check(name, &mut self.meta.iter().map(|m| m.attributes[a]));
        }
        out
    }

    /// Rows at `rows`, in that order, across every modality.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let modalities = self
            .modalities
            .iter()
            .map(|m| m.select_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        let meta = rows.iter().map(|&r| self.meta[r].clone()).collect();
        Self::new(modalities, meta, self.attributes.clone())
    }

    /// Keeps only the named modalities, in the given order.
    pub fn select_modalities(&self, names: &[String]) -> Result<Self> {
        let modalities = names
            .iter()
            .map(|n| {
                self.modality(n)
                    .cloned()
                    .ok_or_else(|| DatasetError::Schema(format!("unknown modality `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(modalities, self.meta.clone(), self.attributes.clone())
    }

    /// Replaces the feature tables, keeping the metadata.
    pub fn with_modalities(&self, modalities: Vec<ModalityTable<T>>) -> Result<Self> {
        Self::new(modalities, self.meta.clone(), self.attributes.clone())
    }

    /// Appends rows; `rows[m]` holds the new feature rows for modality `m`.
    pub fn append(&self, rows: Vec<Array2<T>>, meta: Vec<SampleMeta>) -> Result<Self> {
        if rows.len() != self.modalities.len() {
            return Err(DatasetError::Schema(format!(
                "append: {} modality blocks for {} modalities",
                rows.len(),
                self.modalities.len()
            )));
        }
        let mut modalities = Vec::with_capacity(rows.len());
        for (table, extra) in self.modalities.iter().zip(rows) {
            if extra.nrows() != meta.len() {
                return Err(DatasetError::Schema(format!(
                    "append: modality `{}` got {} rows for {} new samples",
                    table.name(),
                    extra.nrows(),
                    meta.len()
                )));
            }
            let stacked = ndarray::concatenate(Axis(0), &[table.samples().view(), extra.view()])
                .map_err(|e| DatasetError::Schema(format!("append: {e}")))?;
            modalities.push(table.with_samples(stacked)?);
        }
        let mut all = self.meta.clone();
        all.extend(meta);
        Self::new(modalities, all, self.attributes.clone())
    }
}

/// PANAS positive-affect score → binary label (1 iff strictly above threshold).
pub fn binarize_panas(pa_score: f64, threshold: f64) -> Result<u8> {
    if !pa_score.is_finite() {
        return Err(DatasetError::Input(format!(
            "PA score must be finite, got {pa_score}"
        )));
    }
    if !threshold.is_finite() {
        return Err(DatasetError::Input(format!(
            "PANAS threshold must be finite, got {threshold}"
        )));
    }
    Ok(u8::from(pa_score > threshold))
}
