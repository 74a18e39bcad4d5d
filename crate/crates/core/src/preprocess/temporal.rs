use super::{PreprocessError, Result};
use crate::dataset::{ColumnMeta, ModalityTable};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// Time × feature recording of one clip.
#[derive(Debug, Clone)]
pub struct TemporalClip<T> {
    pub clip_id: String,
    pub series: Array2<T>,
    /// Frames per second; sets the autocorrelation lag.
    pub frame_rate: f64,
}

/// Per-feature statistic computed over a clip, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Mean,
    Median,
    Std,
    Min,
    Max,
    Autocorr,
}

impl Descriptor {
    pub const ALL: [Descriptor; 6] = [
        Descriptor::Mean,
        Descriptor::Median,
        Descriptor::Std,
        Descriptor::Min,
        Descriptor::Max,
        Descriptor::Autocorr,
    ];

    /// Column-name suffix used by [`summarize_clips`].
    pub fn suffix(self) -> &'static str {
        match self {
            Descriptor::Mean => "mean",
            Descriptor::Median => "median",
            Descriptor::Std => "std",
            Descriptor::Min => "min",
            Descriptor::Max => "max",
            Descriptor::Autocorr => "autocorr",
        }
    }
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = T::of_usize(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        sab = sab + (x - ma) * (y - mb);
        saa = saa + (x - ma) * (x - ma);
        sbb = sbb + (y - mb) * (y - mb);
    }
    if saa == T::zero() || sbb == T::zero() {
        return T::zero();
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    r.max(-T::one()).min(T::one())
}

/// Pearson autocorrelation at `lag` frames; 0 when undefined.
pub fn autocorrelation<T: Scalar>(series: &[T], lag: usize) -> T {
    let lag = lag.max(1);
    if series.len() < lag + 2 {
        return T::zero();
    }
    let n = series.len();
    pearson(&series[..n - lag], &series[lag..])
}

fn describe<T: Scalar>(column: ArrayView1<'_, T>, lag: usize) -> [T; 6] {
    let values: Vec<T> = column.iter().copied().collect();
    let n = T::of_usize(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / T::of(2.0)
    };
    [
        mean,
        median,
        var.sqrt(),
        sorted[0],
        sorted[sorted.len() - 1],
        autocorrelation(&values, lag),
    ]
}

/// Condenses a clip into `[mean, median, std, min, max, autocorr]` per
/// feature, feature-major. The autocorrelation lag is one second of frames.
pub fn summarize_temporal<T: Scalar>(clip: &TemporalClip<T>) -> Result<Vec<T>> {
    if clip.series.nrows() == 0 || clip.series.ncols() == 0 {
        return Err(PreprocessError::Input(format!(
            "clip `{}` has an empty series",
            clip.clip_id
        )));
    }
    if !(clip.frame_rate.is_finite() && clip.frame_rate > 0.0) {
        return Err(PreprocessError::Input(format!(
            "clip `{}`: frame rate must be positive, got {}",
            clip.clip_id, clip.frame_rate
        )));
    }
    if clip.series.iter().any(|v| !v.is_finite()) {
        return Err(PreprocessError::Input(format!(
            "clip `{}` contains non-finite values",
            clip.clip_id
        )));
    }
    let lag = clip.frame_rate.round() as usize;
    let mut out = Vec::with_capacity(6 * clip.series.ncols());
    for column in clip.series.columns() {
        out.extend(describe(column, lag));
    }
    Ok(out)
}

/// Summarizes every clip into one row of a modality table.
///
/// Output columns are named `<feature>_<descriptor>` and inherit the
/// feature's level tag.
pub fn summarize_clips<T: Scalar>(
    modality: &str,
    clips: &[TemporalClip<T>],
    features: &[ColumnMeta],
) -> Result<ModalityTable<T>> {
    if clips.is_empty() {
        return Err(PreprocessError::Input(format!(
            "modality `{modality}`: no clips"
        )));
    }
    let width = 6 * features.len();
    let mut samples = Array2::zeros((clips.len(), width));
    for (r, clip) in clips.iter().enumerate() {
        if clip.series.ncols() != features.len() {
            return Err(PreprocessError::Shape(format!(
                "clip `{}` has {} features, expected {}",
                clip.clip_id,
                clip.series.ncols(),
                features.len()
            )));
        }
        for (j, v) in summarize_temporal(clip)?.into_iter().enumerate() {
            samples[[r, j]] = v;
        }
    }
    let columns = features
        .iter()
        .flat_map(|f| {
            Descriptor::ALL
                .iter()
                .map(move |d| ColumnMeta::new(format!("{}_{}", f.name, d.suffix()), f.level))
        })
        .collect();
    Ok(ModalityTable::new(modality, samples, columns)?)
}

/// Drops summary columns whose descriptor is not in `keep`.
///
/// Columns without a recognised descriptor suffix are left alone.
pub fn mask_descriptors<T: Scalar>(
    table: &ModalityTable<T>,
    keep: &[Descriptor],
) -> Result<ModalityTable<T>> {
    let cols: Vec<usize> = table
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            Descriptor::ALL
                .iter()
                .find(|d| c.name.ends_with(&format!("_{}", d.suffix())))
                .is_none_or(|d| keep.contains(d))
        })
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return Err(PreprocessError::EmptyTable {
            modality: table.name().to_string(),
        });
    }
    Ok(table.select_columns(&cols)?)
}
