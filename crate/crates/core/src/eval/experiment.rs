use super::cv::{fold_fingerprint, make_folds, Fold};
use super::metrics::{PredictionRecord, PredictionSet};
use super::report::{summarize, FoldReport};
use super::{EvalError, EvaluationReport, FoldError, Result};
use crate::augment::balance;
use crate::config::PipelineConfig;
use crate::dataset::{ColumnMeta, Dataset, Level, ModalityTable};
use crate::fusion::FusionModel;
use crate::preprocess::ModalityPreprocessor;
use crate::scalar::Scalar;
use ndarray::ArrayView2;

/// Independent random streams hanging off the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedStream {
    Augment = 1,
    Model = 2,
    Fusion = 3,
}

/// SplitMix64 finalizer over (master, stream, index).
pub fn derive_seed(master: u64, stream: SeedStream, index: u64) -> u64 {
    let mut z = master
        ^ (stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_add(1).wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum FoldOutcome {
    Done {
        records: Vec<PredictionRecord>,
        n_synthetic: usize,
    },
    Skipped(String),
}

fn run_fold<T: Scalar>(
    config: &PipelineConfig,
    data: &Dataset<T>,
    fold: &Fold,
) -> std::result::Result<FoldOutcome, FoldError> {
    let train = data.subset(&fold.train)?;
    let test = data.subset(&fold.test)?;
    let y = train.labels();
    if let Some(&first) = y.first() {
        if y.iter().all(|&c| c == first) {
            return Ok(FoldOutcome::Skipped(format!(
                "training split has only class {first}"
            )));
        }
    } else {
        return Ok(FoldOutcome::Skipped("training split is empty".into()));
    }

    let opts = config.preprocess_options();
    let mut train_tables = Vec::with_capacity(train.modalities().len());
    let mut test_blocks = Vec::with_capacity(train.modalities().len());
    for (tr, te) in train.modalities().iter().zip(test.modalities()) {
        let pre = ModalityPreprocessor::fit(tr, &opts)?;
        let xtr = pre.apply(tr)?;
        test_blocks.push(pre.apply(te)?);
        let columns = (0..xtr.ncols())
            .map(|k| ColumnMeta::new(format!("{}_c{k}", tr.name()), Level::Low))
            .collect();
        train_tables.push(ModalityTable::new(tr.name(), xtr, columns)?);
    }
    let train = train.with_modalities(train_tables)?;

    let index = fold.index as u64;
    let (train, n_synthetic) = match config.augment.method.method() {
        None => (train, 0),
        Some(method) => {
            let mix = config.augment.mixfeat(derive_seed(
                config.augment.seed.unwrap_or(config.seed),
                SeedStream::Augment,
                index,
            ));
            let out = balance(&train, method, &mix)?;
            let n = out.synthetic.len();
            (out.dataset, n)
        }
    };

    let mut spec = config.fusion_spec();
    spec.base_model.seed ^= derive_seed(config.seed, SeedStream::Model, index);
    spec.meta_model.seed ^= derive_seed(config.seed, SeedStream::Model, index);
    let blocks: Vec<ArrayView2<'_, T>> = train
        .modalities()
        .iter()
        .map(|t| t.samples().view())
        .collect();
    let model = FusionModel::fit(
        &spec,
        &blocks,
        &train.labels(),
        derive_seed(config.seed, SeedStream::Fusion, index),
    )?;
    let test_views: Vec<ArrayView2<'_, T>> = test_blocks.iter().map(|b| b.view()).collect();
    let (labels, proba) = model.predict(&test_views)?;

    let records = test
        .meta()
        .iter()
        .zip(labels)
        .zip(proba.rows())
        .map(|((m, label), p)| {
            let p1 = p[1].as_f64().clamp(0.0, 1.0);
            PredictionRecord {
                sample_id: m.sample_id.clone(),
                subject_id: m.subject_id.clone(),
                fold: fold.index,
                true_label: m.label,
                predicted_label: label,
                proba: Some([1.0 - p1, p1]),
                attributes: m.attributes.clone(),
            }
        })
        .collect();
    Ok(FoldOutcome::Done {
        records,
        n_synthetic,
    })
}

fn select_data<T: Scalar>(config: &PipelineConfig, dataset: &Dataset<T>) -> Result<Dataset<T>> {
    match &config.features.modalities {
        None => Ok(dataset.clone()),
        Some(names) => {
            if let Some(missing) = names.iter().find(|n| dataset.modality(n).is_none()) {
                return Err(EvalError::Config(format!(
                    "features.modalities names `{missing}`, available: {}",
                    dataset.modality_names().join(", ")
                )));
            }
            Ok(dataset.select_modalities(names)?)
        }
    }
}

/// Cross-validates the configured pipeline and scores the pooled
/// out-of-fold predictions.
pub fn run_experiment<T: Scalar>(
    config: &PipelineConfig,
    dataset: &Dataset<T>,
) -> Result<EvaluationReport> {
    config
        .validate()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let folds = make_folds(dataset.meta(), &config.cv, config.seed)?;
    run_experiment_on_folds(config, dataset, &folds)
}

/// [`run_experiment`] with caller-supplied folds.
pub fn run_experiment_on_folds<T: Scalar>(
    config: &PipelineConfig,
    dataset: &Dataset<T>,
    folds: &[Fold],
) -> Result<EvaluationReport> {
    config
        .validate()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let data = select_data(config, dataset)?;
    let mut pooled = PredictionSet::new(data.attributes().to_vec());
    let mut fold_reports = Vec::with_capacity(folds.len());
    for fold in folds {
        let outcome = run_fold(config, &data, fold).map_err(|source| EvalError::Fold {
            fold: fold.index,
            source,
        })?;
        let mut report = FoldReport {
            index: fold.index,
            n_train: fold.train.len(),
            n_test: fold.test.len(),
            n_synthetic: 0,
            accuracy: None,
            skipped: None,
        };
        match outcome {
            FoldOutcome::Skipped(reason) => {
                log::warn!("fold {} skipped: {reason}", fold.index);
                report.skipped = Some(reason);
            }
            FoldOutcome::Done {
                records,
                n_synthetic,
            } => {
                report.n_synthetic = n_synthetic;
                if !records.is_empty() {
                    let hits = records
                        .iter()
                        .filter(|r| r.true_label == r.predicted_label)
                        .count();
                    report.accuracy = Some(hits as f64 / records.len() as f64);
                }
                pooled.records.extend(records);
            }
        }
        fold_reports.push(report);
    }
    if fold_reports.iter().all(|f| f.skipped.is_some()) {
        return Err(EvalError::AllFoldsSkipped(fold_reports.len()));
    }
    let fingerprint = fold_fingerprint(data.meta(), folds);
    summarize(config, pooled, fold_reports, fingerprint)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        let a = derive_seed(7, SeedStream::Augment, 0);
        assert_ne!(a, derive_seed(7, SeedStream::Model, 0));
        assert_ne!(a, derive_seed(7, SeedStream::Augment, 1));
        assert_ne!(a, derive_seed(8, SeedStream::Augment, 0));
        assert_eq!(a, derive_seed(7, SeedStream::Augment, 0));
    }
}
