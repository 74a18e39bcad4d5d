//! Multimodal fusion: early feature concatenation, hard/soft majority voting
//! and hard/soft stacking with a meta-learner trained on out-of-fold base
//! outputs.

use crate::eval::cv::{stratified_assignment, Fold};
use crate::models::{argmax_labels, fit, ModelError, PredictorSpec, TrainedPredictor};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("fusion configuration error: {0}")]
    Config(String),
    #[error("stacking error: {0}")]
    Stacking(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = FusionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionStrategy {
    Early,
    VoteHard,
    VoteSoft,
    StackHard,
    StackSoft,
}

impl FusionStrategy {
    pub fn is_stacking(self) -> bool {
        matches!(self, FusionStrategy::StackHard | FusionStrategy::StackSoft)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSpec {
    pub strategy: FusionStrategy,
    pub base_model: PredictorSpec,
    /// Used by the stacking strategies only.
    pub meta_model: PredictorSpec,
}

impl FusionSpec {
    pub fn new(strategy: FusionStrategy, base_model: PredictorSpec) -> Self {
        Self {
            strategy,
            base_model,
            meta_model: PredictorSpec::logistic(),
        }
    }
}

fn check_rows<T>(blocks: &[ArrayView2<'_, T>]) -> Result<usize> {
    let n = blocks
        .first()
        .map(|b| b.nrows())
        .ok_or_else(|| FusionError::Config("no modalities given".into()))?;
    if let Some(b) = blocks.iter().find(|b| b.nrows() != n) {
        return Err(FusionError::Shape(format!(
            "modality blocks have {} and {} rows",
            n,
            b.nrows()
        )));
    }
    Ok(n)
}

/// Column-wise concatenation in the given modality order.
pub fn early_fuse<T: Scalar>(modalities: &[ArrayView2<'_, T>]) -> Result<Array2<T>> {
    check_rows(modalities)?;
    ndarray::concatenate(Axis(1), modalities).map_err(|e| FusionError::Shape(e.to_string()))
}

/// Majority label per row. An even split goes to the single most confident
/// base model (probability of its own label); a tie in confidence gives 1.
/// The reported probabilities are the mean of the base probabilities.
pub fn vote_hard<T: Scalar>(base_proba: &[Array2<T>]) -> Result<(Vec<u8>, Array2<T>)> {
    let mean = mean_proba(base_proba)?;
    let m = base_proba.len();
    let labels = (0..mean.nrows())
        .map(|r| {
            let votes: Vec<u8> = base_proba
                .iter()
                .map(|p| u8::from(p[[r, 1]] >= p[[r, 0]]))
                .collect();
            let ones = votes.iter().filter(|&&v| v == 1).count();
            if 2 * ones > m {
                return 1;
            }
            if 2 * ones < m {
                return 0;
            }
            let conf: Vec<T> = base_proba
                .iter()
                .map(|p| p[[r, 0]].max(p[[r, 1]]))
                .collect();
            let top = conf.iter().copied().fold(T::neg_infinity(), T::max);
            let leaders: Vec<u8> = (0..m)
                .filter(|&k| conf[k] == top)
                .map(|k| votes[k])
                .collect();
            if leaders.iter().all(|&v| v == leaders[0]) {
                leaders[0]
            } else {
                1
            }
        })
        .collect();
    Ok((labels, mean))
}

fn mean_proba<T: Scalar>(base_proba: &[Array2<T>]) -> Result<Array2<T>> {
    let first = base_proba
        .first()
        .ok_or_else(|| FusionError::Config("no base predictions".into()))?;
    let mut sum = Array2::<T>::zeros(first.raw_dim());
    for p in base_proba {
        if p.dim() != first.dim() {
            return Err(FusionError::Shape(
                "base probability matrices differ in shape".into(),
            ));
        }
        sum = sum + p;
    }
    let m = T::of_usize(base_proba.len());
    Ok(sum.mapv(|v| v / m))
}

/// Argmax of the mean base probability vector.
pub fn vote_soft<T: Scalar>(base_proba: &[Array2<T>]) -> Result<(Vec<u8>, Array2<T>)> {
    let mean = mean_proba(base_proba)?;
    Ok((argmax_labels(&mean), mean))
}

/// Meta-learner inputs: base labels (hard, width m) or concatenated
/// probability pairs (soft, width 2m).
pub fn meta_features<T: Scalar>(
    strategy: FusionStrategy,
    base_proba: &[Array2<T>],
) -> Result<Array2<T>> {
    let n = base_proba
        .first()
        .map(|p| p.nrows())
        .ok_or_else(|| FusionError::Config("no base predictions".into()))?;
    match strategy {
        FusionStrategy::StackHard => {
            let mut out = Array2::zeros((n, base_proba.len()));
            for (k, p) in base_proba.iter().enumerate() {
                for (r, l) in argmax_labels(p).into_iter().enumerate() {
                    out[[r, k]] = T::of(f64::from(l));
                }
            }
            Ok(out)
        }
        FusionStrategy::StackSoft => {
            let views: Vec<_> = base_proba.iter().map(|p| p.view()).collect();
            early_fuse(&views)
        }
        other => Err(FusionError::Config(format!(
            "{other:?} has no meta-features"
        ))),
    }
}

/// Meta-learner plus the bookkeeping that proves its training inputs were
/// produced out of fold.
#[derive(Debug, Clone)]
pub struct StackingFit<T> {
    pub meta: TrainedPredictor<T>,
    /// Base models refit on the full training split, one per modality.
    pub base: Vec<TrainedPredictor<T>>,
    /// Out-of-fold meta-features the meta-learner was trained on.
    pub meta_features: Array2<T>,
    /// Internal folds; row `r`'s meta-features come from models fitted on
    /// `folds[f].train` where `r ∈ folds[f].test`.
    pub folds: Vec<Fold>,
}

/// Trains the stacking meta-learner on out-of-fold base outputs (5 internal
/// folds, 2 when fewer than 10 rows), then refits the base models on all rows.
pub fn fit_stacking_meta<T: Scalar>(
    spec: &FusionSpec,
    train: &[ArrayView2<'_, T>],
    y: &[u8],
    seed: u64,
) -> Result<StackingFit<T>> {
    if !spec.strategy.is_stacking() {
        return Err(FusionError::Config(format!(
            "{:?} is not a stacking strategy",
            spec.strategy
        )));
    }
    if train.len() < 2 {
        return Err(FusionError::Stacking(
            "stacking needs at least 2 modalities".into(),
        ));
    }
    let n = check_rows(train)?;
    if n != y.len() {
        return Err(FusionError::Shape(format!(
            "{n} rows but {} labels",
            y.len()
        )));
    }
    if n < 4 {
        return Err(FusionError::Stacking(format!(
            "stacking needs at least 4 training rows, got {n}"
        )));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(ModelError::SingleClass(y[0]).into());
    }
    let k = if n < 10 { 2 } else { 5 };
    let assign = stratified_assignment(y, k, seed);
    let folds: Vec<Fold> = (0..k)
        .map(|f| Fold {
            index: f,
            train: (0..n).filter(|&i| assign[i] != f).collect(),
            test: (0..n).filter(|&i| assign[i] == f).collect(),
        })
        .collect();

    let mut oof: Vec<Array2<T>> = vec![Array2::zeros((n, 2)); train.len()];
    for fold in &folds {
        if fold.test.is_empty() {
            continue;
        }
        let fy: Vec<u8> = fold.train.iter().map(|&i| y[i]).collect();
        for (m, block) in train.iter().enumerate() {
            let model = fit(
                &spec.base_model,
                block.select(Axis(0), &fold.train).view(),
                &fy,
            )?;
            let p = model.predict_proba(block.select(Axis(0), &fold.test).view())?;
            for (pos, &r) in fold.test.iter().enumerate() {
                oof[m][[r, 0]] = p[[pos, 0]];
                oof[m][[r, 1]] = p[[pos, 1]];
            }
        }
    }
    let features = meta_features(spec.strategy, &oof)?;
    let meta = fit(&spec.meta_model, features.view(), y)?;
    let base = train
        .iter()
        .map(|block| fit(&spec.base_model, *block, y))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(StackingFit {
        meta,
        base,
        meta_features: features,
        folds,
    })
}

/// Late-fusion prediction from trained per-modality models.
pub fn fuse_predict<T: Scalar>(
    strategy: FusionStrategy,
    base: &[TrainedPredictor<T>],
    meta: Option<&TrainedPredictor<T>>,
    x: &[ArrayView2<'_, T>],
) -> Result<(Vec<u8>, Array2<T>)> {
    if base.len() != x.len() {
        return Err(FusionError::Config(format!(
            "{} trained base models for {} modalities",
            base.len(),
            x.len()
        )));
    }
    check_rows(x)?;
    let proba = base
        .iter()
        .zip(x)
        .map(|(m, block)| m.predict_proba(*block))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match strategy {
        FusionStrategy::VoteHard => vote_hard(&proba),
        FusionStrategy::VoteSoft => vote_soft(&proba),
        FusionStrategy::StackHard | FusionStrategy::StackSoft => {
            let meta = meta.ok_or_else(|| {
                FusionError::Config("stacking requires a trained meta-model".into())
            })?;
            let features = meta_features(strategy, &proba)?;
            let p = meta.predict_proba(features.view())?;
            Ok((argmax_labels(&p), p))
        }
        FusionStrategy::Early => Err(FusionError::Config(
            "early fusion is not a late-fusion strategy".into(),
        )),
    }
}

/// Any fusion strategy, fitted.
#[derive(Debug, Clone)]
pub enum FusionModel<T> {
    Early(TrainedPredictor<T>),
    Late {
        strategy: FusionStrategy,
        base: Vec<TrainedPredictor<T>>,
        meta: Option<TrainedPredictor<T>>,
    },
}

impl<T: Scalar> FusionModel<T> {
    /// Fits `spec` on per-modality training blocks. Stacking over a single
    /// modality degrades to that modality's base model.
    pub fn fit(
        spec: &FusionSpec,
        train: &[ArrayView2<'_, T>],
        y: &[u8],
        seed: u64,
    ) -> Result<Self> {
        check_rows(train)?;
        match spec.strategy {
            FusionStrategy::Early => {
                let x = early_fuse(train)?;
                Ok(FusionModel::Early(fit(&spec.base_model, x.view(), y)?))
            }
            FusionStrategy::StackHard | FusionStrategy::StackSoft if train.len() >= 2 => {
                let s = fit_stacking_meta(spec, train, y, seed)?;
                Ok(FusionModel::Late {
                    strategy: spec.strategy,
                    base: s.base,
                    meta: Some(s.meta),
                })
            }
            strategy => {
                let base = train
                    .iter()
                    .map(|block| fit(&spec.base_model, *block, y))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let strategy = if strategy.is_stacking() {
                    FusionStrategy::VoteSoft
                } else {
                    strategy
                };
                Ok(FusionModel::Late {
                    strategy,
                    base,
                    meta: None,
                })
            }
        }
    }

    pub fn predict(&self, x: &[ArrayView2<'_, T>]) -> Result<(Vec<u8>, Array2<T>)> {
        match self {
            FusionModel::Early(model) => {
                let fused = early_fuse(x)?;
                let p = model.predict_proba(fused.view())?;
                Ok((argmax_labels(&p), p))
            }
            FusionModel::Late {
                strategy,
                base,
                meta,
            } => fuse_predict(*strategy, base, meta.as_ref(), x),
        }
    }
}
