//! Binary classifiers behind one predictor contract: RBF-kernel SVM, a
//! one-hidden-layer MLP and L2-regularized logistic regression.
//!
//! Every model emits class probabilities `[P(y=0), P(y=1)]`; hard labels are
//! always the argmax of those probabilities with ties going to class 1.

mod logistic;
mod mlp;
mod svm;

pub use logistic::LogisticModel;
pub use mlp::{mlp_loss_and_gradient, MlpModel, MlpParams};
pub use svm::{PlattScaling, SvmModel};

use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training labels contain a single class ({0}); both classes are required")]
    SingleClass(u8),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid hyperparameter: {0}")]
    Config(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RbfSvm,
    Mlp,
    Logistic,
}

/// RBF kernel width; `Scale` means `1 / (n_features · Var(X))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Named(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaRule {
    Scale,
}

impl Gamma {
    pub const SCALE: Gamma = Gamma::Named(GammaRule::Scale);
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::SCALE
    }
}

/// Model family plus hyperparameters; fields irrelevant to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSpec {
    pub kind: ModelKind,
    /// SVM box constraint.
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Gamma,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty (MLP and logistic regression).
    pub l2: f64,
    /// MLP mini-batch size; clipped to the training size.
    pub batch_size: usize,
    /// Inverse class-frequency weighting.
    pub class_weighting: bool,
    pub seed: u64,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::RbfSvm,
            c: 1.0,
            gamma: Gamma::SCALE,
            hidden_units: 100,
            learning_rate: 1e-3,
            epochs: 500,
            l2: 1e-4,
            batch_size: 200,
            class_weighting: false,
            seed: 0,
        }
    }
}

impl PredictorSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn logistic() -> Self {
        Self::new(ModelKind::Logistic)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::Config(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("C", self.c)?;
        if let Gamma::Value(g) = self.gamma {
            positive("gamma", g)?;
        }
        positive("learning_rate", self.learning_rate)?;
        if self.hidden_units == 0 {
            return Err(ModelError::Config("hidden_units must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(ModelError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(ModelError::Config(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInfo {
    pub n_train: usize,
    pub class_counts: [usize; 2],
}

#[derive(Debug, Clone)]
pub enum FittedModel<T> {
    Svm(SvmModel<T>),
    Mlp(MlpModel<T>),
    Logistic(LogisticModel<T>),
}

/// A fitted classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct TrainedPredictor<T> {
    pub spec: PredictorSpec,
    pub info: TrainingInfo,
    pub model: FittedModel<T>,
}

/// Per-row probability pairs → labels; `P(y=1) ≥ P(y=0)` gives 1.
pub fn argmax_labels<T: Scalar>(proba: &Array2<T>) -> Vec<u8> {
    proba
        .rows()
        .into_iter()
        .map(|r| u8::from(r[1] >= r[0]))
        .collect()
}

/// Builds the n × 2 probability matrix from `P(y=1)` values.
pub(crate) fn proba_from_positive<T: Scalar>(p1: impl IntoIterator<Item = T>) -> Array2<T> {
    let p1: Vec<T> = p1.into_iter().collect();
    let mut out = Array2::zeros((p1.len(), 2));
    for (r, p) in p1.into_iter().enumerate() {
        let p = p.max(T::zero()).min(T::one());
        out[[r, 0]] = T::one() - p;
        out[[r, 1]] = p;
    }
    out
}

/// Inverse-frequency weights `n / (2 · n_class)`, or all ones.
pub(crate) fn sample_weights<T: Scalar>(y: &[u8], balanced: bool) -> Vec<T> {
    if !balanced {
        return vec![T::one(); y.len()];
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let n0 = y.len() - n1;
    let w = |count: usize| T::of(y.len() as f64 / (2.0 * count.max(1) as f64));
    let (w0, w1) = (w(n0), w(n1));
    y.iter().map(|&v| if v == 1 { w1 } else { w0 }).collect()
}

pub(crate) fn check_training<T: Scalar>(x: ArrayView2<'_, T>, y: &[u8]) -> Result<TrainingInfo> {
    if x.nrows() != y.len() {
        return Err(ModelError::Shape(format!(
            "{} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(ModelError::Input(format!(
            "need at least 2 training rows, got {}",
            y.len()
        )));
    }
    if x.ncols() == 0 {
        return Err(ModelError::Input("training matrix has no columns".into()));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(ModelError::Input("labels must be 0 or 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Input(
            "training matrix contains non-finite values".into(),
        ));
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let counts = [y.len() - n1, n1];
    if counts[0] == 0 {
        return Err(ModelError::SingleClass(1));
    }
    if counts[1] == 0 {
        return Err(ModelError::SingleClass(0));
    }
    Ok(TrainingInfo {
        n_train: y.len(),
        class_counts: counts,
    })
}

fn check_width(expected: usize, x: ArrayView2<'_, impl Scalar>) -> Result<()> {
    if x.ncols() != expected {
        return Err(ModelError::Shape(format!(
            "model trained on {expected} features, got {}",
            x.ncols()
        )));
    }
    Ok(())
}

/// Trains the model described by `spec`. Deterministic given `spec.seed`.
pub fn fit<T: Scalar>(
    spec: &PredictorSpec,
    x: ArrayView2<'_, T>,
    y: &[u8],
) -> Result<TrainedPredictor<T>> {
    spec.validate()?;
    let info = check_training(x, y)?;
    let model = match spec.kind {
        ModelKind::RbfSvm => FittedModel::Svm(SvmModel::fit(spec, x, y)?),
        ModelKind::Mlp => FittedModel::Mlp(MlpModel::fit(spec, x, y)?),
        ModelKind::Logistic => FittedModel::Logistic(LogisticModel::fit(spec, x, y)?),
    };
    Ok(TrainedPredictor {
        spec: spec.clone(),
        info,
        model,
    })
}

impl<T: Scalar> TrainedPredictor<T> {
    pub fn n_features(&self) -> usize {
        match &self.model {
            FittedModel::Svm(m) => m.n_features(),
            FittedModel::Mlp(m) => m.n_features(),
            FittedModel::Logistic(m) => m.n_features(),
        }
    }

    /// n × 2 matrix of `[P(y=0), P(y=1)]`.
    pub fn predict_proba(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        check_width(self.n_features(), x)?;
        Ok(match &self.model {
            FittedModel::Svm(m) => m.predict_proba(x),
            FittedModel::Mlp(m) => m.predict_proba(x),
            FittedModel::Logistic(m) => m.predict_proba(x),
        })
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Vec<u8>> {
        Ok(argmax_labels(&self.predict_proba(x)?))
    }
}

pub fn predict<T: Scalar>(model: &TrainedPredictor<T>, x: ArrayView2<'_, T>) -> Result<Vec<u8>> {
    model.predict(x)
}

pub fn predict_proba<T: Scalar>(
    model: &TrainedPredictor<T>,
    x: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    model.predict_proba(x)
}
