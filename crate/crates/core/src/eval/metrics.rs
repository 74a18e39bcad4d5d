//! Performance and group-fairness metrics over pooled predictions.
//!
//! All metrics are ratios of counts, generic over the value type so they can
//! be evaluated in floating point or exactly in rational arithmetic.

use crate::scalar::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("prediction set is empty")]
    Empty,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("metric undefined: no samples with {attribute}={value}")]
    EmptyGroup { attribute: String, value: u8 },
    #[error("F1 undefined: no true or predicted positives")]
    NoPositives,
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

/// One pooled out-of-fold prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub subject_id: String,
    pub fold: usize,
    pub true_label: u8,
    pub predicted_label: u8,
    /// `[P(y=0), P(y=1)]`, when the producer kept it.
    pub proba: Option<[f64; 2]>,
    pub attributes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    /// Names for the positions of each record's `attributes`.
    pub attributes: Vec<String>,
    pub records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(attributes: Vec<String>) -> Self {
        Self {
            attributes,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| MetricError::UnknownAttribute(name.to_string()))
    }

    /// Records with `attribute == value`.
    pub fn group(&self, attribute: &str, value: u8) -> Result<Vec<&PredictionRecord>> {
        let a = self.attribute_index(attribute)?;
        Ok(self
            .records
            .iter()
            .filter(|r| r.attributes[a] == value)
            .collect())
    }

    pub fn group_sizes(&self, attribute: &str) -> Result<[usize; 2]> {
        Ok([
            self.group(attribute, 0)?.len(),
            self.group(attribute, 1)?.len(),
        ])
    }
}

fn ratio<R: Ratio>(num: usize, den: usize) -> R {
    R::from_usize(num).expect("count fits") / R::from_usize(den).expect("count fits")
}

fn abs_diff<R: Ratio>(a: R, b: R) -> R {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

/// Fraction of correct predictions.
pub fn accuracy<R: Ratio>(preds: &PredictionSet) -> Result<R> {
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let correct = preds
        .records
        .iter()
        .filter(|r| r.true_label == r.predicted_label)
        .count();
    Ok(ratio(correct, preds.len()))
}

/// F1 of the positive class; 0 when precision + recall is 0.
pub fn f1<R: Ratio>(preds: &PredictionSet) -> Result<R> {
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for r in &preds.records {
        match (r.true_label, r.predicted_label) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fneg += 1,
            _ => {}
        }
    }
    if tp + fp + fneg == 0 {
        return Err(MetricError::NoPositives);
    }
    // 2·P·R / (P + R) == 2·tp / (2·tp + fp + fn)
    Ok(ratio(2 * tp, 2 * tp + fp + fneg))
}

/// Unweighted average recall plus the classes absent from the truths.
///
/// An absent class contributes recall 0.
pub fn uar_with_flags<R: Ratio>(preds: &PredictionSet) -> Result<(R, Vec<u8>)> {
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut absent = Vec::new();
    let mut sum = R::zero();
    for class in 0..=1u8 {
        let truths: Vec<_> = preds
            .records
            .iter()
            .filter(|r| r.true_label == class)
            .collect();
        if truths.is_empty() {
            absent.push(class);
            continue;
        }
        let hit = truths.iter().filter(|r| r.predicted_label == class).count();
        sum = sum + ratio::<R>(hit, truths.len());
    }
    Ok((sum / R::from_u8(2).expect("2 fits"), absent))
}

pub fn uar<R: Ratio>(preds: &PredictionSet) -> Result<R> {
    uar_with_flags(preds).map(|(v, _)| v)
}

fn nonempty_groups<'a>(
    preds: &'a PredictionSet,
    attribute: &str,
) -> Result<[Vec<&'a PredictionRecord>; 2]> {
    let minority = preds.group(attribute, 0)?;
    let majority = preds.group(attribute, 1)?;
    for (value, g) in [(0u8, &minority), (1u8, &majority)] {
        if g.is_empty() {
            return Err(MetricError::EmptyGroup {
                attribute: attribute.to_string(),
                value,
            });
        }
    }
    Ok([minority, majority])
}

/// `|err(A=1) − err(A=0)|`, where `err` is the group's error rate (the mean
/// absolute error of binary predictions).
pub fn equal_accuracy<R: Ratio>(preds: &PredictionSet, attribute: &str) -> Result<R> {
    let [minority, majority] = nonempty_groups(preds, attribute)?;
    let err = |g: &[&PredictionRecord]| -> R {
        let wrong = g
            .iter()
            .filter(|r| r.true_label != r.predicted_label)
            .count();
        ratio(wrong, g.len())
    };
    Ok(abs_diff(err(&majority), err(&minority)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiUndefined {
    /// Neither group received a positive prediction.
    ZeroOverZero,
    /// Only the minority group received positive predictions.
    DivByZero,
}

impl DiUndefined {
    pub fn as_str(self) -> &'static str {
        match self {
            DiUndefined::ZeroOverZero => "0/0",
            DiUndefined::DivByZero => "div-by-zero",
        }
    }
}

impl fmt::Display for DiUndefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisparateImpact<R> {
    Value(R),
    Undefined(DiUndefined),
}

impl<R: Clone> DisparateImpact<R> {
    pub fn value(&self) -> Option<R> {
        match self {
            DisparateImpact::Value(v) => Some(v.clone()),
            DisparateImpact::Undefined(_) => None,
        }
    }
}

/// `P(ŷ=1 | A=0) / P(ŷ=1 | A=1)`: minority positive rate over majority's.
pub fn disparate_impact<R: Ratio>(
    preds: &PredictionSet,
    attribute: &str,
) -> Result<DisparateImpact<R>> {
    let [minority, majority] = nonempty_groups(preds, attribute)?;
    let pos = |g: &[&PredictionRecord]| g.iter().filter(|r| r.predicted_label == 1).count();
    let (pos_min, pos_maj) = (pos(&minority), pos(&majority));
    Ok(match (pos_min, pos_maj) {
        (0, 0) => DisparateImpact::Undefined(DiUndefined::ZeroOverZero),
        (_, 0) => DisparateImpact::Undefined(DiUndefined::DivByZero),
        _ => {
            let num = ratio::<R>(pos_min, minority.len());
            let den = ratio::<R>(pos_maj, majority.len());
            DisparateImpact::Value(num / den)
        }
    })
}
