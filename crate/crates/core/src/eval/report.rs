use super::metrics::{
    accuracy, disparate_impact, equal_accuracy, f1, uar_with_flags, DisparateImpact, MetricError,
    PredictionSet,
};
use super::Result;
use crate::config::PipelineConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write;

/// A number, or `null` plus the reason it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl MetricValue {
    pub fn defined(v: f64) -> Self {
        Self {
            value: Some(v),
            reason: None,
        }
    }

    pub fn undefined(reason: impl Into<String>) -> Self {
        Self {
            value: None,
            reason: Some(reason.into()),
        }
    }

    fn from_metric(r: std::result::Result<f64, MetricError>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Self::defined(v)),
            Err(MetricError::EmptyGroup { attribute, value }) => {
                Ok(Self::undefined(format!("empty group {attribute}={value}")))
            }
            Err(MetricError::NoPositives) => Ok(Self::undefined("no positives")),
            Err(e) => Err(e.into()),
        }
    }

    /// Markdown cell.
    pub fn render(&self) -> String {
        match (self.value, self.reason.as_deref()) {
            (Some(v), _) => format!("{v:.4}"),
            (None, Some("0/0")) => "undef(0/0)".into(),
            (None, Some("div-by-zero")) => "undef(÷0)".into(),
            (None, Some(r)) => format!("undef({r})"),
            (None, None) => "undef".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverallReport {
    pub accuracy: f64,
    pub f1: MetricValue,
    pub uar: f64,
    /// Classes missing from the truths; each contributed recall 0 to `uar`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub uar_absent_classes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeReport {
    pub attribute: String,
    pub ea: MetricValue,
    pub di: MetricValue,
    /// `[A=0, A=1]`
    pub group_sizes: [usize; 2],
    /// `[A=0, A=1]`; `None` for an empty group.
    pub group_accuracy: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_synthetic: usize,
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub augment: String,
    pub config_fingerprint: String,
    pub fold_fingerprint: String,
    pub n_predictions: usize,
    pub overall: OverallReport,
    pub fairness: Vec<AttributeReport>,
    pub folds: Vec<FoldReport>,
    pub config: PipelineConfig,
    #[serde(skip)]
    pub predictions: PredictionSet,
}

impl EvaluationReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeReport> {
        self.fairness.iter().find(|a| a.attribute == name)
    }
}

/// SHA-256 of the configuration's canonical JSON form.
pub fn config_fingerprint(config: &PipelineConfig) -> String {
    let json = serde_json::to_string(config).expect("configuration serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub(super) fn summarize(
    config: &PipelineConfig,
    preds: PredictionSet,
    folds: Vec<FoldReport>,
    fold_fingerprint: String,
) -> Result<EvaluationReport> {
    let (uar, absent) = uar_with_flags::<f64>(&preds)?;
    let overall = OverallReport {
        accuracy: accuracy::<f64>(&preds)?,
        f1: MetricValue::from_metric(f1::<f64>(&preds))?,
        uar,
        uar_absent_classes: absent,
    };
    let mut fairness = Vec::with_capacity(preds.attributes.len());
    for attribute in &preds.attributes {
        let di = match disparate_impact::<f64>(&preds, attribute) {
            Ok(DisparateImpact::Value(v)) => MetricValue::defined(v),
            Ok(DisparateImpact::Undefined(why)) => MetricValue::undefined(why.as_str()),
            Err(e) => MetricValue::from_metric(Err(e))?,
        };
        let group_accuracy = [0u8, 1].map(|v| {
            let g = preds.group(attribute, v).ok()?;
            (!g.is_empty()).then(|| {
                g.iter()
                    .filter(|r| r.true_label == r.predicted_label)
                    .count() as f64
                    / g.len() as f64
            })
        });
        fairness.push(AttributeReport {
            attribute: attribute.clone(),
            ea: MetricValue::from_metric(equal_accuracy::<f64>(&preds, attribute))?,
            di,
            group_sizes: preds.group_sizes(attribute)?,
            group_accuracy,
        });
    }
    Ok(EvaluationReport {
        seed: config.seed,
        augment: config.augment.method.as_str().to_string(),
        config_fingerprint: config_fingerprint(config),
        fold_fingerprint,
        n_predictions: preds.len(),
        overall,
        fairness,
        folds,
        config: config.clone(),
        predictions: preds,
    })
}

fn metric_rows(report: &EvaluationReport) -> Vec<(String, String)> {
    let mut rows = vec![
        (
            "Overall Acc".to_string(),
            format!("{:.4}", report.overall.accuracy),
        ),
        ("Overall F1".to_string(), report.overall.f1.render()),
        (
            "Overall UAR".to_string(),
            format!("{:.4}", report.overall.uar),
        ),
    ];
    for a in &report.fairness {
        rows.push((format!("EA_{}", a.attribute), a.ea.render()));
    }
    for a in &report.fairness {
        rows.push((format!("DI_{}", a.attribute), a.di.render()));
    }
    rows
}

fn table(headers: &[String], columns: &[Vec<(String, String)>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| Metric | {} |", headers.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(headers.len()));
    if let Some(first) = columns.first() {
        for (i, (name, _)) in first.iter().enumerate() {
            let cells: Vec<&str> = columns.iter().map(|c| c[i].1.as_str()).collect();
            let _ = writeln!(out, "| {name} | {} |", cells.join(" | "));
        }
    }
    out
}

fn provenance(out: &mut String, report: &EvaluationReport) {
    let _ = writeln!(out, "- seed: {}", report.seed);
    let _ = writeln!(out, "- config fingerprint: `{}`", report.config_fingerprint);
    let _ = writeln!(out, "- fold fingerprint: `{}`", report.fold_fingerprint);
}

fn group_sizes(out: &mut String, report: &EvaluationReport) {
    for a in &report.fairness {
        let _ = writeln!(
            out,
            "- {}: {} samples with {0}=0, {} with {0}=1",
            a.attribute, a.group_sizes[0], a.group_sizes[1]
        );
    }
}

/// Single-run table: one value column.
pub fn report_markdown(report: &EvaluationReport) -> String {
    let mut out = format!("# Evaluation ({})\n\n", report.augment);
    out.push_str(&table(&["Value".to_string()], &[metric_rows(report)]));
    out.push('\n');
    group_sizes(&mut out, report);
    let skipped: Vec<_> = report
        .folds
        .iter()
        .filter(|f| f.skipped.is_some())
        .collect();
    for f in skipped {
        let _ = writeln!(
            out,
            "- fold {} skipped: {}",
            f.index,
            f.skipped.as_deref().unwrap_or("")
        );
    }
    provenance(&mut out, report);
    out
}

/// Original / Baseline / Proposed layout, one column per arm.
pub fn compare_markdown(arms: &[&EvaluationReport]) -> String {
    let title = |arm: &str| match arm {
        "none" => "Original".to_string(),
        "random_oversample" => "Baseline (oversample)".to_string(),
        "mixfeat" => "Proposed (MixFeat)".to_string(),
        other => other.to_string(),
    };
    let headers: Vec<String> = arms.iter().map(|r| title(&r.augment)).collect();
    let columns: Vec<_> = arms.iter().map(|r| metric_rows(r)).collect();
    let mut out = "# Comparison\n\n".to_string();
    out.push_str(&table(&headers, &columns));
    out.push('\n');
    if let Some(first) = arms.first() {
        group_sizes(&mut out, first);
        let _ = writeln!(out, "- seed: {}", first.seed);
        let _ = writeln!(out, "- fold fingerprint: `{}`", first.fold_fingerprint);
    }
    out
}

/// Pooled predictions as CSV, one block of rows per labelled run.
pub fn write_predictions_csv<W: Write>(out: W, runs: &[(&str, &PredictionSet)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let attributes = runs
        .first()
        .map(|(_, p)| p.attributes.clone())
        .unwrap_or_default();
    let mut header = vec![
        "arm".to_string(),
        "sample_id".into(),
        "subject_id".into(),
        "fold".into(),
        "true_label".into(),
        "predicted_label".into(),
        "proba_0".into(),
        "proba_1".into(),
    ];
    header.extend(attributes);
    w.write_record(&header)?;
    for (arm, preds) in runs {
        for r in &preds.records {
            let (p0, p1) = match r.proba {
                Some([a, b]) => (a.to_string(), b.to_string()),
                None => (String::new(), String::new()),
            };
            let mut row = vec![
                arm.to_string(),
                r.sample_id.clone(),
                r.subject_id.clone(),
                r.fold.to_string(),
                r.true_label.to_string(),
                r.predicted_label.to_string(),
                p0,
                p1,
            ];
            row.extend(r.attributes.iter().map(u8::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
