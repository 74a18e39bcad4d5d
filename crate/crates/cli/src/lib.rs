//! Commands behind the `fairmix` binary, callable in-process for tests.

mod load;

pub use load::{load_config, load_synth_spec, SEED_ENV};

use fairmix::config::{AugmentChoice, DataError};
use fairmix::dataset::write_dataset;
use fairmix::eval::{compare_markdown, report_markdown, write_predictions_csv, EvalError};
use fairmix::synthgen::generate;
use fairmix::{run_experiment, Dataset64, EvaluationReport, PipelineConfig, Scalar};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Experiment(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(m) => CliError::Config(m),
            EvalError::Dataset(d) => CliError::Data(d.to_string()),
            other => CliError::Experiment(other.to_string()),
        }
    }
}

/// Element type used for feature matrices and models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

fn run_with<T: Scalar>(config: &PipelineConfig) -> Result<EvaluationReport, CliError> {
    let data = config.load_data::<T>()?;
    for g in data.degenerate_groups() {
        log::warn!("{g}; metrics needing that group will be undefined");
    }
    Ok(run_experiment(config, &data)?)
}

pub fn run(config: &PipelineConfig, precision: Precision) -> Result<EvaluationReport, CliError> {
    match precision {
        Precision::F32 => run_with::<f32>(config),
        Precision::F64 => run_with::<f64>(config),
    }
}

/// Writes via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut file = std::fs::File::create(&tmp).map_err(fail)?;
    file.write_all(bytes).map_err(fail)?;
    file.sync_all().map_err(fail)?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(fail)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn predictions_csv(runs: &[(&str, &EvaluationReport)]) -> Result<Vec<u8>, CliError> {
    let sets: Vec<_> = runs.iter().map(|(arm, r)| (*arm, &r.predictions)).collect();
    let mut buf = Vec::new();
    write_predictions_csv(&mut buf, &sets).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(buf)
}

/// Paths written by a command.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub report_json: PathBuf,
    pub report_md: PathBuf,
    pub predictions_csv: PathBuf,
}

impl Outputs {
    fn under(dir: &Path) -> Self {
        Self {
            report_json: dir.join("report.json"),
            report_md: dir.join("report.md"),
            predictions_csv: dir.join("predictions.csv"),
        }
    }
}

/// One cross-validated run; writes `report.json`, `report.md` and
/// `predictions.csv` under the configured output directory.
pub fn cmd_audit(
    config: &PipelineConfig,
    precision: Precision,
) -> Result<(EvaluationReport, Outputs), CliError> {
    let report = run(config, precision)?;
    let out = Outputs::under(&config.output_dir);
    write_atomic(&out.report_json, &json(&report)?)?;
    write_atomic(&out.report_md, report_markdown(&report).as_bytes())?;
    write_atomic(
        &out.predictions_csv,
        &predictions_csv(&[(report.augment.as_str(), &report)])?,
    )?;
    Ok((report, out))
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub fold_fingerprint: String,
    pub shared_folds: bool,
    pub config: PipelineConfig,
    pub arms: Vec<EvaluationReport>,
}

/// The pipeline under no augmentation, random oversampling and MixFeat,
/// sharing folds and seeds. Arms run on separate threads when `parallel`.
pub fn cmd_compare(
    config: &PipelineConfig,
    precision: Precision,
    parallel: bool,
) -> Result<(ComparisonReport, Outputs), CliError> {
    let configs: Vec<PipelineConfig> = AugmentChoice::ALL
        .iter()
        .map(|&a| config.with_augment(a))
        .collect();
    let results: Vec<Result<EvaluationReport, CliError>> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = configs
                .iter()
                .map(|c| s.spawn(move || run(c, precision)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(CliError::Experiment("arm panicked".into())))
                })
                .collect()
        })
    } else {
        configs.iter().map(|c| run(c, precision)).collect()
    };
    let arms = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let fold_fingerprint = arms[0].fold_fingerprint.clone();
    let shared_folds = arms.iter().all(|a| a.fold_fingerprint == fold_fingerprint);
    if !shared_folds {
        return Err(CliError::Experiment(
            "arms ended up with different folds".into(),
        ));
    }
    let report = ComparisonReport {
        seed: config.seed,
        fold_fingerprint,
        shared_folds,
        config: config.clone(),
        arms,
    };
    let out = Outputs::under(&config.output_dir);
    let refs: Vec<&EvaluationReport> = report.arms.iter().collect();
    let runs: Vec<(&str, &EvaluationReport)> = report
        .arms
        .iter()
        .map(|a| (a.augment.as_str(), a))
        .collect();
    write_atomic(&out.report_json, &json(&report)?)?;
    write_atomic(&out.report_md, compare_markdown(&refs).as_bytes())?;
    write_atomic(&out.predictions_csv, &predictions_csv(&runs)?)?;
    Ok((report, out))
}

/// Materializes a synthetic spec as manifest + CSVs; returns the manifest.
pub fn cmd_synth(spec_path: &Path, out_dir: &Path) -> Result<PathBuf, CliError> {
    let spec = load_synth_spec(spec_path)?;
    let data: Dataset64 = generate(&spec).map_err(|e| CliError::Data(e.to_string()))?;
    write_dataset(&data, out_dir).map_err(|e| CliError::Output(e.to_string()))
}

/// Config lint: parses, validates, and checks that the data source loads
/// and names the configured modalities.
pub fn cmd_validate(config: &PipelineConfig) -> Result<String, CliError> {
    let data: Dataset64 = config.load_data()?;
    if let Some(names) = &config.features.modalities {
        for n in names {
            if data.modality(n).is_none() {
                return Err(CliError::Config(format!(
                    "features.modalities names `{n}`, available: {}",
                    data.modality_names().join(", ")
                )));
            }
        }
    }
    let mut notes = format!(
        "ok: {} samples, modalities [{}], attributes [{}]",
        data.n_samples(),
        data.modality_names().join(", "),
        data.attributes().join(", ")
    );
    for g in data.degenerate_groups() {
        notes.push_str(&format!("\nwarning: {g}"));
    }
    Ok(notes)
}
