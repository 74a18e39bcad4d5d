//! Reading configuration files and applying `--set` / `FAIRMIX_SEED`.

use crate::CliError;
use fairmix::PipelineConfig;
use fairmix::SynthSpec;
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "FAIRMIX_SEED";

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// TOML, or a JSON report whose embedded `config` is reused.
fn parse_document(path: &Path) -> Result<Value, CliError> {
    let text = read(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let mut doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(embedded) = doc.get_mut("config") {
            return Ok(embedded.take());
        }
        Ok(doc)
    } else {
        let table: toml::Table = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(table)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn typed<T: DeserializeOwned>(doc: Value, origin: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let key = e.path().to_string();
        if key == "." {
            CliError::Config(format!("{origin}: {}", e.inner()))
        } else {
            CliError::Config(format!("{origin}: key `{key}`: {}", e.inner()))
        }
    })
}

/// Splits `a.b."c=d"=value` into the key path and raw value.
fn split_assignment(raw: &str) -> Result<(Vec<String>, &str), CliError> {
    let mut segments = Vec::new();
    let mut current = String::new();
    let mut quoted = false;
    for (i, ch) in raw.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '.' if !quoted => segments.push(std::mem::take(&mut current)),
            '=' if !quoted => {
                segments.push(current);
                if segments.iter().any(String::is_empty) {
                    break;
                }
                return Ok((segments, &raw[i + 1..]));
            }
            c => current.push(c),
        }
    }
    Err(CliError::Config(format!(
        "--set expects key=value, got `{raw}`"
    )))
}

/// Value as TOML if it parses, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .and_then(|v| serde_json::to_value(v).ok())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn apply_override(doc: &mut Value, raw: &str) -> Result<(), CliError> {
    let (path, value) = split_assignment(raw)?;
    let mut node = doc;
    for (depth, key) in path.iter().enumerate() {
        let table = match node {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::Config(format!(
                    "--set {raw}: `{}` is not a table",
                    path[..depth].join(".")
                )))
            }
        };
        if depth + 1 == path.len() {
            table.insert(key.clone(), parse_value(value));
            return Ok(());
        }
        node = table
            .entry(key.clone())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Loads, overrides and validates a pipeline configuration. A relative
/// manifest path is resolved against the configuration file's directory.
pub fn load_config(
    path: &Path,
    overrides: &[String],
    env_seed: Option<&str>,
) -> Result<PipelineConfig, CliError> {
    let mut doc = parse_document(path)?;
    for raw in overrides {
        apply_override(&mut doc, raw)?;
    }
    let mut config: PipelineConfig = typed(doc, &path.display().to_string())?;
    if let Some(raw) = env_seed {
        config.seed = raw.trim().parse().map_err(|_| {
            CliError::Config(format!("{SEED_ENV}=`{raw}` is not an unsigned integer"))
        })?;
    }
    if let Some(manifest) = &config.data.manifest {
        if manifest.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.data.manifest = Some(absolute(&base.join(manifest)));
        }
    }
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// A standalone synthetic spec file.
pub fn load_synth_spec(path: &Path) -> Result<SynthSpec, CliError> {
    let doc = parse_document(path)?;
    let spec: SynthSpec = typed(doc, &path.display().to_string())?;
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}
