//! Manifest + CSV layout.
//!
//! A manifest is a plain `key=value` file:
//!
//! ```text
//! metadata=meta.csv
//! modality.face=face.csv
//! levels.face=face_levels.csv
//! panas_threshold=33.3
//! ```
//!
//! Relative paths resolve against the manifest's directory. Modalities keep
//! the order in which they appear.

use super::{
    binarize_panas, ColumnMeta, Dataset, DatasetError, Level, ModalityTable, Result, SampleMeta,
};
use crate::scalar::Scalar;
use ndarray::Array2;
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

pub const DEFAULT_PANAS_THRESHOLD: f64 = 33.3;

/// Parsed manifest with paths already resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub metadata: PathBuf,
    pub modalities: Vec<(String, PathBuf)>,
    pub levels: HashMap<String, PathBuf>,
    pub panas_threshold: f64,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut metadata = None;
        let mut modalities: Vec<(String, PathBuf)> = Vec::new();
        let mut levels = HashMap::new();
        let mut panas_threshold = DEFAULT_PANAS_THRESHOLD;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DatasetError::Manifest(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let resolve = |v: &str| base.join(v);
            if key == "metadata" {
                metadata = Some(resolve(value));
            } else if key == "panas_threshold" {
                panas_threshold = value.parse::<f64>().map_err(|_| {
                    DatasetError::Manifest(format!(
                        "line {}: panas_threshold `{value}` is not a number",
                        lineno + 1
                    ))
                })?;
                if !panas_threshold.is_finite() {
                    return Err(DatasetError::Manifest(
                        "panas_threshold must be finite".into(),
                    ));
                }
            } else if let Some(name) = key.strip_prefix("modality.") {
                if modalities.iter().any(|(n, _)| n == name) {
                    return Err(DatasetError::Manifest(format!(
                        "modality `{name}` listed twice"
                    )));
                }
                modalities.push((name.to_string(), resolve(value)));
            } else if let Some(name) = key.strip_prefix("levels.") {
                levels.insert(name.to_string(), resolve(value));
            } else {
                return Err(DatasetError::Manifest(format!(
                    "line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
        }
        let metadata =
            metadata.ok_or_else(|| DatasetError::Manifest("missing `metadata` entry".into()))?;
        if modalities.is_empty() {
            return Err(DatasetError::Manifest(
                "no `modality.<name>` entries".into(),
            ));
        }
        for name in levels.keys() {
            if !modalities.iter().any(|(n, _)| n == name) {
                return Err(DatasetError::Manifest(format!(
                    "levels given for undeclared modality `{name}`"
                )));
            }
        }
        Ok(Self {
            metadata,
            modalities,
            levels,
            panas_threshold,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn parse_cell<T: Scalar>(cell: &str, file: &Path, row: usize, column: &str) -> Result<T> {
    if is_missing(cell) {
        return Ok(T::nan());
    }
    let parse_error = || DatasetError::Parse {
        file: file.display().to_string(),
        row,
        column: column.to_string(),
        value: cell.to_string(),
    };
    let v: T = cell.parse().map_err(|_| parse_error())?;
    if !v.is_finite() {
        return Err(parse_error());
    }
    Ok(v)
}

fn parse_binary(cell: &str, file: &Path, row: usize, column: &str) -> Result<u8> {
    match cell {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(DatasetError::Schema(format!(
            "{}: row {row}, column `{column}`: expected 0 or 1, got `{cell}`",
            file.display()
        ))),
    }
}

struct Metadata {
    rows: Vec<SampleMeta>,
    attributes: Vec<String>,
}

fn read_metadata(path: &Path, threshold: f64) -> Result<Metadata> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[0] != "sample_id" || header[1] != "subject_id" {
        return Err(DatasetError::Schema(format!(
            "{}: header must start with sample_id, subject_id, then pa_score or label",
            path.display()
        )));
    }
    let from_score = match header[2].as_str() {
        "pa_score" => true,
        "label" => false,
        other => {
            return Err(DatasetError::Schema(format!(
                "{}: third column must be `pa_score` or `label`, got `{other}`",
                path.display()
            )))
        }
    };
    let attributes: Vec<String> = header[3..].to_vec();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = i + 2;
        if rec.len() != header.len() {
            return Err(DatasetError::Schema(format!(
                "{}: row {row} has {} fields, header has {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        let sample_id = rec[0].to_string();
        if !seen.insert(sample_id.clone()) {
            return Err(DatasetError::Schema(format!(
                "{}: duplicate sample_id `{sample_id}`",
                path.display()
            )));
        }
        let label = if from_score {
            let score: f64 = parse_cell(&rec[2], path, row, "pa_score")?;
            if score.is_nan() {
                return Err(DatasetError::Schema(format!(
                    "{}: row {row}: pa_score may not be missing",
                    path.display()
                )));
            }
            binarize_panas(score, threshold)?
        } else {
            parse_binary(&rec[2], path, row, "label")?
        };
        let attrs = attributes
            .iter()
            .enumerate()
            .map(|(a, name)| parse_binary(&rec[3 + a], path, row, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push(SampleMeta {
            sample_id,
            subject_id: rec[1].to_string(),
            label,
            attributes: attrs,
        });
    }
    Ok(Metadata { rows, attributes })
}

fn read_levels(path: &Path) -> Result<HashMap<String, Level>> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.len() != 2 || &header[0] != "feature_name" || &header[1] != "level" {
        return Err(DatasetError::Schema(format!(
            "{}: header must be `feature_name,level`",
            path.display()
        )));
    }
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let level: Level = rec[1].parse()?;
        if out.insert(rec[0].to_string(), level).is_some() {
            return Err(DatasetError::Schema(format!(
                "{}: feature `{}` listed twice",
                path.display(),
                &rec[0]
            )));
        }
    }
    Ok(out)
}

fn read_modality<T: Scalar>(
    name: &str,
    path: &Path,
    levels: Option<&HashMap<String, Level>>,
    order: &[SampleMeta],
) -> Result<ModalityTable<T>> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.is_empty() || &header[0] != "sample_id" {
        return Err(DatasetError::Schema(format!(
            "{}: first column must be `sample_id`",
            path.display()
        )));
    }
    let features: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let columns = features
        .iter()
        .map(|f| {
            let level = match levels {
                Some(map) => *map.get(f).ok_or_else(|| {
                    DatasetError::Schema(format!(
                        "modality `{name}`: feature `{f}` has no level tag"
                    ))
                })?,
                None => Level::Low,
            };
            Ok(ColumnMeta::new(f.clone(), level))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_id: HashMap<String, Vec<T>> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = i + 2;
        if rec.len() != header.len() {
            return Err(DatasetError::Schema(format!(
                "{}: row {row} has {} fields, header has {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        let values = features
            .iter()
            .enumerate()
            .map(|(j, f)| parse_cell::<T>(&rec[j + 1], path, row, f))
            .collect::<Result<Vec<_>>>()?;
        if by_id.insert(rec[0].to_string(), values).is_some() {
            return Err(DatasetError::Schema(format!(
                "{}: duplicate sample_id `{}`",
                path.display(),
                &rec[0]
            )));
        }
    }
    if by_id.len() > order.len() {
        log::warn!(
            "modality `{name}`: {} rows have no metadata and are ignored",
            by_id.len() - order.len()
        );
    }
    let mut samples = Array2::<T>::zeros((order.len(), features.len()));
    for (r, m) in order.iter().enumerate() {
        let values = by_id
            .get(&m.sample_id)
            .ok_or_else(|| DatasetError::Alignment {
                modality: name.to_string(),
                sample_id: m.sample_id.clone(),
            })?;
        for (j, &v) in values.iter().enumerate() {
            samples[[r, j]] = v;
        }
    }
    ModalityTable::new(name, samples, columns)
}

/// Loads and validates a dataset described by a manifest file.
///
/// Rows follow the metadata file's order. A warning is logged for every
/// label or attribute value that never occurs.
pub fn load_dataset<T: Scalar>(manifest_path: &Path) -> Result<Dataset<T>> {
    let manifest = Manifest::read(manifest_path)?;
    let meta = read_metadata(&manifest.metadata, manifest.panas_threshold)?;
    let mut tables = Vec::with_capacity(manifest.modalities.len());
    for (name, path) in &manifest.modalities {
        let levels = match manifest.levels.get(name) {
            Some(p) => Some(read_levels(p)?),
            None => None,
        };
        tables.push(read_modality::<T>(name, path, levels.as_ref(), &meta.rows)?);
    }
    let dataset = Dataset::new(tables, meta.rows, meta.attributes)?;
    for group in dataset.degenerate_groups() {
        log::warn!("degenerate group in {}: {group}", manifest_path.display());
    }
    Ok(dataset)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_value<T: Scalar>(v: T) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|source| DatasetError::Csv {
            path: PathBuf::from("<memory>"),
            source,
        })?;
    }
    w.into_inner()
        .map_err(|e| DatasetError::Schema(format!("csv flush: {e}")))
}

/// Writes `dataset` as manifest + CSVs into `dir`; returns the manifest path.
///
/// Labels are written directly (`label` column), so reloading does not
/// depend on the PANAS threshold.
pub fn write_dataset<T: Scalar>(dataset: &Dataset<T>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut manifest = String::from("metadata=metadata.csv\n");

    let mut rows = Vec::with_capacity(dataset.n_samples() + 1);
    let mut header = vec!["sample_id".to_string(), "subject_id".into(), "label".into()];
    header.extend(dataset.attributes().iter().cloned());
    rows.push(header);
    for m in dataset.meta() {
        let mut row = vec![
            m.sample_id.clone(),
            m.subject_id.clone(),
            m.label.to_string(),
        ];
        row.extend(m.attributes.iter().map(u8::to_string));
        rows.push(row);
    }
    write_file(&dir.join("metadata.csv"), &csv_bytes(rows)?)?;

    for table in dataset.modalities() {
        let name = table.name();
        let data_file = format!("{name}.csv");
        let levels_file = format!("{name}_levels.csv");
        let mut rows = Vec::with_capacity(table.n_samples() + 1);
        let mut header = vec!["sample_id".to_string()];
        header.extend(table.feature_names().map(str::to_string));
        rows.push(header);
        for (m, values) in dataset.meta().iter().zip(table.samples().rows()) {
            let mut row = vec![m.sample_id.clone()];
            row.extend(values.iter().map(|&v| format_value(v)));
            rows.push(row);
        }
        write_file(&dir.join(&data_file), &csv_bytes(rows)?)?;

        let mut rows = vec![vec!["feature_name".to_string(), "level".into()]];
        rows.extend(
            table
                .columns()
                .iter()
                .map(|c| vec![c.name.clone(), c.level.to_string()]),
        );
        write_file(&dir.join(&levels_file), &csv_bytes(rows)?)?;
        manifest.push_str(&format!(
            "modality.{name}={data_file}\nlevels.{name}={levels_file}\n"
        ));
    }
    let path = dir.join("manifest.txt");
    write_file(&path, manifest.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_keys_in_order() {
        let m = Manifest::parse(
            "# comment\nmetadata=m.csv\nmodality.face=f.csv\nmodality.audio=a.csv\nlevels.face=fl.csv\npanas_threshold=30\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(m.metadata, PathBuf::from("/data/m.csv"));
        assert_eq!(m.modalities[0].0, "face");
        assert_eq!(m.modalities[1].0, "audio");
        assert_eq!(m.panas_threshold, 30.0);
    }

    #[test]
    fn manifest_defaults_threshold() {
        let m = Manifest::parse("metadata=m.csv\nmodality.x=x.csv", Path::new(".")).unwrap();
        assert_eq!(m.panas_threshold, 33.3);
    }

    #[test]
    fn manifest_rejects_unknown_key() {
        let err = Manifest::parse("metadata=m\nmodality.x=x\nfoo=bar", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn missing_cells() {
        assert!(is_missing(""));
        assert!(is_missing("NA"));
        assert!(is_missing("nan"));
        let v: f64 = parse_cell("", Path::new("f"), 2, "c").unwrap();
        assert!(v.is_nan());
        assert!(parse_cell::<f64>("inf", Path::new("f"), 2, "c").is_err());
        assert!(parse_cell::<f64>("abc", Path::new("f"), 2, "c").is_err());
    }
}
