//! Deterministic fold assignment: stratified/grouped k-fold and
//! leave-one-subject-out.

use super::{EvalError, Result};
use crate::dataset::SampleMeta;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvMode {
    Kfold,
    Loso,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub mode: CvMode,
    pub k: usize,
    /// Keep each subject's rows in a single fold (k-fold only).
    pub grouped: bool,
    /// Balance label proportions across folds (k-fold only).
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            mode: CvMode::Kfold,
            k: 5,
            grouped: true,
            stratified: true,
        }
    }
}

impl CvConfig {
    pub fn loso() -> Self {
        Self {
            mode: CvMode::Loso,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fold id per row; each class is shuffled and dealt round-robin, the deal
/// continuing across classes so fold sizes differ by at most one.
pub fn stratified_assignment(y: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; y.len()];
    let mut next = 0usize;
    for class in 0..=1u8 {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            out[r] = next % k;
            next += 1;
        }
    }
    out
}

fn folds_from_assignment(assign: &[usize], k: usize) -> Vec<Fold> {
    (0..k)
        .map(|f| Fold {
            index: f,
            train: (0..assign.len()).filter(|&i| assign[i] != f).collect(),
            test: (0..assign.len()).filter(|&i| assign[i] == f).collect(),
        })
        .collect()
}

/// Subjects in order of first appearance with their row indices.
fn subject_groups(meta: &[SampleMeta]) -> Vec<(String, Vec<usize>)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (r, m) in meta.iter().enumerate() {
        let g = *index.entry(m.subject_id.as_str()).or_insert_with(|| {
            groups.push((m.subject_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(r);
    }
    groups
}

fn grouped_assignment(
    meta: &[SampleMeta],
    k: usize,
    stratified: bool,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut groups = subject_groups(meta);
    if groups.len() < k {
        return Err(EvalError::Config(format!(
            "{k}-fold grouped CV needs at least {k} subjects, found {}",
            groups.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.1.len()));

    let class_counts = |rows: &[usize]| {
        let pos = rows.iter().filter(|&&r| meta[r].label == 1).count();
        [(rows.len() - pos) as f64, pos as f64]
    };
    let total = class_counts(&(0..meta.len()).collect::<Vec<_>>());
    let ideal = [total[0] / k as f64, total[1] / k as f64];
    let mut fold_counts = vec![[0.0f64; 2]; k];
    let mut assign = vec![0usize; meta.len()];

    for (g, (_, rows)) in groups.iter().enumerate() {
        let add = class_counts(rows);
        let target = if g < k {
            g
        } else {
            let cost = |f: usize| -> f64 {
                if stratified {
                    (0..2)
                        .map(|c| {
                            let after = fold_counts[f][c] + add[c] - ideal[c];
                            let before = fold_counts[f][c] - ideal[c];
                            after * after - before * before
                        })
                        .sum()
                } else {
                    fold_counts[f][0] + fold_counts[f][1]
                }
            };
            (0..k)
                .min_by(|&a, &b| {
                    cost(a)
                        .partial_cmp(&cost(b))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| {
                            let size = |f: usize| fold_counts[f][0] + fold_counts[f][1];
                            size(a)
                                .partial_cmp(&size(b))
                                .unwrap_or(std::cmp::Ordering::Equal)
                        })
                })
                .expect("k >= 2")
        };
        for &r in rows {
            assign[r] = target;
        }
        fold_counts[target][0] += add[0];
        fold_counts[target][1] += add[1];
    }
    Ok(assign)
}

/// Builds the folds for `cv`; every row lands in exactly one test fold.
pub fn make_folds(meta: &[SampleMeta], cv: &CvConfig, seed: u64) -> Result<Vec<Fold>> {
    if meta.is_empty() {
        return Err(EvalError::Config(
            "cannot build folds for an empty dataset".into(),
        ));
    }
    match cv.mode {
        CvMode::Loso => {
            let groups = subject_groups(meta);
            if groups.len() < 2 {
                return Err(EvalError::Config("LOSO needs at least 2 subjects".into()));
            }
            Ok(groups
                .iter()
                .enumerate()
                .map(|(f, (_, rows))| Fold {
                    index: f,
                    train: (0..meta.len()).filter(|r| !rows.contains(r)).collect(),
                    test: rows.clone(),
                })
                .collect())
        }
        CvMode::Kfold => {
            let k = cv.k;
            if k < 2 {
                return Err(EvalError::Config(format!(
                    "cv.k must be at least 2, got {k}"
                )));
            }
            let assign = if cv.grouped {
                grouped_assignment(meta, k, cv.stratified, seed)?
            } else {
                if meta.len() < k {
                    return Err(EvalError::Config(format!(
                        "{k}-fold CV needs at least {k} samples, found {}",
                        meta.len()
                    )));
                }
                if cv.stratified {
                    let y: Vec<u8> = meta.iter().map(|m| m.label).collect();
                    stratified_assignment(&y, k, seed)
                } else {
                    let mut rows: Vec<usize> = (0..meta.len()).collect();
                    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                    let mut assign = vec![0; meta.len()];
                    for (pos, r) in rows.into_iter().enumerate() {
                        assign[r] = pos % k;
                    }
                    assign
                }
            };
            Ok(folds_from_assignment(&assign, k))
        }
    }
}

/// SHA-256 over each fold's sorted test sample ids.
pub fn fold_fingerprint(meta: &[SampleMeta], folds: &[Fold]) -> String {
    let mut h = Sha256::new();
    for f in folds {
        let mut ids: Vec<&str> = f.test.iter().map(|&r| meta[r].sample_id.as_str()).collect();
        ids.sort_unstable();
        h.update(format!("fold{}:", f.index).as_bytes());
        for id in ids {
            h.update(id.as_bytes());
            h.update(b"\x1f");
        }
        h.update(b"\x1e");
    }
    hex::encode(h.finalize())
}
