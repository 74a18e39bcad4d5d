//! Group balancing of a training split.
//!
//! Rows are bucketed into cells keyed by (attribute values, label). Every
//! non-empty cell is raised to the size of the largest cell, either by
//! copying random rows of the cell (random oversampling) or by MixFeat:
//! per-modality convex combinations of two parents drawn from the same cell,
//!
//! ```text
//! x_k[m] = λ_m · x_i[m] + (1 − λ_m) · x_j[m],   λ_m ~ Beta(α, β)
//! ```
//!
//! with an independent λ for every modality `m` of every synthetic row.
//! Original rows are never touched; synthetic rows are appended after them.

use crate::dataset::{Dataset, DatasetError, SampleMeta};
use crate::scalar::Scalar;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("cell {0} needs synthetic rows but has no source rows")]
    UnreachableCell(Cell),
    #[error("plan does not match the training data: {0}")]
    PlanMismatch(String),
    #[error("invalid MixFeat configuration: {0}")]
    Config(String),
    #[error("training split is empty")]
    EmptyTrain,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T, E = AugmentError> = std::result::Result<T, E>;

/// Balancing bucket: one value per declared attribute plus the label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub attributes: Vec<u8>,
    pub label: u8,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(attributes={:?}, label={})",
            self.attributes, self.label
        )
    }
}

impl Cell {
    pub fn of(meta: &SampleMeta) -> Self {
        Self {
            attributes: meta.attributes.clone(),
            label: meta.label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMethod {
    RandomOversample,
    Mixfeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTarget {
    pub current_count: usize,
    pub target_count: usize,
}

impl CellTarget {
    pub fn deficit(&self) -> usize {
        self.target_count - self.current_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub cells: BTreeMap<Cell, CellTarget>,
    /// Combinations from the full cross product that have no rows.
    pub unreachable: Vec<Cell>,
    pub method: AugmentMethod,
}

impl AugmentationPlan {
    pub fn total_synthetic(&self) -> usize {
        self.cells.values().map(CellTarget::deficit).sum()
    }

    pub fn is_noop(&self) -> bool {
        self.total_synthetic() == 0
    }
}

/// Row indices per cell, in row order.
pub fn cell_rows<T: Scalar>(data: &Dataset<T>) -> BTreeMap<Cell, Vec<usize>> {
    let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for (r, m) in data.meta().iter().enumerate() {
        cells.entry(Cell::of(m)).or_default().push(r);
    }
    cells
}

/// Targets every non-empty cell at the largest cell's size.
pub fn plan_balancing<T: Scalar>(
    train: &Dataset<T>,
    method: AugmentMethod,
) -> Result<AugmentationPlan> {
    if train.n_samples() == 0 {
        return Err(AugmentError::EmptyTrain);
    }
    let rows = cell_rows(train);
    let target = rows.values().map(Vec::len).max().unwrap_or(0);
    let cells = rows
        .iter()
        .map(|(c, r)| {
            (
                c.clone(),
                CellTarget {
                    current_count: r.len(),
                    target_count: target,
                },
            )
        })
        .collect();
    let n_attr = train.attributes().len();
    let mut unreachable = Vec::new();
    for combo in 0..(1usize << n_attr) {
        let attributes: Vec<u8> = (0..n_attr)
            .map(|a| ((combo >> (n_attr - 1 - a)) & 1) as u8)
            .collect();
        for label in 0..=1u8 {
            let cell = Cell {
                attributes: attributes.clone(),
                label,
            };
            if !rows.contains_key(&cell) {
                unreachable.push(cell);
            }
        }
    }
    Ok(AugmentationPlan {
        cells,
        unreachable,
        method,
    })
}

/// A generated row and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRow {
    /// Row index in the augmented dataset.
    pub row: usize,
    /// Source rows in the original training split; equal for copies.
    pub parents: (usize, usize),
    /// Mixing weight per modality (all 1.0 for plain copies).
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Augmented<T> {
    pub dataset: Dataset<T>,
    pub synthetic: Vec<SyntheticRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixFeatConfig {
    pub beta_alpha: f64,
    pub beta_beta: f64,
    pub seed: u64,
}

impl Default for MixFeatConfig {
    fn default() -> Self {
        Self {
            beta_alpha: 1.0,
            beta_beta: 1.0,
            seed: 0,
        }
    }
}

impl MixFeatConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_alpha", self.beta_alpha),
            ("beta_beta", self.beta_beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(AugmentError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Source of per-modality mixing weights.
pub trait LambdaSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng, modality: usize) -> f64;
}

/// λ ~ Beta(α, β).
pub struct BetaLambdas(Beta<f64>);

impl BetaLambdas {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Beta::new(alpha, beta)
            .map(Self)
            .map_err(|e| AugmentError::Config(e.to_string()))
    }
}

impl LambdaSampler for BetaLambdas {
    fn sample(&mut self, rng: &mut ChaCha8Rng, _modality: usize) -> f64 {
        self.0.sample(rng)
    }
}

/// The same λ per modality for every synthetic row.
pub struct FixedLambdas(pub Vec<f64>);

impl LambdaSampler for FixedLambdas {
    fn sample(&mut self, _rng: &mut ChaCha8Rng, modality: usize) -> f64 {
        self.0[modality]
    }
}

/// `λ·a + (1−λ)·b` per coordinate, clamped into `[min(a,b), max(a,b)]` so
/// rounding can never leave the parents' interval.
pub fn mix_rows<T: Scalar>(a: &[T], b: &[T], lambda: f64) -> Vec<T> {
    let l = T::of(lambda);
    let r = T::one() - l;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let v = l * x + r * y;
            v.max(x.min(y)).min(x.max(y))
        })
        .collect()
}

struct IdMint {
    taken: HashSet<String>,
    next: usize,
}

impl IdMint {
    fn new<T: Scalar>(data: &Dataset<T>) -> Self {
        let mut taken: HashSet<String> = data.meta().iter().map(|m| m.sample_id.clone()).collect();
        taken.extend(data.meta().iter().map(|m| m.subject_id.clone()));
        Self { taken, next: 0 }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let id = format!("{prefix}{:05}", self.next);
            self.next += 1;
            if self.taken.insert(id.clone()) {
                return id;
            }
        }
    }
}

fn check_plan<T: Scalar>(
    train: &Dataset<T>,
    plan: &AugmentationPlan,
) -> Result<BTreeMap<Cell, Vec<usize>>> {
    let rows = cell_rows(train);
    for (cell, t) in &plan.cells {
        if t.target_count < t.current_count {
            return Err(AugmentError::PlanMismatch(format!(
                "cell {cell} has target {} below its current count {}",
                t.target_count, t.current_count
            )));
        }
        let have = rows.get(cell).map_or(0, Vec::len);
        if have == 0 && t.deficit() > 0 {
            return Err(AugmentError::UnreachableCell(cell.clone()));
        }
        if have != t.current_count {
            return Err(AugmentError::PlanMismatch(format!(
                "cell {cell}: plan says {} rows, training split has {have}",
                t.current_count
            )));
        }
    }
    Ok(rows)
}

fn cell_rng(seed: u64, cell_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell_index as u64);
    rng
}

fn synthesize<T: Scalar>(
    train: &Dataset<T>,
    plan: &AugmentationPlan,
    seed: u64,
    mut make: impl FnMut(&mut ChaCha8Rng, &[usize]) -> (usize, usize, Vec<f64>),
    fresh_subject: bool,
) -> Result<Augmented<T>> {
    let rows = check_plan(train, plan)?;
    let n_mod = train.modalities().len();
    let total = plan.total_synthetic();
    let mut blocks: Vec<Array2<T>> = train
        .modalities()
        .iter()
        .map(|m| Array2::zeros((total, m.n_features())))
        .collect();
    let mut meta = Vec::with_capacity(total);
    let mut synthetic = Vec::with_capacity(total);
    let mut ids = IdMint::new(train);
    let base = train.n_samples();

    for (cell_index, (cell, target)) in plan.cells.iter().enumerate() {
        if target.deficit() == 0 {
            continue;
        }
        let sources = &rows[cell];
        let mut rng = cell_rng(seed, cell_index);
        for _ in 0..target.deficit() {
            let (i, j, lambdas) = make(&mut rng, sources);
            debug_assert_eq!(lambdas.len(), n_mod);
            let out = meta.len();
            for (m, table) in train.modalities().iter().enumerate() {
                let a = table.samples().row(i).to_vec();
                let b = table.samples().row(j).to_vec();
                let mixed = mix_rows(&a, &b, lambdas[m]);
                for (k, v) in mixed.into_iter().enumerate() {
                    blocks[m][[out, k]] = v;
                }
            }
            let parent = &train.meta()[i];
            let subject_id = if fresh_subject {
                ids.fresh("aug-subject-")
            } else {
                parent.subject_id.clone()
            };
            meta.push(SampleMeta {
                sample_id: ids.fresh("aug-"),
                subject_id,
                label: cell.label,
                attributes: cell.attributes.clone(),
            });
            synthetic.push(SyntheticRow {
                row: base + out,
                parents: (i, j),
                lambdas,
            });
        }
    }
    let dataset = train.append(blocks, meta)?;
    Ok(Augmented { dataset, synthetic })
}

/// Appends uniformly drawn copies of each deficient cell's rows.
///
/// Copies get fresh sample ids and keep the source row's subject id.
pub fn random_oversample<T: Scalar>(
    train: &Dataset<T>,
    plan: &AugmentationPlan,
    seed: u64,
) -> Result<Augmented<T>> {
    let n_mod = train.modalities().len();
    synthesize(
        train,
        plan,
        seed,
        |rng, sources| {
            let i = sources[rng.gen_range(0..sources.len())];
            (i, i, vec![1.0; n_mod])
        },
        false,
    )
}

/// MixFeat with λ ~ Beta(`cfg.beta_alpha`, `cfg.beta_beta`).
pub fn mixfeat<T: Scalar>(
    train: &Dataset<T>,
    plan: &AugmentationPlan,
    cfg: &MixFeatConfig,
) -> Result<Augmented<T>> {
    cfg.validate()?;
    let mut sampler = BetaLambdas::new(cfg.beta_alpha, cfg.beta_beta)?;
    mixfeat_with(train, plan, cfg.seed, &mut sampler)
}

/// MixFeat with a caller-supplied λ source.
///
/// Parents `i ≠ j` are drawn uniformly from the deficient cell; a
/// single-row cell pairs the row with itself.
pub fn mixfeat_with<T: Scalar, S: LambdaSampler>(
    train: &Dataset<T>,
    plan: &AugmentationPlan,
    seed: u64,
    sampler: &mut S,
) -> Result<Augmented<T>> {
    let n_mod = train.modalities().len();
    synthesize(
        train,
        plan,
        seed,
        |rng, sources| {
            let (i, j) = if sources.len() == 1 {
                (sources[0], sources[0])
            } else {
                let a = rng.gen_range(0..sources.len());
                let mut b = rng.gen_range(0..sources.len() - 1);
                if b >= a {
                    b += 1;
                }
                (sources[a], sources[b])
            };
            let lambdas = (0..n_mod).map(|m| sampler.sample(rng, m)).collect();
            (i, j, lambdas)
        },
        true,
    )
}

/// Plans and runs `method` in one step.
pub fn balance<T: Scalar>(
    train: &Dataset<T>,
    method: AugmentMethod,
    cfg: &MixFeatConfig,
) -> Result<Augmented<T>> {
    let plan = plan_balancing(train, method)?;
    match method {
        AugmentMethod::RandomOversample => random_oversample(train, &plan, cfg.seed),
        AugmentMethod::Mixfeat => mixfeat(train, &plan, cfg),
    }
}
