//! Dataset loading, z-scoring and the co-occurrence / train / test splits.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{center_columns, column_means};
use crate::{Matrix, Vector};

/// Label value for samples without a class.
pub const UNLABELED: i32 = -1;

/// Rows per digit class in the UCI Multiple Features tables.
pub const MFEAT_ROWS_PER_CLASS: usize = 200;
pub const MFEAT_CLASSES: usize = 10;
pub const MFEAT_PIXEL_DIM: usize = 240;
pub const MFEAT_PROFILE_DIM: usize = 216;

/// Columns whose standard deviation falls below this are only centered.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn other(self) -> Domain {
        match self {
            Domain::Source => Domain::Target,
            Domain::Target => Domain::Source,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DomainDataset {
    pub features: Matrix,
    pub labels: Vec<i32>,
    pub domain: Domain,
}

impl DomainDataset {
    pub fn new(features: Matrix, labels: Vec<i32>, domain: Domain) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::arg(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.nrows()
            )));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("features contain non-finite values"));
        }
        Ok(Self {
            features,
            labels,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Reads a whitespace-separated numeric table.
pub fn read_table(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("non-numeric token {tok:?}"),
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("row has {width} columns, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(Matrix::from_row_slice(rows, cols.unwrap_or(0), &data))
}

fn expect_shape(path: &Path, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Load {
            path: path.to_path_buf(),
            message: format!(
                "expected a {rows}x{cols} table, found {}x{}",
                m.nrows(),
                m.ncols()
            ),
        });
    }
    Ok(())
}

/// Loads the UCI Multiple Features profile-correlation (`mfeat-fac`) and
/// pixel-average (`mfeat-pix`) tables.
///
/// Returns `(source, target)` with the 240-D pixel averages as the source
/// domain and the 216-D profile correlations as the target domain. Labels
/// follow the 200-rows-per-digit block ordering of the original files.
pub fn load_multifeatures(
    profile_path: &Path,
    pixel_path: &Path,
) -> Result<(DomainDataset, DomainDataset)> {
    let n = MFEAT_ROWS_PER_CLASS * MFEAT_CLASSES;
    let profile = read_table(profile_path)?;
    expect_shape(profile_path, &profile, n, MFEAT_PROFILE_DIM)?;
    let pixel = read_table(pixel_path)?;
    expect_shape(pixel_path, &pixel, n, MFEAT_PIXEL_DIM)?;
    let labels: Vec<i32> = (0..n)
        .map(|i| (i / MFEAT_ROWS_PER_CLASS) as i32)
        .collect();
    Ok((
        DomainDataset::new(pixel, labels.clone(), Domain::Source)?,
        DomainDataset::new(profile, labels, Domain::Target)?,
    ))
}

/// Generic labeled table: first column an integer label (`-1` for unlabeled),
/// remaining columns features. Fields may be separated by commas or whitespace.
pub fn load_labeled_csv(path: &Path, domain: Domain) -> Result<DomainDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut labels = Vec::new();
    let mut data = Vec::new();
    let mut cols = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty());
        let label_tok = fields.next().ok_or_else(|| parse_err("empty row".into()))?;
        let label: i32 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("label {label_tok:?} is not an integer")))?;
        if label < UNLABELED {
            return Err(parse_err(format!("label {label} below -1")));
        }
        let before = data.len();
        for tok in fields {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| parse_err(format!("non-numeric token {tok:?}")))?,
            );
        }
        let width = data.len() - before;
        if *cols.get_or_insert(width) != width {
            return Err(parse_err(format!(
                "row has {width} features, expected {}",
                cols.unwrap()
            )));
        }
        labels.push(label);
    }
    let cols = cols.unwrap_or(0);
    if labels.is_empty() || cols == 0 {
        return Err(Error::Load {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    DomainDataset::new(
        Matrix::from_row_slice(labels.len(), cols, &data),
        labels,
        domain,
    )
}

/// Per-column affine z-score map fitted on one matrix and reusable on others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vector,
    pub stds: Vector,
    /// Columns with std below [`MIN_STD`]; these are centered but not scaled.
    pub flagged: Vec<usize>,
}

impl Standardizer {
    pub fn fit(features: &Matrix) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::arg("cannot standardize an empty matrix"));
        }
        let means = column_means(features);
        let n = features.nrows() as f64;
        let mut flagged = Vec::new();
        let stds = Vector::from_iterator(
            features.ncols(),
            features.column_iter().enumerate().map(|(j, col)| {
                let var = col.iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd < MIN_STD {
                    flagged.push(j);
                }
                sd
            }),
        );
        Ok(Self {
            means,
            stds,
            flagged,
        })
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.ncols() != self.means.len() {
            return Err(Error::arg(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                features.ncols()
            )));
        }
        let mut out = center_columns(features, &self.means);
        for (j, mut col) in out.column_iter_mut().enumerate() {
            if self.stds[j] >= MIN_STD {
                col /= self.stds[j];
            }
        }
        Ok(out)
    }
}

/// Z-scores every column (population standard deviation).
///
/// Returns the transformed matrix together with the fitted column means and
/// standard deviations; near-constant columns are listed in `flagged`.
pub fn standardize(features: &Matrix) -> Result<(Matrix, Standardizer)> {
    let fit = Standardizer::fit(features)?;
    let out = fit.apply(features)?;
    Ok((out, fit))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub co: f64,
    pub train: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { co: 0.6, train: 0.2 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| r.is_finite() && (0.0..=1.0).contains(&r);
        if !ok(self.co) || !ok(self.train) {
            return Err(Error::arg(format!("split ratios out of range: {self:?}")));
        }
        if self.co + self.train > 1.0 + 1e-12 {
            return Err(Error::arg(format!(
                "co-occurrence ({}) and train ({}) ratios sum above 1",
                self.co, self.train
            )));
        }
        Ok(())
    }
}

/// Population from which co-occurrence pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoScope {
    /// Only the two classes of the binary task.
    #[default]
    Task,
    /// All instances of every class; train/test still come from the task classes.
    Global,
}

#[derive(Debug, Clone)]
pub struct TrialSplit {
    pub class_pair: (i32, i32),
    pub co_source: Matrix,
    pub co_target: Matrix,
    pub train_source: Matrix,
    pub train_labels: Vec<i32>,
    pub test_target: Matrix,
    pub test_labels: Vec<i32>,
    pub seed: u64,
    /// Instance (row) indices into the original datasets.
    pub co_idx: Vec<usize>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

fn gather_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Splits paired source/target datasets for one binary task.
///
/// The task instances are shuffled with a single permutation; the first
/// `co` fraction become unlabeled co-occurrence pairs, the next `train`
/// fraction the labeled source training rows, and the rest the target test
/// rows. The three index sets are disjoint.
pub fn split_trial(
    source: &DomainDataset,
    target: &DomainDataset,
    binary_pair: (i32, i32),
    ratios: SplitRatios,
    seed: u64,
) -> Result<TrialSplit> {
    split_trial_scoped(source, target, binary_pair, ratios, CoScope::Task, seed)
}

pub fn split_trial_scoped(
    source: &DomainDataset,
    target: &DomainDataset,
    binary_pair: (i32, i32),
    ratios: SplitRatios,
    scope: CoScope,
    seed: u64,
) -> Result<TrialSplit> {
    ratios.validate()?;
    if source.len() != target.len() || source.labels != target.labels {
        return Err(Error::arg(
            "source and target must be row-paired with identical labels",
        ));
    }
    let (c0, c1) = binary_pair;
    if c0 == c1 {
        return Err(Error::arg(format!("binary pair repeats class {c0}")));
    }
    for c in [c0, c1] {
        if !source.labels.contains(&c) {
            return Err(Error::arg(format!("class {c} absent from the dataset")));
        }
    }
    let in_task = |i: &usize| source.labels[*i] == c0 || source.labels[*i] == c1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (co_idx, mut rest): (Vec<usize>, Vec<usize>) = match scope {
        CoScope::Task => {
            let mut task: Vec<usize> = (0..source.len()).filter(in_task).collect();
            task.shuffle(&mut rng);
            let n_co = (ratios.co * task.len() as f64).round() as usize;
            let rest = task.split_off(n_co);
            (task, rest)
        }
        CoScope::Global => {
            let mut all: Vec<usize> = (0..source.len()).collect();
            all.shuffle(&mut rng);
            let n_co = (ratios.co * all.len() as f64).round() as usize;
            let rest: Vec<usize> = all.split_off(n_co).into_iter().filter(in_task).collect();
            (all, rest)
        }
    };
    let n_train = match scope {
        CoScope::Task => {
            let total = co_idx.len() + rest.len();
            (ratios.train * total as f64).round() as usize
        }
        CoScope::Global => {
            let frac = if ratios.co < 1.0 {
                ratios.train / (1.0 - ratios.co)
            } else {
                0.0
            };
            (frac * rest.len() as f64).round() as usize
        }
    }
    .min(rest.len());
    let test_idx = rest.split_off(n_train);
    let train_idx = rest;
    if co_idx.len() < 2 || train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::arg(format!(
            "split too small: {} co-occurrence, {} train, {} test rows",
            co_idx.len(),
            train_idx.len(),
            test_idx.len()
        )));
    }

    Ok(TrialSplit {
        class_pair: binary_pair,
        co_source: gather_rows(&source.features, &co_idx),
        co_target: gather_rows(&target.features, &co_idx),
        train_source: gather_rows(&source.features, &train_idx),
        train_labels: train_idx.iter().map(|&i| source.labels[i]).collect(),
        test_target: gather_rows(&target.features, &test_idx),
        test_labels: test_idx.iter().map(|&i| target.labels[i]).collect(),
        seed,
        co_idx,
        train_idx,
        test_idx,
    })
}

impl TrialSplit {
    /// Z-scores each domain with statistics of its co-occurrence rows and
    /// applies the same map to the labeled train and test rows.
    pub fn standardized(&self) -> Result<TrialSplit> {
        let s = Standardizer::fit(&self.co_source)?;
        let t = Standardizer::fit(&self.co_target)?;
        Ok(TrialSplit {
            co_source: s.apply(&self.co_source)?,
            train_source: s.apply(&self.train_source)?,
            co_target: t.apply(&self.co_target)?,
            test_target: t.apply(&self.test_target)?,
            ..self.clone()
        })
    }
}
