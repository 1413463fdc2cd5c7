//! Linear soft-margin SVM on the shared subspace and accuracy bookkeeping.
//!
//! Training runs dual coordinate descent on the L1-loss (hinge) SVM with the
//! bias handled as an extra constant feature, so the dual is a box-constrained
//! QP `min ½αᵀQα − 1ᵀα, 0 ≤ α ≤ C` with `Q_ij = y_i y_j (x_i·x_j + 1)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Relative duality gap at which training stops.
pub const GAP_TOLERANCE: f64 = 1e-4;
const MAX_EPOCHS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vector,
    pub bias: f64,
    pub c: f64,
    /// Class mapped to −1 and class mapped to +1.
    pub class_pair: (i32, i32),
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub epochs: usize,
}

fn check_rows(x: &Matrix, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::arg(format!("{} rows for {n} labels", x.nrows())));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::arg("SVM input contains non-finite values"));
    }
    Ok(())
}

/// Trains on `±1` targets; the returned model's class pair is `(−1, 1)`.
pub fn train_svm(x: &Matrix, y: &[f64], c: f64) -> Result<SvmModel> {
    check_rows(x, y.len())?;
    if !(c > 0.0) {
        return Err(Error::arg(format!("SVM cost must be positive, got {c}")));
    }
    if let Some(bad) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::arg(format!("SVM targets must be ±1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::arg("SVM training needs both classes"));
    }

    let (n, d) = x.shape();
    let rows: Vec<Vector> = (0..n).map(|i| x.row(i).transpose()).collect();
    let diag: Vec<f64> = rows.iter().map(|r| r.norm_squared() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = Vector::zeros(d);
    let mut wb = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut gap = f64::INFINITY;
    let mut dual = 0.0;
    let mut epochs = 0;
    let mut converged = false;
    while epochs < MAX_EPOCHS {
        epochs += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let g = y[i] * (w.dot(&rows[i]) + wb) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                w.axpy(step, &rows[i], 1.0);
                wb += step;
            }
        }
        let norm2 = w.norm_squared() + wb * wb;
        let hinge: f64 = rows
            .iter()
            .zip(y)
            .map(|(r, yi)| (1.0 - yi * (w.dot(r) + wb)).max(0.0))
            .sum();
        let primal = 0.5 * norm2 + c * hinge;
        dual = alpha.iter().sum::<f64>() - 0.5 * norm2;
        gap = primal - dual;
        if gap <= GAP_TOLERANCE * primal.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric(
            None,
            format!("SVM did not converge in {epochs} epochs (duality gap {gap:.3e})"),
        ));
    }
    Ok(SvmModel {
        weights: w,
        bias: wb,
        c,
        class_pair: (-1, 1),
        dual_objective: dual,
        duality_gap: gap,
        epochs,
    })
}

/// Trains on class labels: `pair.0` maps to −1, `pair.1` to +1.
pub fn train_binary(x: &Matrix, labels: &[i32], pair: (i32, i32), c: f64) -> Result<SvmModel> {
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| {
            if l == pair.0 {
                Ok(-1.0)
            } else if l == pair.1 {
                Ok(1.0)
            } else {
                Err(Error::arg(format!("label {l} outside class pair {pair:?}")))
            }
        })
        .collect::<Result<_>>()?;
    let mut model = train_svm(x, &y, c)?;
    model.class_pair = pair;
    Ok(model)
}

/// `sign(x·w + b)` with zero mapped to +1.
pub fn predict(model: &SvmModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::arg(format!(
            "model has {} weights, input has {} columns",
            model.weights.len(),
            x.ncols()
        )));
    }
    let scores = x * &model.weights;
    Ok(scores
        .iter()
        .map(|s| if s + model.bias >= 0.0 { 1.0 } else { -1.0 })
        .collect())
}

pub fn predict_labels(model: &SvmModel, x: &Matrix) -> Result<Vec<i32>> {
    Ok(predict(model, x)?
        .into_iter()
        .map(|s| if s > 0.0 { model.class_pair.1 } else { model.class_pair.0 })
        .collect())
}

pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskAccuracy {
    pub pair: (i32, i32),
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTable {
    /// Mean accuracy over every task containing the class.
    pub per_class: BTreeMap<i32, f64>,
    pub task_counts: BTreeMap<i32, usize>,
    /// Some class pair among the observed classes has no task.
    pub incomplete: bool,
}

impl CategoryTable {
    pub fn mean(&self) -> f64 {
        if self.per_class.is_empty() {
            return 0.0;
        }
        self.per_class.values().sum::<f64>() / self.per_class.len() as f64
    }
}

/// Per-class mean accuracy over the binary tasks that include each class.
pub fn aggregate_category_accuracy(tasks: &[TaskAccuracy]) -> CategoryTable {
    let mut sums: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    let mut seen_pairs = BTreeSet::new();
    for t in tasks {
        let (a, b) = t.pair;
        seen_pairs.insert((a.min(b), a.max(b)));
        for c in [a, b] {
            let e = sums.entry(c).or_insert((0.0, 0));
            e.0 += t.accuracy;
            e.1 += 1;
        }
    }
    let classes: Vec<i32> = sums.keys().copied().collect();
    let expected = classes.len() * classes.len().saturating_sub(1) / 2;
    let incomplete = seen_pairs.len() < expected;
    if incomplete {
        log::warn!(
            "incomplete pairing: {} of {expected} class pairs present; averaging available tasks",
            seen_pairs.len()
        );
    }
    CategoryTable {
        per_class: sums.iter().map(|(&c, &(s, n))| (c, s / n as f64)).collect(),
        task_counts: sums.iter().map(|(&c, &(_, n))| (c, n)).collect(),
        incomplete,
    }
}
