//! Experiment runner: configuration, repeated binary-task trials, the
//! baselines, the top-width sweep and report files.
//!
//! Every (class pair, repeat) trial draws its own split from a seed derived
//! from the master seed, so results do not depend on scheduling order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cca::{self, Regularization};
use crate::classify::{self, aggregate_category_accuracy, CategoryTable, TaskAccuracy};
use crate::data::{self, CoScope, Domain, DomainDataset, SplitRatios, TrialSplit};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matcher::{self, Candidate, MatchingPlan, TrainConfig, WidthPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    DtLet,
    NoneDtLet,
    CcaSvm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DtLet => "DT-LET",
            Method::NoneDtLet => "NoneDT-LET",
            Method::CcaSvm => "CCA-SVM",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dtlet" => Ok(Method::DtLet),
            "nonedtlet" | "none" => Ok(Method::NoneDtLet),
            "ccasvm" | "cca" => Ok(Method::CcaSvm),
            _ => Err(Error::arg(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// UCI Multiple Features `mfeat-fac` (target) and `mfeat-pix` (source) tables.
    MultiFeatures { profile: PathBuf, pixel: PathBuf },
    /// Row-paired labeled tables in the generic CSV layout.
    Csv { source: PathBuf, target: PathBuf },
}

impl DatasetSpec {
    pub fn load(&self) -> Result<(DomainDataset, DomainDataset)> {
        let missing = |p: &Path| Error::Load {
            path: p.to_path_buf(),
            message: "file not found".into(),
        };
        match self {
            DatasetSpec::MultiFeatures { profile, pixel } => {
                for p in [profile, pixel] {
                    if !p.exists() {
                        return Err(missing(p));
                    }
                }
                data::load_multifeatures(profile, pixel)
            }
            DatasetSpec::Csv { source, target } => {
                for p in [source, target] {
                    if !p.exists() {
                        return Err(missing(p));
                    }
                }
                Ok((
                    data::load_labeled_csv(source, Domain::Source)?,
                    data::load_labeled_csv(target, Domain::Target)?,
                ))
            }
        }
    }
}

/// Class pairs used by smoke runs: lexicographic pair indices 0, 15 and 30.
pub const SMOKE_PAIR_INDICES: [usize; 3] = [0, 15, 30];
pub const SMOKE_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub method: Method,
    /// Candidate depths for the DT-LET matching search.
    pub source_depths: Vec<usize>,
    pub target_depths: Vec<usize>,
    /// Explicit DT-LET candidates; replaces the depth grid when set.
    pub plans: Option<Vec<MatchingPlan>>,
    pub full_rank_only: bool,
    pub monotone: bool,
    /// Depths of the equal-depth, aligned-layer ablation.
    pub none_depth: usize,
    pub repeats: usize,
    pub ratios: SplitRatios,
    pub co_scope: CoScope,
    /// `None` runs every pair of the labeled classes.
    pub class_pairs: Option<Vec<(i32, i32)>>,
    pub svm_c: f64,
    pub train: TrainConfig,
    pub seed: u64,
    pub jobs: usize,
    pub smoke: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::MultiFeatures {
                profile: PathBuf::from("data/mfeat-fac"),
                pixel: PathBuf::from("data/mfeat-pix"),
            },
            method: Method::DtLet,
            source_depths: vec![3, 4, 5],
            target_depths: vec![3, 4, 5],
            plans: None,
            full_rank_only: true,
            monotone: true,
            none_depth: 4,
            repeats: 10,
            ratios: SplitRatios::default(),
            co_scope: CoScope::Task,
            class_pairs: None,
            svm_c: 1.0,
            train: TrainConfig {
                widths: WidthPlan::multifeatures(),
                ..TrainConfig::default()
            },
            seed: 0,
            jobs: 1,
            smoke: false,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::arg(format!("{key}: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::arg(format!("{key}: cannot parse {value:?}")))
}

fn parse_pair(key: &str, t: &str) -> Result<(i32, i32)> {
    let (a, b) = t
        .split_once('-')
        .ok_or_else(|| Error::arg(format!("{key}: pair {t:?} is not of the form a-b")))?;
    Ok((parse_one(key, a)?, parse_one(key, b)?))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "profile" | "pixel" => {
                let (mut profile, mut pixel) = match &self.dataset {
                    DatasetSpec::MultiFeatures { profile, pixel } => (profile.clone(), pixel.clone()),
                    DatasetSpec::Csv { .. } => (PathBuf::new(), PathBuf::new()),
                };
                if key.trim() == "profile" {
                    profile = value.into();
                } else {
                    pixel = value.into();
                }
                self.dataset = DatasetSpec::MultiFeatures { profile, pixel };
            }
            "source_csv" | "target_csv" => {
                let (mut source, mut target) = match &self.dataset {
                    DatasetSpec::Csv { source, target } => (source.clone(), target.clone()),
                    DatasetSpec::MultiFeatures { .. } => (PathBuf::new(), PathBuf::new()),
                };
                if key.trim() == "source_csv" {
                    source = value.into();
                } else {
                    target = value.into();
                }
                self.dataset = DatasetSpec::Csv { source, target };
            }
            "method" => self.method = value.parse()?,
            "source_depths" => self.source_depths = parse_list(key, value)?,
            "target_depths" => self.target_depths = parse_list(key, value)?,
            "plans" => {
                self.plans = Some(
                    value
                        .split(';')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?,
                )
            }
            "full_rank_only" => self.full_rank_only = parse_one(key, value)?,
            "monotone" => self.monotone = parse_one(key, value)?,
            "none_depth" => self.none_depth = parse_one(key, value)?,
            "repeats" => self.repeats = parse_one(key, value)?,
            "co_ratio" => self.ratios.co = parse_one(key, value)?,
            "train_ratio" => self.ratios.train = parse_one(key, value)?,
            "co_scope" => {
                self.co_scope = match value {
                    "task" => CoScope::Task,
                    "global" => CoScope::Global,
                    _ => return Err(Error::arg(format!("co_scope: {value:?} is not task|global"))),
                }
            }
            "pairs" => {
                self.class_pairs = if value == "all" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|t| !t.is_empty())
                            .map(|t| parse_pair(key, t))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "c" => self.svm_c = parse_one(key, value)?,
            "lambda" => self.train.hyper.lambda = parse_one(key, value)?,
            "lr" => self.train.hyper.lr = parse_one(key, value)?,
            "omega" => self.train.hyper.omega = parse_one(key, value)?,
            "reg" => {
                self.train.reg = if value == "auto" {
                    Regularization::Auto
                } else {
                    Regularization::Fixed(parse_one(key, value)?)
                }
            }
            "k" => self.train.k = if value == "auto" { None } else { Some(parse_one(key, value)?) },
            "top_width" => self.train.widths.top = parse_one(key, value)?,
            "max_iters" => self.train.max_iters = parse_one(key, value)?,
            "tol" => self.train.tol = parse_one(key, value)?,
            "patience" => self.train.patience = parse_one(key, value)?,
            "inner_steps" => self.train.inner_steps = parse_one(key, value)?,
            "fine_tune_epochs" => self.train.fine_tune_epochs = parse_one(key, value)?,
            "centered" => self.train.centered = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "jobs" => self.jobs = parse_one(key, value)?,
            "smoke" => self.smoke = parse_one(key, value)?,
            other => {
                if let Some(depth) = other.strip_prefix("source_widths.") {
                    let widths = parse_list(key, value)?;
                    self.train.widths.source_overrides.insert(parse_one(key, depth)?, widths);
                } else if let Some(depth) = other.strip_prefix("target_widths.") {
                    let widths = parse_list(key, value)?;
                    self.train.widths.target_overrides.insert(parse_one(key, depth)?, widths);
                } else {
                    return Err(Error::arg(format!("unknown config key {other:?}")));
                }
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::arg(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_kv_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::arg("repeats must be at least 1"));
        }
        self.ratios.validate()?;
        for &d in self.source_depths.iter().chain(&self.target_depths).chain([&self.none_depth]) {
            if !(2..=matcher::MAX_DEPTH).contains(&d) {
                return Err(Error::arg(format!("depth {d} outside 2..={}", matcher::MAX_DEPTH)));
            }
        }
        if !(self.svm_c > 0.0) {
            return Err(Error::arg("SVM cost must be positive"));
        }
        self.train.hyper.validate()
    }

    /// DT-LET candidate plans.
    pub fn candidate_plans(&self) -> Result<Vec<MatchingPlan>> {
        match &self.plans {
            Some(p) if !p.is_empty() => Ok(p.clone()),
            _ => matcher::enumerate_depth_grid(
                &self.source_depths,
                &self.target_depths,
                self.full_rank_only,
                self.monotone,
            ),
        }
    }

    fn effective_repeats(&self) -> usize {
        if self.smoke {
            SMOKE_REPEATS
        } else {
            self.repeats
        }
    }

    fn task_pairs(&self, source: &DomainDataset) -> Vec<(i32, i32)> {
        let pairs = match &self.class_pairs {
            Some(p) => p.clone(),
            None => {
                let classes: Vec<i32> = source
                    .labels
                    .iter()
                    .copied()
                    .filter(|&l| l >= 0)
                    .sorted()
                    .dedup()
                    .collect();
                classes.iter().copied().tuple_combinations().collect()
            }
        };
        if self.smoke {
            SMOKE_PAIR_INDICES
                .iter()
                .filter_map(|&i| pairs.get(i).copied())
                .collect()
        } else {
            pairs
        }
    }
}

/// Outcome of one (class pair, repeat) trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub class_pair: (i32, i32),
    pub repeat: usize,
    pub seed: u64,
    pub method: Method,
    pub accuracy: f64,
    pub plan: Option<String>,
    pub objective: Option<f64>,
    pub candidates: Vec<Candidate>,
    /// Test accuracy per candidate, aligned with `candidates`.
    pub candidate_accuracy: Vec<Option<f64>>,
    pub loss_trace: Vec<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTrial {
    pub class_pair: (i32, i32),
    pub repeat: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub method: Method,
    pub master_seed: u64,
    /// Sorted by class pair, then repeat.
    pub records: Vec<TrialRecord>,
    pub excluded: Vec<ExcludedTrial>,
    /// Mean accuracy per class pair over its successful repeats.
    pub task_means: Vec<TaskAccuracy>,
    pub categories: CategoryTable,
    pub wall_ms: u64,
}

impl TrialReport {
    pub fn mean_accuracy(&self) -> f64 {
        self.categories.mean()
    }

    /// Mean final objective per plan display string over all records and
    /// candidates (DT-LET only).
    pub fn mean_candidate_objectives(&self) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for c in self.records.iter().flat_map(|r| &r.candidates) {
            if c.objective.is_finite() {
                let e = sums.entry(c.plan.to_string()).or_default();
                e.0 += c.objective;
                e.1 += 1;
            }
        }
        sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }

    /// Mean test accuracy per candidate plan over all records.
    pub fn mean_candidate_accuracy(&self) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for r in &self.records {
            for (c, a) in r.candidates.iter().zip(&r.candidate_accuracy) {
                if let Some(a) = a {
                    let e = sums.entry(c.plan.to_string()).or_default();
                    e.0 += a;
                    e.1 += 1;
                }
            }
        }
        sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }
}

/// Per-trial seed from the master seed, the class pair and the repeat index.
pub fn trial_seed(master: u64, pair: (i32, i32), repeat: usize) -> u64 {
    derive_seed(master, &[pair.0 as u64, pair.1 as u64, repeat as u64])
}

struct MethodOutcome {
    accuracy: f64,
    plan: Option<String>,
    objective: Option<f64>,
    candidates: Vec<Candidate>,
    candidate_accuracy: Vec<Option<f64>>,
    loss_trace: Vec<f64>,
}

/// CCA fitted directly on the standardized co-occurrence features, then an
/// SVM on projected labeled source rows scored on projected target test rows.
pub fn run_baseline_ccasvm(split: &TrialSplit, config: &ExperimentConfig) -> Result<f64> {
    let k = config
        .train
        .k
        .unwrap_or(config.train.widths.top)
        .min(split.co_source.ncols())
        .min(split.co_target.ncols());
    let proj = cca::fit(&split.co_source, &split.co_target, k, config.train.reg, config.train.centered)?;
    let train = proj.project_source(&split.train_source)?;
    let test = proj.project_target(&split.test_target)?;
    let svm = classify::train_binary(&train, &split.train_labels, split.class_pair, config.svm_c)?;
    Ok(classify::accuracy(&classify::predict_labels(&svm, &test)?, &split.test_labels))
}

fn dtlet_accuracy(model: &matcher::TrainedModel, split: &TrialSplit, c: f64) -> Result<f64> {
    let x_train = model.embed_source(&split.train_source)?;
    let x_test = model.embed_target(&split.test_target)?;
    let svm = classify::train_binary(&x_train, &split.train_labels, split.class_pair, c)?;
    Ok(classify::accuracy(&classify::predict_labels(&svm, &x_test)?, &split.test_labels))
}

/// DT-LET on one split: every plan is trained on the co-occurrence rows,
/// the lowest-objective plan is selected.
#[derive(Debug, Clone)]
pub struct DtLetOutcome {
    pub accuracy: f64,
    pub selection: matcher::Selection,
    /// Test accuracy each candidate would have reached, aligned with
    /// `selection.candidates`; `None` for failed candidates. Diagnostic only.
    pub candidate_accuracy: Vec<Option<f64>>,
}

pub fn run_dtlet(split: &TrialSplit, plans: &[MatchingPlan], config: &ExperimentConfig) -> Result<DtLetOutcome> {
    let mut accs: Vec<Option<f64>> = Vec::with_capacity(plans.len());
    let selection = matcher::select_with(plans, split.seed, |plan, seed| {
        let cfg = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let res = matcher::train_joint(plan, &split.co_source, &split.co_target, &cfg);
        accs.push(match &res {
            Ok(m) if m.objective.is_finite() => dtlet_accuracy(m, split, config.svm_c).ok(),
            _ => None,
        });
        res
    })?;
    let accuracy = dtlet_accuracy(&selection.best, split, config.svm_c)?;
    Ok(DtLetOutcome {
        accuracy,
        selection,
        candidate_accuracy: accs,
    })
}

fn run_method(split: &TrialSplit, config: &ExperimentConfig) -> Result<MethodOutcome> {
    let plans = match config.method {
        Method::CcaSvm => {
            return Ok(MethodOutcome {
                accuracy: run_baseline_ccasvm(split, config)?,
                plan: None,
                objective: None,
                candidates: Vec::new(),
                candidate_accuracy: Vec::new(),
                loss_trace: Vec::new(),
            })
        }
        Method::NoneDtLet => vec![MatchingPlan::aligned_top(config.none_depth, config.none_depth)?],
        Method::DtLet => config.candidate_plans()?,
    };
    let out = run_dtlet(split, &plans, config)?;
    Ok(MethodOutcome {
        accuracy: out.accuracy,
        plan: Some(out.selection.best.plan.to_string()),
        objective: Some(out.selection.best.objective),
        candidates: out.selection.candidates,
        candidate_accuracy: out.candidate_accuracy,
        loss_trace: out.selection.best.loss_trace,
    })
}

/// Splits, standardizes and runs the configured method for one trial.
pub fn run_trial(
    source: &DomainDataset,
    target: &DomainDataset,
    pair: (i32, i32),
    repeat: usize,
    config: &ExperimentConfig,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let seed = trial_seed(config.seed, pair, repeat);
    let split = data::split_trial_scoped(source, target, pair, config.ratios, config.co_scope, seed)?
        .standardized()?;
    let out = run_method(&split, config)?;
    Ok(TrialRecord {
        class_pair: pair,
        repeat,
        seed,
        method: config.method,
        accuracy: out.accuracy,
        plan: out.plan,
        objective: out.objective,
        candidates: out.candidates,
        candidate_accuracy: out.candidate_accuracy,
        loss_trace: out.loss_trace,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// `(class pair, repeat)`.
type TrialKey = ((i32, i32), usize);

/// Runs every (class pair, repeat) trial of the configured method on
/// already loaded datasets.
pub fn run_on(source: &DomainDataset, target: &DomainDataset, config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    let start = Instant::now();
    let pairs = config.task_pairs(source);
    if pairs.is_empty() {
        return Err(Error::arg("no class pairs to run"));
    }
    let jobs: Vec<((i32, i32), usize)> = pairs
        .iter()
        .flat_map(|&p| (0..config.effective_repeats()).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::arg(format!("worker pool: {e}")))?;
    let results: Vec<(TrialKey, Result<TrialRecord>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pair, repeat)| {
                let res = run_trial(source, target, pair, repeat, config);
                if let Ok(r) = &res {
                    log::debug!(
                        "trial {pair:?}#{repeat}: accuracy {:.4}, plan {}",
                        r.accuracy,
                        r.plan.as_deref().unwrap_or("-")
                    );
                }
                ((pair, repeat), res)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for ((pair, repeat), res) in results {
        match res {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("trial {pair:?}#{repeat} excluded: {e}");
                excluded.push(ExcludedTrial {
                    class_pair: pair,
                    repeat,
                    error: e.to_string(),
                });
            }
        }
    }
    records.sort_by_key(|r| (r.class_pair, r.repeat));
    excluded.sort_by_key(|e| (e.class_pair, e.repeat));
    if !excluded.is_empty() {
        log::warn!("{} trial(s) excluded", excluded.len());
    }

    let mut per_task: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
    for r in &records {
        per_task.entry(r.class_pair).or_default().push(r.accuracy);
    }
    let task_means: Vec<TaskAccuracy> = per_task
        .into_iter()
        .map(|(pair, accs)| TaskAccuracy {
            pair,
            accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
        })
        .collect();
    let categories = aggregate_category_accuracy(&task_means);
    Ok(TrialReport {
        method: config.method,
        master_seed: config.seed,
        records,
        excluded,
        task_means,
        categories,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Loads the configured dataset and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    let (source, target) = config.dataset.load()?;
    run_on(&source, &target, config)
}

/// Mean category accuracy per (plan, top width); each plan runs alone as
/// the DT-LET candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub plans: Vec<MatchingPlan>,
    pub widths: Vec<usize>,
    /// `accuracy[plan][width]`.
    pub accuracy: Vec<Vec<f64>>,
    pub excluded: usize,
}

impl SweepTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<28}", "layer matching");
        for w in &self.widths {
            let _ = write!(out, "{w:>9}");
        }
        out.push('\n');
        for (p, row) in self.plans.iter().zip(&self.accuracy) {
            let _ = write!(out, "{:<28}", p.to_string());
            for a in row {
                let _ = write!(out, "{a:>9.4}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn neuron_sweep_on(
    source: &DomainDataset,
    target: &DomainDataset,
    config: &ExperimentConfig,
    widths: &[usize],
) -> Result<SweepTable> {
    if widths.is_empty() {
        return Err(Error::arg("neuron sweep needs at least one width"));
    }
    let plans = config.candidate_plans()?;
    let mut accuracy = Vec::with_capacity(plans.len());
    let mut excluded = 0;
    for plan in &plans {
        let mut row = Vec::with_capacity(widths.len());
        for &w in widths {
            let mut cfg = config.clone();
            cfg.method = Method::DtLet;
            cfg.plans = Some(vec![plan.clone()]);
            cfg.train.widths.top = w;
            let report = run_on(source, target, &cfg)?;
            excluded += report.excluded.len();
            log::info!("sweep {plan} width {w}: {:.4}", report.mean_accuracy());
            row.push(report.mean_accuracy());
        }
        accuracy.push(row);
    }
    Ok(SweepTable {
        plans,
        widths: widths.to_vec(),
        accuracy,
        excluded,
    })
}

/// Reruns the experiment for every top-layer width.
pub fn neuron_sweep(config: &ExperimentConfig, widths: &[usize]) -> Result<SweepTable> {
    config.validate()?;
    let (source, target) = config.dataset.load()?;
    neuron_sweep_on(&source, &target, config, widths)
}

/// Per-trial CSV with a fixed column order; contains no timing so that
/// identical configurations give identical bytes.
pub fn render_report_csv(report: &TrialReport) -> String {
    let mut out = String::from("class_a,class_b,repeat,seed,method,plan,objective,accuracy\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.class_pair.0,
            r.class_pair.1,
            r.repeat,
            r.seed,
            r.method.name(),
            r.plan.as_deref().unwrap_or(""),
            r.objective.map(|o| o.to_string()).unwrap_or_default(),
            r.accuracy
        );
    }
    out
}

/// Per-category accuracy table in the numeral-by-method layout.
pub fn render_summary(report: &TrialReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10}{:>12}", "numeral", report.method.name());
    for (class, acc) in &report.categories.per_class {
        let _ = writeln!(out, "{class:<10}{acc:>12.3}");
    }
    let _ = writeln!(out, "{:<10}{:>12.3}", "average", report.mean_accuracy());
    let _ = writeln!(out);
    let _ = writeln!(out, "trials: {}  excluded: {}", report.records.len(), report.excluded.len());
    if report.categories.incomplete {
        let _ = writeln!(out, "warning: incomplete class pairing");
    }
    let objectives = report.mean_candidate_objectives();
    let accuracies = report.mean_candidate_accuracy();
    if !objectives.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<30}{:>10}{:>10}", "candidate plan", "objective", "accuracy");
        for (plan, obj) in objectives.iter().sorted_by(|a, b| a.1.total_cmp(b.1)) {
            let acc = accuracies.get(plan).copied().unwrap_or(f64::NAN);
            let _ = writeln!(out, "  {plan:<28}{obj:>10.4}{acc:>10.4}");
        }
    }
    out
}

/// Writes `report.csv`, `summary.txt` and `trials.jsonl` into `dir`.
pub fn write_outputs(report: &TrialReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), render_report_csv(report))?;
    fs::write(dir.join("summary.txt"), render_summary(report))?;
    let mut jsonl = fs::File::create(dir.join("trials.jsonl"))?;
    for r in &report.records {
        let line = serde_json::to_string(r).map_err(|e| Error::arg(e.to_string()))?;
        writeln!(jsonl, "{line}")?;
    }
    for e in &report.excluded {
        let line = serde_json::to_string(e).map_err(|e| Error::arg(e.to_string()))?;
        writeln!(jsonl, "{line}")?;
    }
    Ok(())
}
