//! Layer matchings between the two autoencoders, the alternating
//! CCA / gradient training of one matching, and selection of the matching
//! with the lowest joint objective.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::cca::{self, CcaProjection, Regularization};
use crate::data::Domain;
use crate::error::{Error, Result};
use crate::sae::{
    self, coupled_step_from_acts, forward, init_network, reconstruction_loss, ActivationStack,
    Coupling, NetworkParams, SaeHyperParams,
};
use crate::{derive_seed, Matrix};

/// Deepest network (layer count including the input) a plan may use.
pub const MAX_DEPTH: usize = 5;
/// Correlation sums at or below this make the objective infinite.
pub const MIN_CORRELATION: f64 = 1e-9;

/// A set of coupled `(source layer, target layer)` pairs.
///
/// Layers are 1-based with layer 1 the raw input, so every pair index is at
/// least 2. `a` and `b` are the source and target depths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchingPlan {
    pub a: usize,
    pub b: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl MatchingPlan {
    pub fn new(a: usize, b: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let plan = Self { a, b, pairs };
        plan.validate(false)?;
        Ok(plan)
    }

    /// Plan coupling the last `min(a, b) - 1` layers of both networks in order.
    pub fn aligned_top(a: usize, b: usize) -> Result<Self> {
        let m = a.min(b) - 1;
        let pairs = (0..m).map(|i| (a - m + 1 + i, b - m + 1 + i)).collect();
        Self::new(a, b, pairs)
    }

    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.m() == self.a.min(self.b) - 1
    }

    pub fn is_monotone(&self) -> bool {
        self.pairs
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
    }

    /// Checks depth bounds, layer ranges, the mandatory top pair and `m`.
    /// With `monotone` the pairs must also increase in both coordinates.
    pub fn validate(&self, monotone: bool) -> Result<()> {
        check_depth(self.a)?;
        check_depth(self.b)?;
        let bad = |msg: String| Err(Error::arg(format!("plan {self}: {msg}")));
        if self.pairs.is_empty() || self.m() > self.a.min(self.b) - 1 {
            return bad(format!("{} pairs outside 1..={}", self.m(), self.a.min(self.b) - 1));
        }
        if let Some(p) = self
            .pairs
            .iter()
            .find(|(i, j)| !(2..=self.a).contains(i) || !(2..=self.b).contains(j))
        {
            return bad(format!("pair {p:?} outside the hidden layers"));
        }
        if !self.pairs.contains(&(self.a, self.b)) {
            return bad("top layers are not matched".into());
        }
        let sources: Vec<usize> = self.pairs.iter().map(|p| p.0).sorted().dedup().collect();
        let targets: Vec<usize> = self.pairs.iter().map(|p| p.1).sorted().dedup().collect();
        if sources.len() != self.m() || targets.len() != self.m() {
            return bad("a layer is matched more than once".into());
        }
        if monotone && !self.is_monotone() {
            return bad("pairs are not order-preserving".into());
        }
        Ok(())
    }

    /// `r<m>_{a,b}`.
    pub fn shape(&self) -> String {
        format!("r{}_{{{},{}}}", self.m(), self.a, self.b)
    }
}

impl fmt::Display for MatchingPlan {
    /// `r3_{5,4}[3-2,4-3,5-4]`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = self.pairs.iter().map(|(i, j)| format!("{i}-{j}")).join(",");
        write!(f, "{}[{pairs}]", self.shape())
    }
}

impl FromStr for MatchingPlan {
    type Err = Error;

    /// Accepts `3-2,4-3,5-4` or the bracketed display form; depths are taken
    /// from the last (top) pair.
    fn from_str(s: &str) -> Result<Self> {
        let body = match (s.find('['), s.rfind(']')) {
            (Some(l), Some(r)) if l < r => &s[l + 1..r],
            _ => s,
        };
        let pairs: Vec<(usize, usize)> = body
            .split(',')
            .map(|p| {
                let (i, j) = p
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| Error::arg(format!("bad pair {p:?} in plan {s:?}")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::arg(format!("bad layer {t:?} in plan {s:?}")))
                };
                Ok((parse(i)?, parse(j)?))
            })
            .collect::<Result<_>>()?;
        let &(a, b) = pairs.iter().max().ok_or_else(|| Error::arg("empty plan"))?;
        MatchingPlan::new(a, b, pairs)
    }
}

fn check_depth(d: usize) -> Result<()> {
    if !(2..=MAX_DEPTH).contains(&d) {
        return Err(Error::arg(format!("depth {d} outside 2..={MAX_DEPTH}")));
    }
    Ok(())
}

/// All order-preserving matchings between an `a`-layer source network and a
/// `b`-layer target network that couple the top layers, sorted
/// lexicographically by their pair lists.
pub fn enumerate_matchings(a: usize, b: usize, full_rank_only: bool) -> Result<Vec<MatchingPlan>> {
    enumerate_matchings_with(a, b, full_rank_only, true)
}

/// As [`enumerate_matchings`]; with `monotone = false` every one-to-one
/// assignment of the chosen lower layers is produced as well.
pub fn enumerate_matchings_with(
    a: usize,
    b: usize,
    full_rank_only: bool,
    monotone: bool,
) -> Result<Vec<MatchingPlan>> {
    check_depth(a)?;
    check_depth(b)?;
    let max_m = a.min(b) - 1;
    let min_m = if full_rank_only { max_m } else { 1 };
    let mut plans = Vec::new();
    for m in min_m..=max_m {
        for src in (2..a).combinations(m - 1) {
            for tgt in (2..b).combinations(m - 1) {
                let orders: Vec<Vec<usize>> = if monotone {
                    vec![tgt.clone()]
                } else {
                    tgt.iter().copied().permutations(m - 1).collect()
                };
                for order in orders {
                    let mut pairs: Vec<(usize, usize)> =
                        src.iter().copied().zip(order).collect();
                    pairs.push((a, b));
                    plans.push(MatchingPlan { a, b, pairs });
                }
            }
        }
    }
    plans.sort_by(|x, y| x.pairs.cmp(&y.pairs));
    plans.dedup();
    Ok(plans)
}

/// Matchings over every depth combination in the given ranges.
pub fn enumerate_depth_grid(
    source_depths: &[usize],
    target_depths: &[usize],
    full_rank_only: bool,
    monotone: bool,
) -> Result<Vec<MatchingPlan>> {
    let mut out = Vec::new();
    for &a in source_depths {
        for &b in target_depths {
            out.extend(enumerate_matchings_with(a, b, full_rank_only, monotone)?);
        }
    }
    Ok(out)
}

/// Stable reordering that tries depth ratios closest to the input-dimension
/// ratio first. Ordering only; nothing is pruned.
pub fn order_by_resolution_hint(plans: &mut [MatchingPlan], dim_source: usize, dim_target: usize) {
    let ratio = dim_source as f64 / dim_target as f64;
    plans.sort_by(|x, y| {
        let dx = (x.a as f64 / x.b as f64 - ratio).abs();
        let dy = (y.a as f64 / y.b as f64 - ratio).abs();
        dx.total_cmp(&dy)
    });
}

/// Linear interpolation of layer widths from `input` down to `top` over `depth` layers.
pub fn interpolate_widths(input: usize, top: usize, depth: usize) -> Vec<usize> {
    if depth < 2 {
        return vec![input];
    }
    (0..depth)
        .map(|i| {
            let t = i as f64 / (depth - 1) as f64;
            (input as f64 + (top as f64 - input as f64) * t).round() as usize
        })
        .collect()
}

/// Layer-width schedules for both domains.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WidthPlan {
    /// Width of the last (top) layer of both networks.
    pub top: usize,
    /// Explicit schedules keyed by depth; they replace the interpolation.
    pub source_overrides: BTreeMap<usize, Vec<usize>>,
    pub target_overrides: BTreeMap<usize, Vec<usize>>,
}

impl WidthPlan {
    pub fn new(top: usize) -> Self {
        Self {
            top,
            ..Default::default()
        }
    }

    /// The 240-170-100-30 / 240-185-130-75-30 source and 216-123-30 /
    /// 216-154-92-30 target schedules used for the digit experiments.
    pub fn multifeatures() -> Self {
        let mut w = Self::new(30);
        w.source_overrides.insert(5, vec![240, 185, 130, 75, 30]);
        w
    }

    /// Widths for a `depth`-layer network over `input` features. An override
    /// applies when its input width matches; its top entry follows `self.top`.
    pub fn widths(&self, domain: Domain, input: usize, depth: usize) -> Vec<usize> {
        let overrides = match domain {
            Domain::Source => &self.source_overrides,
            Domain::Target => &self.target_overrides,
        };
        match overrides.get(&depth) {
            Some(w) if w.first() == Some(&input) && w.len() == depth => {
                let mut w = w.clone();
                *w.last_mut().unwrap() = self.top;
                w
            }
            _ => interpolate_widths(input, self.top, depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hyper: SaeHyperParams,
    pub reg: Regularization,
    /// Canonical pairs kept per matched layer; `None` means the top width.
    pub k: Option<usize>,
    pub centered: bool,
    /// Alternating (CCA, gradient) iterations.
    pub max_iters: usize,
    /// Relative objective change regarded as converged.
    pub tol: f64,
    /// Consecutive converged iterations required to stop early.
    pub patience: usize,
    /// Coupled gradient steps per domain inside one alternating iteration.
    pub inner_steps: usize,
    /// Reconstruction-only epochs after the alternation.
    pub fine_tune_epochs: usize,
    pub widths: WidthPlan,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hyper: SaeHyperParams::default(),
            reg: Regularization::Auto,
            k: None,
            centered: true,
            max_iters: 20,
            tol: 1e-4,
            patience: 3,
            inner_steps: 1,
            fine_tune_epochs: 1,
            widths: WidthPlan::new(30),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub theta_source: NetworkParams,
    pub theta_target: NetworkParams,
    /// One projection per plan pair, in plan order.
    pub projections: Vec<CcaProjection>,
    pub plan: MatchingPlan,
    /// Final joint objective.
    pub objective: f64,
    /// Objective after initialization, after every alternating iteration and
    /// after fine-tuning.
    pub loss_trace: Vec<f64>,
    /// Correlation sum `P` at the same points as `loss_trace`.
    pub correlation_trace: Vec<f64>,
    pub iterations: usize,
    pub lambda: f64,
}

impl TrainedModel {
    /// The projection of the top pair, which defines the shared subspace.
    pub fn top_projection(&self) -> &CcaProjection {
        let idx = self
            .plan
            .pairs
            .iter()
            .position(|&p| p == (self.plan.a, self.plan.b))
            .expect("validated plans contain the top pair");
        &self.projections[idx]
    }

    /// Source rows mapped through the source encoder and the top canonical directions.
    pub fn embed_source(&self, x: &Matrix) -> Result<Matrix> {
        let acts = forward(&self.theta_source, x)?;
        self.top_projection().project_source(acts.top())
    }

    pub fn embed_target(&self, x: &Matrix) -> Result<Matrix> {
        let acts = forward(&self.theta_target, x)?;
        self.top_projection().project_target(acts.top())
    }
}

/// Components of the joint objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub loss_source: f64,
    pub loss_target: f64,
    pub correlation: f64,
}

impl ObjectiveParts {
    /// `(L_S + L_T) / P`, or `+∞` when `P ≤ MIN_CORRELATION`.
    pub fn objective(&self) -> f64 {
        joint_objective(self.loss_source, self.loss_target, self.correlation)
    }
}

pub fn joint_objective(loss_source: f64, loss_target: f64, correlation: f64) -> f64 {
    if !(correlation > MIN_CORRELATION) {
        return f64::INFINITY;
    }
    (loss_source + loss_target) / correlation
}

fn correlation_sum(
    plan: &MatchingPlan,
    acts_s: &ActivationStack,
    acts_t: &ActivationStack,
    projections: &[CcaProjection],
) -> Result<f64> {
    plan.pairs
        .iter()
        .zip(projections)
        .map(|(&(i, j), p)| cca::correlation_score(acts_s.layer(i), acts_t.layer(j), p))
        .sum()
}

/// Reconstruction losses of both networks and the summed correlation score
/// over the plan's pairs, measured on the given co-occurrence rows.
pub fn objective_parts(
    model: &TrainedModel,
    co_source: &Matrix,
    co_target: &Matrix,
) -> Result<ObjectiveParts> {
    if model.projections.len() != model.plan.m() {
        return Err(Error::arg("model projections do not match its plan"));
    }
    let acts_s = forward(&model.theta_source, co_source)?;
    let acts_t = forward(&model.theta_target, co_target)?;
    Ok(ObjectiveParts {
        loss_source: reconstruction_loss(&model.theta_source, co_source, model.lambda)?,
        loss_target: reconstruction_loss(&model.theta_target, co_target, model.lambda)?,
        correlation: correlation_sum(&model.plan, &acts_s, &acts_t, &model.projections)?,
    })
}

/// `(L_S + L_T) / P` for a trained model.
pub fn evaluate_objective(model: &TrainedModel, co_source: &Matrix, co_target: &Matrix) -> Result<f64> {
    Ok(objective_parts(model, co_source, co_target)?.objective())
}

fn fit_projections(
    plan: &MatchingPlan,
    acts_s: &ActivationStack,
    acts_t: &ActivationStack,
    config: &TrainConfig,
) -> Result<Vec<CcaProjection>> {
    plan.pairs
        .iter()
        .map(|&(i, j)| {
            let (hs, ht) = (acts_s.layer(i), acts_t.layer(j));
            let k = config
                .k
                .unwrap_or(config.widths.top)
                .min(hs.ncols())
                .min(ht.ncols());
            cca::fit(hs, ht, k, config.reg, config.centered)
        })
        .collect()
}

struct State {
    theta_s: NetworkParams,
    theta_t: NetworkParams,
    acts_s: ActivationStack,
    acts_t: ActivationStack,
    projections: Vec<CcaProjection>,
}

impl State {
    fn refresh(&mut self, plan: &MatchingPlan, co_s: &Matrix, co_t: &Matrix, config: &TrainConfig) -> Result<()> {
        self.acts_s = forward(&self.theta_s, co_s)?;
        self.acts_t = forward(&self.theta_t, co_t)?;
        self.projections = fit_projections(plan, &self.acts_s, &self.acts_t, config)?;
        Ok(())
    }

    fn parts(&self, plan: &MatchingPlan, co_s: &Matrix, co_t: &Matrix, lambda: f64) -> Result<ObjectiveParts> {
        let recon = |theta: &NetworkParams, acts: &ActivationStack, x: &Matrix| -> f64 {
            let out = theta.decode(acts.top()).pop().unwrap();
            0.5 * (out - x).norm_squared() / x.nrows() as f64
                + 0.5 * lambda * theta.weight_square_sum()
        };
        Ok(ObjectiveParts {
            loss_source: recon(&self.theta_s, &self.acts_s, co_s),
            loss_target: recon(&self.theta_t, &self.acts_t, co_t),
            correlation: correlation_sum(plan, &self.acts_s, &self.acts_t, &self.projections)?,
        })
    }
}

/// Alternating training of both autoencoders under one matching plan.
///
/// Each iteration fits CCA on every matched pair of the current activations,
/// then takes coupled gradient steps on both networks. The loop stops after
/// `max_iters` iterations or once the relative objective change stays below
/// `tol` for `patience` iterations; both networks are then fine-tuned on
/// reconstruction alone and the projections refitted. With `max_iters = 0`
/// the initialized networks and their fitted projections are returned.
pub fn train_joint(
    plan: &MatchingPlan,
    co_source: &Matrix,
    co_target: &Matrix,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    plan.validate(false)?;
    if co_source.nrows() != co_target.nrows() {
        return Err(Error::arg("co-occurrence views must have the same row count"));
    }
    let ws = config.widths.widths(Domain::Source, co_source.ncols(), plan.a);
    let wt = config.widths.widths(Domain::Target, co_target.ncols(), plan.b);
    let theta_s = init_network(&ws, derive_seed(config.seed, &[1]))?;
    let theta_t = init_network(&wt, derive_seed(config.seed, &[2]))?;
    let mut st = State {
        acts_s: forward(&theta_s, co_source)?,
        acts_t: forward(&theta_t, co_target)?,
        theta_s,
        theta_t,
        projections: Vec::new(),
    };
    st.projections = fit_projections(plan, &st.acts_s, &st.acts_t, config)?;
    let lambda = config.hyper.lambda;

    let first = st.parts(plan, co_source, co_target, lambda)?;
    let mut loss_trace = vec![first.objective()];
    let mut correlation_trace = vec![first.correlation];
    let mut iterations = 0;

    if config.max_iters > 0 {
        let mut stable = 0;
        for iter in 1..=config.max_iters {
            let diverged = |trace: &[f64]| Error::Divergence {
                iteration: iter,
                trace: trace.to_vec(),
            };
            for _ in 0..config.inner_steps.max(1) {
                let cs = Coupling {
                    side: Domain::Source,
                    partner: &st.acts_t,
                    plan,
                    projections: &st.projections,
                    centered: config.centered,
                };
                let next_s = coupled_step_from_acts(&st.theta_s, &st.acts_s, Some(&cs), &config.hyper)
                    .map_err(|_| diverged(&loss_trace))?;
                let ct = Coupling {
                    side: Domain::Target,
                    partner: &st.acts_s,
                    plan,
                    projections: &st.projections,
                    centered: config.centered,
                };
                let next_t = coupled_step_from_acts(&st.theta_t, &st.acts_t, Some(&ct), &config.hyper)
                    .map_err(|_| diverged(&loss_trace))?;
                st.theta_s = next_s;
                st.theta_t = next_t;
                st.acts_s = forward(&st.theta_s, co_source)?;
                st.acts_t = forward(&st.theta_t, co_target)?;
            }
            st.projections = fit_projections(plan, &st.acts_s, &st.acts_t, config)
                .map_err(|_| diverged(&loss_trace))?;
            let parts = st.parts(plan, co_source, co_target, lambda)?;
            let obj = parts.objective();
            if obj.is_nan() || parts.loss_source + parts.loss_target > sae::DIVERGENCE_LOSS {
                loss_trace.push(obj);
                return Err(diverged(&loss_trace));
            }
            let prev = *loss_trace.last().unwrap();
            loss_trace.push(obj);
            correlation_trace.push(parts.correlation);
            iterations = iter;
            let rel = (obj - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if rel < config.tol {
                stable += 1;
                if stable >= config.patience {
                    break;
                }
            } else {
                stable = 0;
            }
        }

        if config.fine_tune_epochs > 0 {
            st.theta_s = sae::fine_tune(&st.theta_s, co_source, config.fine_tune_epochs, &config.hyper)?.0;
            st.theta_t = sae::fine_tune(&st.theta_t, co_target, config.fine_tune_epochs, &config.hyper)?.0;
            st.refresh(plan, co_source, co_target, config)?;
            let parts = st.parts(plan, co_source, co_target, lambda)?;
            loss_trace.push(parts.objective());
            correlation_trace.push(parts.correlation);
        }
    }

    Ok(TrainedModel {
        objective: *loss_trace.last().unwrap(),
        theta_source: st.theta_s,
        theta_target: st.theta_t,
        projections: st.projections,
        plan: plan.clone(),
        loss_trace,
        correlation_trace,
        iterations,
        lambda,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub plan: MatchingPlan,
    pub objective: f64,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub best: TrainedModel,
    /// Every candidate in input order, with its final objective.
    pub candidates: Vec<Candidate>,
}

/// `true` when `x` should replace the current best `y`: lower objective,
/// then fewer pairs, then lexicographically smaller pairs.
fn better(x: (&MatchingPlan, f64), y: (&MatchingPlan, f64)) -> bool {
    x.1.total_cmp(&y.1)
        .then(x.0.m().cmp(&y.0.m()))
        .then(x.0.pairs.cmp(&y.0.pairs))
        .is_lt()
}

/// Argmin over candidates produced by `train`; failed or infinite
/// candidates are kept in the report but never selected.
pub fn select_with<F>(plans: &[MatchingPlan], base_seed: u64, mut train: F) -> Result<Selection>
where
    F: FnMut(&MatchingPlan, u64) -> Result<TrainedModel>,
{
    if plans.is_empty() {
        return Err(Error::Selection("no candidate plans".into()));
    }
    let mut best: Option<TrainedModel> = None;
    let mut candidates = Vec::with_capacity(plans.len());
    for (idx, plan) in plans.iter().enumerate() {
        let seed = derive_seed(base_seed, &[idx as u64]);
        match train(plan, seed) {
            Ok(model) => {
                let obj = model.objective;
                candidates.push(Candidate {
                    plan: plan.clone(),
                    objective: obj,
                    seed,
                    error: None,
                });
                if !obj.is_finite() {
                    log::debug!("{plan}: objective not finite, excluded");
                    continue;
                }
                let replace = match &best {
                    None => true,
                    Some(cur) => better((plan, obj), (&cur.plan, cur.objective)),
                };
                if let Some(cur) = &best {
                    log::debug!(
                        "{plan} ({obj:.4}) vs {} ({:.4}): {}",
                        cur.plan,
                        cur.objective,
                        if replace { "replace" } else { "keep" }
                    );
                }
                if replace {
                    best = Some(model);
                }
            }
            Err(e) => {
                log::warn!("{plan}: training failed: {e}");
                candidates.push(Candidate {
                    plan: plan.clone(),
                    objective: f64::INFINITY,
                    seed,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    match best {
        Some(best) => Ok(Selection { best, candidates }),
        None => Err(Error::Selection(format!(
            "all {} candidate objectives are infinite",
            plans.len()
        ))),
    }
}

/// Trains every plan on the co-occurrence rows and keeps the one with the
/// lowest finite joint objective. Plan `i` trains with a seed derived from
/// `(config.seed, i)`.
pub fn select_best(
    plans: &[MatchingPlan],
    co_source: &Matrix,
    co_target: &Matrix,
    config: &TrainConfig,
) -> Result<Selection> {
    select_with(plans, config.seed, |plan, seed| {
        let cfg = TrainConfig {
            seed,
            ..config.clone()
        };
        train_joint(plan, co_source, co_target, &cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(s: &str) -> MatchingPlan {
        s.parse().unwrap()
    }

    #[test]
    fn two_layer_nets_have_one_plan() {
        let plans = enumerate_matchings(2, 2, false).unwrap();
        assert_eq!(plans, vec![plan("2-2")]);
    }

    #[test]
    fn four_by_three_full_rank() {
        let plans = enumerate_matchings(4, 3, true).unwrap();
        assert_eq!(plans, vec![plan("2-2,4-3"), plan("3-2,4-3")]);
    }

    #[test]
    fn depth_bounds() {
        assert!(enumerate_matchings(1, 3, true).is_err());
        assert!(enumerate_matchings(3, 6, true).is_err());
    }

    #[test]
    fn plan_parsing_and_display() {
        let p = plan("3-2,4-3,5-4");
        assert_eq!((p.a, p.b, p.m()), (5, 4, 3));
        assert_eq!(p.to_string(), "r3_{5,4}[3-2,4-3,5-4]");
        assert_eq!(plan(&p.to_string()), p);
        assert!(p.is_full_rank());
        assert!("3-2,2-3".parse::<MatchingPlan>().is_err());
        assert!("2-2,3-2,4-3".parse::<MatchingPlan>().is_err());
    }

    #[test]
    fn non_monotone_flag_adds_crossings() {
        let mono = enumerate_matchings_with(5, 5, true, true).unwrap();
        let all = enumerate_matchings_with(5, 5, true, false).unwrap();
        assert_eq!(mono.len(), 1);
        assert_eq!(all.len(), 6);
        assert!(all.iter().any(|p| !p.is_monotone()));
    }

    #[test]
    fn aligned_plan() {
        assert_eq!(MatchingPlan::aligned_top(4, 4).unwrap(), plan("2-2,3-3,4-4"));
        assert_eq!(MatchingPlan::aligned_top(5, 3).unwrap(), plan("4-2,5-3"));
    }

    #[test]
    fn widths_follow_schedules() {
        assert_eq!(interpolate_widths(240, 30, 4), vec![240, 170, 100, 30]);
        assert_eq!(interpolate_widths(216, 30, 4), vec![216, 154, 92, 30]);
        assert_eq!(interpolate_widths(216, 30, 3), vec![216, 123, 30]);
        let w = WidthPlan::multifeatures();
        assert_eq!(w.widths(Domain::Source, 240, 5), vec![240, 185, 130, 75, 30]);
        assert_eq!(w.widths(Domain::Target, 216, 5), interpolate_widths(216, 30, 5));
        let mut narrow = w.clone();
        narrow.top = 10;
        assert_eq!(narrow.widths(Domain::Source, 240, 5), vec![240, 185, 130, 75, 10]);
    }

    #[test]
    fn objective_sentinel_and_monotonicity() {
        assert_eq!(joint_objective(0.0, 0.0, 2.0), 0.0);
        assert!(joint_objective(1.0, 1.0, 0.0).is_infinite());
        assert!(joint_objective(1.0, 1.0, 1e-10).is_infinite());
        assert!(joint_objective(1.0, 2.0, 3.0) < joint_objective(1.0, 2.0, 2.0));
        assert!(joint_objective(1.5, 2.0, 3.0) > joint_objective(1.0, 2.0, 3.0));
    }

    #[test]
    fn resolution_hint_only_reorders() {
        let mut plans = enumerate_depth_grid(&[3, 4, 5], &[3, 4, 5], true, true).unwrap();
        let before = plans.len();
        order_by_resolution_hint(&mut plans, 240, 216);
        assert_eq!(plans.len(), before);
        let r = |p: &MatchingPlan| (p.a as f64 / p.b as f64 - 240.0 / 216.0).abs();
        assert!(plans.windows(2).all(|w| r(&w[0]) <= r(&w[1])));
    }
}
