//! Stacked sigmoid autoencoder for one domain.
//!
//! Data matrices hold one sample per row. Encoder layer `l` maps activations
//! of width `widths[l]` to width `widths[l + 1]` through
//! `H(l+1) = sigmoid(H(l) · W(l)ᵀ + b(l))`. Reconstruction runs a mirrored
//! decoder with its own (untied) parameters back down to the input width.
//!
//! Layers are numbered from 1 (the input) in matching plans, so plan layer
//! `i` is activation index `i - 1` of an [`ActivationStack`].

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cca::CcaProjection;
use crate::data::Domain;
use crate::error::{Error, Result};
use crate::linalg::{add_row_bias, all_finite, center_columns, column_means, sigmoid};
use crate::matcher::MatchingPlan;
use crate::{Matrix, Vector};

/// Fine-tuning aborts once the reconstruction loss exceeds this.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub widths: Vec<usize>,
    /// `weights[l]` has shape `widths[l+1] × widths[l]`.
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
    /// `decoder_weights[l]` has shape `widths[l] × widths[l+1]` and maps back down.
    pub decoder_weights: Vec<Matrix>,
    pub decoder_biases: Vec<Vector>,
}

/// Encoder activations, `layers[0]` being the input itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStack {
    pub layers: Vec<Matrix>,
}

impl ActivationStack {
    pub fn top(&self) -> &Matrix {
        self.layers.last().expect("activation stack is never empty")
    }

    /// Activation of 1-based plan layer `layer`.
    pub fn layer(&self, layer: usize) -> &Matrix {
        &self.layers[layer - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaeHyperParams {
    /// Weight-decay coefficient.
    pub lambda: f64,
    /// Gradient-descent step size.
    pub lr: f64,
    /// Weight of the self-domain correlation regularizer on matched layers.
    pub omega: f64,
}

impl Default for SaeHyperParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lr: 0.05,
            omega: 1.0,
        }
    }
}

impl SaeHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lr >= 0.0 && self.omega >= 0.0) {
            return Err(Error::arg(format!("invalid SAE hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
    pub decoder_weights: Vec<Matrix>,
    pub decoder_biases: Vec<Vector>,
}

/// Cross-domain correlation coupling applied during a backward sweep.
pub struct Coupling<'a> {
    /// Which network of the plan is being updated.
    pub side: Domain,
    /// Current activations of the other domain's network on the co-occurrence rows.
    pub partner: &'a ActivationStack,
    pub plan: &'a MatchingPlan,
    /// One projection per plan pair, in plan order.
    pub projections: &'a [CcaProjection],
    /// Center activations before forming the correlation signals.
    pub centered: bool,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-r..=r))
}

/// Glorot-uniform weights and zero biases for the encoder and decoder.
pub fn init_network(widths: &[usize], seed: u64) -> Result<NetworkParams> {
    if widths.len() < 2 {
        return Err(Error::arg("a network needs at least two layer widths"));
    }
    if let Some(pos) = widths.iter().position(|&w| w == 0) {
        return Err(Error::arg(format!("layer {} has width 0", pos + 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = widths.len() - 1;
    let weights: Vec<Matrix> = (0..depth)
        .map(|l| glorot(&mut rng, widths[l + 1], widths[l]))
        .collect();
    let decoder_weights: Vec<Matrix> = (0..depth)
        .map(|l| glorot(&mut rng, widths[l], widths[l + 1]))
        .collect();
    Ok(NetworkParams {
        widths: widths.to_vec(),
        weights,
        biases: (0..depth).map(|l| Vector::zeros(widths[l + 1])).collect(),
        decoder_weights,
        decoder_biases: (0..depth).map(|l| Vector::zeros(widths[l])).collect(),
    })
}

fn dense_sigmoid(input: &Matrix, w: &Matrix, b: &Vector) -> Matrix {
    let mut z = input * w.transpose();
    add_row_bias(&mut z, b);
    z.apply(|v| *v = sigmoid(*v));
    z
}

impl NetworkParams {
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn top_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.ncols() != self.input_dim() {
            return Err(Error::arg(format!(
                "input has {} columns, network expects {}",
                input.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn weight_square_sum(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.decoder_weights)
            .map(|w| w.norm_squared())
            .sum()
    }

    /// Decoder pass from the top code; returns every decoder activation,
    /// the last one being the reconstruction.
    pub fn decode(&self, code: &Matrix) -> Vec<Matrix> {
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.weights.len());
        for l in (0..self.weights.len()).rev() {
            let input = outs.last().unwrap_or(code);
            let next = dense_sigmoid(input, &self.decoder_weights[l], &self.decoder_biases[l]);
            outs.push(next);
        }
        outs
    }

    pub fn reconstruct(&self, input: &Matrix) -> Result<Matrix> {
        let acts = forward(self, input)?;
        Ok(self.decode(acts.top()).pop().unwrap())
    }

    fn apply_gradients(&self, grads: &Gradients, lr: f64) -> NetworkParams {
        let step = |p: &[Matrix], g: &[Matrix]| -> Vec<Matrix> {
            p.iter().zip(g).map(|(p, g)| p - g * lr).collect()
        };
        let step_v = |p: &[Vector], g: &[Vector]| -> Vec<Vector> {
            p.iter().zip(g).map(|(p, g)| p - g * lr).collect()
        };
        NetworkParams {
            widths: self.widths.clone(),
            weights: step(&self.weights, &grads.weights),
            biases: step_v(&self.biases, &grads.biases),
            decoder_weights: step(&self.decoder_weights, &grads.decoder_weights),
            decoder_biases: step_v(&self.decoder_biases, &grads.decoder_biases),
        }
    }

    /// Text checkpoint: a `dtlet-sae 1` line, a `widths ...` line, then for
    /// each layer the encoder weight, encoder bias, decoder weight and
    /// decoder bias as [`crate::linalg::write_matrix`] blocks (biases as
    /// single-row matrices).
    pub fn write_checkpoint<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "dtlet-sae 1")?;
        let widths: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        writeln!(out, "widths {}", widths.join(" "))?;
        for l in 0..self.weights.len() {
            crate::linalg::write_matrix(out, &self.weights[l])?;
            crate::linalg::write_matrix(out, &Matrix::from_row_slice(1, self.biases[l].len(), self.biases[l].as_slice()))?;
            crate::linalg::write_matrix(out, &self.decoder_weights[l])?;
            crate::linalg::write_matrix(
                out,
                &Matrix::from_row_slice(1, self.decoder_biases[l].len(), self.decoder_biases[l].as_slice()),
            )?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<NetworkParams> {
        let mut lines = input.lines();
        let magic = crate::linalg::next_line(&mut lines)?;
        if magic.trim() != "dtlet-sae 1" {
            return Err(Error::arg(format!("not a network checkpoint: {magic:?}")));
        }
        let wline = crate::linalg::next_line(&mut lines)?;
        let widths: Vec<usize> = wline
            .strip_prefix("widths")
            .ok_or_else(|| Error::arg("missing widths line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::arg(format!("bad width {t:?}"))))
            .collect::<Result<_>>()?;
        let mut params = init_network(&widths, 0)?;
        let as_vec = |m: Matrix| Vector::from_iterator(m.ncols(), m.iter().copied());
        for l in 0..widths.len() - 1 {
            let w = crate::linalg::read_matrix(&mut lines)?;
            let b = as_vec(crate::linalg::read_matrix(&mut lines)?);
            let dw = crate::linalg::read_matrix(&mut lines)?;
            let db = as_vec(crate::linalg::read_matrix(&mut lines)?);
            if w.shape() != params.weights[l].shape()
                || b.len() != params.biases[l].len()
                || dw.shape() != params.decoder_weights[l].shape()
                || db.len() != params.decoder_biases[l].len()
            {
                return Err(Error::arg(format!("layer {l} shapes disagree with widths")));
            }
            params.weights[l] = w;
            params.biases[l] = b;
            params.decoder_weights[l] = dw;
            params.decoder_biases[l] = db;
        }
        Ok(params)
    }
}

/// Encoder pass: `H(1) = input`, `H(n+1) = sigmoid(H(n)·W(n)ᵀ + b(n))`.
pub fn forward(params: &NetworkParams, input: &Matrix) -> Result<ActivationStack> {
    params.check_input(input)?;
    let mut layers = Vec::with_capacity(params.depth());
    layers.push(input.clone());
    for (w, b) in params.weights.iter().zip(&params.biases) {
        let next = dense_sigmoid(layers.last().unwrap(), w, b);
        layers.push(next);
    }
    Ok(ActivationStack { layers })
}

/// Mean over rows of `½‖x̂ − x‖²` plus `(λ/2)·Σ W²` over encoder and decoder weights.
pub fn reconstruction_loss(params: &NetworkParams, input: &Matrix, lambda: f64) -> Result<f64> {
    let recon = params.reconstruct(input)?;
    let n = input.nrows().max(1) as f64;
    let residual = (recon - input).norm_squared();
    Ok(0.5 * residual / n + 0.5 * lambda * params.weight_square_sum())
}

/// Elementwise `H ⊙ (1 − H)`.
fn sigmoid_slope(h: &Matrix) -> Matrix {
    h.map(|v| v * (1.0 - v))
}

/// Correlation signal `−β + ω·γ` (before the sigmoid slope) for 1-based
/// layer `layer` of the coupled network, or `None` when the layer is unmatched.
fn coupling_signal(
    coupling: &Coupling<'_>,
    own: &ActivationStack,
    layer: usize,
    omega: f64,
) -> Option<Matrix> {
    let (k, &(si, ti)) = coupling.plan.pairs.iter().enumerate().find(|(_, &(si, ti))| {
        match coupling.side {
            Domain::Source => si == layer,
            Domain::Target => ti == layer,
        }
    })?;
    let proj = &coupling.projections[k];
    let (self_layer, partner_layer, v_self, v_partner) = match coupling.side {
        Domain::Source => (si, ti, &proj.v_source, &proj.v_target),
        Domain::Target => (ti, si, &proj.v_target, &proj.v_source),
    };
    let prep = |h: &Matrix| {
        if coupling.centered {
            center_columns(h, &column_means(h))
        } else {
            h.clone()
        }
    };
    let h_self = prep(own.layer(self_layer));
    let h_partner = prep(coupling.partner.layer(partner_layer));
    let v_self_t = v_self.transpose();
    let beta = (&h_partner * v_partner) * &v_self_t;
    let gamma = (&h_self * v_self) * &v_self_t;
    Some(gamma * omega - beta)
}

/// Full backward sweep of the (optionally coupled) objective.
///
/// Returns gradients already including the weight-decay term `λ·W` and
/// averaged over the `n` rows of `data`.
pub fn gradients(
    params: &NetworkParams,
    data: &Matrix,
    coupling: Option<&Coupling<'_>>,
    hyper: &SaeHyperParams,
) -> Result<Gradients> {
    let acts = forward(params, data)?;
    backward(params, &acts, coupling, hyper)
}

/// Backward sweep given the encoder activations of `params` on the data
/// (`acts.layers[0]` is the data itself).
pub fn backward(
    params: &NetworkParams,
    acts: &ActivationStack,
    coupling: Option<&Coupling<'_>>,
    hyper: &SaeHyperParams,
) -> Result<Gradients> {
    let data = &acts.layers[0];
    let depth = params.weights.len();
    let n = data.nrows().max(1) as f64;
    let dec = params.decode(acts.top());

    let mut g_dw = vec![Matrix::zeros(0, 0); depth];
    let mut g_db = vec![Vector::zeros(0); depth];
    let mut g_w = vec![Matrix::zeros(0, 0); depth];
    let mut g_b = vec![Vector::zeros(0); depth];

    let recon = dec.last().unwrap();
    let mut delta = (recon - data).component_mul(&sigmoid_slope(recon));

    for i in (0..depth).rev() {
        // decoder step i maps widths[l+1] -> widths[l]
        let l = depth - 1 - i;
        let input = if i == 0 { acts.top() } else { &dec[i - 1] };
        g_dw[l] = delta.transpose() * input / n + &params.decoder_weights[l] * hyper.lambda;
        g_db[l] = column_means(&delta);
        delta = (&delta * &params.decoder_weights[l]).component_mul(&sigmoid_slope(input));
    }

    for l in (0..depth).rev() {
        // delta is at activation index l + 1, i.e. plan layer l + 2
        if let Some(c) = coupling {
            if let Some(signal) = coupling_signal(c, acts, l + 2, hyper.omega) {
                delta += signal.component_mul(&sigmoid_slope(&acts.layers[l + 1]));
            }
        }
        if !all_finite(&delta) {
            return Err(Error::numeric(Some(l + 2), "non-finite backpropagated error"));
        }
        g_w[l] = delta.transpose() * &acts.layers[l] / n + &params.weights[l] * hyper.lambda;
        g_b[l] = column_means(&delta);
        if l > 0 {
            delta = (&delta * &params.weights[l]).component_mul(&sigmoid_slope(&acts.layers[l]));
        }
    }

    Ok(Gradients {
        weights: g_w,
        biases: g_b,
        decoder_weights: g_dw,
        decoder_biases: g_db,
    })
}

/// One full-batch gradient step combining reconstruction backprop with the
/// cross-domain (`β`) and self-domain (`γ`) correlation signals on matched
/// layers. With no coupling this is a plain weight-decayed autoencoder step.
pub fn coupled_gradient_step(
    params: &NetworkParams,
    co_data: &Matrix,
    coupling: Option<&Coupling<'_>>,
    hyper: &SaeHyperParams,
) -> Result<NetworkParams> {
    let acts = forward(params, co_data)?;
    coupled_step_from_acts(params, &acts, coupling, hyper)
}

/// [`coupled_gradient_step`] reusing already computed encoder activations.
pub fn coupled_step_from_acts(
    params: &NetworkParams,
    acts: &ActivationStack,
    coupling: Option<&Coupling<'_>>,
    hyper: &SaeHyperParams,
) -> Result<NetworkParams> {
    hyper.validate()?;
    if let Some(c) = coupling {
        if c.projections.len() != c.plan.pairs.len() {
            return Err(Error::arg(format!(
                "{} projections for {} matched pairs",
                c.projections.len(),
                c.plan.pairs.len()
            )));
        }
    }
    let grads = backward(params, acts, coupling, hyper)?;
    let next = params.apply_gradients(&grads, hyper.lr);
    for (l, w) in next.weights.iter().chain(&next.decoder_weights).enumerate() {
        if !all_finite(w) {
            return Err(Error::numeric(Some(l % params.weights.len() + 1), "non-finite weights after update"));
        }
    }
    Ok(next)
}

/// Reconstruction-only backprop for `epochs` full-batch steps.
///
/// Returns the tuned parameters and the loss after each epoch.
pub fn fine_tune(
    params: &NetworkParams,
    co_data: &Matrix,
    epochs: usize,
    hyper: &SaeHyperParams,
) -> Result<(NetworkParams, Vec<f64>)> {
    let mut current = params.clone();
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        current = coupled_gradient_step(&current, co_data, None, hyper)?;
        let loss = reconstruction_loss(&current, co_data, hyper.lambda)?;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::numeric(
                None,
                format!("fine-tuning diverged at epoch {epoch} (loss {loss:.3e}); use a smaller learning rate"),
            ));
        }
        trace.push(loss);
    }
    let improving = trace.windows(2).filter(|w| w[1] <= w[0]).count();
    if trace.len() > 10 && (improving as f64) < 0.9 * (trace.len() - 1) as f64 {
        log::debug!(
            "fine-tune loss decreased in only {improving}/{} epochs",
            trace.len() - 1
        );
    }
    Ok((current, trace))
}

#[derive(Clone, Copy)]
enum Slot {
    Weight,
    Bias,
    DecoderWeight,
    DecoderBias,
}

impl Slot {
    fn get(self, p: &mut NetworkParams, layer: usize, idx: usize) -> &mut f64 {
        match self {
            Slot::Weight => &mut p.weights[layer][idx],
            Slot::Bias => &mut p.biases[layer][idx],
            Slot::DecoderWeight => &mut p.decoder_weights[layer][idx],
            Slot::DecoderBias => &mut p.decoder_biases[layer][idx],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares analytic reconstruction gradients with central finite
/// differences of [`reconstruction_loss`] over every parameter.
///
/// The relative error of one entry is `|a − f| / max(|a|, |f|, 1e-8)`.
pub fn gradient_check(
    params: &NetworkParams,
    data: &Matrix,
    lambda: f64,
    eps: f64,
) -> Result<GradCheckReport> {
    let hyper = SaeHyperParams {
        lambda,
        lr: 0.0,
        omega: 0.0,
    };
    let grads = gradients(params, data, None, &hyper)?;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut probe = params.clone();

    for l in 0..params.weights.len() {
        let slots = [
            (Slot::Weight, params.weights[l].len(), grads.weights[l].as_slice()),
            (Slot::Bias, params.biases[l].len(), grads.biases[l].as_slice()),
            (Slot::DecoderWeight, params.decoder_weights[l].len(), grads.decoder_weights[l].as_slice()),
            (Slot::DecoderBias, params.decoder_biases[l].len(), grads.decoder_biases[l].as_slice()),
        ];
        for (slot, len, analytic) in slots {
            for (idx, &exact) in analytic.iter().enumerate().take(len) {
                let orig = *slot.get(&mut probe, l, idx);
                *slot.get(&mut probe, l, idx) = orig + eps;
                let up = reconstruction_loss(&probe, data, lambda)?;
                *slot.get(&mut probe, l, idx) = orig - eps;
                let down = reconstruction_loss(&probe, data, lambda)?;
                *slot.get(&mut probe, l, idx) = orig;
                let numeric = (up - down) / (2.0 * eps);
                let denom = exact.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((exact - numeric).abs() / denom);
                checked += 1;
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_error: worst,
        checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..1.0))
    }

    /// Row-by-row, loop-based encoder evaluation.
    fn naive_forward(p: &NetworkParams, x: &Matrix) -> Vec<Matrix> {
        let mut out = vec![x.clone()];
        for l in 0..p.weights.len() {
            let prev = out.last().unwrap();
            let mut next = Matrix::zeros(x.nrows(), p.widths[l + 1]);
            for r in 0..x.nrows() {
                for o in 0..p.widths[l + 1] {
                    let mut z = p.biases[l][o];
                    for i in 0..p.widths[l] {
                        z += p.weights[l][(o, i)] * prev[(r, i)];
                    }
                    next[(r, o)] = 1.0 / (1.0 + (-z).exp());
                }
            }
            out.push(next);
        }
        out
    }

    #[test]
    fn init_shapes_for_task_one_source() {
        let p = init_network(&[240, 170, 100, 30], 1).unwrap();
        let shapes: Vec<_> = p.weights.iter().map(|w| w.shape()).collect();
        assert_eq!(shapes, vec![(170, 240), (100, 170), (30, 100)]);
        assert_eq!(p.decoder_weights[0].shape(), (240, 170));
        assert!(p.biases.iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_network(&[4, 3], 42).unwrap();
        let b = init_network(&[4, 3], 42).unwrap();
        assert_eq!(a, b);
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(a.weights[0].iter().all(|w| w.abs() <= bound));
        assert!(init_network(&[4, 0, 2], 1).is_err());
        assert!(init_network(&[4], 1).is_err());
    }

    #[test]
    fn zero_network_outputs_half() {
        let mut p = init_network(&[3, 2, 2], 0).unwrap();
        p.weights.iter_mut().for_each(|w| w.fill(0.0));
        let acts = forward(&p, &random_matrix(5, 3, 1)).unwrap();
        assert_eq!(acts.layers.len(), 3);
        assert!(acts.layers[1..].iter().all(|h| h.iter().all(|v| *v == 0.5)));

        let mut one = init_network(&[1, 1], 0).unwrap();
        one.weights[0][(0, 0)] = 1.0;
        let acts = forward(&one, &Matrix::zeros(1, 1)).unwrap();
        assert_eq!(acts.top()[(0, 0)], 0.5);
    }

    #[test]
    fn forward_matches_loop_evaluation() {
        let mut p = init_network(&[6, 5, 3], 9).unwrap();
        p.biases[0] = Vector::from_fn(5, |i, _| i as f64 * 0.1 - 0.2);
        let x = random_matrix(7, 6, 2);
        let acts = forward(&p, &x).unwrap();
        for (a, b) in acts.layers.iter().zip(naive_forward(&p, &x)) {
            assert!((a - b).amax() < 1e-12);
        }
        assert!(acts.layers[1..]
            .iter()
            .all(|h| h.iter().all(|v| *v > 0.0 && *v < 1.0)));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = init_network(&[3, 2], 0).unwrap();
        assert!(matches!(forward(&p, &Matrix::zeros(2, 4)), Err(Error::Argument(_))));
    }

    #[test]
    fn loss_by_hand_on_tiny_net() {
        // 2 -> 1 -> 2 with hand-picked parameters, one sample
        let mut p = init_network(&[2, 1], 0).unwrap();
        p.weights[0] = Matrix::from_row_slice(1, 2, &[0.3, -0.4]);
        p.biases[0] = Vector::from_vec(vec![0.1]);
        p.decoder_weights[0] = Matrix::from_row_slice(2, 1, &[0.7, -0.2]);
        p.decoder_biases[0] = Vector::from_vec(vec![0.05, 0.0]);
        let x = Matrix::from_row_slice(1, 2, &[0.2, 0.9]);
        let lambda = 0.3;

        let h = sigmoid(0.3 * 0.2 - 0.4 * 0.9 + 0.1);
        let r0 = sigmoid(0.7 * h + 0.05);
        let r1 = sigmoid(-0.2 * h);
        let sq_w = 0.09 + 0.16 + 0.49 + 0.04;
        let expect = 0.5 * ((r0 - 0.2f64).powi(2) + (r1 - 0.9f64).powi(2)) + 0.5 * lambda * sq_w;
        let got = reconstruction_loss(&p, &x, lambda).unwrap();
        assert!((got - expect).abs() < 1e-10);
        assert!(got > reconstruction_loss(&p, &x, 0.0).unwrap());
    }

    #[test]
    fn zero_loss_for_perfect_reconstruction() {
        // decoder saturates to the exact sigmoid of its bias; pick input equal to it
        let mut p = init_network(&[2, 1], 0).unwrap();
        p.weights[0].fill(0.0);
        p.decoder_weights[0].fill(0.0);
        p.decoder_biases[0] = Vector::from_vec(vec![0.0, 1.0]);
        let x = Matrix::from_row_slice(1, 2, &[0.5, sigmoid(1.0)]);
        assert!(reconstruction_loss(&p, &x, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = init_network(&[5, 3, 2], 3).unwrap();
        let x = random_matrix(8, 5, 4);
        let report = gradient_check(&p, &x, 0.1, 1e-5).unwrap();
        assert_eq!(report.checked, 2 * (15 + 6) + 3 + 2 + 5 + 3);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn zero_step_leaves_params() {
        let p = init_network(&[4, 3, 2], 5).unwrap();
        let x = random_matrix(6, 4, 6);
        let hyper = SaeHyperParams {
            lr: 0.0,
            ..Default::default()
        };
        assert_eq!(coupled_gradient_step(&p, &x, None, &hyper).unwrap(), p);
    }

    #[test]
    fn fine_tune_reduces_loss() {
        let p = init_network(&[10, 6, 10], 7).unwrap();
        let x = random_matrix(50, 10, 8);
        let hyper = SaeHyperParams {
            lambda: 1e-3,
            lr: 0.5,
            omega: 0.0,
        };
        let (same, trace) = fine_tune(&p, &x, 0, &hyper).unwrap();
        assert_eq!(same, p);
        assert!(trace.is_empty());
        let before = reconstruction_loss(&p, &x, hyper.lambda).unwrap();
        let (tuned, trace) = fine_tune(&p, &x, 200, &hyper).unwrap();
        assert_eq!(trace.len(), 200);
        assert!(*trace.last().unwrap() < before);
        assert!(reconstruction_loss(&tuned, &x, hyper.lambda).unwrap() < before);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let p = init_network(&[5, 4, 2], 13).unwrap();
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        let back = NetworkParams::read_checkpoint(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, p);
    }
}
