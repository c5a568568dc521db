//! Network evaluation: initialization, forward pass, loss, exact backprop.
//!
//! Everything here is full batch and deterministic. The only randomness is
//! the initializer, which draws from a counter-based generator seeded by
//! `spec.initializer.seed`; weights are drawn layer by layer in row-major
//! order (output neuron major) and biases start at zero, so a seed pins the
//! initial point exactly.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Batch, LossKind, ModelSpec, OutputActivation};
use crate::param::{GradSet, ParamSet};

/// Tolerance on row sums of distributions fed to the cross-entropy loss.
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-6;

/// Probabilities are clamped to this floor inside the log.
pub const LOG_PROB_FLOOR: f64 = 1e-300;

/// Post-activation values of every layer for one batch of inputs.
///
/// `layer_outputs[l]` holds the activations leaving layer `l`; the last
/// entry is the network output (after softmax when configured).
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub layer_outputs: Vec<Matrix>,
}

impl ForwardPass {
    /// Network outputs, one row per sample.
    pub fn outputs(&self) -> &Matrix {
        self.layer_outputs.last().expect("a model always has at least one layer")
    }
}

/// Draws initial parameters for `spec`.
///
/// Weight std per layer: he `sqrt(2/fan_in)`, xavier
/// `sqrt(2/(fan_in+fan_out))`, plain normal `sigma`. Biases are zero.
pub fn init_params(spec: &ModelSpec) -> Result<ParamSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.initializer.seed);
    let mut layers = Vec::with_capacity(spec.num_layers());
    for l in 0..spec.num_layers() {
        let fan_in = spec.fan_in(l);
        let fan_out = spec.fan_out(l);
        let std = match spec.initializer.kind {
            crate::model::InitKind::HeNormal => libm::sqrt(2.0 / fan_in as f64),
            crate::model::InitKind::XavierNormal => {
                libm::sqrt(2.0 / (fan_in + fan_out) as f64)
            }
            crate::model::InitKind::Normal => spec.initializer.sigma,
        };
        let mut layer = vec![0.0; spec.layer_param_count(l)];
        for w in layer.iter_mut().take(fan_in * fan_out) {
            let draw: f64 = StandardNormal.sample(&mut rng);
            *w = std * draw;
        }
        // Remaining entries are the biases, left at zero.
        layers.push(layer);
    }
    Ok(ParamSet { layers })
}

/// Runs the network on a batch of inputs, keeping every layer's activations.
pub fn forward(spec: &ModelSpec, params: &ParamSet, inputs: &Matrix) -> Result<ForwardPass> {
    spec.validate()?;
    params.check_shape(spec)?;
    if inputs.cols() != spec.input_dim() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "input width {} vs model input width {}",
            inputs.cols(),
            spec.input_dim()
        )));
    }
    let batch = inputs.rows();
    let m = spec.num_layers();
    let mut layer_outputs = Vec::with_capacity(m);
    let mut current = inputs;
    for l in 0..m {
        let fan_in = spec.fan_in(l);
        let fan_out = spec.fan_out(l);
        let layer = &params.layers[l];
        let (weights, biases) = layer.split_at(fan_in * fan_out);
        let mut z = Matrix::zeros(batch, fan_out);
        for b in 0..batch {
            let a_row = current.row(b);
            let z_row = z.row_mut(b);
            for (o, z_bo) in z_row.iter_mut().enumerate() {
                let w_row = &weights[o * fan_in..(o + 1) * fan_in];
                let mut acc = biases[o];
                for (w, a) in w_row.iter().zip(a_row) {
                    acc += w * a;
                }
                *z_bo = acc;
            }
        }
        if l + 1 < m {
            for v in z.data_mut() {
                *v = spec.activation.apply(*v);
            }
        } else {
            match spec.output_activation {
                OutputActivation::Identity => {}
                OutputActivation::Softmax => softmax_rows(&mut z),
            }
        }
        layer_outputs.push(z);
        current = layer_outputs.last().expect("just pushed");
    }
    Ok(ForwardPass { layer_outputs })
}

/// Row-wise softmax with max subtraction for overflow safety.
fn softmax_rows(z: &mut Matrix) {
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Loss of precomputed outputs against targets, averaged over the batch.
///
/// Mean squared error sums squared differences over output dimensions. The
/// cross-entropy path expects each output row to be a probability
/// distribution (sum within [`DISTRIBUTION_SUM_TOL`] of one) and clamps
/// probabilities to [`LOG_PROB_FLOOR`] inside the log.
pub fn loss(spec: &ModelSpec, outputs: &Matrix, targets: &Matrix) -> Result<f64> {
    if outputs.rows() != targets.rows() || outputs.cols() != targets.cols() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "outputs {}x{} vs targets {}x{}",
            outputs.rows(),
            outputs.cols(),
            targets.rows(),
            targets.cols()
        )));
    }
    if outputs.rows() == 0 {
        return Err(Error::InvalidSpec("loss of an empty batch".into()));
    }
    let batch = outputs.rows() as f64;
    match spec.loss_kind {
        LossKind::MeanSquaredError => {
            let mut total = 0.0;
            for (o, t) in outputs.data().iter().zip(targets.data()) {
                let d = o - t;
                total += d * d;
            }
            Ok(total / batch)
        }
        LossKind::CrossEntropy => {
            let mut total = 0.0;
            for r in 0..outputs.rows() {
                let row = outputs.row(r);
                let sum: f64 = row.iter().sum();
                if !(libm::fabs(sum - 1.0) <= DISTRIBUTION_SUM_TOL) {
                    return Err(Error::UnnormalizedDistribution { row: r, sum });
                }
                for (p, t) in row.iter().zip(targets.row(r)) {
                    if *t != 0.0 {
                        total -= t * libm::log(p.max(LOG_PROB_FLOOR));
                    }
                }
            }
            Ok(total / batch)
        }
    }
}

/// Batch loss and its exact gradient with respect to every parameter.
///
/// The output-layer error signal is `2*(outputs - targets)/batch` for mean
/// squared error with identity outputs and `(probs - targets)/batch` for
/// softmax with cross-entropy; hidden layers backpropagate through the
/// activation derivative evaluated at the stored activations (relu uses
/// subgradient 0 at its kink).
pub fn backward(spec: &ModelSpec, params: &ParamSet, batch: &Batch) -> Result<(f64, GradSet)> {
    batch.check_dims(spec)?;
    let pass = forward(spec, params, &batch.inputs)?;
    let loss_value = loss(spec, pass.outputs(), &batch.targets)?;

    let b = batch.len();
    let scale = 1.0 / b as f64;
    let m = spec.num_layers();
    let outputs = pass.outputs();

    // Error signal with respect to layer m-1 pre-activations.
    let mut delta = Matrix::zeros(b, spec.output_dim());
    match spec.loss_kind {
        LossKind::MeanSquaredError => {
            for i in 0..delta.data().len() {
                delta.data_mut()[i] =
                    2.0 * (outputs.data()[i] - batch.targets.data()[i]) * scale;
            }
        }
        LossKind::CrossEntropy => {
            for i in 0..delta.data().len() {
                delta.data_mut()[i] = (outputs.data()[i] - batch.targets.data()[i]) * scale;
            }
        }
    }

    let mut grads = GradSet::zeros(spec);
    for l in (0..m).rev() {
        let fan_in = spec.fan_in(l);
        let fan_out = spec.fan_out(l);
        let prev: &Matrix = if l == 0 { &batch.inputs } else { &pass.layer_outputs[l - 1] };
        {
            let glayer = &mut grads.layers[l];
            let (gw, gb) = glayer.split_at_mut(fan_in * fan_out);
            for r in 0..b {
                let d_row = delta.row(r);
                let p_row = prev.row(r);
                for (o, d) in d_row.iter().enumerate() {
                    gb[o] += d;
                    let gw_row = &mut gw[o * fan_in..(o + 1) * fan_in];
                    for (g, p) in gw_row.iter_mut().zip(p_row) {
                        *g += d * p;
                    }
                }
            }
        }
        if l > 0 {
            // delta_prev = (delta . W_l) * act'(a_prev), evaluated at stored
            // post-activations.
            let layer = &params.layers[l];
            let weights = &layer[..fan_in * fan_out];
            let mut next_delta = Matrix::zeros(b, fan_in);
            for r in 0..b {
                let d_row = delta.row(r);
                let nd_row = next_delta.row_mut(r);
                for (o, d) in d_row.iter().enumerate() {
                    let w_row = &weights[o * fan_in..(o + 1) * fan_in];
                    for (nd, w) in nd_row.iter_mut().zip(w_row) {
                        *nd += d * w;
                    }
                }
                let a_row = prev.row(r);
                for (nd, a) in nd_row.iter_mut().zip(a_row) {
                    *nd *= spec.activation.derivative_from_output(*a);
                }
            }
            delta = next_delta;
        }
    }
    Ok((loss_value, grads))
}

/// Batch loss at `params` (forward plus loss, no gradient).
pub fn data_loss(spec: &ModelSpec, params: &ParamSet, batch: &Batch) -> Result<f64> {
    batch.check_dims(spec)?;
    let pass = forward(spec, params, &batch.inputs)?;
    loss(spec, pass.outputs(), &batch.targets)
}

/// Scalar used for champion selection: batch loss for regression models,
/// classification error rate (argmax mismatch fraction) for cross-entropy
/// models. Argmax ties resolve to the smallest index on both sides.
pub fn validation_metric(spec: &ModelSpec, params: &ParamSet, batch: &Batch) -> Result<f64> {
    match spec.loss_kind {
        LossKind::MeanSquaredError => data_loss(spec, params, batch),
        LossKind::CrossEntropy => {
            batch.check_dims(spec)?;
            let pass = forward(spec, params, &batch.inputs)?;
            let outputs = pass.outputs();
            let mut wrong = 0usize;
            for r in 0..outputs.rows() {
                if argmax(outputs.row(r)) != argmax(batch.targets.row(r)) {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / outputs.rows() as f64)
        }
    }
}

/// Index of the largest entry; first occurrence wins ties.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = row[0];
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
