//! Architecture description and data containers.
//!
//! A [`ModelSpec`] fixes everything about a fully connected network except
//! its parameter values: layer widths, activations, loss, and how parameters
//! are initialized. Specs are plain data so runs can be reproduced from a
//! serialized copy alone.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Hidden-layer activation, applied elementwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y = apply(x)`.
    ///
    /// For relu the subgradient at the kink is taken as 0, so `y == 0`
    /// maps to derivative 0.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Transformation applied to the last layer's pre-activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OutputActivation {
    Identity,
    Softmax,
}

/// Training loss, averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    MeanSquaredError,
    CrossEntropy,
}

/// Weight initialization family. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitKind {
    /// Zero-mean normal with std `sqrt(2 / fan_in)`.
    HeNormal,
    /// Zero-mean normal with std `sqrt(2 / (fan_in + fan_out))`.
    XavierNormal,
    /// Zero-mean normal with the explicit std `sigma`.
    Normal,
}

/// How to draw initial weights. `sigma` is only read by [`InitKind::Normal`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitSpec {
    pub kind: InitKind,
    pub sigma: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "init sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        if self.kind == InitKind::Normal && self.sigma == 0.0 {
            return Err(Error::InvalidSpec(
                "normal init with sigma 0 would zero every weight".into(),
            ));
        }
        Ok(())
    }
}

/// Fully connected network: widths of every activation vector from input to
/// output, shared hidden activation, output transform, and loss.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    /// `[input_dim, hidden..., output_dim]`; at least two entries.
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub output_activation: OutputActivation,
    pub loss_kind: LossKind,
    pub initializer: InitSpec,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "layer_widths needs input and output entries, got {} entries",
                self.layer_widths.len()
            )));
        }
        if let Some(pos) = self.layer_widths.iter().position(|&w| w == 0) {
            return Err(Error::InvalidSpec(format!("layer_widths[{pos}] is zero")));
        }
        // The two supported pairings; mixing them has no consistent gradient.
        match (self.loss_kind, self.output_activation) {
            (LossKind::MeanSquaredError, OutputActivation::Identity) => {}
            (LossKind::CrossEntropy, OutputActivation::Softmax) => {}
            (loss, out) => {
                return Err(Error::InvalidSpec(format!(
                    "loss {loss:?} cannot pair with output activation {out:?}"
                )));
            }
        }
        self.initializer.validate()
    }

    /// Number of weight layers (one less than `layer_widths.len()`).
    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layer_widths[self.layer_widths.len() - 1]
    }

    /// Input width of layer `l`.
    pub fn fan_in(&self, layer: usize) -> usize {
        self.layer_widths[layer]
    }

    /// Output width of layer `l`.
    pub fn fan_out(&self, layer: usize) -> usize {
        self.layer_widths[layer + 1]
    }

    /// Flattened length of layer `l`: weights plus biases.
    pub fn layer_param_count(&self, layer: usize) -> usize {
        self.fan_in(layer) * self.fan_out(layer) + self.fan_out(layer)
    }

    /// Total parameter count across layers.
    pub fn param_count(&self) -> usize {
        (0..self.num_layers()).map(|l| self.layer_param_count(l)).sum()
    }

    /// Copy of the spec with the initializer seed replaced.
    pub fn with_seed(&self, seed: u64) -> ModelSpec {
        let mut spec = self.clone();
        spec.initializer.seed = seed;
        spec
    }
}

/// Inputs and targets with matching row counts; one row per sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Batch {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Batch {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} input rows vs {} target rows",
                inputs.rows(),
                targets.rows()
            )));
        }
        if inputs.rows() == 0 {
            return Err(Error::InvalidSpec("batch holds no samples".into()));
        }
        Ok(Batch { inputs, targets })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    /// Checks the batch against a model's input and output widths.
    pub fn check_dims(&self, spec: &ModelSpec) -> Result<()> {
        if self.inputs.cols() != spec.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch input width {} vs model input width {}",
                self.inputs.cols(),
                spec.input_dim()
            )));
        }
        if self.targets.cols() != spec.output_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch target width {} vs model output width {}",
                self.targets.cols(),
                spec.output_dim()
            )));
        }
        Ok(())
    }
}

/// Train/validation/test triple produced by the data generators.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitData {
    pub train: Batch,
    pub val: Batch,
    pub test: Batch,
}

impl SplitData {
    /// Checks all three splits against the model's widths.
    pub fn check_dims(&self, spec: &ModelSpec) -> Result<()> {
        self.train.check_dims(spec)?;
        self.val.check_dims(spec)?;
        self.test.check_dims(spec)
    }
}
