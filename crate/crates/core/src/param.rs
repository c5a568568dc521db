//! Flattened per-layer parameter and gradient vectors.
//!
//! Layer `l` of a model with fan-in `i` and fan-out `o` is stored as one
//! `Vec<f64>` of length `o*i + o`: first the weights in row-major order
//! (all `i` incoming weights of output neuron 0, then neuron 1, ...),
//! then the `o` biases. The alignment penalty, the optimizers and the
//! registry all operate on these vectors directly, so the layout is part
//! of the crate's observable behavior and must not change.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// One flattened vector per layer, weights first, biases last.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamSet {
    pub layers: Vec<Vec<f64>>,
}

/// Gradient with the same shape and layout as its [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GradSet {
    pub layers: Vec<Vec<f64>>,
}

fn zero_layers(spec: &ModelSpec) -> Vec<Vec<f64>> {
    (0..spec.num_layers()).map(|l| vec![0.0; spec.layer_param_count(l)]).collect()
}

fn layers_match(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len())
}

impl ParamSet {
    /// Zero parameters shaped for `spec`.
    pub fn zeros(spec: &ModelSpec) -> Self {
        ParamSet { layers: zero_layers(spec) }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total entry count across layers.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// True when both sides have the same layer count and layer lengths.
    pub fn same_shape(&self, other: &ParamSet) -> bool {
        layers_match(&self.layers, &other.layers)
    }

    /// Checks the layer lengths against what `spec` prescribes.
    pub fn check_shape(&self, spec: &ModelSpec) -> Result<()> {
        if self.layers.len() != spec.num_layers() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameter layers vs {} model layers",
                self.layers.len(),
                spec.num_layers()
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.len() != spec.layer_param_count(l) {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} holds {} entries, spec prescribes {}",
                    layer.len(),
                    spec.layer_param_count(l)
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(|v| v.is_finite()))
    }

    /// Entry at flat position `i`, counting through layers in order.
    /// Panics when out of range; used by the dense Hessian sweep.
    pub fn get_flat(&self, i: usize) -> f64 {
        let (l, off) = self.locate(i);
        self.layers[l][off]
    }

    /// Overwrites the entry at flat position `i`.
    pub fn set_flat(&mut self, i: usize, v: f64) {
        let (l, off) = self.locate(i);
        self.layers[l][off] = v;
    }

    fn locate(&self, mut i: usize) -> (usize, usize) {
        for (l, layer) in self.layers.iter().enumerate() {
            if i < layer.len() {
                return (l, i);
            }
            i -= layer.len();
        }
        panic!("flat index out of range");
    }

    /// Concatenation of all layers, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer);
        }
        out
    }
}

impl GradSet {
    /// Zero gradient shaped for `spec`.
    pub fn zeros(spec: &ModelSpec) -> Self {
        GradSet { layers: zero_layers(spec) }
    }

    /// Zero gradient shaped like an existing parameter set.
    pub fn zeros_like(params: &ParamSet) -> Self {
        GradSet { layers: params.layers.iter().map(|l| vec![0.0; l.len()]).collect() }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn same_shape(&self, params: &ParamSet) -> bool {
        layers_match(&self.layers, &params.layers)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(|v| v.is_finite()))
    }

    /// First layer with a non-finite entry, if any.
    pub fn first_non_finite_layer(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.iter().any(|v| !v.is_finite()))
    }

    /// `self += c * other`; shapes must already agree.
    pub fn add_scaled(&mut self, other: &GradSet, c: f64) -> Result<()> {
        if !layers_match(&self.layers, &other.layers) {
            return Err(Error::ShapeMismatch("gradient shapes differ".into()));
        }
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
        Ok(())
    }

    /// Concatenation of all layers, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layers.iter().map(Vec::len).sum());
        for layer in &self.layers {
            out.extend_from_slice(layer);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, InitKind, InitSpec, LossKind, OutputActivation};

    fn spec() -> ModelSpec {
        ModelSpec {
            layer_widths: vec![2, 3, 1],
            activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            loss_kind: LossKind::MeanSquaredError,
            initializer: InitSpec { kind: InitKind::XavierNormal, sigma: 0.0, seed: 1 },
        }
    }

    #[test]
    fn zeros_match_spec_shape() {
        let p = ParamSet::zeros(&spec());
        assert_eq!(p.layers.len(), 2);
        assert_eq!(p.layers[0].len(), 2 * 3 + 3);
        assert_eq!(p.layers[1].len(), 3 * 1 + 1);
        assert!(p.check_shape(&spec()).is_ok());
    }

    #[test]
    fn check_shape_rejects_wrong_layer_length() {
        let mut p = ParamSet::zeros(&spec());
        p.layers[1].push(0.0);
        assert!(matches!(p.check_shape(&spec()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn flat_indexing_walks_layers_in_order() {
        let mut p = ParamSet::zeros(&spec());
        p.set_flat(0, 1.5);
        p.set_flat(8, 2.5); // last entry of layer 0 (bias 3 of 3)
        p.set_flat(9, 3.5); // first entry of layer 1
        assert_eq!(p.layers[0][0], 1.5);
        assert_eq!(p.layers[0][8], 2.5);
        assert_eq!(p.layers[1][0], 3.5);
        assert_eq!(p.get_flat(9), 3.5);
        let flat = p.flatten();
        assert_eq!(flat.len(), 13);
        assert_eq!(flat[9], 3.5);
    }

    #[test]
    fn add_scaled_accumulates() {
        let s = spec();
        let mut g = GradSet::zeros(&s);
        let mut h = GradSet::zeros(&s);
        h.layers[0][2] = 4.0;
        g.add_scaled(&h, 0.5).unwrap();
        assert_eq!(g.layers[0][2], 2.0);
        let shorter = GradSet { layers: vec![vec![0.0; 3]] };
        assert!(g.add_scaled(&shorter, 1.0).is_err());
    }
}
