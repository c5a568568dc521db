//! Per-layer activation saturation statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Activation, Batch, ModelSpec};
use crate::net;
use crate::param::ParamSet;

/// Bin count of every activation histogram.
pub const HISTOGRAM_BINS: usize = 50;

/// Default |activation| level above which a tanh unit counts as saturated.
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 0.98;

/// Normalized histogram: 51 edges bracketing 50 bins, densities integrating
/// to one over the covered range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    /// Histogram of `values` over `[lo, hi]` with [`HISTOGRAM_BINS`] bins.
    ///
    /// Values outside the range land in the nearest edge bin so no mass is
    /// lost; a value equal to `hi` lands in the last bin. Density is
    /// `count / (n * bin_width)`, making the piecewise-constant function
    /// integrate to exactly one.
    pub fn normalized(values: &[f64], lo: f64, hi: f64) -> Result<Histogram> {
        if values.is_empty() {
            return Err(Error::InvalidSpec("histogram of no values".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidSpec(alloc::format!(
                "histogram range [{lo}, {hi}] is not a finite interval"
            )));
        }
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        let bin_edges: Vec<f64> =
            (0..=HISTOGRAM_BINS).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for &v in values {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput("histogram value".into()));
            }
            let raw = (v - lo) / width;
            let idx = if raw < 0.0 {
                0
            } else if raw >= HISTOGRAM_BINS as f64 {
                HISTOGRAM_BINS - 1
            } else {
                raw as usize
            };
            counts[idx] += 1;
        }
        let scale = 1.0 / (values.len() as f64 * width);
        let densities = counts.iter().map(|&c| c as f64 * scale).collect();
        Ok(Histogram { bin_edges, densities })
    }

    /// Integral of the piecewise-constant density over its range.
    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Saturation view of one hidden layer for one batch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSaturation {
    /// 98th percentile of |activation| over all units and samples.
    pub p98_abs_activation: f64,
    pub histogram: Histogram,
    /// Tanh: fraction of activations beyond the threshold in magnitude.
    /// Relu: fraction of units that output exactly zero for every sample.
    pub dead_fraction: f64,
}

/// All hidden layers of one model state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SaturationSnapshot {
    pub layers: Vec<LayerSaturation>,
}

/// One snapshot tagged with the epoch (or step index) it was taken at.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SaturationRecord {
    pub epoch: usize,
    pub snapshot: SaturationSnapshot,
}

/// Snapshot series over a training run.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SaturationReport {
    pub records: Vec<SaturationRecord>,
}

/// Interpolated percentile of `values` (unsorted), `p` in `[0, 100]`.
///
/// Uses the linear-interpolation estimator: rank `p/100 * (n-1)` between
/// the ascending order statistics.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidSpec("percentile of no values".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidSpec(alloc::format!("percentile {p} outside [0, 100]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("percentile value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Saturation statistics of every hidden layer at `params` on `batch`.
///
/// `threshold` (in `(0, 1)`) only affects tanh layers. Histogram ranges:
/// tanh layers use the fixed `[-1, 1]`; relu layers use `[0, max]`
/// (widened to `[0, 1]` when the layer is entirely zero). Models whose
/// hidden activation is `identity` have no saturation notion and are
/// rejected.
pub fn saturation_snapshot(
    spec: &ModelSpec,
    params: &ParamSet,
    batch: &Batch,
    threshold: f64,
) -> Result<SaturationSnapshot> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidSpec(alloc::format!(
            "saturation threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if spec.activation == Activation::Identity && spec.num_layers() > 1 {
        return Err(Error::InvalidSpec(
            "identity hidden activation has no saturation statistics".into(),
        ));
    }
    batch.check_dims(spec)?;
    let pass = net::forward(spec, params, &batch.inputs)?;
    let hidden = &pass.layer_outputs[..spec.num_layers() - 1];
    let mut layers = Vec::with_capacity(hidden.len());
    for acts in hidden {
        let values = acts.data();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("activation value".into()));
        }
        let abs: Vec<f64> = values.iter().map(|v| libm::fabs(*v)).collect();
        let p98 = percentile(&abs, 98.0)?;
        let (histogram, dead_fraction) = match spec.activation {
            Activation::Tanh => {
                let hist = Histogram::normalized(values, -1.0, 1.0)?;
                let saturated = abs.iter().filter(|&&a| a > threshold).count();
                (hist, saturated as f64 / abs.len() as f64)
            }
            Activation::Relu => {
                let max = values.iter().fold(0.0f64, |m, &v| m.max(v));
                let hi = if max > 0.0 { max } else { 1.0 };
                let hist = Histogram::normalized(values, 0.0, hi)?;
                // A unit is dead when it outputs zero on the whole batch.
                let width = acts.cols();
                let mut dead = 0usize;
                for unit in 0..width {
                    if (0..acts.rows()).all(|r| acts.get(r, unit) == 0.0) {
                        dead += 1;
                    }
                }
                (hist, dead as f64 / width as f64)
            }
            Activation::Identity => unreachable!("rejected above"),
        };
        layers.push(LayerSaturation { p98_abs_activation: p98, histogram, dead_fraction });
    }
    Ok(SaturationSnapshot { layers })
}
