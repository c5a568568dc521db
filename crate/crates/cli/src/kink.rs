//! Degenerate-predictor detection for 1-D regressors.
//!
//! A failed training run leaves the predictor affine on one or two pieces
//! of the input range (a "kink" at the joint, or no bend at all) instead of
//! tracking the curved target. The detector fits one affine piece, then
//! every two-piece split of a dense prediction grid, and flags the model
//! when the best fit is essentially exact relative to the prediction
//! variance.

use persistent_core::model::ModelSpec;
use persistent_core::{net, Matrix, ParamSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Minimum number of grid points for a meaningful split search.
pub const KINK_GRID_MIN: usize = 16;
/// Best-fit mean-square residual must drop below this fraction of the
/// prediction variance to count as piecewise-affine.
pub const KINK_RESIDUAL_REL_TOL: f64 = 1e-3;
/// Grid used when probing a model over the regression input range.
pub const KINK_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    pub is_piecewise_affine: bool,
    /// Joint location for a genuine two-piece fit; `None` for a single
    /// affine piece (constant predictors included) and for healthy models.
    pub knot_location: Option<f64>,
    /// Best single-piece mean-square residual over prediction variance.
    pub one_piece_rel_residual: f64,
    /// Best two-piece mean-square residual over prediction variance.
    pub two_piece_rel_residual: f64,
}

/// Sum of squared residuals of the least-squares line through
/// `(xs[lo..hi], ys[lo..hi])`. Needs two or more distinct x values.
fn affine_sse(xs: &[f64], ys: &[f64], lo: usize, hi: usize) -> f64 {
    let n = (hi - lo) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in lo..hi {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    let det = n * sxx - sx * sx;
    let a = (n * sxy - sx * sy) / det;
    let b = (sy - a * sx) / n;
    (lo..hi).map(|i| (ys[i] - a * xs[i] - b) * (ys[i] - a * xs[i] - b)).sum()
}

/// Mean squared residual of the best affine fit; the natural "did the model
/// learn anything nonlinear" floor for a 1-D sample set.
pub fn affine_floor(xs: &[f64], ys: &[f64]) -> f64 {
    affine_sse(xs, ys, 0, xs.len()) / xs.len() as f64
}

/// Classifies a dense grid of predictions as piecewise-affine or not.
///
/// `xs` must be strictly increasing with at least [`KINK_GRID_MIN`] entries.
/// A constant prediction is degenerate-affine by definition; otherwise the
/// one-piece fit is tried first (reported with no knot), then an exhaustive
/// two-piece search with at least two points per side.
pub fn detect_kink(xs: &[f64], ys: &[f64]) -> Result<KinkReport> {
    let n = xs.len();
    if n != ys.len() {
        return Err(CliError::config(format!(
            "grid has {n} x values but {} predictions",
            ys.len()
        )));
    }
    if n < KINK_GRID_MIN {
        return Err(CliError::config(format!(
            "kink detection needs a grid of at least {KINK_GRID_MIN} points, got {n}"
        )));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("kink grid must be strictly increasing"));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(CliError::config("kink grid holds non-finite values"));
    }

    let mean = ys.iter().sum::<f64>() / n as f64;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Ok(KinkReport {
            is_piecewise_affine: true,
            knot_location: None,
            one_piece_rel_residual: 0.0,
            two_piece_rel_residual: 0.0,
        });
    }

    let one_piece_rel = affine_sse(xs, ys, 0, n) / n as f64 / var;
    let mut best_sse = f64::INFINITY;
    let mut best_split = 0;
    for k in 2..=(n - 2) {
        let sse = affine_sse(xs, ys, 0, k) + affine_sse(xs, ys, k, n);
        if sse < best_sse {
            best_sse = sse;
            best_split = k;
        }
    }
    let two_piece_rel = best_sse / n as f64 / var;

    if one_piece_rel <= KINK_RESIDUAL_REL_TOL {
        return Ok(KinkReport {
            is_piecewise_affine: true,
            knot_location: None,
            one_piece_rel_residual: one_piece_rel,
            two_piece_rel_residual: two_piece_rel,
        });
    }
    let is_pa = two_piece_rel <= KINK_RESIDUAL_REL_TOL;
    Ok(KinkReport {
        is_piecewise_affine: is_pa,
        knot_location: is_pa.then(|| (xs[best_split - 1] + xs[best_split]) / 2.0),
        one_piece_rel_residual: one_piece_rel,
        two_piece_rel_residual: two_piece_rel,
    })
}

/// Uniform grid of `n` points spanning `[lo, hi]` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Runs [`detect_kink`] on a model's predictions over the regression range.
pub fn detect_model_kink(spec: &ModelSpec, params: &ParamSet) -> Result<KinkReport> {
    let xs = uniform_grid(-3.0, 3.0, KINK_GRID_POINTS);
    let grid = Matrix::from_vec(KINK_GRID_POINTS, 1, xs.clone())?;
    let ys = net::forward(spec, params, &grid)?.outputs().data().to_vec();
    detect_kink(&xs, &ys)
}
