//! Dense Hessian of the batch loss by central differences of the exact
//! gradient.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Batch, ModelSpec};
use crate::net;
use crate::param::ParamSet;

/// Hard cap on parameter count: the sweep runs `2 * n` backward passes and
/// stores an `n x n` matrix, so it is meant for small probe models only.
pub const HESSIAN_PARAM_LIMIT: usize = 2_000;

/// Relative step used per coordinate: `1e-5 * max(1, |theta_j|)`.
fn fd_step(theta_j: f64) -> f64 {
    1e-5 * libm::fabs(theta_j).max(1.0)
}

/// Raw finite-difference Hessian, column `j` holding
/// `(grad(theta + e_j h) - grad(theta - e_j h)) / (2 h)`.
///
/// Round-off makes this very slightly asymmetric; [`hessian_dense`] is the
/// symmetrized version callers normally want.
pub fn hessian_dense_raw(spec: &ModelSpec, params: &ParamSet, batch: &Batch) -> Result<Matrix> {
    spec.validate()?;
    params.check_shape(spec)?;
    let n = params.param_count();
    if n > HESSIAN_PARAM_LIMIT {
        return Err(Error::TooManyParameters { count: n, limit: HESSIAN_PARAM_LIMIT });
    }
    if !params.is_finite() {
        return Err(Error::NonFiniteInput("hessian base point".into()));
    }
    let mut h = Matrix::zeros(n, n);
    let mut probe = params.clone();
    for j in 0..n {
        let base = probe.get_flat(j);
        let step = fd_step(base);
        probe.set_flat(j, base + step);
        let (_, gplus) = net::backward(spec, &probe, batch)?;
        probe.set_flat(j, base - step);
        let (_, gminus) = net::backward(spec, &probe, batch)?;
        probe.set_flat(j, base);
        let gplus = gplus.flatten();
        let gminus = gminus.flatten();
        let inv = 1.0 / (2.0 * step);
        for i in 0..n {
            h.set(i, j, (gplus[i] - gminus[i]) * inv);
        }
    }
    Ok(h)
}

/// Symmetrized finite-difference Hessian `(H + H^T) / 2`.
pub fn hessian_dense(spec: &ModelSpec, params: &ParamSet, batch: &Batch) -> Result<Matrix> {
    let raw = hessian_dense_raw(spec, params, batch)?;
    let n = raw.rows();
    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym.set(i, j, 0.5 * (raw.get(i, j) + raw.get(j, i)));
        }
    }
    Ok(sym)
}
