//! First-order optimizers: plain gradient descent, heavy-ball momentum, Adam.
//!
//! [`step`] is a pure function from (config, state, params, gradient) to the
//! next (params, state); callers own the state and thread it through, which
//! keeps runs replayable and makes state resets explicit. A non-finite
//! gradient is rejected before any parameter is touched.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::param::{GradSet, ParamSet};

#[cfg(feature = "serde")]
fn default_beta1() -> f64 {
    0.9
}

#[cfg(feature = "serde")]
fn default_beta2() -> f64 {
    0.999
}

#[cfg(feature = "serde")]
fn default_epsilon() -> f64 {
    1e-8
}

/// Optimizer family and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum OptimizerConfig {
    /// `theta <- theta - lr * g`
    Gd { learning_rate: f64 },
    /// Heavy ball: `v <- mu * v + g; theta <- theta - lr * v`
    Momentum { learning_rate: f64, momentum_coeff: f64 },
    /// Bias-corrected Adam.
    Adam {
        learning_rate: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_beta1"))]
        beta1: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_beta2"))]
        beta2: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_epsilon"))]
        epsilon: f64,
    },
}

impl OptimizerConfig {
    /// Adam at its customary defaults (beta1 0.9, beta2 0.999, eps 1e-8).
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerConfig::Adam { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerConfig::Gd { learning_rate }
            | OptimizerConfig::Momentum { learning_rate, .. }
            | OptimizerConfig::Adam { learning_rate, .. } => learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.learning_rate();
        if !lr.is_finite() || lr <= 0.0 {
            return Err(Error::InvalidSpec(format!("learning rate must be positive, got {lr}")));
        }
        match *self {
            OptimizerConfig::Gd { .. } => {}
            OptimizerConfig::Momentum { momentum_coeff, .. } => {
                if !momentum_coeff.is_finite() || !(0.0..1.0).contains(&momentum_coeff) {
                    return Err(Error::InvalidSpec(format!(
                        "momentum coefficient must lie in [0, 1), got {momentum_coeff}"
                    )));
                }
            }
            OptimizerConfig::Adam { beta1, beta2, epsilon, .. } => {
                for (name, beta) in [("beta1", beta1), ("beta2", beta2)] {
                    if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                        return Err(Error::InvalidSpec(format!(
                            "{name} must lie in [0, 1), got {beta}"
                        )));
                    }
                }
                if !epsilon.is_finite() || epsilon <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "epsilon must be positive, got {epsilon}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Mutable per-run optimizer memory, matching one [`OptimizerConfig`] kind.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Gd {
        step_count: u64,
    },
    Momentum {
        step_count: u64,
        velocity: Vec<Vec<f64>>,
    },
    Adam {
        step_count: u64,
        first_moment: Vec<Vec<f64>>,
        second_moment: Vec<Vec<f64>>,
    },
}

impl OptimizerState {
    /// Fresh state (zero moments, step count 0) shaped like `params`.
    pub fn new(config: &OptimizerConfig, params: &ParamSet) -> Self {
        let zeros = || -> Vec<Vec<f64>> {
            params.layers.iter().map(|l| vec![0.0; l.len()]).collect()
        };
        match config {
            OptimizerConfig::Gd { .. } => OptimizerState::Gd { step_count: 0 },
            OptimizerConfig::Momentum { .. } => {
                OptimizerState::Momentum { step_count: 0, velocity: zeros() }
            }
            OptimizerConfig::Adam { .. } => OptimizerState::Adam {
                step_count: 0,
                first_moment: zeros(),
                second_moment: zeros(),
            },
        }
    }

    pub fn step_count(&self) -> u64 {
        match *self {
            OptimizerState::Gd { step_count }
            | OptimizerState::Momentum { step_count, .. }
            | OptimizerState::Adam { step_count, .. } => step_count,
        }
    }
}

fn check_buffers(buffers: &[Vec<f64>], params: &ParamSet, what: &str) -> Result<()> {
    let ok = buffers.len() == params.layers.len()
        && buffers.iter().zip(&params.layers).all(|(b, p)| b.len() == p.len());
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!("{what} buffers do not match parameter shape")))
    }
}

/// Applies one update, consuming and returning params and state.
///
/// Rejects gradients with non-finite entries (naming the first offending
/// layer) and state whose kind or shape does not match the config and
/// params; params are returned unchanged in spirit (the call errors before
/// mutating them).
pub fn step(
    config: &OptimizerConfig,
    state: OptimizerState,
    mut params: ParamSet,
    grads: &GradSet,
) -> Result<(ParamSet, OptimizerState)> {
    config.validate()?;
    if !grads.same_shape(&params) {
        return Err(Error::ShapeMismatch("gradient shape does not match parameters".into()));
    }
    if let Some(layer) = grads.first_non_finite_layer() {
        return Err(Error::NonFiniteGradient { layer });
    }
    let lr = config.learning_rate();
    match (config, state) {
        (OptimizerConfig::Gd { .. }, OptimizerState::Gd { step_count }) => {
            for (p, g) in params.layers.iter_mut().zip(&grads.layers) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= lr * gv;
                }
            }
            Ok((params, OptimizerState::Gd { step_count: step_count + 1 }))
        }
        (
            OptimizerConfig::Momentum { momentum_coeff, .. },
            OptimizerState::Momentum { step_count, mut velocity },
        ) => {
            check_buffers(&velocity, &params, "velocity")?;
            for ((p, v), g) in params.layers.iter_mut().zip(&mut velocity).zip(&grads.layers) {
                for ((pv, vv), gv) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vv = momentum_coeff * *vv + gv;
                    *pv -= lr * *vv;
                }
            }
            Ok((params, OptimizerState::Momentum { step_count: step_count + 1, velocity }))
        }
        (
            &OptimizerConfig::Adam { beta1, beta2, epsilon, .. },
            OptimizerState::Adam { step_count, mut first_moment, mut second_moment },
        ) => {
            check_buffers(&first_moment, &params, "first moment")?;
            check_buffers(&second_moment, &params, "second moment")?;
            let t = step_count + 1;
            let bc1 = 1.0 - libm::pow(beta1, t as f64);
            let bc2 = 1.0 - libm::pow(beta2, t as f64);
            for (((p, m), v), g) in params
                .layers
                .iter_mut()
                .zip(&mut first_moment)
                .zip(&mut second_moment)
                .zip(&grads.layers)
            {
                for (((pv, mv), vv), gv) in
                    p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g)
                {
                    *mv = beta1 * *mv + (1.0 - beta1) * gv;
                    *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                    let m_hat = *mv / bc1;
                    let v_hat = *vv / bc2;
                    *pv -= lr * m_hat / (libm::sqrt(v_hat) + epsilon);
                }
            }
            Ok((
                params,
                OptimizerState::Adam { step_count: t, first_moment, second_moment },
            ))
        }
        (config, state) => Err(Error::ShapeMismatch(format!(
            "state kind {} does not match config kind {}",
            state_kind(&state),
            config_kind(config)
        ))),
    }
}

fn config_kind(c: &OptimizerConfig) -> &'static str {
    match c {
        OptimizerConfig::Gd { .. } => "gd",
        OptimizerConfig::Momentum { .. } => "momentum",
        OptimizerConfig::Adam { .. } => "adam",
    }
}

fn state_kind(s: &OptimizerState) -> &'static str {
    match s {
        OptimizerState::Gd { .. } => "gd",
        OptimizerState::Momentum { .. } => "momentum",
        OptimizerState::Adam { .. } => "adam",
    }
}
