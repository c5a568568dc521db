//! Two-Gaussian toy surface where basin escapes are directly visible.
//!
//! The surface
//!
//! ```text
//! f(x, y) = -exp(-((x-2)^2 + (y+2)^2) / 5) - 1.5 * exp(-((x+2)^2 + (y+1)^2))
//! ```
//!
//! has a wide, shallow minimum near `(2, -2)` (depth about -1) and a
//! narrow, deep one near `(-2, -1)` (depth about -1.53). Plain descent
//! from the reference start `(-0.335, -1.4)` drifts into the shallow
//! basin; with an alignment penalty against that converged point the same
//! start escapes to the deep one. The 2-vector `(x, y)` plays the role of
//! a single-layer parameter vector.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Point on the toy surface; doubles as a one-layer "solution" vector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToyPoint {
    pub x: f64,
    pub y: f64,
}

impl ToyPoint {
    pub fn new(x: f64, y: f64) -> Self {
        ToyPoint { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    fn dot(self, other: ToyPoint) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

/// The reference starting point used throughout.
pub const REFERENCE_START: ToyPoint = ToyPoint { x: -0.335, y: -1.4 };

/// Center of the shallow (sub-optimal) basin.
pub const SHALLOW_MINIMUM: ToyPoint = ToyPoint { x: 2.0, y: -2.0 };

/// Center of the deep (global) basin.
pub const DEEP_MINIMUM: ToyPoint = ToyPoint { x: -2.0, y: -1.0 };

/// Surface value at `p`.
pub fn toy_loss(p: ToyPoint) -> f64 {
    let s1 = (p.x - 2.0) * (p.x - 2.0) + (p.y + 2.0) * (p.y + 2.0);
    let s2 = (p.x + 2.0) * (p.x + 2.0) + (p.y + 1.0) * (p.y + 1.0);
    -libm::exp(-s1 / 5.0) - 1.5 * libm::exp(-s2)
}

/// Exact gradient of [`toy_loss`] at `p`.
pub fn toy_grad(p: ToyPoint) -> ToyPoint {
    let s1 = (p.x - 2.0) * (p.x - 2.0) + (p.y + 2.0) * (p.y + 2.0);
    let s2 = (p.x + 2.0) * (p.x + 2.0) + (p.y + 1.0) * (p.y + 1.0);
    let a = libm::exp(-s1 / 5.0);
    let b = libm::exp(-s2);
    ToyPoint {
        x: 0.4 * (p.x - 2.0) * a + 3.0 * (p.x + 2.0) * b,
        y: 0.4 * (p.y + 2.0) * a + 3.0 * (p.y + 1.0) * b,
    }
}

/// One recorded descent position with its plain surface value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: f64,
    /// Plain surface value at `(x, y)`, penalty excluded.
    pub f: f64,
}

/// Full descent path: `steps + 1` points starting at the initial position.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory2D {
    pub points: Vec<TrajectoryPoint>,
    pub converged_to: ToyPoint,
    pub steps: usize,
}

/// Runs `steps` of gradient descent on the toy surface.
///
/// With a non-empty `registry` of previously converged points, each step
/// descends the penalized surface
/// `f(w) + lambda * sum_k |dot(w_k, w)| / ||w_k||^2` (subgradient 0 at
/// sign boundaries); the recorded `f` values always refer to the plain
/// surface. Registry points must be finite and have non-zero norm;
/// `lambda` must be positive whenever the registry is non-empty.
pub fn run_toy(
    start: ToyPoint,
    eta: f64,
    steps: usize,
    registry: &[ToyPoint],
    lambda: f64,
) -> Result<Trajectory2D> {
    if !start.is_finite() {
        return Err(Error::NonFiniteInput("toy start point".into()));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidSpec(alloc::format!(
            "step size must be positive and finite, got {eta}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidSpec("step count must be at least 1".into()));
    }
    for (index, w) in registry.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFiniteInput("registry point".into()));
        }
        if w.norm_sq() == 0.0 {
            return Err(Error::ZeroNormSnapshot { index });
        }
    }
    if !registry.is_empty() && (!lambda.is_finite() || lambda <= 0.0) {
        return Err(Error::InvalidSpec(alloc::format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }

    let mut w = start;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(TrajectoryPoint { x: w.x, y: w.y, f: toy_loss(w) });
    for step in 0..steps {
        let mut g = toy_grad(w);
        for k in registry {
            let d = k.dot(w);
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                let coeff = lambda * s / k.norm_sq();
                g.x += coeff * k.x;
                g.y += coeff * k.y;
            }
        }
        w = ToyPoint { x: w.x - eta * g.x, y: w.y - eta * g.y };
        if !w.is_finite() {
            return Err(Error::NonFiniteIterate { step });
        }
        points.push(TrajectoryPoint { x: w.x, y: w.y, f: toy_loss(w) });
    }
    Ok(Trajectory2D { points, converged_to: w, steps })
}
