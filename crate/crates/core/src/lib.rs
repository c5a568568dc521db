//! Numerical core for persistent training of small dense networks.
//!
//! Persistent training repeats gradient descent from one fixed initialization.
//! Every round after the first adds a penalty that punishes alignment between
//! the current parameters and each previously converged solution, layer by
//! layer, so the optimizer is pushed out of basins it has already visited.
//! The round whose solution validates best is kept as the champion.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: given the
//! same seeds and inputs, every function reproduces its results bit for bit.
//! It contains no I/O; serialization of the core types is available behind
//! the `serde` feature and file formats live in the companion CLI crate.
//!
//! Module map:
//!
//! * [`matrix`]: row-major dense `f64` matrix used for batches and Hessians.
//! * [`model`]: network/architecture description and data containers.
//! * [`param`]: per-layer flattened parameter and gradient vectors.
//! * [`net`]: initialization, forward pass, loss, exact backprop.
//! * [`optim`]: gradient descent, heavy-ball momentum, Adam.
//! * [`persistent`]: solution registry, alignment penalty, training loop,
//!   champion selection, and the bias/noise gradient decomposition.
//! * [`landscape2d`]: two-Gaussian toy surface where escapes are visible.
//! * [`metrics`]: saturation statistics, dense Hessians, eigenspectra.
//! * [`seed`]: stable derivation of purpose-specific sub-seeds.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

// The library itself is no_std; its tests use the host standard library.
#[cfg(test)]
extern crate std;

pub mod error;
pub mod landscape2d;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod net;
pub mod optim;
pub mod param;
pub mod persistent;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{Activation, Batch, InitKind, InitSpec, LossKind, ModelSpec, OutputActivation, SplitData};
pub use param::{GradSet, ParamSet};
