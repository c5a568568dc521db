//! Error type shared by the whole core.

use alloc::string::String;
use core::fmt;

/// Alias used by every fallible function in this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical core.
///
/// Validation failures (bad specs, shape mismatches, out-of-range arguments)
/// are reported before any arithmetic runs; numerical failures (non-finite
/// losses, gradients or iterates, eigensolver stagnation) abort the
/// computation that produced them.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A specification or configuration failed validation.
    InvalidSpec(String),
    /// Two containers that must agree in shape do not.
    ShapeMismatch(String),
    /// A layer index addressed a layer the model does not have.
    LayerOutOfRange { layer: usize, num_layers: usize },
    /// An operation that needs at least one registered solution got none.
    EmptyRegistry,
    /// A gradient decomposition was asked for an empty trajectory.
    EmptyTrajectory,
    /// A snapshot layer with zero norm cannot enter the registry: the
    /// penalty divides by the squared layer norm.
    ZeroNormSnapshotLayer { layer: usize },
    /// A 2-d registry point with zero norm cannot be penalized against.
    ZeroNormSnapshot { index: usize },
    /// The training loss stopped being finite.
    NonFiniteLoss { iteration: usize, step: usize },
    /// A gradient entry of the named layer stopped being finite.
    NonFiniteGradient { layer: usize },
    /// A descent iterate left the representable range.
    NonFiniteIterate { step: usize },
    /// A value that must be finite is not.
    NonFiniteInput(String),
    /// Softmax outputs fed to the cross-entropy loss do not sum to one.
    UnnormalizedDistribution { row: usize, sum: f64 },
    /// The dense Hessian is restricted to small models by design.
    TooManyParameters { count: usize, limit: usize },
    /// The iterative eigensolver hit its sweep limit without converging.
    NoConvergence(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::LayerOutOfRange { layer, num_layers } => {
                write!(f, "layer index {layer} out of range for a {num_layers}-layer model")
            }
            Error::EmptyRegistry => write!(f, "solution registry is empty"),
            Error::EmptyTrajectory => write!(f, "trajectory holds no parameter samples"),
            Error::ZeroNormSnapshotLayer { layer } => {
                write!(f, "snapshot layer {layer} has zero norm")
            }
            Error::ZeroNormSnapshot { index } => {
                write!(f, "registry point {index} has zero norm")
            }
            Error::NonFiniteLoss { iteration, step } => {
                write!(f, "loss became non-finite at iteration {iteration}, step {step}")
            }
            Error::NonFiniteGradient { layer } => {
                write!(f, "gradient of layer {layer} is non-finite")
            }
            Error::NonFiniteIterate { step } => {
                write!(f, "iterate became non-finite at step {step}")
            }
            Error::NonFiniteInput(msg) => write!(f, "non-finite input: {msg}"),
            Error::UnnormalizedDistribution { row, sum } => {
                write!(f, "output row {row} sums to {sum}, expected 1 within 1e-6")
            }
            Error::TooManyParameters { count, limit } => {
                write!(f, "model has {count} parameters, dense Hessian is limited to {limit}")
            }
            Error::NoConvergence(what) => write!(f, "{what} did not converge"),
        }
    }
}

impl core::error::Error for Error {}
