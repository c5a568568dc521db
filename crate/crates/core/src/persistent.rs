//! Persistent training: penalize alignment with previously found solutions.
//!
//! A run is a sequence of training iterations that all start from the same
//! initialization. Iteration 0 trains plainly. Every later iteration `n`
//! minimizes
//!
//! ```text
//! L_n(theta) = L(theta)
//!   + lambda * sum_{k<n} sum_{l} |dot(S_k^l, theta^l)| / ||S_k^l||^2
//! ```
//!
//! where `S_k^l` is layer `l` of the `k`-th converged solution, stored in a
//! [`SolutionRegistry`]. The penalty is cheapest where the current layer
//! vector is orthogonal to every stored one, so descent is steered into
//! basins that have not been visited. In `partial` mode the inner sum runs
//! over a single layer drawn per iteration instead of all layers. After all
//! iterations, the champion is the iteration whose validation metric is
//! smallest (ties to the earliest), which may well be iteration 0.
//!
//! The subgradient of `|dot(S, theta)|` at the sign boundary is taken as 0,
//! matching the relu convention in [`crate::net`].

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, SplitData};
use crate::net;
use crate::optim::{self, OptimizerConfig, OptimizerState};
use crate::param::{GradSet, ParamSet};

/// Which layers the penalty sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PenaltyMode {
    /// Every layer, every stored solution.
    Full,
    /// One layer per iteration, drawn uniformly from a dedicated stream.
    Partial,
}

/// Scope actually applied during one iteration: all layers, or a single
/// drawn layer index. `Full` mode always maps to [`PenaltyScope::AllLayers`];
/// `Partial` maps to [`PenaltyScope::Layer`] with that iteration's draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyScope {
    AllLayers,
    Layer(usize),
}

/// Hyperparameters of a persistent run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PersistentConfig {
    /// Penalty strength; must be positive and finite.
    pub lambda: f64,
    pub mode: PenaltyMode,
    /// Total training iterations including the plain one; at least 1.
    pub iterations: usize,
    /// Optimizer steps per iteration; at least 1.
    pub inner_steps: usize,
    /// Seed of the layer-selection stream used by `partial` mode.
    pub layer_seed: u64,
}

impl PersistentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidSpec(alloc::format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidSpec("iterations must be at least 1".into()));
        }
        if self.inner_steps == 0 {
            return Err(Error::InvalidSpec("inner_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged solutions collected so far, with cached squared layer norms.
///
/// Push order is iteration order; the penalty divides by the cached norms,
/// so snapshots with an all-zero layer are rejected at the door.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionRegistry {
    snapshots: Vec<ParamSet>,
    norms_sq: Vec<Vec<f64>>,
}

impl SolutionRegistry {
    pub fn new() -> Self {
        SolutionRegistry::default()
    }

    /// Rebuilds a registry from stored snapshots, revalidating each.
    pub fn from_snapshots(snapshots: Vec<ParamSet>) -> Result<Self> {
        let mut registry = SolutionRegistry::new();
        for s in snapshots {
            registry.push(s)?;
        }
        Ok(registry)
    }

    /// Validates and appends one converged solution.
    pub fn push(&mut self, snapshot: ParamSet) -> Result<()> {
        if !snapshot.is_finite() {
            return Err(Error::NonFiniteInput("registry snapshot".into()));
        }
        if let Some(first) = self.snapshots.first() {
            if !first.same_shape(&snapshot) {
                return Err(Error::ShapeMismatch(
                    "snapshot shape differs from registry contents".into(),
                ));
            }
        }
        let norms: Vec<f64> = snapshot
            .layers
            .iter()
            .map(|layer| layer.iter().map(|v| v * v).sum())
            .collect();
        if let Some(layer) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::ZeroNormSnapshotLayer { layer });
        }
        self.snapshots.push(snapshot);
        self.norms_sq.push(norms);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[ParamSet] {
        &self.snapshots
    }

    /// Cached `||S_k^l||^2`, indexed `[k][l]`.
    pub fn norms_sq(&self) -> &[Vec<f64>] {
        &self.norms_sq
    }
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_penalty_args(
    params: &ParamSet,
    registry: &SolutionRegistry,
    lambda: f64,
    scope: PenaltyScope,
) -> Result<()> {
    if registry.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    if !params.same_shape(&registry.snapshots[0]) {
        return Err(Error::ShapeMismatch(
            "parameter shape differs from registry snapshots".into(),
        ));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidSpec(alloc::format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if let PenaltyScope::Layer(l) = scope {
        if l >= params.num_layers() {
            return Err(Error::LayerOutOfRange { layer: l, num_layers: params.num_layers() });
        }
    }
    Ok(())
}

fn scope_layers(scope: PenaltyScope, num_layers: usize) -> core::ops::Range<usize> {
    match scope {
        PenaltyScope::AllLayers => 0..num_layers,
        PenaltyScope::Layer(l) => l..l + 1,
    }
}

/// Alignment penalty value at `params` against every registered solution.
pub fn penalty(
    params: &ParamSet,
    registry: &SolutionRegistry,
    lambda: f64,
    scope: PenaltyScope,
) -> Result<f64> {
    check_penalty_args(params, registry, lambda, scope)?;
    let mut total = 0.0;
    for (snapshot, norms) in registry.snapshots().iter().zip(registry.norms_sq()) {
        for l in scope_layers(scope, params.num_layers()) {
            total += libm::fabs(dot(&snapshot.layers[l], &params.layers[l])) / norms[l];
        }
    }
    Ok(lambda * total)
}

/// Subgradient of [`penalty`] with respect to `params`.
///
/// Per snapshot and in-scope layer this adds
/// `lambda * sign(dot) / ||S||^2 * S` to the layer gradient, with sign 0 at
/// the boundary, so the result is zero exactly where the penalty is flat.
pub fn penalty_grad(
    params: &ParamSet,
    registry: &SolutionRegistry,
    lambda: f64,
    scope: PenaltyScope,
) -> Result<GradSet> {
    check_penalty_args(params, registry, lambda, scope)?;
    let mut grads = GradSet::zeros_like(params);
    for (snapshot, norms) in registry.snapshots().iter().zip(registry.norms_sq()) {
        for l in scope_layers(scope, params.num_layers()) {
            let s = sign0(dot(&snapshot.layers[l], &params.layers[l]));
            if s == 0.0 {
                continue;
            }
            let coeff = lambda * s / norms[l];
            for (g, sv) in grads.layers[l].iter_mut().zip(&snapshot.layers[l]) {
                *g += coeff * sv;
            }
        }
    }
    Ok(grads)
}

/// Penalized loss and its gradient: data term from [`net::backward`] plus
/// the alignment term. Returns `(data_loss + penalty, gradient)`.
pub fn persistent_backward(
    spec: &ModelSpec,
    params: &ParamSet,
    batch: &crate::model::Batch,
    registry: &SolutionRegistry,
    lambda: f64,
    scope: PenaltyScope,
) -> Result<(f64, GradSet)> {
    let (data_loss, mut grads) = net::backward(spec, params, batch)?;
    let pen = penalty(params, registry, lambda, scope)?;
    let pen_grad = penalty_grad(params, registry, lambda, scope)?;
    grads.add_scaled(&pen_grad, 1.0)?;
    Ok((data_loss + pen, grads))
}

/// Everything recorded about one training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 0 for the plain iteration, then counting up.
    pub iteration: usize,
    /// The drawn layer in partial mode; `None` for iteration 0 and full mode.
    pub selected_layer: Option<usize>,
    /// Data loss (without penalty) before each optimizer step.
    pub loss_curve: Vec<f64>,
    /// Data loss on the training split at the final parameters.
    pub final_train_loss: f64,
    /// Validation metric at the final parameters (champion criterion).
    pub final_val_metric: f64,
    /// Test metric at the final parameters, reported but never selected on.
    pub final_test_metric: f64,
    /// The converged parameters themselves.
    pub params: ParamSet,
}

/// Per-step information passed to observers while training runs.
#[derive(Debug)]
pub struct StepInfo<'a> {
    pub iteration: usize,
    pub step: usize,
    /// Data loss before this step's update.
    pub data_loss: f64,
    /// Penalty value before this step's update (0 in iteration 0).
    pub penalty: f64,
    /// Parameters before this step's update.
    pub params: &'a ParamSet,
}

/// Hook into a running [`run_persistent_observed`] call.
///
/// Observers only watch: they cannot change the run, and the default
/// implementations do nothing.
pub trait RunObserver {
    fn on_step(&mut self, _info: &StepInfo<'_>) {}
    fn on_iteration(&mut self, _record: &IterationRecord, _registry: &SolutionRegistry) {}
}

/// Observer that ignores everything.
pub struct NoopObserver;

impl RunObserver for NoopObserver {}

/// Outcome of a full persistent run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<IterationRecord>,
    pub registry: SolutionRegistry,
    /// Iteration with the smallest validation metric, ties to the earliest.
    pub champion_index: usize,
}

impl RunResult {
    pub fn champion(&self) -> &IterationRecord {
        &self.records[self.champion_index]
    }

    /// The plain (unpenalized) iteration.
    pub fn plain(&self) -> &IterationRecord {
        &self.records[0]
    }
}

/// Runs the full persistent procedure without observation.
pub fn run_persistent(
    spec: &ModelSpec,
    data: &SplitData,
    optimizer: &OptimizerConfig,
    config: &PersistentConfig,
    init_seed: u64,
) -> Result<RunResult> {
    run_persistent_observed(spec, data, optimizer, config, init_seed, &mut NoopObserver)
}

/// Runs the full persistent procedure.
///
/// Every iteration re-initializes from `init_seed` and trains for
/// `config.inner_steps` full-batch steps with a fresh optimizer state.
/// Iteration `n > 0` penalizes alignment against the `n` solutions already
/// in the registry. The registry grows by exactly one snapshot per
/// iteration; a non-finite loss or gradient aborts the whole run.
pub fn run_persistent_observed(
    spec: &ModelSpec,
    data: &SplitData,
    optimizer: &OptimizerConfig,
    config: &PersistentConfig,
    init_seed: u64,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    spec.validate()?;
    optimizer.validate()?;
    config.validate()?;
    data.check_dims(spec)?;

    let seeded_spec = spec.with_seed(init_seed);
    let mut layer_rng = ChaCha8Rng::seed_from_u64(config.layer_seed);
    let mut registry = SolutionRegistry::new();
    let mut records: Vec<IterationRecord> = Vec::with_capacity(config.iterations);

    for n in 0..config.iterations {
        let scope = if n == 0 {
            None
        } else {
            Some(match config.mode {
                PenaltyMode::Full => PenaltyScope::AllLayers,
                PenaltyMode::Partial => {
                    PenaltyScope::Layer(layer_rng.random_range(0..spec.num_layers()))
                }
            })
        };
        let selected_layer = match scope {
            Some(PenaltyScope::Layer(l)) => Some(l),
            _ => None,
        };

        let mut params = net::init_params(&seeded_spec)?;
        let mut state = OptimizerState::new(optimizer, &params);
        let mut loss_curve = Vec::with_capacity(config.inner_steps);

        for step in 0..config.inner_steps {
            let (data_loss, mut grads) = net::backward(spec, &params, &data.train)?;
            let pen = match scope {
                None => 0.0,
                Some(s) => {
                    let pg = penalty_grad(&params, &registry, config.lambda, s)?;
                    grads.add_scaled(&pg, 1.0)?;
                    penalty(&params, &registry, config.lambda, s)?
                }
            };
            if !(data_loss + pen).is_finite() {
                return Err(Error::NonFiniteLoss { iteration: n, step });
            }
            observer.on_step(&StepInfo {
                iteration: n,
                step,
                data_loss,
                penalty: pen,
                params: &params,
            });
            loss_curve.push(data_loss);
            let (next_params, next_state) = optim::step(optimizer, state, params, &grads)?;
            params = next_params;
            state = next_state;
        }

        let final_train_loss = net::data_loss(spec, &params, &data.train)?;
        let final_val_metric = net::validation_metric(spec, &params, &data.val)?;
        let final_test_metric = net::validation_metric(spec, &params, &data.test)?;
        registry.push(params.clone())?;
        let record = IterationRecord {
            iteration: n,
            selected_layer,
            loss_curve,
            final_train_loss,
            final_val_metric,
            final_test_metric,
            params,
        };
        observer.on_iteration(&record, &registry);
        records.push(record);
    }

    let champion_index = champion_of(&records);
    Ok(RunResult { records, registry, champion_index })
}

/// Smallest validation metric wins; ties resolve to the earliest iteration.
fn champion_of(records: &[IterationRecord]) -> usize {
    let mut best = 0;
    for (i, r) in records.iter().enumerate().skip(1) {
        if r.final_val_metric < records[best].final_val_metric {
            best = i;
        }
    }
    best
}

/// Systematic and residual parts of the penalty gradient along a trajectory.
///
/// Samples are the penalty-gradient term without its `lambda` factor,
/// evaluated at each trajectory point. `bias_estimate` is their empirical
/// mean per layer; `residual_samples[l][j]` is sample `j` minus the mean,
/// so `bias_estimate[l] + residual_samples[l][j]` reconstructs sample `j`
/// exactly and the residual mean vanishes up to round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    /// `lambda` the caller supplied; samples exclude it by construction.
    pub lambda: f64,
    /// Mean penalty-gradient term, `[layer][entry]`.
    pub bias_estimate: Vec<Vec<f64>>,
    /// Centered samples, `[layer][sample][entry]`.
    pub residual_samples: Vec<Vec<Vec<f64>>>,
    /// Euclidean norm of the residual mean across all layers.
    pub residual_mean_norm: f64,
    /// Largest sample norm, the natural scale for `residual_mean_norm`.
    pub max_sample_norm: f64,
}

/// Decomposes the penalty gradient over a recorded trajectory into its mean
/// (systematic bias) and centered per-sample residuals (noise).
pub fn decompose_gradient(
    registry: &SolutionRegistry,
    trajectory: &[ParamSet],
    lambda: f64,
) -> Result<DecompositionReport> {
    if registry.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidSpec(alloc::format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let shape = &registry.snapshots()[0];
    for p in trajectory {
        if !p.same_shape(shape) {
            return Err(Error::ShapeMismatch(
                "trajectory sample shape differs from registry snapshots".into(),
            ));
        }
        if !p.is_finite() {
            return Err(Error::NonFiniteInput("trajectory sample".into()));
        }
    }

    let num_layers = shape.num_layers();
    let num_samples = trajectory.len();

    // Penalty-gradient term per sample, lambda excluded.
    let mut samples: Vec<Vec<Vec<f64>>> = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let layer_len = shape.layers[l].len();
        let mut per_sample = Vec::with_capacity(num_samples);
        for point in trajectory {
            let mut term = alloc::vec![0.0; layer_len];
            for (snapshot, norms) in registry.snapshots().iter().zip(registry.norms_sq()) {
                let s = sign0(dot(&snapshot.layers[l], &point.layers[l]));
                if s == 0.0 {
                    continue;
                }
                let coeff = s / norms[l];
                for (t, sv) in term.iter_mut().zip(&snapshot.layers[l]) {
                    *t += coeff * sv;
                }
            }
            per_sample.push(term);
        }
        samples.push(per_sample);
    }

    let mut max_sample_norm = 0.0f64;
    for j in 0..num_samples {
        let mut norm_sq = 0.0;
        for layer_samples in &samples {
            norm_sq += layer_samples[j].iter().map(|v| v * v).sum::<f64>();
        }
        max_sample_norm = max_sample_norm.max(libm::sqrt(norm_sq));
    }

    let mut bias_estimate = Vec::with_capacity(num_layers);
    let mut residual_samples = Vec::with_capacity(num_layers);
    let inv = 1.0 / num_samples as f64;
    for layer_samples in &samples {
        let layer_len = layer_samples[0].len();
        let mut mean = alloc::vec![0.0; layer_len];
        for sample in layer_samples {
            for (m, v) in mean.iter_mut().zip(sample) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m *= inv;
        }
        let mut residuals = Vec::with_capacity(layer_samples.len());
        for sample in layer_samples {
            let r: Vec<f64> = sample.iter().zip(&mean).map(|(v, m)| v - m).collect();
            residuals.push(r);
        }
        bias_estimate.push(mean);
        residual_samples.push(residuals);
    }

    let mut mean_norm_sq = 0.0;
    for residuals in &residual_samples {
        let layer_len = residuals[0].len();
        for e in 0..layer_len {
            let m: f64 = residuals.iter().map(|r| r[e]).sum::<f64>() * inv;
            mean_norm_sq += m * m;
        }
    }

    Ok(DecompositionReport {
        lambda,
        bias_estimate,
        residual_samples,
        residual_mean_norm: libm::sqrt(mean_norm_sq),
        max_sample_norm,
    })
}
