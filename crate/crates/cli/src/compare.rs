//! Re-initialization baseline vs persistent training, at equal step budget.
//!
//! The classic escape recipe is restarting from fresh random seeds and
//! keeping the best run. This pass trains `n_seeds` independent plain
//! models that way, then one persistent run of `n_seeds` iterations from
//! the config's own initialization, on the same fixed dataset. Both arms
//! therefore spend exactly `n_seeds * inner_steps` optimizer steps, and
//! the report carries the measured step counts so the parity is checkable
//! rather than assumed.

use std::path::PathBuf;

use persistent_core::persistent::run_persistent;
use persistent_core::seed::derive_seed_indexed;
use serde::{Deserialize, Serialize};

use crate::config::{DataKind, ExperimentConfig, Resolved};
use crate::error::{CliError, Result};
use crate::kink::detect_model_kink;
use crate::runner::{self, RunOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinitEntry {
    pub seed_index: usize,
    pub init_seed: u64,
    pub final_train_loss: f64,
    pub final_val_metric: f64,
    /// Only for 1-D regression tasks, where degeneracy is detectable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_piecewise_affine: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistentEntry {
    pub iteration: usize,
    pub selected_layer: Option<usize>,
    pub final_train_loss: f64,
    pub final_val_metric: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_piecewise_affine: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub experiment: String,
    pub master_seed: u64,
    pub n_seeds: usize,
    pub inner_steps: usize,
    /// Optimizer steps actually spent, summed from the recorded curves.
    pub reinit_total_steps: usize,
    pub persistent_total_steps: usize,
    pub best_reinit_train_loss: f64,
    pub best_persistent_train_loss: f64,
    /// Fraction of each population flagged piecewise-affine; regression only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reinit_kink_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persistent_kink_frequency: Option<f64>,
    pub reinit: Vec<ReinitEntry>,
    pub persistent: Vec<PersistentEntry>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub out_dir: PathBuf,
    pub report: CompareReport,
}

fn kink_frequency(flags: &[Option<bool>]) -> Option<f64> {
    let known: Vec<bool> = flags.iter().copied().collect::<Option<Vec<bool>>>()?;
    Some(known.iter().filter(|&&f| f).count() as f64 / known.len() as f64)
}

/// Runs both arms and writes `comparison.json` (plus a config echo) into
/// `<experiment>-compare-<master_seed>` under the usual output root.
pub fn compare_reinit(
    config: &ExperimentConfig,
    n_seeds: usize,
    options: &RunOptions,
) -> Result<CompareOutcome> {
    if n_seeds == 0 {
        return Err(CliError::config("compare-reinit needs at least one seed"));
    }
    let mut config = config.clone();
    if let Some(seed) = options.seed_override {
        config.master_seed = seed;
    }
    config.validate()?;
    let Resolved::Net(net) = config.resolve()? else {
        return Err(CliError::config(
            "compare-reinit needs a network experiment, not a toy surface run",
        ));
    };
    let data = runner::generate_data(&net)?;
    let detect_kinks = net.data.kind == DataKind::Regress1dSynthetic;

    let mut reinit = Vec::with_capacity(n_seeds);
    let mut reinit_total_steps = 0;
    let mut plain_config = net.persistent;
    plain_config.iterations = 1;
    for seed_index in 0..n_seeds {
        let init_seed = derive_seed_indexed(config.master_seed, "reinit", seed_index as u64);
        let spec = net.spec.with_seed(init_seed);
        let result = run_persistent(&spec, &data, &net.optimizer, &plain_config, init_seed)?;
        let record = result.plain();
        reinit_total_steps += record.loss_curve.len();
        reinit.push(ReinitEntry {
            seed_index,
            init_seed,
            final_train_loss: record.final_train_loss,
            final_val_metric: record.final_val_metric,
            is_piecewise_affine: detect_kinks
                .then(|| detect_model_kink(&spec, &record.params))
                .transpose()?
                .map(|r| r.is_piecewise_affine),
        });
    }

    let mut persistent_config = plain_config;
    persistent_config.iterations = n_seeds;
    let result = run_persistent(
        &net.spec,
        &data,
        &net.optimizer,
        &persistent_config,
        net.spec.initializer.seed,
    )?;
    let mut persistent = Vec::with_capacity(n_seeds);
    let mut persistent_total_steps = 0;
    for record in &result.records {
        persistent_total_steps += record.loss_curve.len();
        persistent.push(PersistentEntry {
            iteration: record.iteration,
            selected_layer: record.selected_layer,
            final_train_loss: record.final_train_loss,
            final_val_metric: record.final_val_metric,
            is_piecewise_affine: detect_kinks
                .then(|| detect_model_kink(&net.spec, &record.params))
                .transpose()?
                .map(|r| r.is_piecewise_affine),
        });
    }

    let best = |entries: &[f64]| entries.iter().copied().fold(f64::INFINITY, f64::min);
    let report = CompareReport {
        experiment: config.experiment.slug().to_string(),
        master_seed: config.master_seed,
        n_seeds,
        inner_steps: persistent_config.inner_steps,
        reinit_total_steps,
        persistent_total_steps,
        best_reinit_train_loss: best(
            &reinit.iter().map(|e| e.final_train_loss).collect::<Vec<_>>(),
        ),
        best_persistent_train_loss: best(
            &persistent.iter().map(|e| e.final_train_loss).collect::<Vec<_>>(),
        ),
        reinit_kink_frequency: kink_frequency(
            &reinit.iter().map(|e| e.is_piecewise_affine).collect::<Vec<_>>(),
        ),
        persistent_kink_frequency: kink_frequency(
            &persistent.iter().map(|e| e.is_piecewise_affine).collect::<Vec<_>>(),
        ),
        reinit,
        persistent,
    };

    let out_dir = compare_dir(&config, options);
    std::fs::create_dir_all(&out_dir)?;
    runner::write_json(&out_dir.join("config.json"), &config.with_resolved_seeds())?;
    runner::write_json(&out_dir.join("comparison.json"), &report)?;
    Ok(CompareOutcome { out_dir, report })
}

fn compare_dir(config: &ExperimentConfig, options: &RunOptions) -> PathBuf {
    runner::output_root_for(config, options)
        .join(format!("{}-compare-{:016x}", config.experiment.slug(), config.master_seed))
}
