//! JSON experiment configuration: a versioned schema that resolves into the
//! core crate's validated types.
//!
//! Seeds may be given explicitly anywhere they appear; every omitted seed is
//! derived from `master_seed` with a per-purpose tag ("data", "init",
//! "layers"), so a single integer pins an entire run.

use std::path::PathBuf;

use persistent_core::metrics::{DEFAULT_BULK_PERCENTILE, DEFAULT_SATURATION_THRESHOLD};
use persistent_core::metrics::HESSIAN_PARAM_LIMIT;
use persistent_core::model::{
    Activation, InitKind, InitSpec, LossKind, ModelSpec, OutputActivation,
};
use persistent_core::optim::OptimizerConfig;
use persistent_core::persistent::{PenaltyMode, PersistentConfig};
use persistent_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Toy2d,
    Regress1d,
    Classify,
    Saturation,
    Spectrum,
}

impl ExperimentKind {
    /// Stable slug used in run-directory names and summaries.
    pub fn slug(self) -> &'static str {
        match self {
            ExperimentKind::Toy2d => "toy2d",
            ExperimentKind::Regress1d => "regress1d",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Saturation => "saturation",
            ExperimentKind::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Regress1dSynthetic,
    BlobsClassify,
}

/// Synthetic dataset request. `seed` falls back to `derive(master, "data")`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DataConfig {
    fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_train", self.n_train),
            ("n_val", self.n_val),
            ("n_test", self.n_test),
        ] {
            if n == 0 {
                return Err(CliError::config(format!("data.{name} must be at least 1")));
            }
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(CliError::config(format!(
                "data.noise_sigma must be finite and nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if self.kind == DataKind::BlobsClassify && self.noise_sigma != 0.0 {
            return Err(CliError::config(
                "blobs_classify draws unit-covariance clusters; set data.noise_sigma to 0",
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self.kind {
            DataKind::Regress1dSynthetic => 1,
            DataKind::BlobsClassify => 8,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            DataKind::Regress1dSynthetic => 1,
            DataKind::BlobsClassify => 4,
        }
    }
}

/// Weight initializer request. `seed` falls back to `derive(master, "init")`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub output_activation: OutputActivation,
    pub loss: LossKind,
    pub init: InitConfig,
}

impl ModelConfig {
    fn resolve(&self, master_seed: u64) -> ModelSpec {
        ModelSpec {
            layer_widths: self.layer_widths.clone(),
            activation: self.activation,
            output_activation: self.output_activation,
            loss_kind: self.loss,
            initializer: InitSpec {
                kind: self.init.kind,
                sigma: self.init.sigma,
                seed: self.init.seed.unwrap_or_else(|| derive_seed(master_seed, "init")),
            },
        }
    }
}

/// Outer-loop request. `layer_seed` falls back to `derive(master, "layers")`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistentSection {
    pub lambda: f64,
    pub mode: PenaltyMode,
    pub iterations: usize,
    pub inner_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_seed: Option<u64>,
}

impl PersistentSection {
    fn resolve(&self, master_seed: u64) -> PersistentConfig {
        PersistentConfig {
            lambda: self.lambda,
            mode: self.mode,
            iterations: self.iterations,
            inner_steps: self.inner_steps,
            layer_seed: self.layer_seed.unwrap_or_else(|| derive_seed(master_seed, "layers")),
        }
    }
}

/// Two-dimensional surface experiment: `iterations` counts runs in total,
/// so 1 means plain descent only and each later run penalizes all earlier
/// converged points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    pub start: [f64; 2],
    pub eta: f64,
    pub steps: usize,
    pub lambda: f64,
    pub iterations: usize,
}

impl ToySection {
    fn validate(&self) -> Result<()> {
        if !self.start[0].is_finite() || !self.start[1].is_finite() {
            return Err(CliError::config("toy.start must be finite"));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(CliError::config(format!(
                "toy.eta must be positive and finite, got {}",
                self.eta
            )));
        }
        if self.steps == 0 {
            return Err(CliError::config("toy.steps must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(CliError::config("toy.iterations must be at least 1"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(CliError::config(format!(
                "toy.lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if self.iterations > 1 && self.lambda == 0.0 {
            return Err(CliError::config(
                "toy.lambda must be positive when more than one run is requested",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationSection {
    #[serde(default = "default_saturation_threshold")]
    pub threshold: f64,
}

fn default_saturation_threshold() -> f64 {
    DEFAULT_SATURATION_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_bulk_percentile")]
    pub bulk_percentile: f64,
}

fn default_bulk_percentile() -> f64 {
    DEFAULT_BULK_PERCENTILE
}

/// One experiment request as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persistent: Option<PersistentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A toy2d request with every value filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedToy {
    pub start: [f64; 2],
    pub eta: f64,
    pub steps: usize,
    pub lambda: f64,
    pub iterations: usize,
}

/// A network experiment request with every seed resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedNet {
    pub kind: ExperimentKind,
    pub spec: ModelSpec,
    pub optimizer: OptimizerConfig,
    pub persistent: PersistentConfig,
    pub data: DataConfig,
    pub data_seed: u64,
    pub saturation_threshold: f64,
    pub bulk_percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Toy(ResolvedToy),
    Net(ResolvedNet),
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("cannot parse config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.experiment {
            ExperimentKind::Toy2d => self.validate_toy(),
            _ => self.validate_net(),
        }
    }

    fn validate_toy(&self) -> Result<()> {
        let toy = self
            .toy
            .as_ref()
            .ok_or_else(|| CliError::config("toy2d needs a \"toy\" section"))?;
        toy.validate()?;
        for (name, present) in [
            ("model", self.model.is_some()),
            ("optimizer", self.optimizer.is_some()),
            ("persistent", self.persistent.is_some()),
            ("data", self.data.is_some()),
            ("saturation", self.saturation.is_some()),
            ("spectrum", self.spectrum.is_some()),
        ] {
            if present {
                return Err(CliError::config(format!(
                    "toy2d does not use a \"{name}\" section"
                )));
            }
        }
        Ok(())
    }

    fn validate_net(&self) -> Result<()> {
        if self.toy.is_some() {
            return Err(CliError::config(format!(
                "{} does not use a \"toy\" section",
                self.experiment.slug()
            )));
        }
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::config("network experiments need a \"model\" section"))?;
        let optimizer = self
            .optimizer
            .as_ref()
            .ok_or_else(|| CliError::config("network experiments need an \"optimizer\" section"))?;
        let persistent = self.persistent.as_ref().ok_or_else(|| {
            CliError::config("network experiments need a \"persistent\" section")
        })?;
        let data = self
            .data
            .as_ref()
            .ok_or_else(|| CliError::config("network experiments need a \"data\" section"))?;
        data.validate()?;

        match (self.experiment, data.kind) {
            (ExperimentKind::Regress1d, DataKind::Regress1dSynthetic) => {}
            (ExperimentKind::Classify, DataKind::BlobsClassify) => {}
            (ExperimentKind::Saturation | ExperimentKind::Spectrum, _) => {}
            (exp, kind) => {
                return Err(CliError::config(format!(
                    "experiment {} cannot use data kind {kind:?}",
                    exp.slug()
                )));
            }
        }

        // Core-level validation of the resolved pieces; master_seed value is
        // irrelevant for shape checks.
        let spec = model.resolve(self.master_seed);
        spec.validate().map_err(|e| CliError::config(format!("model: {e}")))?;
        optimizer
            .validate()
            .map_err(|e| CliError::config(format!("optimizer: {e}")))?;
        persistent
            .resolve(self.master_seed)
            .validate()
            .map_err(|e| CliError::config(format!("persistent: {e}")))?;

        if spec.input_dim() != data.input_dim() || spec.output_dim() != data.output_dim() {
            return Err(CliError::config(format!(
                "model is {}-in/{}-out but {:?} data is {}-in/{}-out",
                spec.input_dim(),
                spec.output_dim(),
                data.kind,
                data.input_dim(),
                data.output_dim()
            )));
        }
        let expected_loss = match data.kind {
            DataKind::Regress1dSynthetic => LossKind::MeanSquaredError,
            DataKind::BlobsClassify => LossKind::CrossEntropy,
        };
        if model.loss != expected_loss {
            return Err(CliError::config(format!(
                "{:?} data requires {expected_loss:?} loss",
                data.kind
            )));
        }

        if self.experiment == ExperimentKind::Saturation
            && spec.activation == Activation::Identity
        {
            return Err(CliError::config(
                "saturation study needs a bounded or rectified hidden activation",
            ));
        }
        if self.experiment == ExperimentKind::Spectrum {
            let count = spec.param_count();
            if count > HESSIAN_PARAM_LIMIT {
                return Err(CliError::config(format!(
                    "spectrum study needs at most {HESSIAN_PARAM_LIMIT} parameters, model has {count}"
                )));
            }
            if let Some(section) = &self.spectrum {
                if !(0.0..=100.0).contains(&section.bulk_percentile) {
                    return Err(CliError::config(format!(
                        "spectrum.bulk_percentile must lie in [0, 100], got {}",
                        section.bulk_percentile
                    )));
                }
            }
        }
        if let Some(section) = &self.saturation {
            if !section.threshold.is_finite() || section.threshold <= 0.0 {
                return Err(CliError::config(format!(
                    "saturation.threshold must be positive and finite, got {}",
                    section.threshold
                )));
            }
        }
        Ok(())
    }

    /// Resolves into fully seeded core types. Call after [`validate`].
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        match self.experiment {
            ExperimentKind::Toy2d => {
                let toy = self.toy.as_ref().unwrap();
                Ok(Resolved::Toy(ResolvedToy {
                    start: toy.start,
                    eta: toy.eta,
                    steps: toy.steps,
                    lambda: toy.lambda,
                    iterations: toy.iterations,
                }))
            }
            kind => {
                let mut data = self.data.as_ref().unwrap().clone();
                let data_seed =
                    data.seed.unwrap_or_else(|| derive_seed(self.master_seed, "data"));
                // Normalized so an echoed config resolves identically.
                data.seed = Some(data_seed);
                Ok(Resolved::Net(ResolvedNet {
                    kind,
                    spec: self.model.as_ref().unwrap().resolve(self.master_seed),
                    optimizer: self.optimizer.as_ref().unwrap().clone(),
                    persistent: self.persistent.as_ref().unwrap().resolve(self.master_seed),
                    data,
                    data_seed,
                    saturation_threshold: self
                        .saturation
                        .as_ref()
                        .map_or(DEFAULT_SATURATION_THRESHOLD, |s| s.threshold),
                    bulk_percentile: self
                        .spectrum
                        .as_ref()
                        .map_or(DEFAULT_BULK_PERCENTILE, |s| s.bulk_percentile),
                }))
            }
        }
    }

    /// A copy of the config with every derived seed written out, for the
    /// `config.json` echo: re-running the echo reproduces the run exactly
    /// even if the derivation scheme ever changes.
    pub fn with_resolved_seeds(&self) -> ExperimentConfig {
        let mut echo = self.clone();
        if self.experiment == ExperimentKind::Toy2d {
            return echo;
        }
        if let Some(model) = echo.model.as_mut() {
            model.init.seed = Some(
                model.init.seed.unwrap_or_else(|| derive_seed(self.master_seed, "init")),
            );
        }
        if let Some(p) = echo.persistent.as_mut() {
            p.layer_seed =
                Some(p.layer_seed.unwrap_or_else(|| derive_seed(self.master_seed, "layers")));
        }
        if let Some(d) = echo.data.as_mut() {
            d.seed = Some(d.seed.unwrap_or_else(|| derive_seed(self.master_seed, "data")));
        }
        echo
    }
}
