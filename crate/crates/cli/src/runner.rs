//! Config-driven experiment execution and run-directory persistence.
//!
//! A run owns one directory named `<experiment>-<master_seed as 16 hex>`
//! under the output root. Re-running the same config replaces the
//! directory wholesale, so its contents always describe exactly one run.
//! Everything a later analysis pass needs is on disk: the echoed config
//! (with every derived seed filled in), per-iteration records and
//! parameter files, the solution registry, step-level CSV curves, and a
//! summary. JSON files are serialized with a fixed field order and
//! shortest-roundtrip floats, so identical runs match byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use persistent_core::landscape2d::{run_toy, ToyPoint};
use persistent_core::metrics::{
    hessian_dense, saturation_snapshot, spectrum_with_bulk_percentile, SaturationRecord,
    SaturationReport, SpectrumReport,
};
use persistent_core::net;
use persistent_core::persistent::{
    decompose_gradient, run_persistent_observed, IterationRecord, RunObserver, SolutionRegistry,
    StepInfo,
};
use persistent_core::{Batch, ParamSet, SplitData};
use serde::{Deserialize, Serialize};

use crate::config::{DataKind, ExperimentConfig, ExperimentKind, Resolved, ResolvedNet, ResolvedToy};
use crate::data;
use crate::error::{CliError, Result};
use crate::kink::{affine_floor, detect_model_kink, KinkReport};

/// Environment variable overriding the output root; beats `--out` and the
/// config's own `output_dir`.
pub const OUTPUT_ROOT_ENV: &str = "PERSISTENT_OPT_OUT";
/// Output root when neither the environment, the caller, nor the config
/// names one.
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";
/// Target number of parameter snapshots sampled from the final iteration
/// for the gradient decomposition diagnostic.
const DECOMPOSITION_SAMPLES: usize = 100;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// `--out`: output root, unless the environment overrides it.
    pub out_root: Option<PathBuf>,
    /// `--seed`: replaces the config's master seed before seed derivation.
    pub seed_override: Option<u64>,
}

/// One trained iteration as stored in `records.json`. The parameter file
/// lives next to it; `params_path` is relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecordFile {
    pub iteration_index: usize,
    pub selected_layer: Option<usize>,
    pub final_train_loss: f64,
    pub final_val_metric: f64,
    pub final_test_metric: f64,
    pub params_path: String,
    pub loss_curve: Vec<f64>,
}

/// Final metrics of one iteration as quoted in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub iteration: usize,
    pub selected_layer: Option<usize>,
    pub train_loss: f64,
    pub val_metric: f64,
    pub test_metric: f64,
}

impl SplitMetrics {
    fn from_record(record: &IterationRecord) -> Self {
        SplitMetrics {
            iteration: record.iteration,
            selected_layer: record.selected_layer,
            train_loss: record.final_train_loss,
            val_metric: record.final_val_metric,
            test_metric: record.final_test_metric,
        }
    }
}

/// Degenerate-predictor analysis attached to 1-D regression summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkBlock {
    /// Mean squared residual of the best affine fit to the training split.
    pub affine_floor: f64,
    pub plain: KinkReport,
    pub champion: KinkReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSummary {
    pub experiment: String,
    pub master_seed: u64,
    pub iterations: usize,
    pub inner_steps: usize,
    pub champion_index: usize,
    pub champion: SplitMetrics,
    pub plain: SplitMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kink: Option<KinkBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRunSummary {
    pub iteration: usize,
    pub converged_to: [f64; 2],
    /// Plain surface value at the converged point, penalty excluded.
    pub final_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub experiment: String,
    pub master_seed: u64,
    pub iterations: usize,
    pub steps: usize,
    pub eta: f64,
    pub lambda: f64,
    pub start: [f64; 2],
    pub champion_index: usize,
    pub runs: Vec<ToyRunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Summary {
    Toy(ToySummary),
    Net(NetSummary),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub summary: Summary,
}

/// Plain-vs-champion spectrum comparison written by spectrum experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPair {
    pub plain: SpectrumReport,
    pub champion: SpectrumReport,
}

#[derive(Serialize)]
struct RegistryFile<'a> {
    snapshots: &'a [ParamSet],
}

#[derive(Deserialize)]
struct RegistryFileOwned {
    snapshots: Vec<ParamSet>,
}

#[derive(Serialize)]
struct ToyRegistryFile<'a> {
    points: &'a [ToyPoint],
}

/// Compact form of the bias/noise decomposition; the per-sample residual
/// tensor stays in memory only.
#[derive(Serialize)]
struct DecompositionFile {
    lambda: f64,
    residual_mean_norm: f64,
    max_sample_norm: f64,
    bias_estimate: Vec<Vec<f64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))
}

/// Output root: environment override, then the caller's `--out`, then the
/// config, then [`DEFAULT_OUTPUT_ROOT`].
pub(crate) fn output_root_for(config: &ExperimentConfig, options: &RunOptions) -> PathBuf {
    if let Ok(root) = std::env::var(OUTPUT_ROOT_ENV) {
        if !root.is_empty() {
            return PathBuf::from(root);
        }
    }
    if let Some(root) = &options.out_root {
        return root.clone();
    }
    match &config.output_dir {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(DEFAULT_OUTPUT_ROOT),
    }
}

pub fn run_dir_name(kind: ExperimentKind, master_seed: u64) -> String {
    format!("{}-{master_seed:016x}", kind.slug())
}

/// Creates `dir` fresh, replacing whatever a previous run left there.
fn fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Executes the configured experiment and persists every artifact.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let mut config = config.clone();
    if let Some(seed) = options.seed_override {
        config.master_seed = seed;
    }
    config.validate()?;
    let run_dir = output_root_for(&config, options).join(run_dir_name(config.experiment, config.master_seed));
    fresh_dir(&run_dir)?;
    write_json(&run_dir.join("config.json"), &config.with_resolved_seeds())?;

    let summary = match config.resolve()? {
        Resolved::Toy(toy) => Summary::Toy(run_toy_experiment(&config, &toy, &run_dir)?),
        Resolved::Net(net) => Summary::Net(run_net_experiment(&config, &net, &run_dir)?),
    };
    Ok(RunOutcome { run_dir, summary })
}

fn run_toy_experiment(
    config: &ExperimentConfig,
    toy: &ResolvedToy,
    run_dir: &Path,
) -> Result<ToySummary> {
    let start = ToyPoint::new(toy.start[0], toy.start[1]);
    let mut registry: Vec<ToyPoint> = Vec::new();
    let mut runs = Vec::with_capacity(toy.iterations);
    for iteration in 0..toy.iterations {
        let trajectory = run_toy(start, toy.eta, toy.steps, &registry, toy.lambda)?;
        let mut csv = String::from("step,x,y,f\n");
        for (step, p) in trajectory.points.iter().enumerate() {
            csv.push_str(&format!("{step},{},{},{}\n", p.x, p.y, p.f));
        }
        fs::write(run_dir.join(format!("trajectory-{iteration:02}.csv")), csv)?;
        let end = trajectory.converged_to;
        let final_f = trajectory.points.last().expect("non-empty trajectory").f;
        runs.push(ToyRunSummary { iteration, converged_to: [end.x, end.y], final_f });
        registry.push(end);
    }
    write_json(&run_dir.join("registry.json"), &ToyRegistryFile { points: &registry })?;

    let mut champion_index = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.final_f < runs[champion_index].final_f {
            champion_index = i;
        }
    }
    let summary = ToySummary {
        experiment: config.experiment.slug().to_string(),
        master_seed: config.master_seed,
        iterations: toy.iterations,
        steps: toy.steps,
        eta: toy.eta,
        lambda: toy.lambda,
        start: toy.start,
        champion_index,
        runs,
    };
    write_json(&run_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Step-level collector: per-iteration loss/penalty curves for the CSV
/// files, plus a strided parameter sample of the latest iteration for the
/// decomposition diagnostic.
struct CollectObserver {
    stride: usize,
    curves: Vec<Vec<(f64, f64)>>,
    sampled_iteration: usize,
    sampled: Vec<ParamSet>,
}

impl CollectObserver {
    fn new(inner_steps: usize) -> Self {
        CollectObserver {
            stride: (inner_steps / DECOMPOSITION_SAMPLES).max(1),
            curves: Vec::new(),
            sampled_iteration: 0,
            sampled: Vec::new(),
        }
    }
}

impl RunObserver for CollectObserver {
    fn on_step(&mut self, info: &StepInfo<'_>) {
        while self.curves.len() <= info.iteration {
            self.curves.push(Vec::new());
        }
        self.curves[info.iteration].push((info.data_loss, info.penalty));
        if info.iteration != self.sampled_iteration {
            self.sampled_iteration = info.iteration;
            self.sampled.clear();
        }
        if info.step % self.stride == 0 {
            self.sampled.push(info.params.clone());
        }
    }
}

pub(crate) fn generate_data(net: &ResolvedNet) -> Result<SplitData> {
    match net.data.kind {
        DataKind::Regress1dSynthetic => data::gen_regress1d(&net.data, net.data_seed),
        DataKind::BlobsClassify => data::gen_blobs(&net.data, net.data_seed),
    }
}

fn run_net_experiment(
    config: &ExperimentConfig,
    net: &ResolvedNet,
    run_dir: &Path,
) -> Result<NetSummary> {
    let data = generate_data(net)?;
    let mut observer = CollectObserver::new(net.persistent.inner_steps);
    let result = run_persistent_observed(
        &net.spec,
        &data,
        &net.optimizer,
        &net.persistent,
        net.spec.initializer.seed,
        &mut observer,
    )?;

    let mut records = Vec::with_capacity(result.records.len());
    for record in &result.records {
        let params_path = format!("params-{:02}.json", record.iteration);
        write_json(&run_dir.join(&params_path), &record.params)?;
        let mut csv = String::from("step,data_loss,penalty\n");
        for (step, (data_loss, penalty)) in observer.curves[record.iteration].iter().enumerate() {
            csv.push_str(&format!("{step},{data_loss},{penalty}\n"));
        }
        fs::write(run_dir.join(format!("metrics-{:02}.csv", record.iteration)), csv)?;
        records.push(TrainRecordFile {
            iteration_index: record.iteration,
            selected_layer: record.selected_layer,
            final_train_loss: record.final_train_loss,
            final_val_metric: record.final_val_metric,
            final_test_metric: record.final_test_metric,
            params_path,
            loss_curve: record.loss_curve.clone(),
        });
    }
    write_json(&run_dir.join("records.json"), &records)?;
    write_json(
        &run_dir.join("registry.json"),
        &RegistryFile { snapshots: result.registry.snapshots() },
    )?;

    // Bias/noise split of the penalty gradient over the final iteration's
    // sampled path, against the registry that iteration trained under.
    if net.persistent.iterations >= 2 && !observer.sampled.is_empty() {
        let prior = result.registry.snapshots()[..net.persistent.iterations - 1].to_vec();
        let prior_registry = SolutionRegistry::from_snapshots(prior)?;
        let report = decompose_gradient(&prior_registry, &observer.sampled, net.persistent.lambda)?;
        write_json(
            &run_dir.join("decomposition.json"),
            &DecompositionFile {
                lambda: report.lambda,
                residual_mean_norm: report.residual_mean_norm,
                max_sample_norm: report.max_sample_norm,
                bias_estimate: report.bias_estimate,
            },
        )?;
    }

    let kink = match net.data.kind {
        DataKind::Regress1dSynthetic => {
            let xs = data.train.inputs.data();
            let ys = data.train.targets.data();
            Some(KinkBlock {
                affine_floor: affine_floor(xs, ys),
                plain: detect_model_kink(&net.spec, &result.plain().params)?,
                champion: detect_model_kink(&net.spec, &result.champion().params)?,
            })
        }
        DataKind::BlobsClassify => None,
    };

    let summary = NetSummary {
        experiment: config.experiment.slug().to_string(),
        master_seed: config.master_seed,
        iterations: net.persistent.iterations,
        inner_steps: net.persistent.inner_steps,
        champion_index: result.champion_index,
        champion: SplitMetrics::from_record(result.champion()),
        plain: SplitMetrics::from_record(result.plain()),
        kink,
    };
    write_json(&run_dir.join("summary.json"), &summary)?;

    match net.kind {
        ExperimentKind::Saturation => {
            let report = saturation_report(net, &data.train, &result.records)?;
            write_saturation(run_dir, &report)?;
        }
        ExperimentKind::Spectrum => {
            let pair = SpectrumPair {
                plain: iteration_spectrum(net, &data.train, &result.plain().params)?,
                champion: iteration_spectrum(net, &data.train, &result.champion().params)?,
            };
            write_json(&run_dir.join("spectrum.json"), &pair)?;
            write_eigenvalues(&run_dir.join("eigenvalues-plain.csv"), &pair.plain)?;
            write_eigenvalues(&run_dir.join("eigenvalues-champion.csv"), &pair.champion)?;
        }
        _ => {}
    }
    Ok(summary)
}

fn saturation_report(
    net: &ResolvedNet,
    batch: &Batch,
    records: &[IterationRecord],
) -> Result<SaturationReport> {
    let mut report = SaturationReport::default();
    for record in records {
        report.records.push(SaturationRecord {
            epoch: record.iteration,
            snapshot: saturation_snapshot(
                &net.spec,
                &record.params,
                batch,
                net.saturation_threshold,
            )?,
        });
    }
    Ok(report)
}

fn write_saturation(run_dir: &Path, report: &SaturationReport) -> Result<()> {
    write_json(&run_dir.join("saturation.json"), report)?;
    let mut csv = String::from("epoch,layer,p98,dead_fraction\n");
    for record in &report.records {
        for (layer, stats) in record.snapshot.layers.iter().enumerate() {
            csv.push_str(&format!(
                "{},{layer},{},{}\n",
                record.epoch, stats.p98_abs_activation, stats.dead_fraction
            ));
        }
    }
    fs::write(run_dir.join("saturation.csv"), csv)?;
    Ok(())
}

fn iteration_spectrum(net: &ResolvedNet, batch: &Batch, params: &ParamSet) -> Result<SpectrumReport> {
    let hessian = hessian_dense(&net.spec, params, batch)?;
    Ok(spectrum_with_bulk_percentile(&hessian, net.bulk_percentile)?)
}

fn write_eigenvalues(path: &Path, report: &SpectrumReport) -> Result<()> {
    let mut csv = String::from("eigenvalue\n");
    for v in &report.eigenvalues {
        csv.push_str(&format!("{v}\n"));
    }
    fs::write(path, csv)?;
    Ok(())
}

/// Loads the echoed config of an existing run directory.
pub fn load_run_config(run_dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(&run_dir.join("config.json"))
}

pub fn load_records(run_dir: &Path) -> Result<Vec<TrainRecordFile>> {
    read_json(&run_dir.join("records.json"))
}

pub fn load_params(run_dir: &Path, record: &TrainRecordFile) -> Result<ParamSet> {
    read_json(&run_dir.join(&record.params_path))
}

pub fn load_registry(run_dir: &Path) -> Result<SolutionRegistry> {
    let file: RegistryFileOwned = read_json(&run_dir.join("registry.json"))?;
    Ok(SolutionRegistry::from_snapshots(file.snapshots)?)
}

/// The run's network resolution plus regenerated data, the starting point
/// of every post-hoc analysis pass.
fn reopen_net_run(run_dir: &Path) -> Result<(ResolvedNet, SplitData, Vec<TrainRecordFile>)> {
    let config = load_run_config(run_dir)?;
    let Resolved::Net(net) = config.resolve()? else {
        return Err(CliError::config(format!(
            "{} holds a toy surface run; analysis passes need a network run",
            run_dir.display()
        )));
    };
    let data = generate_data(&net)?;
    let records = load_records(run_dir)?;
    if records.is_empty() {
        return Err(CliError::config(format!("{} has no training records", run_dir.display())));
    }
    Ok((net, data, records))
}

/// Recomputes saturation statistics for every stored iteration of a run
/// and writes `saturation.json` and `saturation.csv` into its directory.
pub fn run_saturation_pass(run_dir: &Path) -> Result<SaturationReport> {
    let (net, data, records) = reopen_net_run(run_dir)?;
    let mut report = SaturationReport::default();
    for record in &records {
        let params = load_params(run_dir, record)?;
        report.records.push(SaturationRecord {
            epoch: record.iteration_index,
            snapshot: saturation_snapshot(&net.spec, &params, &data.train, net.saturation_threshold)?,
        });
    }
    write_saturation(run_dir, &report)?;
    Ok(report)
}

/// Hessian spectrum of one stored iteration, written as
/// `spectrum-<k>.json` and `eigenvalues-<k>.csv` in the run directory.
pub fn run_spectrum_pass(run_dir: &Path, iteration: usize) -> Result<SpectrumReport> {
    let (net, data, records) = reopen_net_run(run_dir)?;
    let record = records.iter().find(|r| r.iteration_index == iteration).ok_or_else(|| {
        CliError::config(format!(
            "{} has no iteration {iteration}; {} iterations were recorded",
            run_dir.display(),
            records.len()
        ))
    })?;
    let params = load_params(run_dir, record)?;
    let report = iteration_spectrum(&net, &data.train, &params)?;
    write_json(&run_dir.join(format!("spectrum-{iteration:02}.json")), &report)?;
    write_eigenvalues(&run_dir.join(format!("eigenvalues-{iteration:02}.csv")), &report)?;
    Ok(report)
}

/// Validation metric of stored parameters on regenerated data; lets tests
/// confirm champion selection straight from the files.
pub fn recompute_val_metric(run_dir: &Path, record: &TrainRecordFile) -> Result<f64> {
    let (net, data, _) = reopen_net_run(run_dir)?;
    let params = load_params(run_dir, record)?;
    Ok(net::validation_metric(&net.spec, &params, &data.val)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use persistent_core::persistent::run_persistent;

    fn toy_config() -> ExperimentConfig {
        ExperimentConfig::from_str(
            r#"{
                "schema_version": 1,
                "experiment": "toy2d",
                "master_seed": 5,
                "toy": {
                    "start": [-0.335, -1.4],
                    "eta": 0.001,
                    "steps": 300,
                    "lambda": 0.1,
                    "iterations": 2
                }
            }"#,
        )
        .unwrap()
    }

    fn regress_config() -> ExperimentConfig {
        ExperimentConfig::from_str(
            r#"{
                "schema_version": 1,
                "experiment": "regress1d",
                "master_seed": 9,
                "model": {
                    "layer_widths": [1, 4, 1],
                    "activation": "relu",
                    "output_activation": "identity",
                    "loss": "mean_squared_error",
                    "init": {"kind": "he_normal", "sigma": 0.0}
                },
                "optimizer": {"kind": "momentum", "learning_rate": 0.005, "momentum_coeff": 0.9},
                "persistent": {"lambda": 0.01, "mode": "full", "iterations": 3, "inner_steps": 40},
                "data": {
                    "kind": "regress1d_synthetic",
                    "n_train": 32, "n_val": 16, "n_test": 16,
                    "noise_sigma": 0.1
                }
            }"#,
        )
        .unwrap()
    }

    fn options(root: &Path) -> RunOptions {
        RunOptions { out_root: Some(root.to_path_buf()), seed_override: None }
    }

    #[test]
    fn toy_run_writes_trajectories_registry_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&toy_config(), &options(dir.path())).unwrap();
        assert_eq!(outcome.run_dir, dir.path().join("toy2d-0000000000000005"));
        let Summary::Toy(summary) = &outcome.summary else { panic!("expected toy summary") };
        assert_eq!(summary.runs.len(), 2);
        assert!(summary.champion_index < 2);

        let trajectory = fs::read_to_string(outcome.run_dir.join("trajectory-00.csv")).unwrap();
        let lines: Vec<&str> = trajectory.lines().collect();
        assert_eq!(lines[0], "step,x,y,f");
        // steps + 1 points: the start position plus one per step.
        assert_eq!(lines.len(), 1 + 301);
        let reread: ToySummary = read_json(&outcome.run_dir.join("summary.json")).unwrap();
        assert_eq!(&reread, summary);
        assert!(outcome.run_dir.join("config.json").exists());
        assert!(outcome.run_dir.join("registry.json").exists());
    }

    #[test]
    fn net_run_writes_records_params_metrics_and_kink_summary() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&regress_config(), &options(dir.path())).unwrap();
        let Summary::Net(summary) = &outcome.summary else { panic!("expected net summary") };
        assert_eq!(summary.iterations, 3);
        assert!(summary.kink.is_some(), "regression summaries carry a kink block");

        let records = load_records(&outcome.run_dir).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].iteration_index, 0);
        assert_eq!(records[0].selected_layer, None);
        assert_eq!(records[0].loss_curve.len(), 40);
        for record in &records {
            let params = load_params(&outcome.run_dir, record).unwrap();
            assert_eq!(params.layers.len(), 2);
        }
        let registry = load_registry(&outcome.run_dir).unwrap();
        assert_eq!(registry.len(), 3);

        let metrics = fs::read_to_string(outcome.run_dir.join("metrics-02.csv")).unwrap();
        let lines: Vec<&str> = metrics.lines().collect();
        assert_eq!(lines[0], "step,data_loss,penalty");
        assert_eq!(lines.len(), 1 + 40);
        assert!(outcome.run_dir.join("decomposition.json").exists());
    }

    #[test]
    fn identical_configs_reproduce_identical_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_experiment(&regress_config(), &options(dir_a.path())).unwrap();
        let b = run_experiment(&regress_config(), &options(dir_b.path())).unwrap();
        for file in ["summary.json", "records.json", "registry.json", "config.json"] {
            let bytes_a = fs::read(a.run_dir.join(file)).unwrap();
            let bytes_b = fs::read(b.run_dir.join(file)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn seed_override_renames_and_reseeds_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out_root: Some(dir.path().to_path_buf()), seed_override: Some(77) };
        let outcome = run_experiment(&regress_config(), &opts).unwrap();
        assert!(outcome.run_dir.ends_with("regress1d-000000000000004d"));
        let echoed = load_run_config(&outcome.run_dir).unwrap();
        assert_eq!(echoed.master_seed, 77);
    }

    #[test]
    fn rerun_replaces_stale_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&regress_config(), &options(dir.path())).unwrap();
        let stale = outcome.run_dir.join("params-09.json");
        fs::write(&stale, b"{}").unwrap();
        run_experiment(&regress_config(), &options(dir.path())).unwrap();
        assert!(!stale.exists(), "stale artifacts survive a rerun");
    }

    #[test]
    fn saturation_pass_reports_every_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&regress_config(), &options(dir.path())).unwrap();
        let report = run_saturation_pass(&outcome.run_dir).unwrap();
        assert_eq!(report.records.len(), 3);
        assert_eq!(report.records[2].epoch, 2);
        // [1, 4, 1] has a single hidden layer.
        assert_eq!(report.records[0].snapshot.layers.len(), 1);
        assert!(outcome.run_dir.join("saturation.json").exists());
        let csv = fs::read_to_string(outcome.run_dir.join("saturation.csv")).unwrap();
        assert!(csv.starts_with("epoch,layer,p98,dead_fraction\n"));
        assert_eq!(csv.lines().count(), 1 + 3);
    }

    #[test]
    fn spectrum_pass_analyzes_one_stored_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&regress_config(), &options(dir.path())).unwrap();
        let report = run_spectrum_pass(&outcome.run_dir, 1).unwrap();
        // [1, 4, 1]: 4*2 + 5 = 13 parameters.
        assert_eq!(report.eigenvalues.len(), 13);
        assert_eq!(*report.eigenvalues.last().unwrap(), report.lambda_max);
        assert!(outcome.run_dir.join("spectrum-01.json").exists());
        assert!(outcome.run_dir.join("eigenvalues-01.csv").exists());
        assert!(run_spectrum_pass(&outcome.run_dir, 9).is_err());
    }

    #[test]
    fn champion_ignores_test_labels() {
        // Same seeds, test targets shifted: champion and val metrics must
        // not move, test metrics must.
        let config = regress_config();
        let Resolved::Net(net) = config.resolve().unwrap() else { unreachable!() };
        let data = generate_data(&net).unwrap();
        let mut perturbed = data.clone();
        for v in perturbed.test.targets.data_mut() {
            *v += 100.0;
        }
        let seed = net.spec.initializer.seed;
        let a = run_persistent(&net.spec, &data, &net.optimizer, &net.persistent, seed).unwrap();
        let b = run_persistent(&net.spec, &perturbed, &net.optimizer, &net.persistent, seed)
            .unwrap();
        assert_eq!(a.champion_index, b.champion_index);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.final_val_metric, rb.final_val_metric);
            assert_ne!(ra.final_test_metric, rb.final_test_metric);
        }
    }
}
