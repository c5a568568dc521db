//! Acceptance suite. Each test covers one numbered criterion and prints a
//! single `criterion NN [PASS/FAIL]` line before asserting, so a full run
//! yields one verdict line per criterion regardless of capture settings.
//! Tolerances and budgets are pinned here, next to the checks they govern.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

use persistent_core::metrics::{hessian_dense, percentile, saturation_snapshot, symmetric_eigen};
use persistent_core::net;
use persistent_core::persistent::{
    decompose_gradient, penalty, penalty_grad, persistent_backward, PenaltyScope,
    SolutionRegistry,
};
use persistent_core::seed::derive_seed_indexed;
use persistent_core::{
    Activation, Batch, InitKind, InitSpec, LossKind, Matrix, ModelSpec, OutputActivation,
    ParamSet,
};
use persistent_opt::config::ExperimentConfig;
use persistent_opt::runner::{load_records, load_registry, run_experiment, RunOptions, RunOutcome};

/// Prints the verdict through the raw handle so libtest capture cannot
/// swallow it, then enforces it.
fn verdict(criterion: usize, name: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let flag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion:02} [{flag}] {name}: {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {criterion:02} {name}: {detail}");
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed < Duration::from_secs(budget_secs)
}

/// Tests must not be redirected by an inherited output root override.
fn clear_output_env() {
    std::env::remove_var("PERSISTENT_OPT_OUT");
}

fn shipped_config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::from_path(&path).expect("shipped config loads")
}

fn run_into(config: &ExperimentConfig, root: &Path) -> RunOutcome {
    let options = RunOptions { out_root: Some(root.to_path_buf()), seed_override: None };
    run_experiment(config, &options).expect("experiment runs")
}

fn read_value(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).expect("artifact readable")).expect("artifact is JSON")
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

// Criterion 1: plain gradient descent on the two-well toy surface, started
// at the pinned point, settles into the deep sharp well at (2, -2).
#[test]
fn criterion_01_plain_toy_descent_finds_the_sharp_minimum() {
    clear_output_env();
    let start = Instant::now();
    let config = shipped_config("toy2d.json");
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_into(&config, tmp.path());
    let summary = read_value(&outcome.run_dir.join("summary.json"));
    let p = &summary["runs"][0]["converged_to"];
    let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
    let dist = ((x - 2.0).powi(2) + (y + 2.0).powi(2)).sqrt();
    let elapsed = start.elapsed();
    let pass = dist <= 1e-2 && within(elapsed, 1);
    verdict(
        1,
        "plain toy descent reaches (2, -2)",
        pass,
        &format!("converged to ({x:.6}, {y:.6}), distance {dist:.2e} (tol 1e-2), {elapsed:.2?} (budget 1s)"),
    );
}

// Criterion 2: with the first solution registered, the penalized rerun from
// the same start crosses into the wide well near (-2, -1) and ends at least
// 0.4 deeper on the plain surface than the plain run.
#[test]
fn criterion_02_penalized_toy_rerun_switches_wells() {
    clear_output_env();
    let start = Instant::now();
    let config = shipped_config("toy2d.json");
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_into(&config, tmp.path());
    let summary = read_value(&outcome.run_dir.join("summary.json"));
    let p = &summary["runs"][1]["converged_to"];
    let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
    let dist = ((x + 2.0).powi(2) + (y + 1.0).powi(2)).sqrt();
    let f_plain = summary["runs"][0]["final_f"].as_f64().unwrap();
    let f_penalized = summary["runs"][1]["final_f"].as_f64().unwrap();
    let gap = f_plain - f_penalized;
    let elapsed = start.elapsed();
    let pass = dist <= 2e-1 && gap >= 0.4 && within(elapsed, 1);
    verdict(
        2,
        "penalized toy rerun finds the second well",
        pass,
        &format!("converged to ({x:.6}, {y:.6}), distance {dist:.2e} (tol 2e-1), depth gap {gap:.4} (min 0.4), {elapsed:.2?} (budget 1s)"),
    );
}

// Criterion 3: over random small models, (a) the data gradient matches
// central finite differences, (b) the penalty subgradient matches central
// finite differences away from sign boundaries, and (c) the penalized
// backward pass is bitwise the sum of its two parts.
#[test]
fn criterion_03_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let instances = 100;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut worst_data = 0.0f64;
    let mut worst_penalty = 0.0f64;

    for instance in 0..instances {
        let input = rng.random_range(1..=4);
        let classify = rng.random_range(0..4) == 0;
        let output = if classify { rng.random_range(2..=3) } else { rng.random_range(1..=3) };
        let mut widths = vec![input];
        for _ in 0..rng.random_range(1..=2) {
            widths.push(rng.random_range(2..=8));
        }
        widths.push(output);
        let (output_activation, loss_kind) = if classify {
            (OutputActivation::Softmax, LossKind::CrossEntropy)
        } else {
            (OutputActivation::Identity, LossKind::MeanSquaredError)
        };
        let activation =
            if rng.random_range(0..2) == 0 { Activation::Relu } else { Activation::Tanh };
        let spec = ModelSpec {
            layer_widths: widths,
            activation,
            output_activation,
            loss_kind,
            initializer: InitSpec { kind: InitKind::HeNormal, sigma: 0.0, seed: rng.random() },
        };
        assert!(spec.param_count() <= 200, "instance stays small");
        let params = net::init_params(&spec).unwrap();

        let batch_size = rng.random_range(2..=6);
        let inputs =
            Matrix::from_vec(batch_size, input, normal_vec(&mut rng, batch_size * input)).unwrap();
        let targets = if classify {
            let mut flat = vec![0.0; batch_size * output];
            for b in 0..batch_size {
                flat[b * output + rng.random_range(0..output)] = 1.0;
            }
            Matrix::from_vec(batch_size, output, flat).unwrap()
        } else {
            Matrix::from_vec(batch_size, output, normal_vec(&mut rng, batch_size * output))
                .unwrap()
        };
        let batch = Batch::new(inputs, targets).unwrap();

        // (a) data term against central differences, with a one-sided
        // consistency guard: when the forward differences from the two sides
        // disagree there is a relu kink inside [theta-eps, theta+eps] and the
        // entry carries no information about the analytic gradient.
        let (_, grads) = net::backward(&spec, &params, &batch).unwrap();
        let f0 = net::data_loss(&spec, &params, &batch).unwrap();
        for l in 0..params.num_layers() {
            for j in 0..params.layers[l].len() {
                let theta = params.layers[l][j];
                let eps = 1e-6 * theta.abs().max(1.0);
                let mut shifted = params.clone();
                shifted.layers[l][j] = theta + eps;
                let f_plus = net::data_loss(&spec, &shifted, &batch).unwrap();
                shifted.layers[l][j] = theta - eps;
                let f_minus = net::data_loss(&spec, &shifted, &batch).unwrap();
                let d_plus = (f_plus - f0) / eps;
                let d_minus = (f0 - f_minus) / eps;
                let disagreement =
                    (d_plus - d_minus).abs() / d_plus.abs().max(d_minus.abs()).max(1e-6);
                if disagreement > 1e-3 {
                    skipped += 1;
                    continue;
                }
                let central = (f_plus - f_minus) / (2.0 * eps);
                let g = grads.layers[l][j];
                let err = (g - central).abs();
                let tol = 1e-8 + 1e-5 * g.abs().max(central.abs());
                worst_data = worst_data.max(err / tol.max(f64::MIN_POSITIVE));
                assert!(
                    err <= tol,
                    "instance {instance} layer {l} entry {j}: backprop {g} vs central {central}"
                );
                checked += 1;
            }
        }

        // (b) + (c) need a registry.
        let num_snapshots = rng.random_range(1..=3);
        let snapshots: Vec<ParamSet> = (0..num_snapshots)
            .map(|_| net::init_params(&spec.with_seed(rng.random())).unwrap())
            .collect();
        let registry = SolutionRegistry::from_snapshots(snapshots).unwrap();
        let lambda = 10f64.powf(-2.0 + 2.0 * rng.random::<f64>());
        let scope = PenaltyScope::AllLayers;

        let pgrads = penalty_grad(&params, &registry, lambda, scope).unwrap();
        for l in 0..params.num_layers() {
            for j in 0..params.layers[l].len() {
                let theta = params.layers[l][j];
                let eps = 1e-6 * theta.abs().max(1.0);
                // Skip entries whose perturbation could flip an alignment
                // sign: |dot| within 2*eps*|S_j| of zero for any snapshot.
                let unstable = registry.snapshots().iter().any(|s| {
                    dot(&s.layers[l], &params.layers[l]).abs()
                        <= 2.0 * eps * s.layers[l][j].abs()
                });
                if unstable {
                    continue;
                }
                let mut shifted = params.clone();
                shifted.layers[l][j] = theta + eps;
                let p_plus = penalty(&shifted, &registry, lambda, scope).unwrap();
                shifted.layers[l][j] = theta - eps;
                let p_minus = penalty(&shifted, &registry, lambda, scope).unwrap();
                let central = (p_plus - p_minus) / (2.0 * eps);
                let g = pgrads.layers[l][j];
                let err = (g - central).abs();
                let tol = 1e-9 + 1e-6 * g.abs().max(central.abs());
                worst_penalty = worst_penalty.max(err / tol.max(f64::MIN_POSITIVE));
                assert!(
                    err <= tol,
                    "instance {instance} layer {l} entry {j}: penalty grad {g} vs central {central}"
                );
            }
        }

        let (combined_loss, combined_grads) =
            persistent_backward(&spec, &params, &batch, &registry, lambda, scope).unwrap();
        let (data_loss, mut expected) = net::backward(&spec, &params, &batch).unwrap();
        let pen = penalty(&params, &registry, lambda, scope).unwrap();
        expected.add_scaled(&pgrads, 1.0).unwrap();
        assert_eq!(
            combined_loss.to_bits(),
            (data_loss + pen).to_bits(),
            "instance {instance}: penalized loss is not data + penalty bitwise"
        );
        for l in 0..expected.layers.len() {
            for j in 0..expected.layers[l].len() {
                assert_eq!(
                    combined_grads.layers[l][j].to_bits(),
                    expected.layers[l][j].to_bits(),
                    "instance {instance} layer {l} entry {j}: penalized gradient is not the bitwise sum"
                );
            }
        }
    }

    let coverage = checked as f64 / (checked + skipped) as f64;
    let elapsed = start.elapsed();
    let pass = coverage >= 0.5 && within(elapsed, 30);
    verdict(
        3,
        "backprop and penalty gradients match finite differences",
        pass,
        &format!(
            "{instances} models, {checked} entries verified ({:.1}% coverage, min 50%), worst data ratio {worst_data:.2e}, worst penalty ratio {worst_penalty:.2e}, {elapsed:.2?} (budget 30s)",
            100.0 * coverage
        ),
    );
}

fn random_paramset(rng: &mut ChaCha8Rng, layout: &[usize]) -> ParamSet {
    ParamSet { layers: layout.iter().map(|&n| normal_vec(rng, n)).collect() }
}

fn scale_paramset(p: &ParamSet, c: f64) -> ParamSet {
    ParamSet {
        layers: p.layers.iter().map(|l| l.iter().map(|v| c * v).collect()).collect(),
    }
}

// Criterion 4: algebraic identities of the alignment penalty on random
// inputs: absolute homogeneity in the parameters, inverse scaling in a
// snapshot, vanishing after layer-wise projection, monotone growth with
// registry size, and exact locality of the single-layer scope.
#[test]
fn criterion_04_penalty_satisfies_its_algebraic_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let instances = 1000;

    for instance in 0..instances {
        let num_layers = rng.random_range(1..=3);
        let layout: Vec<usize> = (0..num_layers).map(|_| rng.random_range(3..=12)).collect();
        let theta = random_paramset(&mut rng, &layout);
        let num_snapshots = rng.random_range(1..=3);
        let snapshots: Vec<ParamSet> =
            (0..num_snapshots).map(|_| random_paramset(&mut rng, &layout)).collect();
        let registry = SolutionRegistry::from_snapshots(snapshots.clone()).unwrap();
        let lambda = 10f64.powf(-2.0 + 3.0 * rng.random::<f64>());
        let scope = PenaltyScope::AllLayers;
        let base = penalty(&theta, &registry, lambda, scope).unwrap();

        let c = {
            let mut c = 0.0f64;
            while c.abs() < 0.1 {
                c = -3.0 + 6.0 * rng.random::<f64>();
            }
            c
        };

        let scaled = penalty(&scale_paramset(&theta, c), &registry, lambda, scope).unwrap();
        let want = c.abs() * base;
        assert!(
            (scaled - want).abs() <= 1e-12 * (scaled + want + lambda),
            "instance {instance}: penalty(c*theta) = {scaled}, |c|*penalty(theta) = {want}"
        );

        let single = SolutionRegistry::from_snapshots(vec![snapshots[0].clone()]).unwrap();
        let single_base = penalty(&theta, &single, lambda, scope).unwrap();
        let snap_scaled =
            SolutionRegistry::from_snapshots(vec![scale_paramset(&snapshots[0], c)]).unwrap();
        let scaled_snap = penalty(&theta, &snap_scaled, lambda, scope).unwrap();
        let want = single_base / c.abs();
        assert!(
            (scaled_snap - want).abs() <= 1e-12 * (scaled_snap + want + lambda),
            "instance {instance}: scaling a snapshot by {c} must divide its penalty by |c|"
        );

        // Layer-wise projection against the snapshot kills the penalty.
        let snapshot = &snapshots[0];
        let mut projected = theta.clone();
        let mut bound = 0.0;
        for l in 0..num_layers {
            let coeff = dot(&snapshot.layers[l], &theta.layers[l])
                / dot(&snapshot.layers[l], &snapshot.layers[l]);
            for (p, s) in projected.layers[l].iter_mut().zip(&snapshot.layers[l]) {
                *p -= coeff * s;
            }
            bound += norm(&theta.layers[l]) / norm(&snapshot.layers[l]) + 1.0;
        }
        let orthogonal = penalty(&projected, &single, lambda, scope).unwrap();
        assert!(
            orthogonal <= 1e-12 * lambda * bound,
            "instance {instance}: projected penalty {orthogonal} above roundoff bound"
        );

        // A grown registry never shrinks the penalty.
        let prefix = rng.random_range(1..=num_snapshots);
        let sub =
            SolutionRegistry::from_snapshots(snapshots[..prefix].to_vec()).unwrap();
        let mut grown_snapshots = snapshots[..prefix].to_vec();
        grown_snapshots.push(random_paramset(&mut rng, &layout));
        let grown = SolutionRegistry::from_snapshots(grown_snapshots).unwrap();
        let p_sub = penalty(&theta, &sub, lambda, scope).unwrap();
        let p_grown = penalty(&theta, &grown, lambda, scope).unwrap();
        assert!(
            p_grown >= p_sub,
            "instance {instance}: appending a snapshot shrank the penalty ({p_grown} < {p_sub})"
        );

        // Single-layer scope touches exactly that layer, bit for bit.
        let l = rng.random_range(0..num_layers);
        let local = penalty_grad(&theta, &registry, lambda, PenaltyScope::Layer(l)).unwrap();
        let full = penalty_grad(&theta, &registry, lambda, scope).unwrap();
        for m in 0..num_layers {
            if m == l {
                for j in 0..local.layers[m].len() {
                    assert_eq!(
                        local.layers[m][j].to_bits(),
                        full.layers[m][j].to_bits(),
                        "instance {instance}: scoped gradient differs on its own layer"
                    );
                }
            } else {
                assert!(
                    local.layers[m].iter().all(|&v| v == 0.0),
                    "instance {instance}: scoped gradient leaked into layer {m}"
                );
            }
        }
    }

    let elapsed = start.elapsed();
    let pass = within(elapsed, 10);
    verdict(
        4,
        "alignment penalty satisfies its algebraic identities",
        pass,
        &format!("{instances} random instances, all five identities hold, {elapsed:.2?} (budget 10s)"),
    );
}

// Criterion 5: across the pinned ten-study regression family, tiny-scale
// initialization strands plain training on a piecewise-affine fit in some
// studies, and the penalized retraining loop always finds a champion that
// (a) strictly beats every stranded plain run on training loss and (c) is
// never itself piecewise-affine once it trains below the best affine fit.
#[test]
fn criterion_05_persistent_training_rescues_stuck_regressions() {
    clear_output_env();
    let start = Instant::now();
    const STUDIES: usize = 10;
    // Frozen seed family: derived from master seed 11 and pinned so a silent
    // change in seed derivation cannot move the study population.
    const FAMILY: [(u64, u64); STUDIES] = [
        (1074798095157923863, 7905835461790155737),
        (2810667246807146297, 16371719387688191710),
        (12377858853982068059, 13176884757282595370),
        (18225720499939561181, 16283658625484169749),
        (13484596834574405476, 10922154139502508196),
        (15431242586478975956, 4381705829346756794),
        (7654192381148616196, 17531902041606079538),
        (1406685980519220984, 9727039552884584844),
        (5548483167066132836, 4396783956391803189),
        (17424792150481356681, 13208581510978555088),
    ];
    let base = shipped_config("regress1d.json");
    assert_eq!(base.master_seed, 11, "shipped regression config is study 0 of the family");

    let mut flagged = 0usize;
    let mut all_flagged_rescued = true;
    let mut floor_clause = true;
    for (index, &(data_seed, init_seed)) in FAMILY.iter().enumerate() {
        assert_eq!(derive_seed_indexed(11, "data", index as u64), data_seed);
        assert_eq!(derive_seed_indexed(11, "init", index as u64), init_seed);
        let mut config = base.clone();
        config.data.as_mut().unwrap().seed = Some(data_seed);
        config.model.as_mut().unwrap().init.seed = Some(init_seed);
        let tmp = tempfile::tempdir().unwrap();
        let outcome = run_into(&config, tmp.path());
        let summary = read_value(&outcome.run_dir.join("summary.json"));

        let plain_train = summary["plain"]["train_loss"].as_f64().unwrap();
        let champion_train = summary["champion"]["train_loss"].as_f64().unwrap();
        let kink = &summary["kink"];
        let plain_stuck = kink["plain"]["is_piecewise_affine"].as_bool().unwrap();
        let champion_affine = kink["champion"]["is_piecewise_affine"].as_bool().unwrap();
        let affine_floor = kink["affine_floor"].as_f64().unwrap();

        if plain_stuck {
            flagged += 1;
            if champion_train >= plain_train {
                all_flagged_rescued = false;
            }
        }
        if champion_train < affine_floor && champion_affine {
            floor_clause = false;
        }
    }

    let elapsed = start.elapsed();
    let pass = flagged >= 1 && all_flagged_rescued && floor_clause && within(elapsed, 300);
    verdict(
        5,
        "penalized retraining rescues piecewise-affine regressions",
        pass,
        &format!(
            "{flagged}/{STUDIES} plain runs stranded piecewise-affine (min 1), champions strictly beat every stranded plain: {all_flagged_rescued}, sub-floor champions never affine: {floor_clause}, {elapsed:.2?} (budget 300s)"
        ),
    );
}

fn file_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

// Criterion 6: the classification experiment is bitwise reproducible and
// its champion is chosen by validation metric with earliest-wins ties.
#[test]
fn criterion_06_classification_is_deterministic_with_validation_champion() {
    clear_output_env();
    let start = Instant::now();
    let config = shipped_config("classify.json");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = run_into(&config, first.path());
    let b = run_into(&config, second.path());

    let mut identical = true;
    for name in ["summary.json", "records.json", "registry.json"] {
        if file_bytes(&a.run_dir.join(name)) != file_bytes(&b.run_dir.join(name)) {
            identical = false;
        }
    }

    let registry = load_registry(&a.run_dir).unwrap();
    let records = load_records(&a.run_dir).unwrap();
    let metrics_valid = records
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.final_val_metric) && r.final_val_metric.is_finite());
    let mut expected_champion = 0usize;
    for (i, record) in records.iter().enumerate().skip(1) {
        if record.final_val_metric < records[expected_champion].final_val_metric {
            expected_champion = i;
        }
    }
    let summary = read_value(&a.run_dir.join("summary.json"));
    let champion_index = summary["champion_index"].as_u64().unwrap() as usize;

    let elapsed = start.elapsed();
    let pass = identical
        && registry.len() == 6
        && records.len() == 6
        && metrics_valid
        && champion_index == expected_champion
        && within(elapsed, 120);
    verdict(
        6,
        "classification run is deterministic and champion follows validation",
        pass,
        &format!(
            "two runs byte-identical: {identical}, {} snapshots, champion {champion_index} matches argmin val error (earliest tie), {elapsed:.2?} (budget 120s)",
            registry.len()
        ),
    );
}

// Criterion 7: over random registries and trajectories, the penalty-gradient
// decomposition centers exactly: the residual mean is zero to roundoff
// relative to the largest sample.
#[test]
fn criterion_07_gradient_decomposition_centers_to_roundoff() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let instances = 40;
    let mut worst = 0.0f64;
    for instance in 0..instances {
        let num_layers = rng.random_range(1..=2);
        let layout: Vec<usize> = (0..num_layers).map(|_| rng.random_range(4..=10)).collect();
        let snapshots: Vec<ParamSet> =
            (0..rng.random_range(1..=3)).map(|_| random_paramset(&mut rng, &layout)).collect();
        let registry = SolutionRegistry::from_snapshots(snapshots).unwrap();
        let trajectory: Vec<ParamSet> =
            (0..rng.random_range(5..=50)).map(|_| random_paramset(&mut rng, &layout)).collect();
        let lambda = 10f64.powf(-2.0 + 2.0 * rng.random::<f64>());

        let report = decompose_gradient(&registry, &trajectory, lambda).unwrap();
        assert_eq!(report.lambda, lambda);
        assert_eq!(report.bias_estimate.len(), num_layers);
        assert_eq!(report.residual_samples.len(), num_layers);
        for l in 0..num_layers {
            assert_eq!(report.bias_estimate[l].len(), layout[l]);
            assert_eq!(report.residual_samples[l].len(), trajectory.len());
        }
        let bound = 1e-10 * report.max_sample_norm + 1e-14;
        worst = worst.max(report.residual_mean_norm / bound);
        assert!(
            report.residual_mean_norm <= bound,
            "instance {instance}: residual mean norm {} above {bound}",
            report.residual_mean_norm
        );
    }
    let elapsed = start.elapsed();
    let pass = within(elapsed, 1);
    verdict(
        7,
        "penalty gradient decomposition centers its residuals",
        pass,
        &format!("{instances} random decompositions, worst residual-to-bound ratio {worst:.2e}, {elapsed:.2?} (budget 1s)"),
    );
}

// Criterion 8: the finite-difference Hessian of a single linear layer under
// squared error matches the closed-form quadratic, and the eigensolver
// reconstructs what it factored.
#[test]
fn criterion_08_hessian_matches_the_quadratic_oracle() {
    clear_output_env();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let (dim_in, dim_out, batch_size) = (20usize, 20usize, 32usize);
    let spec = ModelSpec {
        layer_widths: vec![dim_in, dim_out],
        activation: Activation::Relu,
        output_activation: OutputActivation::Identity,
        loss_kind: LossKind::MeanSquaredError,
        initializer: InitSpec { kind: InitKind::HeNormal, sigma: 0.0, seed: 0xC8 },
    };
    let params = net::init_params(&spec).unwrap();
    let x = normal_vec(&mut rng, batch_size * dim_in);
    let inputs = Matrix::from_vec(batch_size, dim_in, x.clone()).unwrap();
    let targets =
        Matrix::from_vec(batch_size, dim_out, normal_vec(&mut rng, batch_size * dim_out)).unwrap();
    let batch = Batch::new(inputs, targets).unwrap();

    let hessian = hessian_dense(&spec, &params, &batch).unwrap();
    let n = spec.param_count();
    assert_eq!(n, dim_out * dim_in + dim_out);
    assert_eq!((hessian.rows(), hessian.cols()), (n, n));

    // Squared error means over the batch and sums over outputs, so the
    // Hessian is block diagonal per output row with every block equal to
    // (2/B) * Xa^T Xa, Xa being the inputs with an appended ones column.
    // Weight (o, i) sits at o*dim_in + i; bias o sits at dim_out*dim_in + o.
    let augmented = |b: usize, i: usize| if i < dim_in { x[b * dim_in + i] } else { 1.0 };
    let index = |o: usize, i: usize| {
        if i < dim_in {
            o * dim_in + i
        } else {
            dim_out * dim_in + o
        }
    };
    let mut analytic = Matrix::zeros(n, n);
    for o in 0..dim_out {
        for i in 0..=dim_in {
            for j in 0..=dim_in {
                let mut sum = 0.0;
                for b in 0..batch_size {
                    sum += augmented(b, i) * augmented(b, j);
                }
                analytic.set(index(o, i), index(o, j), 2.0 * sum / batch_size as f64);
            }
        }
    }
    let mut scale = 0.0f64;
    let mut hessian_err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(analytic.get(i, j).abs());
            hessian_err = hessian_err.max((hessian.get(i, j) - analytic.get(i, j)).abs());
        }
    }
    let hessian_ok = hessian_err <= 1e-5 * scale;

    let eigen = symmetric_eigen(&hessian).unwrap();
    let mut reconstruction_err = 0.0f64;
    let mut hessian_scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0.0;
            for (k, lam) in eigen.eigenvalues.iter().enumerate() {
                sum += lam * eigen.eigenvectors.get(i, k) * eigen.eigenvectors.get(j, k);
            }
            hessian_scale = hessian_scale.max(hessian.get(i, j).abs());
            reconstruction_err = reconstruction_err.max((sum - hessian.get(i, j)).abs());
        }
    }
    let reconstruction_ok = reconstruction_err <= 1e-8 * hessian_scale.max(1.0);

    let trace: f64 = (0..n).map(|i| hessian.get(i, i)).sum();
    let eigen_sum: f64 = eigen.eigenvalues.iter().sum();
    let trace_ok = (trace - eigen_sum).abs() <= 1e-8 * trace.abs().max(1.0);

    // The spectrum experiment emits its paired reports end to end.
    let config = shipped_config("spectrum.json");
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_into(&config, tmp.path());
    let pair = read_value(&outcome.run_dir.join("spectrum.json"));
    let expected_params = 97;
    let spectrum_ok = ["plain", "champion"].iter().all(|side| {
        let block = &pair[side];
        block["eigenvalues"].as_array().map(|e| e.len()) == Some(expected_params)
            && block["lambda_max"].as_f64().is_some_and(f64::is_finite)
    });

    let elapsed = start.elapsed();
    let pass = hessian_ok && reconstruction_ok && trace_ok && spectrum_ok && within(elapsed, 30);
    verdict(
        8,
        "dense Hessian matches the closed-form quadratic",
        pass,
        &format!(
            "max |H - analytic| = {hessian_err:.2e} (tol {:.2e}), eigen reconstruction {reconstruction_err:.2e}, trace gap {:.2e}, paired spectra emitted: {spectrum_ok}, {elapsed:.2?} (budget 30s)",
            1e-5 * scale,
            (trace - eigen_sum).abs()
        ),
    );
}

// Criterion 9: saturation statistics are proper densities with bounded dead
// fractions, percentiles are monotone, and forced-saturation constructions
// are detected.
#[test]
fn criterion_09_saturation_statistics_are_sound() {
    clear_output_env();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let threshold = 0.98;

    let snapshots = 50;
    for _ in 0..snapshots {
        let activation =
            if rng.random_range(0..2) == 0 { Activation::Tanh } else { Activation::Relu };
        let mut widths = vec![rng.random_range(1..=3)];
        for _ in 0..rng.random_range(1..=2) {
            widths.push(rng.random_range(4..=16));
        }
        widths.push(rng.random_range(1..=2));
        let hidden_layers = widths.len() - 2;
        let input = widths[0];
        let spec = ModelSpec {
            layer_widths: widths,
            activation,
            output_activation: OutputActivation::Identity,
            loss_kind: LossKind::MeanSquaredError,
            initializer: InitSpec { kind: InitKind::XavierNormal, sigma: 0.0, seed: rng.random() },
        };
        let params = net::init_params(&spec).unwrap();
        let batch_size = rng.random_range(4..=16);
        let output = *spec.layer_widths.last().unwrap();
        let inputs =
            Matrix::from_vec(batch_size, input, normal_vec(&mut rng, batch_size * input)).unwrap();
        let targets =
            Matrix::from_vec(batch_size, output, vec![0.0; batch_size * output]).unwrap();
        let batch = Batch::new(inputs, targets).unwrap();
        let snapshot = saturation_snapshot(&spec, &params, &batch, threshold).unwrap();
        assert_eq!(snapshot.layers.len(), hidden_layers);
        for layer in &snapshot.layers {
            assert!(
                (layer.histogram.integral() - 1.0).abs() <= 1e-9,
                "histogram integral {} is not 1",
                layer.histogram.integral()
            );
            assert!((0.0..=1.0).contains(&layer.dead_fraction));
            assert!(layer.p98_abs_activation.is_finite() && layer.p98_abs_activation >= 0.0);
        }
    }

    // Percentiles: monotone in p, exact at the endpoints.
    let values = normal_vec(&mut rng, 200);
    let sorted_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sorted_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut previous = f64::NEG_INFINITY;
    for step in 0..=20 {
        let p = percentile(&values, step as f64 * 5.0).unwrap();
        assert!(p >= previous, "percentile fell from {previous} to {p}");
        assert!((sorted_min..=sorted_max).contains(&p));
        previous = p;
    }
    assert_eq!(percentile(&values, 0.0).unwrap(), sorted_min);
    assert_eq!(percentile(&values, 100.0).unwrap(), sorted_max);

    // Hundredfold tanh weights saturate every hidden unit on almost every
    // sample; demand at least 0.9 per layer.
    let tanh_spec = ModelSpec {
        layer_widths: vec![1, 16, 16, 1],
        activation: Activation::Tanh,
        output_activation: OutputActivation::Identity,
        loss_kind: LossKind::MeanSquaredError,
        initializer: InitSpec { kind: InitKind::HeNormal, sigma: 0.0, seed: 0xC9 },
    };
    let blown_up = scale_paramset(&net::init_params(&tanh_spec).unwrap(), 100.0);
    let inputs = Matrix::from_vec(32, 1, normal_vec(&mut rng, 32)).unwrap();
    let targets = Matrix::from_vec(32, 1, vec![0.0; 32]).unwrap();
    let batch = Batch::new(inputs, targets).unwrap();
    let saturated = saturation_snapshot(&tanh_spec, &blown_up, &batch, threshold).unwrap();
    let tanh_saturated = saturated.layers.iter().all(|l| l.dead_fraction >= 0.9);

    // Zero first-layer weights under negative biases pin every first-layer
    // relu at exactly zero; later layers see all-zero inputs and zero biases,
    // so the whole net reports full deadness.
    let relu_spec = ModelSpec { activation: Activation::Relu, ..tanh_spec.clone() };
    let mut dead_params = net::init_params(&relu_spec).unwrap();
    let first_width = 16;
    for (j, v) in dead_params.layers[0].iter_mut().enumerate() {
        *v = if j < first_width { 0.0 } else { -1.0 };
    }
    let dead = saturation_snapshot(&relu_spec, &dead_params, &batch, threshold).unwrap();
    let relu_dead = dead.layers.iter().all(|l| l.dead_fraction == 1.0)
        && dead.layers.iter().all(|l| l.p98_abs_activation == 0.0);

    // The saturation experiment writes its report pair.
    let config = shipped_config("saturation.json");
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_into(&config, tmp.path());
    let csv = fs::read_to_string(outcome.run_dir.join("saturation.csv")).unwrap();
    let mut lines = csv.lines();
    let header_ok = lines.next() == Some("epoch,layer,p98,dead_fraction");
    let row_count = lines.count();
    let emission_ok = header_ok
        && row_count == 4 * 2
        && outcome.run_dir.join("saturation.json").exists();

    let elapsed = start.elapsed();
    let pass = tanh_saturated && relu_dead && emission_ok;
    verdict(
        9,
        "saturation statistics are sound and detect saturation",
        pass,
        &format!(
            "{snapshots} random snapshots normalized, percentiles monotone, forced tanh saturation: {tanh_saturated}, dead relu detected: {relu_dead}, report emitted: {emission_ok}, {elapsed:.2?}"
        ),
    );
}

// Criterion 10: re-running any shipped experiment reproduces its artifacts
// byte for byte.
#[test]
fn criterion_10_reruns_reproduce_artifacts_byte_for_byte() {
    clear_output_env();
    let start = Instant::now();
    let mut all_identical = true;
    let mut details = Vec::new();
    for name in ["toy2d.json", "regress1d.json", "classify.json"] {
        let config = shipped_config(name);
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        let a = run_into(&config, first.path());
        let b = run_into(&config, second.path());
        let files: &[&str] = if name == "toy2d.json" {
            &["summary.json", "registry.json"]
        } else {
            &["summary.json", "records.json", "registry.json"]
        };
        let identical = files
            .iter()
            .all(|f| file_bytes(&a.run_dir.join(f)) == file_bytes(&b.run_dir.join(f)));
        if !identical {
            all_identical = false;
        }
        details.push(format!("{name} identical: {identical}"));
    }
    let elapsed = start.elapsed();
    verdict(
        10,
        "reruns reproduce artifacts byte for byte",
        all_identical,
        &format!("{}, {elapsed:.2?}", details.join(", ")),
    );
}
