//! `persistent-opt`: run persistent-training experiments from JSON configs
//! and analyze the run directories they produce.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use persistent_opt::compare::compare_reinit;
use persistent_opt::config::ExperimentConfig;
use persistent_opt::error::{Result, EXIT_CONFIG};
use persistent_opt::runner::{
    run_experiment, run_saturation_pass, run_spectrum_pass, RunOptions, Summary,
};

#[derive(Parser)]
#[command(name = "persistent-opt", version, about = "Persistent-training experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file.
    Run {
        /// Path to a JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output root; the PERSISTENT_OPT_OUT environment variable wins
        /// over this, and this wins over the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train fresh-seed plain baselines against one persistent run of the
    /// same total step budget.
    CompareReinit {
        #[arg(long)]
        config: PathBuf,
        /// Number of re-initializations; also the persistent iteration count.
        #[arg(long)]
        seeds: usize,
        /// Output root, with the same precedence as for `run`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hessian spectrum of one stored iteration of an existing run.
    Spectrum {
        /// Run directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        iteration: usize,
    },
    /// Activation-saturation statistics for every stored iteration.
    Saturation {
        #[arg(long)]
        run: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let config = ExperimentConfig::from_path(&config)?;
            let options = RunOptions { out_root: out, seed_override: seed };
            let outcome = run_experiment(&config, &options)?;
            println!("run directory: {}", outcome.run_dir.display());
            match &outcome.summary {
                Summary::Toy(toy) => {
                    let champ = &toy.runs[toy.champion_index];
                    println!(
                        "champion: iteration {} at ({:.6}, {:.6}), f = {:.6}",
                        champ.iteration, champ.converged_to[0], champ.converged_to[1], champ.final_f
                    );
                    println!("plain: f = {:.6}", toy.runs[0].final_f);
                }
                Summary::Net(net) => {
                    println!(
                        "champion: iteration {}, train {:.6}, val {:.6}, test {:.6}",
                        net.champion_index,
                        net.champion.train_loss,
                        net.champion.val_metric,
                        net.champion.test_metric
                    );
                    println!(
                        "plain: train {:.6}, val {:.6}, test {:.6}",
                        net.plain.train_loss, net.plain.val_metric, net.plain.test_metric
                    );
                }
            }
        }
        Command::CompareReinit { config, seeds, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            let options = RunOptions { out_root: out, seed_override: None };
            let outcome = compare_reinit(&config, seeds, &options)?;
            let report = &outcome.report;
            println!("comparison directory: {}", outcome.out_dir.display());
            println!(
                "best re-init train loss: {:.6} over {} seeds",
                report.best_reinit_train_loss, report.n_seeds
            );
            println!(
                "best persistent train loss: {:.6} over {} iterations",
                report.best_persistent_train_loss, report.n_seeds
            );
            if let (Some(r), Some(p)) =
                (report.reinit_kink_frequency, report.persistent_kink_frequency)
            {
                println!("piecewise-affine frequency: re-init {r:.2}, persistent {p:.2}");
            }
        }
        Command::Spectrum { run, iteration } => {
            let report = run_spectrum_pass(&run, iteration)?;
            println!(
                "iteration {iteration}: {} eigenvalues, lambda_max {:.6}, bulk edge {:.6}, {} outliers",
                report.eigenvalues.len(),
                report.lambda_max,
                report.bulk_edge,
                report.outlier_count
            );
        }
        Command::Saturation { run } => {
            let report = run_saturation_pass(&run)?;
            for record in &report.records {
                let stats: Vec<String> = record
                    .snapshot
                    .layers
                    .iter()
                    .map(|l| format!("p98 {:.4} dead {:.4}", l.p98_abs_activation, l.dead_fraction))
                    .collect();
                println!("iteration {}: {}", record.epoch, stats.join(" | "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not failures.
            let code = if err.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report =
                serde_json::json!({"error": {"kind": err.kind(), "message": err.to_string()}});
            eprintln!("{report}");
            err.exit_code()
        }
    }
}
