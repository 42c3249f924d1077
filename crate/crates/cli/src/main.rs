use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glearn_cli::experiment::PreparedDomain;
use glearn_cli::{emit_csv, k_sweep, resolve_workers, run_experiment, CliError, ExperimentConfig};
use glearn_core::rng::label;
use glearn_core::validate_mdp;

#[derive(Parser)]
#[command(name = "glearn", version, about = "Run tabular G-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides GLEARN_WORKERS and the config).
        #[arg(long)]
        workers: Option<usize>,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pick a schedule parameter from preliminary runs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Candidate values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<f64>,
        /// Algorithm label to sweep; defaults to every sweepable one.
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and the domain it builds.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.run.seed = seed;
            }
            let dir = out.unwrap_or_else(|| cfg.run.output.clone());
            let workers = resolve_workers(workers, &cfg.run)?;
            let result = run_experiment(&cfg, workers)?;
            for s in &result.sweeps {
                println!("{}: chose {} from {:?}", s.label, s.chosen, s.candidates);
            }
            for alg in &cfg.algorithms {
                if let Some(p) = result.aggregate_for(&alg.label).last() {
                    println!(
                        "{:<16} iter {:>8}  bias {:>10.4}  mae {:>8.4}  subopt {:>8.4}  bellman {:>8.4}",
                        alg.label,
                        p.iteration,
                        p.bias,
                        p.mean_abs_error,
                        p.policy_suboptimality,
                        p.bellman_error_avg
                    );
                }
            }
            for path in emit_csv(&result, &dir, cfg.run.per_run_csv)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            ks,
            algorithm,
            workers,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let workers = resolve_workers(workers, &cfg.run)?;
            let labels: Vec<String> = match algorithm {
                Some(l) => vec![l],
                None => cfg
                    .algorithms
                    .iter()
                    .filter(|a| a.tunable.with_candidates(Vec::new()).is_some())
                    .map(|a| a.label.clone())
                    .collect(),
            };
            if labels.is_empty() {
                return Err(CliError::Config(
                    "no sweepable algorithm in the config".into(),
                ));
            }
            for l in labels {
                let outcome = k_sweep(&cfg, &l, &ks, workers)?;
                for (k, cost) in outcome.candidates.iter().zip(&outcome.costs) {
                    let mark = if *k == outcome.chosen {
                        "  <- chosen"
                    } else {
                        ""
                    };
                    println!("{l}  {k:e}  {cost:.6}{mark}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let prepared = PreparedDomain::build(&cfg.domain, cfg.run.seed, &[label("domain"), 0])?;
            let m = &prepared.domain.mdp;
            let report = validate_mdp(m);
            println!(
                "{} states, {} actions, gamma {}, {} algorithm(s): {report}",
                m.n_states(),
                m.n_actions(),
                m.gamma(),
                cfg.algorithms.len()
            );
            Ok(if report.is_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
