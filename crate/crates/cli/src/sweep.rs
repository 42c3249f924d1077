//! Choosing a schedule parameter from a few short preliminary runs.

use crate::config::{AlgorithmConfig, ExperimentConfig, SweepCriterion, SWEEP_RUNS};
use crate::error::{config_error, Result};
use crate::experiment::{prepare_domains, simulate, LearnerSpec, RunPlan, Scope};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub label: String,
    pub candidates: Vec<f64>,
    /// Empirical cost per candidate (lower is better).
    pub costs: Vec<f64>,
    pub chosen: f64,
}

/// Index of the lowest cost; ties go to the smallest candidate value.
pub fn select_candidate(candidates: &[f64], costs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..candidates.len().min(costs.len()) {
        if costs[i] < costs[best] || (costs[i] == costs[best] && candidates[i] < candidates[best]) {
            best = i;
        }
    }
    best
}

/// Sweeps `candidates` for the algorithm `label` on `workers` threads.
pub fn k_sweep(
    cfg: &ExperimentConfig,
    label: &str,
    candidates: &[f64],
    workers: usize,
) -> Result<SweepOutcome> {
    let alg = cfg
        .algorithm(label)
        .ok_or_else(|| config_error(format!("no algorithm labelled {label:?}")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    pool.install(|| sweep_in_pool(cfg, alg, candidates))
}

/// Runs `SWEEP_RUNS` preliminary runs per candidate and returns the candidate
/// with the lowest empirical cost; ties go to the smallest candidate.
pub(crate) fn sweep_in_pool(
    cfg: &ExperimentConfig,
    alg: &AlgorithmConfig,
    candidates: &[f64],
) -> Result<SweepOutcome> {
    if candidates.is_empty() {
        return Err(config_error("sweep needs at least one candidate"));
    }
    let tunable = alg
        .tunable
        .with_candidates(candidates.to_vec())
        .ok_or_else(|| {
            config_error(format!(
                "algorithm {:?} has no sweepable parameter",
                alg.label
            ))
        })?;
    let domains = prepare_domains(cfg, Scope::Sweep, SWEEP_RUNS)?;
    let plan = RunPlan {
        run: &cfg.run,
        iterations: cfg.run.sweep_iterations,
        eval_interval: None,
        scope: Scope::Sweep,
        histogram: false,
    };
    let costs = candidates
        .par_iter()
        .map(|&value| {
            let spec = LearnerSpec {
                algorithm: tunable.with(value),
                alpha: alg.alpha,
                readout: alg.readout,
            };
            let mut total = 0.0;
            for (run, prepared) in domains.iter().enumerate() {
                let record = simulate(prepared, &spec, &alg.label, run, &plan)?;
                total += match cfg.run.sweep_criterion {
                    SweepCriterion::CostToGo => {
                        prepared.mean_cost_to_go(&record.learner.greedy_policy())?
                    }
                    SweepCriterion::RealizedCost => record.cumulative_cost,
                };
            }
            Ok(total / domains.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = select_candidate(candidates, &costs);
    Ok(SweepOutcome {
        label: alg.label.clone(),
        candidates: candidates.to_vec(),
        costs,
        chosen: candidates[best],
    })
}
