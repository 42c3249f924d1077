//! Seeded, parallel execution of an experiment.
//!
//! Every random stream is derived from the base seed and a path of tags
//! (see `glearn_core::rng`): run `i` builds its domain from
//! `[domain, i]`, and algorithm `label` in run `i` draws experience from
//! `[explore, i, label]` and learner-internal coin flips from
//! `[learner, i, label]`. Sweeps prefix every path with `sweep`. Runs are
//! independent tasks whose results are collected in a fixed order, so the
//! output does not depend on the worker count.

use glearn_core::metrics::{empirical_bias, mean_abs_error, policy_value_gap};
use glearn_core::oracle::{greedy_policy, policy_evaluation, value_iteration};
use glearn_core::rng::{label, stream};
use glearn_core::{
    build_cliff, build_gridworld, parse_map, Algorithm, AlphaSchedule, ExplorationRegime, Explorer,
    GreedyReadout, GridDomain, Learner, LearnerConfig, MetricPoint, MetricSeries, StochasticPolicy,
    ValueTable, VisitHistogram,
};
use rayon::prelude::*;

use crate::config::{DomainConfig, DomainKind, ExperimentConfig, Exploration, RunConfig};
use crate::error::{config_error, Result};
use crate::sweep::{sweep_in_pool, SweepOutcome};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "GLEARN_WORKERS";

/// Tolerance of the value iteration behind `V*`.
const VI_TOL: f64 = 1e-12;

/// Worker count: explicit request, then `GLEARN_WORKERS`, then the config,
/// then the available parallelism.
pub fn resolve_workers(requested: Option<usize>, run: &RunConfig) -> Result<usize> {
    if let Some(n) = requested {
        return positive_workers(n);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n = v.trim().parse::<usize>().map_err(|_| {
            config_error(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        return positive_workers(n);
    }
    Ok(run
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

fn positive_workers(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(config_error("worker count must be positive"));
    }
    Ok(n)
}

/// A built domain with its exact optimal values.
#[derive(Debug, Clone)]
pub struct PreparedDomain {
    pub domain: GridDomain,
    /// `V*` on every state, from the greedy policy of converged value
    /// iteration evaluated exactly.
    pub v_star: ValueTable,
    /// States the metrics average over (non-terminal).
    pub eval_states: Vec<usize>,
}

impl PreparedDomain {
    pub fn build(cfg: &DomainConfig, base_seed: u64, path: &[u64]) -> Result<Self> {
        let map = parse_map(&cfg.map_text)?;
        let domain = match cfg.kind {
            DomainKind::Gridworld => {
                build_gridworld(&map, cfg.cost, cfg.gamma, &mut stream(base_seed, path))?
            }
            DomainKind::Cliff => build_cliff(&map, cfg.gamma)?,
        };
        let m = &domain.mdp;
        let (q, _) = value_iteration(m, VI_TOL)?;
        let (_, v_star) = policy_evaluation(m, &greedy_policy(&q))?;
        let eval_states = m.non_terminal_states();
        Ok(Self {
            domain,
            v_star,
            eval_states,
        })
    }

    /// Mean over evaluation states of `V^pi`.
    pub fn mean_cost_to_go(&self, pi: &StochasticPolicy) -> Result<f64> {
        let (_, v) = policy_evaluation(&self.domain.mdp, pi)?;
        Ok(v.select(&self.eval_states).mean())
    }
}

/// One learner to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    pub algorithm: Algorithm,
    pub alpha: AlphaSchedule,
    pub readout: GreedyReadout,
}

/// Outcome of a single simulated run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub series: MetricSeries,
    pub learner: Learner,
    pub cumulative_cost: f64,
}

/// Seed-path prefix of a main run or a sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Scope {
    Main,
    Sweep,
}

impl Scope {
    pub(crate) fn path(self, parts: &[u64]) -> Vec<u64> {
        let mut p = Vec::with_capacity(parts.len() + 1);
        if self == Scope::Sweep {
            p.push(label("sweep"));
        }
        p.extend_from_slice(parts);
        p
    }
}

pub(crate) struct RunPlan<'a> {
    pub run: &'a RunConfig,
    pub iterations: u64,
    /// `None` records only the final point.
    pub eval_interval: Option<u64>,
    pub scope: Scope,
    pub histogram: bool,
}

fn regime(exploration: Exploration, domain: &GridDomain) -> Result<ExplorationRegime> {
    Ok(match exploration {
        Exploration::Uniform => ExplorationRegime::UniformIid,
        Exploration::EpsilonGreedy { epsilon } => ExplorationRegime::EpsilonGreedy {
            epsilon,
            start_state: domain
                .start
                .ok_or_else(|| config_error("epsilon-greedy exploration needs a start state"))?,
        },
    })
}

fn metric_point(
    prepared: &PreparedDomain,
    learner: &Learner,
    iteration: u64,
    cumulative_cost: f64,
) -> Result<MetricPoint> {
    let states = &prepared.eval_states;
    let v = learner.greedy_value().select(states);
    let v_star = prepared.v_star.select(states);
    let gap = policy_value_gap(
        &prepared.domain.mdp,
        &learner.greedy_policy(),
        &prepared.v_star,
    )?;
    Ok(MetricPoint {
        iteration,
        bias: empirical_bias(std::slice::from_ref(&v), std::slice::from_ref(&v_star))?,
        mean_abs_error: mean_abs_error(std::slice::from_ref(&v), std::slice::from_ref(&v_star))?,
        policy_suboptimality: gap.select(states).mean(),
        bellman_error_avg: learner.bellman_error_avg().unwrap_or(0.0),
        cumulative_cost,
    })
}

/// Runs one learner on one prepared domain.
pub(crate) fn simulate(
    prepared: &PreparedDomain,
    spec: &LearnerSpec,
    name: &str,
    run_index: usize,
    plan: &RunPlan<'_>,
) -> Result<RunRecord> {
    let m = &prepared.domain.mdp;
    let config = LearnerConfig {
        alpha: spec.alpha,
        readout: spec.readout,
        ..LearnerConfig::new(spec.algorithm, m.gamma())
    };
    let mut learner = Learner::new(
        config,
        StochasticPolicy::uniform(m.n_states(), m.n_actions()),
    )?;
    let mut explorer = Explorer::new(regime(plan.run.exploration, &prepared.domain)?, m)?;
    let tag = [run_index as u64, label(name)];
    let mut explore_rng = stream(
        plan.run.seed,
        &plan.scope.path(&[label("explore"), tag[0], tag[1]]),
    );
    let mut learner_rng = stream(
        plan.run.seed,
        &plan.scope.path(&[label("learner"), tag[0], tag[1]]),
    );
    let mut series = MetricSeries::new(name, run_index);
    let mut histogram = plan.histogram.then(|| VisitHistogram::new(m.n_states()));
    let mut cumulative_cost = 0.0;
    for t in 1..=plan.iterations {
        let x = explorer.next_experience(m, &learner, &mut explore_rng)?;
        learner.update(&x, &mut learner_rng);
        cumulative_cost += x.c;
        if let Some(h) = histogram.as_mut() {
            h.record(&x);
        }
        let sample = match plan.eval_interval {
            Some(every) => t % every == 0 || t == plan.iterations,
            None => t == plan.iterations,
        };
        if sample {
            series.push(metric_point(prepared, &learner, t, cumulative_cost)?)?;
        }
    }
    series.histogram = histogram;
    Ok(RunRecord {
        series,
        learner,
        cumulative_cost,
    })
}

/// Cross-run average at one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub iteration: u64,
    pub algorithm: String,
    pub bias: f64,
    pub mean_abs_error: f64,
    pub policy_suboptimality: f64,
    pub bellman_error_avg: f64,
    pub cumulative_cost: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Parameter choices made before the main runs.
    pub sweeps: Vec<SweepOutcome>,
    /// Per-run series, algorithm-major in config order, then by run.
    pub series: Vec<MetricSeries>,
    /// Per algorithm, one point per sample iteration.
    pub aggregate: Vec<AggregatePoint>,
    /// Visit histograms summed over runs, per algorithm.
    pub histograms: Vec<(String, VisitHistogram)>,
    /// Layout of the run-0 domain.
    pub cells: Vec<(usize, usize)>,
}

impl ExperimentResult {
    pub fn aggregate_for(&self, algorithm: &str) -> Vec<&AggregatePoint> {
        self.aggregate
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .collect()
    }

    pub fn series_for(&self, algorithm: &str) -> Vec<&MetricSeries> {
        self.series
            .iter()
            .filter(|s| s.algorithm == algorithm)
            .collect()
    }

    pub fn histogram_for(&self, algorithm: &str) -> Option<&VisitHistogram> {
        self.histograms
            .iter()
            .find(|(a, _)| a == algorithm)
            .map(|(_, h)| h)
    }

    pub fn sweep_for(&self, algorithm: &str) -> Option<&SweepOutcome> {
        self.sweeps.iter().find(|s| s.label == algorithm)
    }
}

/// Averages series of one algorithm point by point.
pub fn aggregate(series: &[&MetricSeries]) -> Result<Vec<AggregatePoint>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let n = series.len() as f64;
    let mut out = Vec::with_capacity(first.points.len());
    for (i, p0) in first.points.iter().enumerate() {
        let mut acc = AggregatePoint {
            iteration: p0.iteration,
            algorithm: first.algorithm.clone(),
            bias: 0.0,
            mean_abs_error: 0.0,
            policy_suboptimality: 0.0,
            bellman_error_avg: 0.0,
            cumulative_cost: 0.0,
            runs: series.len(),
        };
        for s in series {
            let p = s
                .points
                .get(i)
                .filter(|p| p.iteration == p0.iteration)
                .ok_or_else(|| config_error("runs disagree on their sample points"))?;
            acc.bias += p.bias;
            acc.mean_abs_error += p.mean_abs_error;
            acc.policy_suboptimality += p.policy_suboptimality;
            acc.bellman_error_avg += p.bellman_error_avg;
            acc.cumulative_cost += p.cumulative_cost;
        }
        acc.bias /= n;
        acc.mean_abs_error /= n;
        acc.policy_suboptimality /= n;
        acc.bellman_error_avg /= n;
        acc.cumulative_cost /= n;
        out.push(acc);
    }
    Ok(out)
}

/// Runs the sweeps, then every (algorithm, run) pair on `workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(positive_workers(workers)?)
        .build()?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut sweeps = Vec::new();
    let mut specs = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let algorithm = match alg.tunable.candidates() {
            Some(candidates) => {
                let outcome = sweep_in_pool(cfg, alg, candidates)?;
                let chosen = alg.tunable.with(outcome.chosen);
                sweeps.push(outcome);
                chosen
            }
            None => alg.tunable.with(0.0),
        };
        specs.push((
            alg.label.as_str(),
            LearnerSpec {
                algorithm,
                alpha: alg.alpha,
                readout: alg.readout,
            },
        ));
    }

    let domains = prepare_domains(cfg, Scope::Main, cfg.run.runs)?;
    let plan = RunPlan {
        run: &cfg.run,
        iterations: cfg.run.iterations,
        eval_interval: Some(cfg.run.eval_interval),
        scope: Scope::Main,
        histogram: cfg.run.histogram,
    };
    let runs = cfg.run.runs;
    let records = (0..specs.len() * runs)
        .into_par_iter()
        .map(|task| {
            let (name, spec) = &specs[task / runs];
            let run = task % runs;
            simulate(&domains[run], spec, name, run, &plan).map(|r| r.series)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregate_points = Vec::new();
    let mut histograms = Vec::new();
    for (j, (name, _)) in specs.iter().enumerate() {
        let group: Vec<&MetricSeries> = records[j * runs..(j + 1) * runs].iter().collect();
        aggregate_points.extend(aggregate(&group)?);
        if cfg.run.histogram {
            let mut total = VisitHistogram::new(domains[0].domain.mdp.n_states());
            for s in &group {
                if let Some(h) = &s.histogram {
                    total.merge(h);
                }
            }
            histograms.push((name.to_string(), total));
        }
    }
    Ok(ExperimentResult {
        sweeps,
        series: records,
        aggregate: aggregate_points,
        histograms,
        cells: domains[0].domain.cells.clone(),
    })
}

pub(crate) fn prepare_domains(
    cfg: &ExperimentConfig,
    scope: Scope,
    runs: usize,
) -> Result<Vec<PreparedDomain>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            PreparedDomain::build(
                &cfg.domain,
                cfg.run.seed,
                &scope.path(&[label("domain"), i as u64]),
            )
        })
        .collect()
}
