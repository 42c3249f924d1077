//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [domain]
//! kind = "gridworld"          # or "cliff"
//! map = "maps/custom.txt"     # optional; relative to the config file
//! cost = "gaussian"           # "fixed" | "gaussian" | "generated"
//! cost_std = 2.0
//! mean_low = 1.0              # "generated" only
//! mean_high = 3.0
//! gamma = 0.95
//!
//! [run]
//! iterations = 100000
//! runs = 20
//! seed = 1
//! eval_interval = 1000
//! exploration = "uniform"     # or "epsilon_greedy" (needs an S cell)
//! epsilon = 0.1
//!
//! [algorithm.g]
//! kind = "g"
//! schedule = "linear"
//! k_sweep = [1e-3, 1e-4, 1e-5]
//! ```
//!
//! Algorithm kinds: `q`, `qrho`, `g`, `psi`, `double_q`, `consistent`,
//! `expected_sarsa`. G-learning schedules: `linear` (`k` or `k_sweep`),
//! `constant` (`beta`), `inverse_bellman_error` (`scale` or `scale_sweep`,
//! optional `smoothing`). Every algorithm accepts `omega`; `expected_sarsa`
//! takes `epsilon`; `psi` accepts `readout = "log_partition"` and `double_q`
//! accepts `readout = "mean"`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use glearn_core::environments::{DEFAULT_CLIFF_MAP, DEFAULT_GRIDWORLD_MAP};
use glearn_core::learners::DEFAULT_OMEGA;
use glearn_core::metrics::DEFAULT_SMOOTHING;
use glearn_core::{parse_map, Algorithm, AlphaSchedule, BetaSchedule, CostVariant, GreedyReadout};
use serde::Deserialize;

use crate::error::{config_error, CliError, Result};

/// Preliminary runs per candidate in a parameter sweep.
pub const SWEEP_RUNS: usize = 5;
/// Default sweep budget as a fraction of the main iteration budget.
pub const SWEEP_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Gridworld,
    Cliff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CostKind {
    Fixed,
    Gaussian,
    Generated,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: DomainKind,
    map: Option<PathBuf>,
    cost: Option<CostKind>,
    cost_std: Option<f64>,
    mean_low: Option<f64>,
    mean_high: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ExplorationKind {
    Uniform,
    EpsilonGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepCriterion {
    /// Exact cost-to-go of the final greedy policy, averaged over states.
    #[default]
    CostToGo,
    /// Realized cost accumulated during the run.
    RealizedCost,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    iterations: u64,
    runs: usize,
    seed: Option<u64>,
    eval_interval: Option<u64>,
    exploration: Option<ExplorationKind>,
    epsilon: Option<f64>,
    workers: Option<usize>,
    output: Option<PathBuf>,
    per_run_csv: Option<bool>,
    histogram: Option<bool>,
    sweep_iterations: Option<u64>,
    sweep_criterion: Option<SweepCriterion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AlgorithmKind {
    Q,
    Qrho,
    G,
    Psi,
    DoubleQ,
    Consistent,
    ExpectedSarsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScheduleKind {
    Linear,
    Constant,
    InverseBellmanError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ReadoutKind {
    Primary,
    LogPartition,
    Mean,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    kind: AlgorithmKind,
    omega: Option<f64>,
    schedule: Option<ScheduleKind>,
    k: Option<f64>,
    k_sweep: Option<Vec<f64>>,
    beta: Option<f64>,
    scale: Option<f64>,
    scale_sweep: Option<Vec<f64>>,
    smoothing: Option<f64>,
    epsilon: Option<f64>,
    readout: Option<ReadoutKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    run: RawRun,
    algorithm: BTreeMap<String, RawAlgorithm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// Map text, either loaded from `map` or the shipped default.
    pub map_text: String,
    pub map_path: Option<PathBuf>,
    pub cost: CostVariant,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    Uniform,
    EpsilonGreedy { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: u64,
    pub runs: usize,
    pub seed: u64,
    pub eval_interval: u64,
    pub exploration: Exploration,
    pub workers: Option<usize>,
    pub output: PathBuf,
    pub per_run_csv: bool,
    /// Record visit histograms; defaults to on for the cliff task.
    pub histogram: bool,
    pub sweep_iterations: u64,
    pub sweep_criterion: SweepCriterion,
}

/// An algorithm whose schedule parameter may still have to be chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Tunable {
    Fixed(Algorithm),
    /// Linear `beta = k t` with `k` picked from the candidates.
    LinearK(Vec<f64>),
    /// Inverse Bellman-error schedule with `scale` picked from the candidates.
    InverseScale {
        candidates: Vec<f64>,
        smoothing: f64,
    },
}

impl Tunable {
    pub fn candidates(&self) -> Option<&[f64]> {
        match self {
            Tunable::Fixed(_) => None,
            Tunable::LinearK(c) | Tunable::InverseScale { candidates: c, .. } => Some(c),
        }
    }

    /// The algorithm with its parameter set to `value`.
    pub fn with(&self, value: f64) -> Algorithm {
        match *self {
            Tunable::Fixed(a) => a,
            Tunable::LinearK(_) => Algorithm::GLearning(BetaSchedule::Linear { k: value }),
            Tunable::InverseScale { smoothing, .. } => {
                Algorithm::GLearning(BetaSchedule::InverseBellmanError {
                    scale: value,
                    smoothing,
                })
            }
        }
    }

    /// Replaces the candidate list of a sweepable schedule.
    pub fn with_candidates(&self, candidates: Vec<f64>) -> Option<Tunable> {
        match *self {
            Tunable::Fixed(Algorithm::GLearning(BetaSchedule::Linear { .. }))
            | Tunable::LinearK(_) => Some(Tunable::LinearK(candidates)),
            Tunable::Fixed(Algorithm::GLearning(BetaSchedule::InverseBellmanError {
                smoothing,
                ..
            }))
            | Tunable::InverseScale { smoothing, .. } => Some(Tunable::InverseScale {
                candidates,
                smoothing,
            }),
            Tunable::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub label: String,
    pub tunable: Tunable,
    pub alpha: AlphaSchedule,
    pub readout: GreedyReadout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub run: RunConfig,
    /// Sorted by label.
    pub algorithms: Vec<AlgorithmConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let raw: RawConfig = toml::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_owned(),
            source,
        })?;
        Self::from_raw(raw, base)
    }

    /// Parses TOML text; relative map paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|source| CliError::Parse {
            path: PathBuf::from("<string>"),
            source,
        })?;
        Self::from_raw(raw, base_dir)
    }

    fn from_raw(raw: RawConfig, base: &Path) -> Result<Self> {
        let domain = domain_config(raw.domain, base)?;
        let run = run_config(raw.run, &domain)?;
        if raw.algorithm.is_empty() {
            return Err(config_error(
                "at least one [algorithm.<label>] section is required",
            ));
        }
        let algorithms = raw
            .algorithm
            .into_iter()
            .map(|(label, a)| algorithm_config(label, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            run,
            algorithms,
        })
    }

    pub fn algorithm(&self, label: &str) -> Option<&AlgorithmConfig> {
        self.algorithms.iter().find(|a| a.label == label)
    }
}

fn domain_config(raw: RawDomain, base: &Path) -> Result<DomainConfig> {
    let gamma = raw.gamma.unwrap_or(0.95);
    if !(0.0..1.0).contains(&gamma) {
        return Err(config_error(format!(
            "gamma must lie in [0,1), got {gamma}"
        )));
    }
    let (map_text, map_path) = match raw.map {
        Some(p) => {
            let full = if p.is_absolute() { p } else { base.join(p) };
            let text = std::fs::read_to_string(&full).map_err(|source| CliError::Io {
                path: full.clone(),
                source,
            })?;
            (text, Some(full))
        }
        None => (
            match raw.kind {
                DomainKind::Gridworld => DEFAULT_GRIDWORLD_MAP,
                DomainKind::Cliff => DEFAULT_CLIFF_MAP,
            }
            .to_owned(),
            None,
        ),
    };
    parse_map(&map_text)?;
    let std = raw.cost_std.unwrap_or(0.0);
    let cost = match (raw.kind, raw.cost.unwrap_or(CostKind::Fixed)) {
        (DomainKind::Cliff, CostKind::Fixed) => CostVariant::FixedUnit,
        (DomainKind::Cliff, _) => return Err(config_error("the cliff task has fixed costs")),
        (_, CostKind::Fixed) => CostVariant::FixedUnit,
        (_, CostKind::Gaussian) => CostVariant::GaussianUnit { std },
        (_, CostKind::Generated) => CostVariant::GeneratedMeans {
            mean_low: raw.mean_low.unwrap_or(1.0),
            mean_high: raw.mean_high.unwrap_or(3.0),
            std,
        },
    };
    cost.validate()?;
    Ok(DomainConfig {
        kind: raw.kind,
        map_text,
        map_path,
        cost,
        gamma,
    })
}

fn run_config(raw: RawRun, domain: &DomainConfig) -> Result<RunConfig> {
    if raw.iterations == 0 {
        return Err(config_error("iterations must be positive"));
    }
    if raw.runs == 0 {
        return Err(config_error("runs must be positive"));
    }
    let eval_interval = raw.eval_interval.unwrap_or(1000).min(raw.iterations);
    if eval_interval == 0 {
        return Err(config_error("eval_interval must be positive"));
    }
    let exploration = match raw.exploration.unwrap_or(ExplorationKind::Uniform) {
        ExplorationKind::Uniform => Exploration::Uniform,
        ExplorationKind::EpsilonGreedy => {
            let epsilon = raw.epsilon.unwrap_or(0.1);
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(config_error(format!(
                    "epsilon must lie in [0,1], got {epsilon}"
                )));
            }
            if parse_map(&domain.map_text)?.start().is_none() {
                return Err(config_error(
                    "epsilon-greedy exploration needs an S cell in the map",
                ));
            }
            Exploration::EpsilonGreedy { epsilon }
        }
    };
    if raw.workers == Some(0) {
        return Err(config_error("workers must be positive"));
    }
    let sweep_iterations = raw
        .sweep_iterations
        .unwrap_or(((raw.iterations as f64 * SWEEP_FRACTION).round() as u64).max(1));
    if sweep_iterations == 0 {
        return Err(config_error("sweep_iterations must be positive"));
    }
    Ok(RunConfig {
        iterations: raw.iterations,
        runs: raw.runs,
        seed: raw.seed.unwrap_or(0),
        eval_interval,
        exploration,
        workers: raw.workers,
        output: raw.output.unwrap_or_else(|| PathBuf::from("results")),
        per_run_csv: raw.per_run_csv.unwrap_or(true),
        histogram: raw.histogram.unwrap_or(domain.kind == DomainKind::Cliff),
        sweep_iterations,
        sweep_criterion: raw.sweep_criterion.unwrap_or_default(),
    })
}

fn positive_list(what: &str, values: Vec<f64>) -> Result<Vec<f64>> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(config_error(format!(
            "{what} must be a non-empty list of positive numbers"
        )));
    }
    Ok(values)
}

fn algorithm_config(label: String, raw: RawAlgorithm) -> Result<AlgorithmConfig> {
    let ctx = |msg: String| config_error(format!("[algorithm.{label}] {msg}"));
    let alpha =
        AlphaSchedule::new(raw.omega.unwrap_or(DEFAULT_OMEGA)).map_err(|e| ctx(e.to_string()))?;
    let tunable = match raw.kind {
        AlgorithmKind::Q => Tunable::Fixed(Algorithm::QLearning),
        AlgorithmKind::Qrho => Tunable::Fixed(Algorithm::QRho),
        AlgorithmKind::Psi => Tunable::Fixed(Algorithm::PsiLearning),
        AlgorithmKind::DoubleQ => Tunable::Fixed(Algorithm::DoubleQ),
        AlgorithmKind::Consistent => Tunable::Fixed(Algorithm::ConsistentBellman),
        AlgorithmKind::ExpectedSarsa => {
            let epsilon = raw.epsilon.unwrap_or(0.1);
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(ctx(format!("epsilon must lie in [0,1], got {epsilon}")));
            }
            Tunable::Fixed(Algorithm::ExpectedSarsa { epsilon })
        }
        AlgorithmKind::G => match raw.schedule.unwrap_or(ScheduleKind::Linear) {
            ScheduleKind::Linear => match (raw.k, raw.k_sweep) {
                (Some(k), None) => Tunable::Fixed(Algorithm::GLearning(BetaSchedule::Linear { k })),
                (None, Some(ks)) => {
                    Tunable::LinearK(positive_list("k_sweep", ks).map_err(|e| ctx(e.to_string()))?)
                }
                _ => return Err(ctx("linear schedule needs exactly one of k, k_sweep".into())),
            },
            ScheduleKind::Constant => {
                let beta = raw
                    .beta
                    .ok_or_else(|| ctx("constant schedule needs beta".into()))?;
                Tunable::Fixed(Algorithm::GLearning(BetaSchedule::Constant { beta }))
            }
            ScheduleKind::InverseBellmanError => {
                let smoothing = raw.smoothing.unwrap_or(DEFAULT_SMOOTHING);
                match (raw.scale, raw.scale_sweep) {
                    (Some(scale), None) => {
                        Tunable::Fixed(Algorithm::GLearning(BetaSchedule::InverseBellmanError {
                            scale,
                            smoothing,
                        }))
                    }
                    (None, Some(c)) => Tunable::InverseScale {
                        candidates: positive_list("scale_sweep", c)
                            .map_err(|e| ctx(e.to_string()))?,
                        smoothing,
                    },
                    _ => {
                        return Err(ctx(
                            "inverse schedule needs exactly one of scale, scale_sweep".into(),
                        ))
                    }
                }
            }
        },
    };
    if let Tunable::Fixed(Algorithm::GLearning(s)) = tunable {
        s.validate().map_err(|e| ctx(e.to_string()))?;
    }
    if let Tunable::InverseScale { smoothing, .. } = tunable {
        if !(smoothing > 0.0 && smoothing < 1.0) {
            return Err(ctx(format!("smoothing must lie in (0,1), got {smoothing}")));
        }
    }
    let readout = match (raw.readout.unwrap_or(ReadoutKind::Primary), raw.kind) {
        (ReadoutKind::Primary, _) => GreedyReadout::Primary,
        (ReadoutKind::LogPartition, AlgorithmKind::Psi) => GreedyReadout::PsiLogPartition,
        (ReadoutKind::Mean, AlgorithmKind::DoubleQ) => GreedyReadout::DoubleQMean,
        (r, k) => return Err(ctx(format!("readout {r:?} does not apply to {k:?}"))),
    };
    Ok(AlgorithmConfig {
        label,
        tunable,
        alpha,
        readout,
    })
}
