//! Tabular reinforcement learning with soft (KL-regularized) updates.
//!
//! The crate provides G-learning and a set of baseline TD learners, exact
//! dynamic-programming oracles for the same models, gridworld and cliff
//! domains, and the metrics used to compare learners against the oracles.

pub mod environments;
pub mod error;
pub mod exploration;
pub mod learners;
mod linalg;
pub mod mdp;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod tables;

pub use environments::{
    build_cliff, build_gridworld, parse_map, random_mdp, CostVariant, GridDomain, GridMap,
};
pub use error::{Error, Result};
pub use exploration::{epsilon_greedy_row, ExplorationRegime, Explorer};
pub use learners::{
    alpha, beta_at, Algorithm, AlphaSchedule, BetaSchedule, GreedyReadout, Learner, LearnerConfig,
    TransitionSample, VisitCounts,
};
pub use mdp::{validate_mdp, CostModel, StochasticPolicy, TabularMdp, ValidationReport};
pub use metrics::{MetricPoint, MetricSeries, RunningAverage, VisitHistogram};
pub use tables::{ActionValueTable, ValueTable};
