//! Shared fixtures for the benchmarks.

use glearn_core::environments::DEFAULT_GRIDWORLD_MAP;
use glearn_core::rng::stream;
use glearn_core::{
    build_gridworld, parse_map, Algorithm, CostVariant, ExplorationRegime, Explorer, Learner,
    LearnerConfig, StochasticPolicy, TabularMdp, TransitionSample,
};

/// The shipped 8x8 gridworld with Gaussian cost noise.
pub fn noisy_gridworld() -> TabularMdp {
    let map = parse_map(DEFAULT_GRIDWORLD_MAP).expect("shipped map parses");
    build_gridworld(
        &map,
        CostVariant::GaussianUnit { std: 2.0 },
        0.95,
        &mut stream(0, &[]),
    )
    .expect("shipped map builds")
    .mdp
}

pub fn learner(m: &TabularMdp, algorithm: Algorithm) -> Learner {
    Learner::new(
        LearnerConfig::new(algorithm, m.gamma()),
        StochasticPolicy::uniform(m.n_states(), m.n_actions()),
    )
    .expect("valid learner")
}

/// `n` transitions drawn uniformly over state-action pairs.
pub fn uniform_samples(m: &TabularMdp, n: usize, seed: u64) -> Vec<TransitionSample> {
    let probe = learner(m, Algorithm::QLearning);
    let mut explorer =
        Explorer::new(ExplorationRegime::UniformIid, m).expect("non-terminal states");
    let mut rng = stream(seed, &[]);
    (0..n)
        .map(|_| {
            explorer
                .next_experience(m, &probe, &mut rng)
                .expect("valid sample")
        })
        .collect()
}
