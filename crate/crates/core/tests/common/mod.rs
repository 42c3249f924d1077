#![allow(dead_code)]

use glearn_core::rng::{stream, Stream};
use glearn_core::{random_mdp, ActionValueTable, StochasticPolicy, TabularMdp};
use rand::Rng;

pub fn mdp(seed: u64, n_states: usize, n_actions: usize, gamma: f64) -> TabularMdp {
    random_mdp(n_states, n_actions, gamma, &mut stream(seed, &[1])).unwrap()
}

/// A strictly positive random policy.
pub fn policy<R: Rng>(n_states: usize, n_actions: usize, rng: &mut R) -> StochasticPolicy {
    let mut probs = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states {
        let w: Vec<f64> = (0..n_actions).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = w.iter().sum();
        probs.extend(w.iter().map(|x| x / total));
    }
    StochasticPolicy::new(n_states, n_actions, probs).unwrap()
}

pub fn table<R: Rng>(
    n_states: usize,
    n_actions: usize,
    scale: f64,
    rng: &mut R,
) -> ActionValueTable {
    let values = (0..n_states * n_actions)
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    ActionValueTable::from_vec(n_states, n_actions, values).unwrap()
}

pub fn rng(seed: u64) -> Stream {
    stream(seed, &[2])
}
