//! Where the next `(s, a)` comes from: i.i.d. uniform pairs over the
//! non-terminal states, or an epsilon-greedy trajectory driven by the
//! learner's own table.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::learners::{Learner, TransitionSample};
use crate::mdp::TabularMdp;
use crate::tables::argmin;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationRegime {
    /// `s` uniform over non-terminal states, `a` uniform over actions.
    UniformIid,
    /// Follow a trajectory; with probability `epsilon` act uniformly,
    /// otherwise take the greedy (lowest-index argmin) action. The trajectory
    /// restarts at `start_state` after reaching a terminal state.
    EpsilonGreedy { epsilon: f64, start_state: usize },
}

/// Epsilon-greedy distribution over a row of action values.
pub fn epsilon_greedy_row(row: &[f64], epsilon: f64) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    epsilon_greedy_into(row, epsilon, &mut out);
    out
}

pub(crate) fn epsilon_greedy_into(row: &[f64], epsilon: f64, out: &mut [f64]) {
    let off = epsilon / row.len() as f64;
    out.fill(off);
    if epsilon < 1.0 {
        out[argmin(row)] = 1.0 - off * (row.len() - 1) as f64;
    }
}

/// Stateful experience source for one run.
#[derive(Debug, Clone)]
pub struct Explorer {
    regime: ExplorationRegime,
    states: Vec<usize>,
    n_actions: usize,
    cursor: usize,
}

impl Explorer {
    pub fn new(regime: ExplorationRegime, m: &TabularMdp) -> Result<Self> {
        let states = m.non_terminal_states();
        if states.is_empty() {
            return Err(invalid("exploration needs at least one non-terminal state"));
        }
        let cursor = match regime {
            ExplorationRegime::UniformIid => states[0],
            ExplorationRegime::EpsilonGreedy {
                epsilon,
                start_state,
            } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(invalid(format!("epsilon must lie in [0,1], got {epsilon}")));
                }
                m.check_state(start_state)?;
                if m.is_terminal(start_state) {
                    return Err(invalid("start state is terminal"));
                }
                start_state
            }
        };
        Ok(Self {
            regime,
            states,
            n_actions: m.n_actions(),
            cursor,
        })
    }

    pub fn regime(&self) -> ExplorationRegime {
        self.regime
    }

    /// Current trajectory position (meaningless for i.i.d. sampling).
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Draws the next transition and advances the trajectory.
    pub fn next_experience<R: Rng + ?Sized>(
        &mut self,
        m: &TabularMdp,
        learner: &Learner,
        rng: &mut R,
    ) -> Result<TransitionSample> {
        let (s, a) = match self.regime {
            ExplorationRegime::UniformIid => {
                let s = self.states[rng.random_range(0..self.states.len())];
                (s, rng.random_range(0..self.n_actions))
            }
            ExplorationRegime::EpsilonGreedy { epsilon, .. } => {
                let s = self.cursor;
                let explore = rng.random::<f64>() < epsilon;
                let a = if explore {
                    rng.random_range(0..self.n_actions)
                } else {
                    argmin(learner.table().row(s))
                };
                (s, a)
            }
        };
        let (c, s_next) = m.sample_transition(rng, s, a)?;
        let terminal = m.is_terminal(s_next);
        if let ExplorationRegime::EpsilonGreedy { start_state, .. } = self.regime {
            self.cursor = if terminal { start_state } else { s_next };
        }
        Ok(TransitionSample {
            s,
            a,
            c,
            s_next,
            terminal,
        })
    }
}
