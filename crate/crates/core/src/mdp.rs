//! Tabular MDP model: transitions, cost distributions, discount and policies.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;

/// Distribution of the immediate cost at one state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    Deterministic(f64),
    Gaussian { mean: f64, std: f64 },
}

impl CostModel {
    pub fn mean(&self) -> f64 {
        match *self {
            CostModel::Deterministic(mean) | CostModel::Gaussian { mean, .. } => mean,
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            CostModel::Deterministic(_) => 0.0,
            CostModel::Gaussian { std, .. } => std,
        }
    }

    /// Draws a cost. A zero standard deviation returns the mean without
    /// touching the stream, so `Gaussian { std: 0 }` and `Deterministic`
    /// produce identical sample sequences.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (mean, std) = (self.mean(), self.std());
        if std == 0.0 {
            return mean;
        }
        let z: f64 = rng.sample(StandardNormal);
        mean + std * z
    }
}

/// A finite, cost-minimizing, discounted MDP with a dense transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `p(s'|s,a)` at `(s * n_actions + a) * n_states + s'`.
    transition: Vec<f64>,
    cost: Vec<CostModel>,
    gamma: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// Assembles a model. Only the table shapes are checked here; the
    /// probabilistic invariants are reported by [`TabularMdp::validate`].
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        cost: Vec<CostModel>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("an MDP needs at least one state and one action"));
        }
        let pairs = n_states * n_actions;
        if transition.len() != pairs * n_states {
            return Err(Error::Dimension(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                pairs * n_states
            )));
        }
        if cost.len() != pairs {
            return Err(Error::Dimension(format!(
                "cost table has {} entries, expected {pairs}",
                cost.len()
            )));
        }
        if terminal.len() != n_states {
            return Err(Error::Dimension(format!(
                "terminal mask has {} entries, expected {n_states}",
                terminal.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            cost,
            gamma,
            terminal,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    /// Indices of all non-terminal states, ascending.
    pub fn non_terminal_states(&self) -> Vec<usize> {
        (0..self.n_states).filter(|&s| !self.terminal[s]).collect()
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s < self.n_states {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "state",
                index: s,
                size: self.n_states,
            })
        }
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a < self.n_actions {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "action",
                index: a,
                size: self.n_actions,
            })
        }
    }

    /// The distribution `p(.|s,a)` as a slice over next states.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn cost_model(&self, s: usize, a: usize) -> CostModel {
        self.cost[s * self.n_actions + a]
    }

    /// `E[c|s,a]`.
    pub fn expected_cost(&self, s: usize, a: usize) -> Result<f64> {
        self.check_state(s)?;
        self.check_action(a)?;
        Ok(self.cost_model(s, a).mean())
    }

    /// Unchecked mean cost for inner loops.
    pub(crate) fn mean_cost(&self, s: usize, a: usize) -> f64 {
        self.cost[s * self.n_actions + a].mean()
    }

    /// Samples `(cost, next_state)`. The next state is drawn by inverse CDF
    /// over the row in ascending state order; the cost is drawn afterwards.
    /// Terminal states return themselves at zero cost without drawing.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        s: usize,
        a: usize,
    ) -> Result<(f64, usize)> {
        self.check_state(s)?;
        self.check_action(a)?;
        if self.terminal[s] {
            return Ok((0.0, s));
        }
        let next = inverse_cdf(self.transition_row(s, a), rng.random::<f64>());
        let cost = self.cost_model(s, a).sample(rng);
        Ok((cost, next))
    }

    /// Checks every model invariant and lists all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !(0.0..1.0).contains(&self.gamma) {
            violations.push(Violation::DiscountOutOfRange { gamma: self.gamma });
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.transition_row(s, a);
                for (next, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        violations.push(Violation::ProbabilityOutOfRange {
                            state: s,
                            action: a,
                            next,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if sum.is_nan() || (sum - 1.0).abs() > ROW_TOLERANCE {
                    violations.push(Violation::RowSum {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                let cost = self.cost_model(s, a);
                if cost.std().is_nan() || cost.std() < 0.0 {
                    violations.push(Violation::NegativeStd {
                        state: s,
                        action: a,
                        std: cost.std(),
                    });
                }
                if self.terminal[s] {
                    if row[s] != 1.0 {
                        violations.push(Violation::TerminalNotAbsorbing {
                            state: s,
                            action: a,
                        });
                    }
                    if cost.mean() != 0.0 {
                        violations.push(Violation::TerminalCost {
                            state: s,
                            action: a,
                            mean: cost.mean(),
                        });
                    }
                }
            }
        }
        ValidationReport { violations }
    }
}

/// `validate_mdp` as a free function.
pub fn validate_mdp(m: &TabularMdp) -> ValidationReport {
    m.validate()
}

pub(crate) fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    // Rounding left the cumulative sum just below u.
    last_positive
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DiscountOutOfRange {
        gamma: f64,
    },
    RowSum {
        state: usize,
        action: usize,
        sum: f64,
    },
    ProbabilityOutOfRange {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    NegativeStd {
        state: usize,
        action: usize,
        std: f64,
    },
    TerminalNotAbsorbing {
        state: usize,
        action: usize,
    },
    TerminalCost {
        state: usize,
        action: usize,
        mean: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DiscountOutOfRange { gamma } => {
                write!(
                    f,
                    "discount out of range: gamma = {gamma}, need 0 <= gamma < 1"
                )
            }
            Violation::RowSum { state, action, sum } => write!(
                f,
                "transition row (state {state}, action {action}) sums to {sum}"
            ),
            Violation::ProbabilityOutOfRange {
                state,
                action,
                next,
                value,
            } => write!(
                f,
                "p({next}|{state},{action}) = {value} is not a probability"
            ),
            Violation::NegativeStd { state, action, std } => write!(
                f,
                "cost at (state {state}, action {action}) has negative std {std}"
            ),
            Violation::TerminalNotAbsorbing { state, action } => write!(
                f,
                "terminal state {state} is not absorbing under action {action}"
            ),
            Violation::TerminalCost {
                state,
                action,
                mean,
            } => write!(
                f,
                "terminal state {state} has nonzero expected cost {mean} under action {action}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Row-stochastic table `pi(a|s)`. Also used for the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl StochasticPolicy {
    /// Builds a policy from a flat row-major table, checking that every row
    /// is a probability vector.
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "policy table has {} entries, expected {}",
                probs.len(),
                n_states * n_actions
            )));
        }
        let policy = Self {
            n_states,
            n_actions,
            probs,
        };
        for s in 0..n_states {
            let row = policy.row(s);
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!(
                    "policy row {s} has an entry outside [0,1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if sum.is_nan() || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(invalid(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(policy)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            n_states,
            n_actions,
            probs: vec![p; n_states * n_actions],
        }
    }

    /// One-hot policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::OutOfRange {
                    what: "action",
                    index: a,
                    size: n_actions,
                });
            }
            probs[s * n_actions + a] = 1.0;
        }
        Ok(Self {
            n_states: actions.len(),
            n_actions,
            probs,
        })
    }

    pub(crate) fn from_rows_unchecked(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        Self {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn matches(&self, m: &TabularMdp) -> Result<()> {
        if self.n_states != m.n_states() || self.n_actions != m.n_actions() {
            return Err(Error::Dimension(format!(
                "policy is {}x{}, model is {}x{}",
                self.n_states,
                self.n_actions,
                m.n_states(),
                m.n_actions()
            )));
        }
        Ok(())
    }
}
