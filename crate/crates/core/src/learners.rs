//! Online tabular TD learners behind one update interface: G-learning and
//! the baselines it is compared against (Q, Q^rho, Psi, Double-Q, the
//! consistent Bellman operator and Expected-SARSA).
//!
//! Every update consumes one [`TransitionSample`], changes exactly one table
//! entry, bumps that entry's visit count and the global step counter, and
//! returns the Bellman error (target minus current entry). Transitions into a
//! terminal state bootstrap from zero.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::exploration::epsilon_greedy_into;
use crate::mdp::StochasticPolicy;
use crate::metrics::{RunningAverage, DEFAULT_SMOOTHING};
use crate::oracle::{check_beta, expectation, greedy_policy, soft_min};
use crate::tables::{argmin, ActionValueTable, ValueTable};

/// Learning-rate exponent used throughout the benchmarks.
pub const DEFAULT_OMEGA: f64 = 0.8;

/// Floor on the Bellman-error average in the inverse schedule.
const MIN_BELLMAN_ERROR: f64 = 1e-12;

/// One observed step `(s, a, c, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    pub s: usize,
    pub a: usize,
    pub c: f64,
    pub s_next: usize,
    /// `s_next` is absorbing.
    pub terminal: bool,
}

/// `n^-omega`.
pub fn alpha(n: u64, omega: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("visit count must be at least 1"));
    }
    Ok((n as f64).powf(-omega))
}

/// Polynomial learning rate `alpha = n^-omega` with `omega` in `(1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    omega: f64,
}

impl AlphaSchedule {
    pub fn new(omega: f64) -> Result<Self> {
        if omega > 0.5 && omega <= 1.0 {
            Ok(Self { omega })
        } else {
            Err(invalid(format!("omega must lie in (0.5, 1], got {omega}")))
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rate(&self, n: u64) -> Result<f64> {
        alpha(n, self.omega)
    }
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self {
            omega: DEFAULT_OMEGA,
        }
    }
}

/// Inverse-temperature schedule for G-learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSchedule {
    /// `beta_t = k t`.
    Linear {
        k: f64,
    },
    Constant {
        beta: f64,
    },
    /// `beta_t = scale / avg`, with `avg` an exponentially smoothed absolute
    /// Bellman error.
    InverseBellmanError {
        scale: f64,
        smoothing: f64,
    },
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Linear { k } if k > 0.0 && k.is_finite() => Ok(()),
            BetaSchedule::Constant { beta } => check_beta(beta),
            BetaSchedule::InverseBellmanError { scale, smoothing }
                if scale > 0.0 && scale.is_finite() && smoothing > 0.0 && smoothing < 1.0 =>
            {
                Ok(())
            }
            other => Err(invalid(format!("invalid beta schedule {other:?}"))),
        }
    }

    /// `beta` at global step `t`.
    pub fn beta_at(&self, t: u64, bellman_error_avg: f64) -> f64 {
        match *self {
            BetaSchedule::Linear { k } => k * t as f64,
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::InverseBellmanError { scale, .. } => {
                scale / bellman_error_avg.max(MIN_BELLMAN_ERROR)
            }
        }
    }
}

/// `beta_at` as a free function.
pub fn beta_at(schedule: &BetaSchedule, t: u64, bellman_error_avg: f64) -> f64 {
    schedule.beta_at(t, bellman_error_avg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    QLearning,
    QRho,
    GLearning(BetaSchedule),
    PsiLearning,
    DoubleQ,
    ConsistentBellman,
    /// Expected-SARSA whose target policy is epsilon-greedy in the table.
    ExpectedSarsa {
        epsilon: f64,
    },
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::QLearning => "q",
            Algorithm::QRho => "qrho",
            Algorithm::GLearning(_) => "g",
            Algorithm::PsiLearning => "psi",
            Algorithm::DoubleQ => "double_q",
            Algorithm::ConsistentBellman => "consistent",
            Algorithm::ExpectedSarsa { .. } => "expected_sarsa",
        }
    }
}

/// Which table `greedy_value` reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyReadout {
    /// `min_a` of the primary table (table A for Double-Q).
    #[default]
    Primary,
    /// Psi-learning only: the log-partition `-log sum_a rho e^{-Psi}`.
    PsiLogPartition,
    /// Double-Q only: `min_a` of the mean of both tables.
    DoubleQMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub alpha: AlphaSchedule,
    /// Smoothing of the reported Bellman-error running average.
    pub bellman_smoothing: f64,
    pub readout: GreedyReadout,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, gamma: f64) -> Self {
        Self {
            algorithm,
            gamma,
            alpha: AlphaSchedule::default(),
            bellman_smoothing: DEFAULT_SMOOTHING,
            readout: GreedyReadout::Primary,
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        self.alpha = AlphaSchedule::new(omega)?;
        Ok(self)
    }

    pub fn with_readout(mut self, readout: GreedyReadout) -> Self {
        self.readout = readout;
        self
    }
}

/// Per-pair visit counters.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitCounts {
    n_actions: usize,
    counts: Vec<u64>,
}

impl VisitCounts {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            counts: vec![0; n_states * n_actions],
        }
    }

    pub fn get(&self, s: usize, a: usize) -> u64 {
        self.counts[s * self.n_actions + a]
    }

    /// Increments and returns the new count.
    pub fn increment(&mut self, s: usize, a: usize) -> u64 {
        let c = &mut self.counts[s * self.n_actions + a];
        *c += 1;
        *c
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn min(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }
}

/// Mutable state of one learning algorithm in one run.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    rho: StochasticPolicy,
    primary: ActionValueTable,
    secondary: Option<ActionValueTable>,
    visits: VisitCounts,
    secondary_visits: Option<VisitCounts>,
    t: u64,
    bellman: RunningAverage,
    schedule_avg: Option<RunningAverage>,
    last_beta: f64,
    scratch: Vec<f64>,
}

impl Learner {
    /// Zero-initialized learner with prior `rho`, which also fixes the table
    /// dimensions.
    pub fn new(config: LearnerConfig, rho: StochasticPolicy) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(invalid(format!(
                "gamma must lie in [0,1), got {}",
                config.gamma
            )));
        }
        let schedule_avg = match config.algorithm {
            Algorithm::GLearning(schedule) => {
                schedule.validate()?;
                match schedule {
                    BetaSchedule::InverseBellmanError { smoothing, .. } => {
                        Some(RunningAverage::new(smoothing)?)
                    }
                    _ => None,
                }
            }
            Algorithm::ExpectedSarsa { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                return Err(invalid(format!("epsilon must lie in [0,1], got {epsilon}")));
            }
            _ => None,
        };
        match (config.readout, config.algorithm) {
            (GreedyReadout::PsiLogPartition, a) if a != Algorithm::PsiLearning => {
                return Err(invalid(
                    "log-partition readout applies to Psi-learning only",
                ))
            }
            (GreedyReadout::DoubleQMean, a) if a != Algorithm::DoubleQ => {
                return Err(invalid("pair-mean readout applies to Double-Q only"))
            }
            _ => {}
        }
        let (n, k) = (rho.n_states(), rho.n_actions());
        let double = config.algorithm == Algorithm::DoubleQ;
        Ok(Self {
            bellman: RunningAverage::new(config.bellman_smoothing)?,
            config,
            rho,
            primary: ActionValueTable::zeros(n, k),
            secondary: double.then(|| ActionValueTable::zeros(n, k)),
            visits: VisitCounts::new(n, k),
            secondary_visits: double.then(|| VisitCounts::new(n, k)),
            t: 0,
            schedule_avg,
            last_beta: 0.0,
            scratch: vec![0.0; k],
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn prior(&self) -> &StochasticPolicy {
        &self.rho
    }

    /// The main table (Q, G, Psi, or Q^A for Double-Q).
    pub fn table(&self) -> &ActionValueTable {
        &self.primary
    }

    /// Q^B for Double-Q.
    pub fn secondary_table(&self) -> Option<&ActionValueTable> {
        self.secondary.as_ref()
    }

    pub fn visits(&self) -> &VisitCounts {
        &self.visits
    }

    pub fn secondary_visits(&self) -> Option<&VisitCounts> {
        self.secondary_visits.as_ref()
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Smoothed absolute Bellman error, `None` before the first update.
    pub fn bellman_error_avg(&self) -> Option<f64> {
        self.bellman.value()
    }

    /// `beta` used by the most recent G-learning update.
    pub fn last_beta(&self) -> f64 {
        self.last_beta
    }

    /// Overwrites the main table, e.g. to freeze a learner at a chosen point.
    pub fn set_table(&mut self, table: ActionValueTable) -> Result<()> {
        if table.n_states() != self.primary.n_states()
            || table.n_actions() != self.primary.n_actions()
        {
            return Err(Error::Dimension(
                "replacement table has the wrong shape".into(),
            ));
        }
        self.primary = table;
        Ok(())
    }

    /// `beta` the schedule prescribes for the next update.
    pub fn current_beta(&self) -> Option<f64> {
        match self.config.algorithm {
            Algorithm::GLearning(schedule) => {
                let avg = self
                    .schedule_avg
                    .and_then(|a| a.value())
                    .unwrap_or(f64::INFINITY);
                Some(schedule.beta_at(self.t, avg))
            }
            _ => None,
        }
    }

    /// Applies the configured algorithm's update and returns its Bellman
    /// error. `rng` is only consumed by Double-Q.
    pub fn update<R: Rng + ?Sized>(&mut self, x: &TransitionSample, rng: &mut R) -> f64 {
        match self.config.algorithm {
            Algorithm::QLearning => self.q_update(x),
            Algorithm::QRho => self.qrho_update(x),
            Algorithm::GLearning(_) => {
                let beta = self.current_beta().expect("G-learning has a schedule");
                let err = self.g_update(x, beta);
                if let Some(avg) = self.schedule_avg.as_mut() {
                    avg.push(err);
                }
                err
            }
            Algorithm::PsiLearning => self.psi_update(x),
            Algorithm::DoubleQ => self.double_q_update(x, rng),
            Algorithm::ConsistentBellman => self.consistent_bellman_update(x),
            Algorithm::ExpectedSarsa { epsilon } => {
                let mut row = std::mem::take(&mut self.scratch);
                epsilon_greedy_into(self.primary.row(x.s_next), epsilon, &mut row);
                let err = self.expected_sarsa_update(x, &row);
                self.scratch = row;
                err
            }
        }
    }

    /// Moves the main table entry at `(s,a)` towards `target`.
    fn blend_primary(&mut self, x: &TransitionSample, target: f64) -> f64 {
        let n = self.visits.increment(x.s, x.a);
        let rate = self.config.alpha.rate(n).expect("count is positive");
        let old = self.primary.get(x.s, x.a);
        self.primary
            .set(x.s, x.a, (1.0 - rate) * old + rate * target);
        self.finish(target - old)
    }

    fn finish(&mut self, error: f64) -> f64 {
        self.t += 1;
        self.bellman.push(error);
        error
    }

    #[inline]
    fn bootstrap(&self, x: &TransitionSample, value: impl FnOnce() -> f64) -> f64 {
        if x.terminal {
            x.c
        } else {
            x.c + self.config.gamma * value()
        }
    }

    /// Q-learning: target `c + gamma min_a' Q(s',a')`.
    pub fn q_update(&mut self, x: &TransitionSample) -> f64 {
        let target = self.bootstrap(x, || self.primary.min_row(x.s_next));
        self.blend_primary(x, target)
    }

    /// Q^rho-learning: target `c + gamma sum_a' rho(a'|s') Q(s',a')`.
    pub fn qrho_update(&mut self, x: &TransitionSample) -> f64 {
        let target = self.bootstrap(x, || {
            expectation(self.rho.row(x.s_next), self.primary.row(x.s_next))
        });
        self.blend_primary(x, target)
    }

    /// G-learning: target `c - (gamma/beta) log sum_a' rho(a'|s') e^{-beta G(s',a')}`.
    pub fn g_update(&mut self, x: &TransitionSample, beta: f64) -> f64 {
        self.last_beta = beta;
        let target = self.bootstrap(x, || {
            soft_min(self.primary.row(x.s_next), self.rho.row(x.s_next), beta)
        });
        self.blend_primary(x, target)
    }

    /// Psi-learning: `Psi(s,a) += alpha (c + gamma Psi_bar(s') - Psi_bar(s))`
    /// with `Psi_bar(s) = -log sum_a rho(a|s) e^{-Psi(s,a)}`.
    pub fn psi_update(&mut self, x: &TransitionSample) -> f64 {
        let here = soft_min(self.primary.row(x.s), self.rho.row(x.s), 1.0);
        let target = self.bootstrap(x, || {
            soft_min(self.primary.row(x.s_next), self.rho.row(x.s_next), 1.0)
        });
        let error = target - here;
        let n = self.visits.increment(x.s, x.a);
        let rate = self.config.alpha.rate(n).expect("count is positive");
        let old = self.primary.get(x.s, x.a);
        self.primary.set(x.s, x.a, old + rate * error);
        self.finish(error)
    }

    /// Double-Q: a fair coin picks the table to update; the updated table
    /// selects the next action and the other table evaluates it. Each table
    /// keeps its own visit counts.
    ///
    /// # Panics
    /// If the learner was not configured for Double-Q.
    pub fn double_q_update<R: Rng + ?Sized>(&mut self, x: &TransitionSample, rng: &mut R) -> f64 {
        let update_a = rng.random_bool(0.5);
        self.double_q_update_branch(x, update_a)
    }

    /// [`Learner::double_q_update`] with the coin flip supplied.
    pub fn double_q_update_branch(&mut self, x: &TransitionSample, update_a: bool) -> f64 {
        let gamma = self.config.gamma;
        let secondary = self
            .secondary
            .as_mut()
            .expect("double_q_update needs a Double-Q learner");
        let counts = self.secondary_visits.as_mut().expect("Double-Q counts");
        let (table, other, visits) = if update_a {
            (&mut self.primary, &*secondary, &mut self.visits)
        } else {
            (secondary, &self.primary, counts)
        };
        let target = if x.terminal {
            x.c
        } else {
            let best = argmin(table.row(x.s_next));
            x.c + gamma * other.get(x.s_next, best)
        };
        let n = visits.increment(x.s, x.a);
        let rate = self.config.alpha.rate(n).expect("count is positive");
        let old = table.get(x.s, x.a);
        table.set(x.s, x.a, (1.0 - rate) * old + rate * target);
        self.finish(target - old)
    }

    /// Sampled consistent Bellman operator: on a self-transition the target
    /// bootstraps from `Q(s,a)` itself instead of `min_a' Q(s,a')`.
    pub fn consistent_bellman_update(&mut self, x: &TransitionSample) -> f64 {
        let target = self.bootstrap(x, || {
            if x.s_next == x.s {
                self.primary.get(x.s, x.a)
            } else {
                self.primary.min_row(x.s_next)
            }
        });
        self.blend_primary(x, target)
    }

    /// Expected-SARSA with an explicit next-state action distribution.
    pub fn expected_sarsa_update(&mut self, x: &TransitionSample, next_policy_row: &[f64]) -> f64 {
        let target = self.bootstrap(x, || {
            expectation(next_policy_row, self.primary.row(x.s_next))
        });
        self.blend_primary(x, target)
    }

    fn readout_table(&self) -> std::borrow::Cow<'_, ActionValueTable> {
        match (self.config.readout, &self.secondary) {
            (GreedyReadout::DoubleQMean, Some(b)) => {
                std::borrow::Cow::Owned(self.primary.mean_with(b))
            }
            _ => std::borrow::Cow::Borrowed(&self.primary),
        }
    }

    /// `V(s) = min_a T(s,a)` of the readout table.
    pub fn greedy_value(&self) -> ValueTable {
        match self.config.readout {
            GreedyReadout::PsiLogPartition => ValueTable::new(
                (0..self.primary.n_states())
                    .map(|s| soft_min(self.primary.row(s), self.rho.row(s), 1.0))
                    .collect(),
            ),
            _ => self.readout_table().greedy_values(),
        }
    }

    /// Deterministic greedy policy of the readout table.
    pub fn greedy_policy(&self) -> StochasticPolicy {
        greedy_policy(&self.readout_table())
    }
}
