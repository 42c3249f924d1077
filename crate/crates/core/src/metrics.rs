//! Evaluation quantities computed from learner snapshots against the exact
//! oracle: value bias, absolute value error, greedy-policy suboptimality,
//! smoothed Bellman errors, visit histograms, and a Monte-Carlo illustration
//! of the downward bias of the minimum of noisy estimates.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::learners::TransitionSample;
use crate::mdp::{StochasticPolicy, TabularMdp};
use crate::oracle::policy_evaluation;
use crate::tables::ValueTable;

/// Smoothing used for Bellman-error running averages.
pub const DEFAULT_SMOOTHING: f64 = 0.999;

/// Exponentially smoothed absolute value. The first observation initializes
/// the average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningAverage {
    smoothing: f64,
    value: Option<f64>,
}

impl RunningAverage {
    pub fn new(smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing < 1.0) {
            return Err(invalid(format!(
                "smoothing must lie in (0,1), got {smoothing}"
            )));
        }
        Ok(Self {
            smoothing,
            value: None,
        })
    }

    pub fn push(&mut self, error: f64) -> f64 {
        let x = error.abs();
        let v = match self.value {
            None => x,
            Some(prev) => self.smoothing * prev + (1.0 - self.smoothing) * x,
        };
        self.value = Some(v);
        v
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }
}

/// Running average of `|error|` after each element of the stream.
pub fn bellman_error_average<I>(errors: I, smoothing: f64) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = f64>,
{
    let mut avg = RunningAverage::new(smoothing)?;
    Ok(errors.into_iter().map(|e| avg.push(e)).collect())
}

fn check_pairs(snapshots: &[ValueTable], v_stars: &[ValueTable]) -> Result<usize> {
    if snapshots.len() != v_stars.len() {
        return Err(invalid(format!(
            "{} snapshots but {} optimal value tables",
            snapshots.len(),
            v_stars.len()
        )));
    }
    if snapshots.is_empty() {
        return Err(invalid("no runs to average"));
    }
    let n = snapshots[0].len();
    for (v, star) in snapshots.iter().zip(v_stars) {
        if v.len() != n || star.len() != n {
            return Err(Error::Dimension(
                "value tables differ in state count".into(),
            ));
        }
    }
    Ok(n)
}

fn mean_over_runs<F>(snapshots: &[ValueTable], v_stars: &[ValueTable], f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let n = check_pairs(snapshots, v_stars)?;
    let mut total = 0.0;
    for (v, star) in snapshots.iter().zip(v_stars) {
        for (x, y) in v.as_slice().iter().zip(star.as_slice()) {
            total += f(x - y);
        }
    }
    Ok(total / (snapshots.len() * n) as f64)
}

/// `(1/Nn) sum_i sum_s (V_i(s) - V*_i(s))`.
pub fn empirical_bias(snapshots: &[ValueTable], v_stars: &[ValueTable]) -> Result<f64> {
    mean_over_runs(snapshots, v_stars, |d| d)
}

/// `(1/Nn) sum_i sum_s |V_i(s) - V*_i(s)|`.
pub fn mean_abs_error(snapshots: &[ValueTable], v_stars: &[ValueTable]) -> Result<f64> {
    mean_over_runs(snapshots, v_stars, f64::abs)
}

/// Per-state `V^pi(s) - V*(s)`, with `V^pi` from an exact linear solve.
pub fn policy_value_gap(
    m: &TabularMdp,
    policy: &StochasticPolicy,
    v_star: &ValueTable,
) -> Result<ValueTable> {
    let (_, v) = policy_evaluation(m, policy)?;
    if v_star.len() != v.len() {
        return Err(Error::Dimension("optimal value table size mismatch".into()));
    }
    Ok(ValueTable::new(
        v.as_slice()
            .iter()
            .zip(v_star.as_slice())
            .map(|(a, b)| a - b)
            .collect(),
    ))
}

/// `(1/Nn) sum_i sum_s (V^{pi_i}(s) - V*_i(s))`.
pub fn policy_suboptimality(
    mdps: &[TabularMdp],
    policies: &[StochasticPolicy],
    v_stars: &[ValueTable],
) -> Result<f64> {
    if mdps.len() != policies.len() {
        return Err(invalid("one policy per model is required"));
    }
    let values = mdps
        .iter()
        .zip(policies)
        .map(|(m, pi)| policy_evaluation(m, pi).map(|(_, v)| v))
        .collect::<Result<Vec<_>>>()?;
    empirical_bias(&values, v_stars)
}

/// Outcome of [`jensen_bias_demo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenDemo {
    /// Average over samples of `min_a (q(a) + noise)`.
    pub mean_of_min: f64,
    /// `min_a q(a)`.
    pub true_min: f64,
    /// Standard error of `mean_of_min`.
    pub std_error: f64,
}

/// Perturbs `q_star_row` with i.i.d. Gaussian noise `n_samples` times and
/// averages the per-sample minima.
pub fn jensen_bias_demo<R: Rng + ?Sized>(
    q_star_row: &[f64],
    noise_std: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<JensenDemo> {
    if q_star_row.len() < 2 {
        return Err(invalid("row needs at least two actions"));
    }
    if noise_std.is_nan() || noise_std < 0.0 || n_samples == 0 {
        return Err(invalid("need noise_std >= 0 and at least one sample"));
    }
    let true_min = q_star_row.iter().copied().fold(f64::INFINITY, f64::min);
    if noise_std == 0.0 {
        return Ok(JensenDemo {
            mean_of_min: true_min,
            true_min,
            std_error: 0.0,
        });
    }
    // Welford accumulation.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=n_samples {
        let mut lowest = f64::INFINITY;
        for &q in q_star_row {
            let z: f64 = rng.sample(StandardNormal);
            lowest = lowest.min(q + noise_std * z);
        }
        let delta = lowest - mean;
        mean += delta / k as f64;
        m2 += delta * (lowest - mean);
    }
    let var = if n_samples > 1 {
        m2 / (n_samples - 1) as f64
    } else {
        0.0
    };
    Ok(JensenDemo {
        mean_of_min: mean,
        true_min,
        std_error: (var / n_samples as f64).sqrt(),
    })
}

/// Visit counts per state and per observed `s -> s'` transition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisitHistogram {
    pub state_visits: Vec<u64>,
    pub transitions: BTreeMap<(usize, usize), u64>,
}

impl VisitHistogram {
    pub fn new(n_states: usize) -> Self {
        Self {
            state_visits: vec![0; n_states],
            transitions: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, x: &TransitionSample) {
        self.state_visits[x.s] += 1;
        *self.transitions.entry((x.s, x.s_next)).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &VisitHistogram) {
        for (a, b) in self.state_visits.iter_mut().zip(&other.state_visits) {
            *a += b;
        }
        for (&k, &v) in &other.transitions {
            *self.transitions.entry(k).or_insert(0) += v;
        }
    }

    pub fn total(&self) -> u64 {
        self.state_visits.iter().sum()
    }
}

pub fn visit_histogram<'a, I>(n_states: usize, samples: I) -> VisitHistogram
where
    I: IntoIterator<Item = &'a TransitionSample>,
{
    let mut h = VisitHistogram::new(n_states);
    for x in samples {
        h.record(x);
    }
    h
}

/// One evaluation point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub iteration: u64,
    pub bias: f64,
    pub mean_abs_error: f64,
    pub policy_suboptimality: f64,
    pub bellman_error_avg: f64,
    /// Sum of all realized costs up to this iteration.
    pub cumulative_cost: f64,
}

/// Learning curve of one algorithm in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub algorithm: String,
    pub run: usize,
    pub points: Vec<MetricPoint>,
    pub histogram: Option<VisitHistogram>,
}

impl MetricSeries {
    pub fn new(algorithm: impl Into<String>, run: usize) -> Self {
        Self {
            algorithm: algorithm.into(),
            run,
            points: Vec::new(),
            histogram: None,
        }
    }

    /// Appends a point; iterations must be strictly increasing.
    pub fn push(&mut self, point: MetricPoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if point.iteration <= last.iteration {
                return Err(invalid(format!(
                    "iteration {} does not follow {}",
                    point.iteration, last.iteration
                )));
            }
        }
        self.points.push(point);
        Ok(())
    }

    pub fn last(&self) -> Option<&MetricPoint> {
        self.points.last()
    }
}
