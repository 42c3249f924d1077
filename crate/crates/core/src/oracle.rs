//! Exact planning against a known model: hard and soft value iteration,
//! policy evaluation, and the soft-min machinery shared with the learners.
//!
//! The inverse temperature `beta` is a plain `f64`. `0.0` and
//! `f64::INFINITY` are handled as exact limits on their own code paths: at
//! `beta = 0` the soft-min is the prior average, at `beta = inf` it is the
//! minimum over the prior's support.

use crate::error::{invalid, Error, Result};
use crate::linalg::solve_discounted;
use crate::mdp::{StochasticPolicy, TabularMdp};
use crate::tables::{argmin, ActionValueTable, ValueTable};

pub fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("beta must be nonnegative, got {beta}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// `sum_i p_i v_i`, accumulated in index order.
#[inline]
pub fn expectation(probs: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (p, v) in probs.iter().zip(values) {
        acc += p * v;
    }
    acc
}

/// Minimum of `g_row` over the actions with positive prior mass.
fn support_min(g_row: &[f64], rho_row: &[f64]) -> f64 {
    g_row
        .iter()
        .zip(rho_row)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&g, _)| g)
        .fold(f64::INFINITY, f64::min)
}

/// Soft-min `-(1/beta) log sum_a rho(a) exp(-beta g(a))` without argument
/// checks. The exponent is shifted by the minimum over the prior's support.
#[inline]
pub fn soft_min(g_row: &[f64], rho_row: &[f64], beta: f64) -> f64 {
    if beta == 0.0 {
        return expectation(rho_row, g_row);
    }
    let shift = support_min(g_row, rho_row);
    if beta == f64::INFINITY {
        return shift;
    }
    let mut partition = 0.0;
    for (&g, &r) in g_row.iter().zip(rho_row) {
        if r > 0.0 {
            partition += r * (-beta * (g - shift)).exp();
        }
    }
    shift - partition.ln() / beta
}

/// Free energy of one state's row, `F = -(1/beta) log sum rho e^{-beta G}`.
pub fn free_energy_row(g_row: &[f64], rho_row: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if g_row.len() != rho_row.len() {
        return Err(Error::Dimension(format!(
            "row has {} entries, prior has {}",
            g_row.len(),
            rho_row.len()
        )));
    }
    Ok(soft_min(g_row, rho_row, beta))
}

/// Writes the soft-greedy distribution `rho e^{-beta G} / Z` into `out`.
pub fn soft_policy_row(g_row: &[f64], rho_row: &[f64], beta: f64, out: &mut [f64]) {
    if beta == 0.0 {
        out.copy_from_slice(rho_row);
        return;
    }
    let shift = support_min(g_row, rho_row);
    let mut total = 0.0;
    for ((o, &g), &r) in out.iter_mut().zip(g_row).zip(rho_row) {
        *o = if r <= 0.0 {
            0.0
        } else if beta == f64::INFINITY {
            if g == shift {
                r
            } else {
                0.0
            }
        } else {
            r * (-beta * (g - shift)).exp()
        };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// The soft-greedy policy of `g` relative to the prior `rho`.
pub fn soft_policy(
    g: &ActionValueTable,
    rho: &StochasticPolicy,
    beta: f64,
) -> Result<StochasticPolicy> {
    check_beta(beta)?;
    check_table_shape(g, rho.n_states(), rho.n_actions())?;
    let n_actions = g.n_actions();
    let mut probs = vec![0.0; g.n_states() * n_actions];
    for s in 0..g.n_states() {
        soft_policy_row(
            g.row(s),
            rho.row(s),
            beta,
            &mut probs[s * n_actions..(s + 1) * n_actions],
        );
    }
    Ok(StochasticPolicy::from_rows_unchecked(
        g.n_states(),
        n_actions,
        probs,
    ))
}

fn check_table_shape(t: &ActionValueTable, n_states: usize, n_actions: usize) -> Result<()> {
    if t.n_states() != n_states || t.n_actions() != n_actions {
        return Err(Error::Dimension(format!(
            "table is {}x{}, expected {n_states}x{n_actions}",
            t.n_states(),
            t.n_actions()
        )));
    }
    Ok(())
}

/// `c(s,a) + gamma * sum_s' p(s'|s,a) next_value(s')` for every pair.
fn backup(m: &TabularMdp, next_value: &[f64]) -> ActionValueTable {
    let (n, k) = (m.n_states(), m.n_actions());
    let mut out = Vec::with_capacity(n * k);
    for s in 0..n {
        for a in 0..k {
            out.push(
                m.mean_cost(s, a) + m.gamma() * expectation(m.transition_row(s, a), next_value),
            );
        }
    }
    ActionValueTable::from_vec(n, k, out).expect("shape")
}

/// One application of the hard Bellman optimality operator.
pub fn bellman_optimality(m: &TabularMdp, q: &ActionValueTable) -> Result<ActionValueTable> {
    check_table_shape(q, m.n_states(), m.n_actions())?;
    Ok(backup(m, q.greedy_values().as_slice()))
}

/// Value iteration from `Q = 0` until the sup-norm change is at most `tol`.
/// The returned `Q` is within `tol * gamma / (1 - gamma)` of `Q*`.
pub fn value_iteration(m: &TabularMdp, tol: f64) -> Result<(ActionValueTable, ValueTable)> {
    check_tol(tol)?;
    let mut q = ActionValueTable::zeros(m.n_states(), m.n_actions());
    loop {
        let next = backup(m, q.greedy_values().as_slice());
        let change = next.sup_distance(&q);
        q = next;
        if change <= tol {
            let v = q.greedy_values();
            return Ok((q, v));
        }
    }
}

/// Soft Bellman operator: `c(s,a) + gamma * E_p[F(s')]` with `F` the soft-min
/// of the next state's row.
pub fn soft_bellman(
    m: &TabularMdp,
    rho: &StochasticPolicy,
    beta: f64,
    g: &ActionValueTable,
) -> Result<ActionValueTable> {
    check_beta(beta)?;
    rho.matches(m)?;
    check_table_shape(g, m.n_states(), m.n_actions())?;
    Ok(soft_backup(m, rho, beta, g))
}

fn soft_backup(
    m: &TabularMdp,
    rho: &StochasticPolicy,
    beta: f64,
    g: &ActionValueTable,
) -> ActionValueTable {
    let free: Vec<f64> = (0..m.n_states())
        .map(|s| soft_min(g.row(s), rho.row(s), beta))
        .collect();
    backup(m, &free)
}

/// Iterates [`soft_bellman`] from zero to a sup-norm change of at most `tol`,
/// returning the optimal free-energy table for this `beta`.
pub fn soft_value_iteration(
    m: &TabularMdp,
    rho: &StochasticPolicy,
    beta: f64,
    tol: f64,
) -> Result<ActionValueTable> {
    check_beta(beta)?;
    check_tol(tol)?;
    rho.matches(m)?;
    let mut g = ActionValueTable::zeros(m.n_states(), m.n_actions());
    loop {
        let next = soft_backup(m, rho, beta, &g);
        let change = next.sup_distance(&g);
        g = next;
        if change <= tol {
            return Ok(g);
        }
    }
}

/// Transition matrix and per-state mean cost under `pi`.
fn policy_chain(m: &TabularMdp, pi: &StochasticPolicy) -> (Vec<f64>, Vec<f64>) {
    let n = m.n_states();
    let mut p = vec![0.0; n * n];
    let mut c = vec![0.0; n];
    for s in 0..n {
        let row = &mut p[s * n..(s + 1) * n];
        for a in 0..m.n_actions() {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            c[s] += w * m.mean_cost(s, a);
            for (dst, &q) in row.iter_mut().zip(m.transition_row(s, a)) {
                *dst += w * q;
            }
        }
    }
    (p, c)
}

/// Exact `Q^pi` and `V^pi` by a linear solve.
pub fn policy_evaluation(
    m: &TabularMdp,
    pi: &StochasticPolicy,
) -> Result<(ActionValueTable, ValueTable)> {
    pi.matches(m)?;
    let (p, c) = policy_chain(m, pi);
    let v = solve_discounted(&p, &c, m.gamma());
    let q = backup(m, &v);
    Ok((q, ValueTable::new(v)))
}

/// Result of [`regularized_policy_evaluation`]. `g` and `free_energy` are
/// undefined at `beta = 0` and are `None` there.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedEvaluation {
    pub g: Option<ActionValueTable>,
    pub free_energy: Option<ValueTable>,
    pub information: ValueTable,
    pub value: ValueTable,
}

/// `sum_a pi log(pi/rho)` per state, i.e. `KL(pi_s || rho_s)`.
fn information_rate(pi: &StochasticPolicy, rho: &StochasticPolicy) -> Result<Vec<f64>> {
    let mut out = vec![0.0; pi.n_states()];
    for (s, info) in out.iter_mut().enumerate() {
        for a in 0..pi.n_actions() {
            let (p, r) = (pi.prob(s, a), rho.prob(s, a));
            if p == 0.0 {
                continue;
            }
            if r == 0.0 {
                return Err(Error::SupportViolation {
                    state: s,
                    action: a,
                    mass: p,
                });
            }
            *info += p * (p / r).ln();
        }
    }
    Ok(out)
}

/// Evaluates an arbitrary policy under the information-regularized cost.
///
/// `G^pi` is the fixed point of `G = k^pi + gamma * P^pi G` on state-action
/// pairs, with `k^pi(s,a) = E[c|s,a] + (gamma/beta) E_{s',a'}[log pi/rho]`.
/// `I^pi` is solved from its own discounted recursion and `V^pi` comes from
/// [`policy_evaluation`]; `F^pi(s) = sum_a pi(a|s) [log(pi/rho)/beta + G^pi(s,a)]`.
pub fn regularized_policy_evaluation(
    m: &TabularMdp,
    pi: &StochasticPolicy,
    rho: &StochasticPolicy,
    beta: f64,
) -> Result<RegularizedEvaluation> {
    check_beta(beta)?;
    pi.matches(m)?;
    rho.matches(m)?;
    let rate = information_rate(pi, rho)?;
    let (p, _) = policy_chain(m, pi);
    let information = ValueTable::new(solve_discounted(&p, &rate, m.gamma()));
    let (_, value) = policy_evaluation(m, pi)?;
    if beta == 0.0 {
        return Ok(RegularizedEvaluation {
            g: None,
            free_energy: None,
            information,
            value,
        });
    }
    let inv_beta = 1.0 / beta;
    let (n, k) = (m.n_states(), m.n_actions());
    let dim = n * k;
    let mut kernel = vec![0.0; dim * dim];
    let mut offset = vec![0.0; dim];
    for s in 0..n {
        for a in 0..k {
            let i = s * k + a;
            let row = m.transition_row(s, a);
            let mut expected_info = 0.0;
            for (s2, &q) in row.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                expected_info += q * rate[s2];
                for a2 in 0..k {
                    kernel[i * dim + s2 * k + a2] = q * pi.prob(s2, a2);
                }
            }
            offset[i] = m.mean_cost(s, a) + m.gamma() * inv_beta * expected_info;
        }
    }
    let g = ActionValueTable::from_vec(n, k, solve_discounted(&kernel, &offset, m.gamma()))?;
    let free_energy = (0..n)
        .map(|s| {
            let mut f = 0.0;
            for a in 0..k {
                let (pp, r) = (pi.prob(s, a), rho.prob(s, a));
                if pp > 0.0 {
                    f += pp * (inv_beta * (pp / r).ln() + g.get(s, a));
                }
            }
            f
        })
        .collect();
    Ok(RegularizedEvaluation {
        g: Some(g),
        free_energy: Some(ValueTable::new(free_energy)),
        information,
        value,
    })
}

/// One-hot policy that picks the lowest-index minimizer of each row.
pub fn greedy_policy(t: &ActionValueTable) -> StochasticPolicy {
    let actions: Vec<usize> = (0..t.n_states()).map(|s| argmin(t.row(s))).collect();
    StochasticPolicy::deterministic(t.n_actions(), &actions).expect("argmin is in range")
}
