//! Dense value tables.

use crate::error::{Error, Result};

/// Index of the smallest entry; the lowest index wins ties.
pub fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v < row[best] {
            best = i;
        }
    }
    best
}

/// Dense `(state, action) -> value` table holding Q, G or Psi estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValueTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl ActionValueTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "table has {} entries, expected {}",
                values.len(),
                n_states * n_actions
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn min_row(&self, s: usize) -> f64 {
        self.get(s, self.argmin_row(s))
    }

    pub fn argmin_row(&self, s: usize) -> usize {
        argmin(self.row(s))
    }

    /// `V(s) = min_a T(s,a)`.
    pub fn greedy_values(&self) -> ValueTable {
        ValueTable::new((0..self.n_states).map(|s| self.min_row(s)).collect())
    }

    /// Lowest-index argmin per state.
    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.n_states).map(|s| self.argmin_row(s)).collect()
    }

    /// `max |self - other|`.
    pub fn sup_distance(&self, other: &ActionValueTable) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Entrywise mean of two tables.
    pub fn mean_with(&self, other: &ActionValueTable) -> ActionValueTable {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        ActionValueTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values,
        }
    }
}

/// Dense per-state table holding V, F or I.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Sub-table over the given states, in the given order.
    pub fn select(&self, states: &[usize]) -> ValueTable {
        ValueTable::new(states.iter().map(|&s| self.values[s]).collect())
    }

    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl From<Vec<f64>> for ValueTable {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[2.0, -1.0, 5.0]), 1);
        assert_eq!(argmin(&[1.0, 1.0, 0.5, 0.5]), 2);
        assert_eq!(argmin(&[3.0]), 0);
    }

    #[test]
    fn greedy_values_take_row_minimum() {
        let t = ActionValueTable::from_vec(2, 3, vec![2.0, -1.0, 5.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.greedy_values().as_slice(), &[-1.0, 0.0]);
        assert_eq!(t.greedy_actions(), vec![1, 0]);
        assert_eq!(
            ActionValueTable::zeros(3, 2).greedy_values(),
            ValueTable::zeros(3)
        );
    }
}
