//! Discounted linear fixed points `x = r + gamma * P x`.

use nalgebra::{DMatrix, DVector};

/// Largest system solved by dense LU; bigger systems are iterated.
pub(crate) const DIRECT_SOLVE_LIMIT: usize = 2000;

const ITERATION_TOLERANCE: f64 = 1e-12;

/// Solves `x = r + gamma * P x` for a row-major `n x n` matrix `P` whose rows
/// are sub-stochastic, with `0 <= gamma < 1`.
pub(crate) fn solve_discounted(p: &[f64], r: &[f64], gamma: f64) -> Vec<f64> {
    let n = r.len();
    debug_assert_eq!(p.len(), n * n);
    if n <= DIRECT_SOLVE_LIMIT {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - gamma * p[i * n + j]
        });
        let b = DVector::from_column_slice(r);
        if let Some(x) = a.lu().solve(&b) {
            return x.iter().copied().collect();
        }
    }
    iterate_discounted(p, r, gamma)
}

pub(crate) fn iterate_discounted(p: &[f64], r: &[f64], gamma: f64) -> Vec<f64> {
    let n = r.len();
    let mut x = r.to_vec();
    let mut next = vec![0.0; n];
    loop {
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for i in 0..n {
            let row = &p[i * n..(i + 1) * n];
            let v = r[i] + gamma * row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            change = change.max((v - x[i]).abs());
            scale = scale.max(v.abs());
            next[i] = v;
        }
        std::mem::swap(&mut x, &mut next);
        if change <= ITERATION_TOLERANCE * scale {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_and_iterative_agree() {
        let p = [0.5, 0.5, 0.0, 0.2, 0.3, 0.5, 1.0, 0.0, 0.0];
        let r = [1.0, -2.0, 0.5];
        let a = solve_discounted(&p, &r, 0.9);
        let b = iterate_discounted(&p, &r, 0.9);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn geometric_self_loop() {
        let x = solve_discounted(&[1.0], &[1.0], 0.95);
        assert!((x[0] - 20.0).abs() < 1e-12);
    }
}
