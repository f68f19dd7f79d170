//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

/// Least-squares solution restricted to `cols` (minimum-norm via SVD).
pub fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, k| a[(i, cols[k])]);
    let svd = sub.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// `argmin ‖A x − b‖₂` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = a.tr_mul(&(b - a * &x));
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s = restricted_lstsq(a, b, &cols);
            if s.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &c) in cols.iter().enumerate() {
                    x[c] = s[k];
                }
                break;
            }
            // step back toward the feasible region until a passive entry hits zero
            let mut alpha = f64::INFINITY;
            for (k, &c) in cols.iter().enumerate() {
                if s[k] <= 0.0 {
                    let denom = x[c] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[c] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &c) in cols.iter().enumerate() {
                x[c] += alpha * (s[k] - x[c]);
            }
            let mut moved = false;
            for &c in &cols {
                if x[c] <= tol {
                    x[c] = 0.0;
                    passive[c] = false;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}
