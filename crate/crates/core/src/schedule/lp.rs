//! Dense revised simplex for `min cᵀx  s.t.  A x = b, x ≥ 0`.
//!
//! Two phases with artificial variables and Bland's pivoting rule, so the
//! method terminates on degenerate problems and returns a vertex solution.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// Phase one could not drive the artificial variables to zero.
    Infeasible { infeasibility: f64 },
    Unbounded,
}

/// Pivots between refactorisations of the basis inverse.
const REFACTOR_EVERY: usize = 50;

struct Tableau<'a> {
    a: &'a DMatrix<f64>,
    b: DVector<f64>,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    tol: f64,
    pivots: usize,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.a.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.m);
            e[j - self.n] = 1.0;
            e
        }
    }

    fn refactor(&mut self) {
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.column(j));
        }
        if let Some(inv) = bmat.try_inverse() {
            self.binv = inv;
            self.xb = &self.binv * &self.b;
            for v in self.xb.iter_mut() {
                if *v < 0.0 && *v > -self.tol {
                    *v = 0.0;
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, entering: usize, u: &DVector<f64>) {
        let pr = u[row];
        for k in 0..self.m {
            self.binv[(row, k)] /= pr;
        }
        self.xb[row] /= pr;
        for i in 0..self.m {
            if i == row || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for k in 0..self.m {
                let v = self.binv[(row, k)];
                self.binv[(i, k)] -= f * v;
            }
            self.xb[i] -= f * self.xb[row];
            if self.xb[i] < 0.0 && self.xb[i] > -self.tol {
                self.xb[i] = 0.0;
            }
        }
        self.basis[row] = entering;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        }
    }

    /// Runs simplex iterations for `cost` over columns `0..limit`. Returns false if unbounded.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, limit: usize, max_iter: usize) -> bool {
        for _ in 0..max_iter {
            let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| cost(j)));
            let y = self.binv.tr_mul(&cb);
            let mut in_basis = vec![false; limit.max(self.n + self.m)];
            for &j in &self.basis {
                in_basis[j] = true;
            }
            // Bland: lowest-index improving column
            let entering = (0..limit).find(|&j| {
                if in_basis[j] {
                    return false;
                }
                let reduced = if j < self.n { cost(j) - self.a.column(j).dot(&y) } else { cost(j) - y[j - self.n] };
                reduced < -self.tol
            });
            let Some(j) = entering else { return true };
            let u = &self.binv * self.column(j);
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if u[i] > self.tol {
                    let ratio = self.xb[i].max(0.0) / u[i];
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - self.tol || (ratio <= br + self.tol && self.basis[i] < self.basis[bi]) {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = best else { return false };
            self.pivot(row, j, &u);
        }
        true
    }
}

/// Minimises `cᵀx` subject to `A x = b`, `x ≥ 0`.
pub fn minimize(a: &DMatrix<f64>, b: &[f64], c: &[f64], tol: f64) -> LpOutcome {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    // flip rows so b ≥ 0
    let mut a_signed = a.clone();
    let mut bv = DVector::from_column_slice(b);
    for i in 0..m {
        if bv[i] < 0.0 {
            bv[i] = -bv[i];
            for j in 0..n {
                a_signed[(i, j)] = -a_signed[(i, j)];
            }
        }
    }
    let mut tab = Tableau {
        a: &a_signed,
        b: bv.clone(),
        m,
        n,
        basis: (n..n + m).collect(),
        binv: DMatrix::identity(m, m),
        xb: bv.clone(),
        tol,
        pivots: 0,
    };
    let max_iter = 50 * (m + n) + 1000;

    // phase one
    let phase1 = |j: usize| if j < n { 0.0 } else { 1.0 };
    tab.optimize(&phase1, n, max_iter);
    tab.refactor();
    let infeasibility: f64 = tab.basis.iter().zip(tab.xb.iter()).filter(|(&j, _)| j >= n).map(|(_, &v)| v.abs()).sum();
    let scale = bv.amax().max(1.0);
    if infeasibility > 1e3 * tol * scale {
        return LpOutcome::Infeasible { infeasibility };
    }
    // drive zero-level artificials out where a real column can replace them
    for row in 0..m {
        if tab.basis[row] < n {
            continue;
        }
        let replacement = (0..n).find(|&j| {
            !tab.basis.contains(&j) && (tab.binv.row(row) * tab.a.column(j))[(0, 0)].abs() > 1e-7
        });
        if let Some(j) = replacement {
            let u = &tab.binv * tab.column(j);
            tab.pivot(row, j, &u);
        }
    }

    // phase two; leftover artificials sit on redundant rows and never re-enter
    let phase2 = |j: usize| if j < n { c[j] } else { 0.0 };
    if !tab.optimize(&phase2, n, max_iter) {
        return LpOutcome::Unbounded;
    }
    tab.refactor();
    let mut x = vec![0.0; n];
    for (k, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.xb[k].max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, objective }
}
