//! Spin-basis compilation.
//!
//! For Hamiltonians written in `S_μ ⊗ S_ν` products, conjugation by
//! `e^{−iπ S_ν}` flips the sign of every `S_μ` with `μ ≠ ν`, for any spin.
//! The phase matrix is therefore the `d = 2` sign matrix: each axis maps to
//! the qubit Weyl label of the matching Pauli, `x → X`, `y → ZX`, `z → Z`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{embed, CouplingKey, QuditHamiltonian};
use crate::linalg;
use crate::phase_matrix::{enumerate_words, GateWord, PhaseMatrix, RowKey};
use crate::schedule::{solve_times, sparsify, stacked_residual, SolveMethod, SolveOutcome, TargetRatio};
use crate::weyl::{spin_operator, Axis, Operator, WeylLabel};

const AXES: [Axis; 3] = Axis::ALL;

/// Qubit Weyl label standing in for a spin axis.
pub fn axis_label(axis: Axis) -> WeylLabel {
    match axis {
        Axis::X => WeylLabel::new(2, 0, 1),
        Axis::Y => WeylLabel::new(2, 1, 1),
        Axis::Z => WeylLabel::new(2, 1, 0),
    }
}

fn label_axis(label: WeylLabel) -> Option<Axis> {
    AXES.into_iter().find(|&a| axis_label(a) == label)
}

/// `Σ h_{μν}^{ij} S_μ^{(i)} S_ν^{(j)}` with real coefficients, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    d: usize,
    n: usize,
    terms: BTreeMap<(usize, usize, Axis, Axis), f64>,
}

impl SpinHamiltonian {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(DaqcError::InvalidDimension(d));
        }
        if n < 2 {
            return Err(DaqcError::InvalidInput(format!("need at least two sites, got {n}")));
        }
        Ok(SpinHamiltonian { d, n, terms: BTreeMap::new() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, mu: Axis, nu: Axis, h: f64) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(DaqcError::InvalidInput(format!("bad site pair ({i}, {j}) for n = {}", self.n)));
        }
        let key = if i < j { (i, j, mu, nu) } else { (j, i, nu, mu) };
        let v = self.terms.entry(key).or_insert(0.0);
        *v += h;
        if *v == 0.0 {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize, Axis, Axis), f64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    /// Nearest-neighbour chain `Σ_i Σ_μ J_μ S_μ^{(i)} S_μ^{(i+1)}`.
    pub fn xyz_chain(d: usize, n: usize, j: [f64; 3]) -> Result<Self> {
        let mut h = SpinHamiltonian::new(d, n)?;
        for i in 0..n - 1 {
            for (axis, &c) in AXES.iter().zip(&j) {
                if c != 0.0 {
                    h.add(i, i + 1, *axis, *axis, c)?;
                }
            }
        }
        Ok(h)
    }

    /// Coefficient bookkeeping on the qubit Weyl labels; the operators are never materialised at `d = 2`.
    fn sign_proxy(&self) -> Result<QuditHamiltonian> {
        let mut q = QuditHamiltonian::new(2, self.n)?;
        for (&(i, j, mu, nu), &h) in &self.terms {
            q.add_coupling(i, j, axis_label(mu), axis_label(nu), C64::new(h, 0.0))?;
        }
        Ok(q)
    }

    pub fn materialize(&self) -> Result<Operator> {
        let dim = crate::hamiltonian::checked_dim(self.d, self.n, crate::hamiltonian::MATERIALIZE_CAP, "materialize")?;
        let mut out = Operator::zeros(dim, dim);
        for (&(i, j, mu, nu), &h) in &self.terms {
            let a = embed(&spin_operator(self.d, mu)?, self.d, self.n, i);
            let b = embed(&spin_operator(self.d, nu)?, self.d, self.n, j);
            out += (a * b) * C64::new(h, 0.0);
        }
        Ok(out)
    }
}

/// Per-site rotation axes `ν` of the conjugating gate `e^{−iπS_ν}`; `None` is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBlock {
    pub axes: Vec<Option<Axis>>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSchedule {
    pub d: usize,
    pub n: usize,
    pub total_time: f64,
    pub blocks: Vec<SpinBlock>,
    pub residual: f64,
}

/// `e^{−iπ S_ν}` on one site.
pub fn pi_rotation(d: usize, axis: Axis) -> Result<Operator> {
    Ok(linalg::expm_hermitian(&spin_operator(d, axis)?, std::f64::consts::PI))
}

impl SpinSchedule {
    /// `Σ_q t_q G_q† H_S G_q`, which must equal `T H_P` for commuting or averaged dynamics.
    pub fn effective_hamiltonian(&self, source: &SpinHamiltonian) -> Result<Operator> {
        let hs = source.materialize()?;
        let dim = hs.nrows();
        let rotations: Vec<Operator> = AXES.iter().map(|&a| pi_rotation(self.d, a)).collect::<Result<_>>()?;
        let mut acc = Operator::zeros(dim, dim);
        for block in &self.blocks {
            let mut g = Operator::identity(dim, dim);
            for (site, axis) in block.axes.iter().enumerate() {
                if let Some(a) = axis {
                    let k = AXES.iter().position(|x| x == a).unwrap_or(0);
                    g = embed(&rotations[k], self.d, self.n, site) * g;
                }
            }
            acc += (g.adjoint() * &hs * &g) * C64::new(block.duration, 0.0);
        }
        Ok(acc)
    }
}

/// Durations for `exp(−iT H_P)` from `H_S` using the qubit sign matrix over all `4^n` rotation words.
pub fn compile_spin(source: &SpinHamiltonian, problem: &SpinHamiltonian, total_time: f64) -> Result<SpinSchedule> {
    if source.d != problem.d || source.n != problem.n {
        return Err(DaqcError::DimensionMismatch("source and problem differ in (d, n)".into()));
    }
    let (hs, hp) = (source.sign_proxy()?, problem.sign_proxy()?);
    let target = TargetRatio::new(&hs, &hp, total_time)?;
    let words = enumerate_words(2, source.n, None, None)?;
    let m = PhaseMatrix::build(2, target.rows.clone(), words)?;
    let t = match solve_times(&m, &target, SolveMethod::Simplex)? {
        SolveOutcome::Feasible { t, .. } => sparsify(&m, &t, &target),
        SolveOutcome::Infeasible { .. } => return Err(DaqcError::Infeasible { policy: "spin".into() }),
    };
    let residual = stacked_residual(&m, &t, &target);
    let blocks = m
        .words()
        .iter()
        .zip(&t)
        .filter(|(_, &d)| d > 0.0)
        .map(|(w, &duration)| SpinBlock { axes: word_axes(w), duration })
        .collect();
    Ok(SpinSchedule { d: source.d, n: source.n, total_time, blocks, residual })
}

fn word_axes(w: &GateWord) -> Vec<Option<Axis>> {
    w.labels().iter().map(|&l| label_axis(l)).collect()
}

/// Row keys of the sign system, for inspection.
pub fn sign_rows(h: &SpinHamiltonian) -> Vec<RowKey> {
    h.terms
        .keys()
        .map(|&(i, j, mu, nu)| RowKey::Coupling(CouplingKey::new(i, j, axis_label(mu), axis_label(nu))))
        .collect()
}

/// Dense check of `e^{iθS_ν} S_μ e^{−iθS_ν}` against its closed form.
pub fn conjugation_closed_form_residual(d: usize, mu: Axis, nu: Axis, theta: f64) -> Result<f64> {
    let lhs = crate::weyl::spin_conjugate(d, mu, nu, theta)?;
    let s_mu = spin_operator(d, mu)?;
    let rhs: DMatrix<C64> = match mu.third(nu) {
        None => s_mu,
        Some(eta) => s_mu * C64::new(theta.cos(), 0.0) + spin_operator(d, eta)? * C64::new(mu.levi_civita(nu, eta) * theta.sin(), 0.0),
    };
    Ok(linalg::max_abs_diff(&lhs, &rhs))
}
