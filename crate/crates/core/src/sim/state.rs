//! Pure and mixed register states and the local kernels acting on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{checked_dim, Digits};
use crate::weyl::Operator;

/// Largest register handled as a density matrix.
pub const DENSITY_CAP: usize = 729;
/// Largest register handled as a state vector.
pub const PURE_CAP: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub d: usize,
    pub n: usize,
    pub repr: Repr,
}

impl QuantumState {
    pub fn from_amplitudes(d: usize, n: usize, psi: DVector<C64>) -> Result<Self> {
        let dim = checked_dim(d, n, PURE_CAP, "state vector")?;
        if psi.len() != dim {
            return Err(DaqcError::DimensionMismatch(format!("{} amplitudes for dimension {dim}", psi.len())));
        }
        Ok(QuantumState { d, n, repr: Repr::Pure(psi) })
    }

    pub fn from_density(d: usize, n: usize, rho: DMatrix<C64>) -> Result<Self> {
        let dim = checked_dim(d, n, DENSITY_CAP, "density matrix")?;
        if rho.shape() != (dim, dim) {
            return Err(DaqcError::DimensionMismatch(format!("{:?} density matrix for dimension {dim}", rho.shape())));
        }
        Ok(QuantumState { d, n, repr: Repr::Mixed(rho) })
    }

    /// Computational basis state, site 0 most significant.
    pub fn basis(d: usize, n: usize, digits: &[usize]) -> Result<Self> {
        let dim = checked_dim(d, n, PURE_CAP, "state vector")?;
        if digits.len() != n || digits.iter().any(|&k| k >= d) {
            return Err(DaqcError::InvalidInput(format!("basis digits {digits:?} invalid for d={d}, n={n}")));
        }
        let idx = digits.iter().fold(0, |acc, &k| acc * d + k);
        let mut psi = DVector::zeros(dim);
        psi[idx] = C64::new(1.0, 0.0);
        Ok(QuantumState { d, n, repr: Repr::Pure(psi) })
    }

    pub fn maximally_mixed(d: usize, n: usize) -> Result<Self> {
        let dim = checked_dim(d, n, DENSITY_CAP, "density matrix")?;
        let rho = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        Ok(QuantumState { d, n, repr: Repr::Mixed(rho) })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Pure(v) => v.len(),
            Repr::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure_repr(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            Repr::Pure(v) => v * v.adjoint(),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// Switches to the density-matrix representation in place.
    pub fn promote(&mut self) -> Result<()> {
        if let Repr::Pure(v) = &self.repr {
            checked_dim(self.d, self.n, DENSITY_CAP, "density matrix")?;
            self.repr = Repr::Mixed(v * v.adjoint());
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared(),
            Repr::Mixed(m) => m.trace().re,
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared().powi(2),
            Repr::Mixed(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Population of basis state `idx`.
    pub fn population(&self, idx: usize) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v[idx].norm_sqr(),
            Repr::Mixed(m) => m[(idx, idx)].re,
        }
    }

    /// Smallest eigenvalue of the density matrix (0 for pure states).
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Pure(_) => 0.0,
            Repr::Mixed(m) => m.clone().symmetric_eigen().eigenvalues.min(),
        }
    }

    /// Applies `U` on the listed sites (site order fixes the local index order of `U`).
    pub fn apply_local(&mut self, sites: &[usize], u: &Operator) {
        let layout = LocalLayout::new(self.d, self.n, sites);
        match &mut self.repr {
            Repr::Pure(v) => layout.left(v.as_mut_slice(), u),
            Repr::Mixed(m) => {
                let dim = m.nrows();
                for col in m.as_mut_slice().chunks_mut(dim) {
                    layout.left(col, u);
                }
                layout.right_adjoint(m.as_mut_slice(), dim, u);
            }
        }
    }

    /// Multiplies amplitude `i` by `phases[i]` (a diagonal unitary).
    pub fn apply_diagonal(&mut self, phases: &[C64]) {
        match &mut self.repr {
            Repr::Pure(v) => {
                for (a, p) in v.iter_mut().zip(phases) {
                    *a *= p;
                }
            }
            Repr::Mixed(m) => {
                let dim = m.nrows();
                for (j, col) in m.as_mut_slice().chunks_mut(dim).enumerate() {
                    let pj = phases[j].conj();
                    for (x, pi) in col.iter_mut().zip(phases) {
                        *x *= pi * pj;
                    }
                }
            }
        }
    }
}

/// `e^{−i t E_k}` for every basis energy.
pub fn diagonal_phases(energies: &[f64], t: f64) -> Vec<C64> {
    energies.iter().map(|&e| C64::from_polar(1.0, -t * e)).collect()
}

/// Index bookkeeping for an operator on a subset of sites.
pub(crate) struct LocalLayout {
    /// Offsets of the local basis states from a base index, local index order.
    pub offsets: Vec<usize>,
    /// Indices whose digits on the chosen sites are all zero.
    pub bases: Vec<usize>,
}

impl LocalLayout {
    pub fn new(d: usize, n: usize, sites: &[usize]) -> Self {
        let digits = Digits::new(d, n);
        let dim = d.pow(n as u32);
        let k = sites.len();
        let offsets = (0..d.pow(k as u32))
            .map(|local| {
                let mut rem = local;
                let mut off = 0;
                for &s in sites.iter().rev() {
                    off += (rem % d) * digits.stride(s);
                    rem /= d;
                }
                off
            })
            .collect();
        let bases = (0..dim).filter(|&i| sites.iter().all(|&s| digits.digit(i, s) == 0)).collect();
        LocalLayout { offsets, bases }
    }

    /// `v ← U v` on the local factor.
    pub fn left(&self, v: &mut [C64], u: &Operator) {
        let m = self.offsets.len();
        let mut buf = vec![C64::default(); m];
        for &base in &self.bases {
            for (b, &o) in buf.iter_mut().zip(&self.offsets) {
                *b = v[base + o];
            }
            for (a, &oa) in self.offsets.iter().enumerate() {
                let mut acc = C64::default();
                for (k, b) in buf.iter().enumerate() {
                    acc += u[(a, k)] * b;
                }
                v[base + oa] = acc;
            }
        }
    }

    /// `ρ ← ρ U†` for a column-major `dim × dim` matrix, by recombining whole columns.
    pub fn right_adjoint(&self, data: &mut [C64], dim: usize, u: &Operator) {
        let m = self.offsets.len();
        let mut buf = vec![C64::default(); m * dim];
        for &base in &self.bases {
            for (k, &o) in self.offsets.iter().enumerate() {
                let c = base + o;
                buf[k * dim..(k + 1) * dim].copy_from_slice(&data[c * dim..(c + 1) * dim]);
            }
            for (a, &oa) in self.offsets.iter().enumerate() {
                let col = &mut data[(base + oa) * dim..(base + oa + 1) * dim];
                col.fill(C64::default());
                for k in 0..m {
                    let w = u[(a, k)].conj();
                    if w == C64::default() {
                        continue;
                    }
                    for (x, y) in col.iter_mut().zip(&buf[k * dim..(k + 1) * dim]) {
                        *x += w * y;
                    }
                }
            }
        }
    }
}

/// `(1/√d) Σ_k |k…k⟩`, as a state vector.
pub fn ghz_state(d: usize, n: usize) -> Result<QuantumState> {
    if d < 2 {
        return Err(DaqcError::InvalidDimension(d));
    }
    let dim = checked_dim(d, n, PURE_CAP, "state vector")?;
    let mut psi = DVector::zeros(dim);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let step: usize = (0..n).map(|s| d.pow(s as u32)).sum();
    for k in 0..d {
        psi[k * step] = amp;
    }
    Ok(QuantumState { d, n, repr: Repr::Pure(psi) })
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`; `⟨ψ|σ|ψ⟩` when either side is pure.
pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.d != b.d || a.n != b.n {
        return Err(DaqcError::DimensionMismatch(format!("(d={}, n={}) vs (d={}, n={})", a.d, a.n, b.d, b.n)));
    }
    let f = match (&a.repr, &b.repr) {
        (Repr::Pure(x), Repr::Pure(y)) => x.dotc(y).norm_sqr(),
        (Repr::Pure(x), Repr::Mixed(r)) | (Repr::Mixed(r), Repr::Pure(x)) => x.dotc(&(r * x)).re,
        (Repr::Mixed(r), Repr::Mixed(s)) => {
            let eig = r.clone().symmetric_eigen();
            let sqrt_vals = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
            let v = &eig.eigenvectors;
            let sqrt_r = v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
            let inner = &sqrt_r * s * &sqrt_r;
            let inner = (&inner + inner.adjoint()).scale(0.5);
            let vals = inner.symmetric_eigen().eigenvalues;
            // rounding noise on the null space would otherwise enter through the square root
            let floor = 1e-13 * vals.amax();
            let tr: f64 = vals.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
            tr * tr
        }
    };
    Ok(f.clamp(0.0, 1.0))
}
