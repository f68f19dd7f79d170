//! Noise channels: cascade amplitude damping and local depolarizing.
//!
//! Each channel has a direct form used by the simulator and a Kraus form
//! kept as a reference implementation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::{LocalLayout, QuantumState, Repr};
use crate::error::{DaqcError, Result};
use crate::phase_matrix::enumerate_words;
use crate::weyl::{weyl_operator, Operator};

/// Noise parameters in the same time units as the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Amplitude-damping time; `f64::INFINITY` disables damping.
    pub t1: f64,
    pub single_gate_duration: f64,
    pub single_gate_fidelity: f64,
    pub two_gate_fidelity: f64,
    pub two_gate_duration: f64,
}

impl NoiseModel {
    /// `T1 = 100 T`, `Δt = 0.01 T`, gate fidelities 0.994 / 0.95, two-qudit gates of `5 Δt`.
    pub fn standard(total_time: f64) -> Self {
        NoiseModel {
            t1: 100.0 * total_time,
            single_gate_duration: 0.01 * total_time,
            single_gate_fidelity: 0.994,
            two_gate_fidelity: 0.95,
            two_gate_duration: 0.05 * total_time,
        }
    }

    /// Perfect gates and no damping, keeping the gate timing.
    pub fn noiseless(single_gate_duration: f64) -> Self {
        NoiseModel {
            t1: f64::INFINITY,
            single_gate_duration,
            single_gate_fidelity: 1.0,
            two_gate_fidelity: 1.0,
            two_gate_duration: 5.0 * single_gate_duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && !x.is_nan();
        if !(positive(self.t1) && positive(self.single_gate_duration) && positive(self.two_gate_duration)) {
            return Err(DaqcError::InvalidInput(format!("noise times must be positive: {self:?}")));
        }
        for f in [self.single_gate_fidelity, self.two_gate_fidelity] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(DaqcError::InvalidInput(format!("gate fidelity {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.t1.is_infinite() && self.single_gate_fidelity == 1.0 && self.two_gate_fidelity == 1.0
    }
}

/// Transition probabilities `P[to][from]` of the damping cascade after `duration`.
///
/// Every excited level decays one step down at rate `1/T1`, so the number of
/// jumps from level `k` is Poisson distributed and truncated at the ground level.
pub fn cascade_matrix(d: usize, duration: f64, t1: f64) -> Vec<Vec<f64>> {
    let x = if t1.is_infinite() { 0.0 } else { duration / t1 };
    let mut p = vec![vec![0.0; d]; d];
    p[0][0] = 1.0;
    for k in 1..d {
        let mut term = (-x).exp();
        let mut stayed = 0.0;
        for m in 0..k {
            p[k - m][k] = term;
            stayed += term;
            term *= x / (m + 1) as f64;
        }
        p[0][k] = (1.0 - stayed).max(0.0);
    }
    p
}

/// Kraus operators of the cascade: a diagonal no-jump operator plus one rank-one jump per `(level, jumps)`.
pub fn t1_kraus(d: usize, duration: f64, t1: f64) -> Vec<Operator> {
    let x = if t1.is_infinite() { 0.0 } else { duration / t1 };
    let p = cascade_matrix(d, duration, t1);
    let mut ops = Vec::new();
    let mut k0 = Operator::zeros(d, d);
    for k in 0..d {
        k0[(k, k)] = C64::new(if k == 0 { 1.0 } else { (-x / 2.0).exp() }, 0.0);
    }
    ops.push(k0);
    for from in 1..d {
        for to in 0..from {
            let mut op = Operator::zeros(d, d);
            op[(to, from)] = C64::new(p[to][from].sqrt(), 0.0);
            ops.push(op);
        }
    }
    ops
}

fn for_each_block(rho: &mut [C64], dim: usize, layout: &LocalLayout, mut f: impl FnMut(&mut [C64])) {
    let m = layout.offsets.len();
    let mut block = vec![C64::default(); m * m];
    for &cb in &layout.bases {
        for &rb in &layout.bases {
            for (b, &ob) in layout.offsets.iter().enumerate() {
                let col = (cb + ob) * dim + rb;
                for (a, &oa) in layout.offsets.iter().enumerate() {
                    block[b * m + a] = rho[col + oa];
                }
            }
            f(&mut block);
            for (b, &ob) in layout.offsets.iter().enumerate() {
                let col = (cb + ob) * dim + rb;
                for (a, &oa) in layout.offsets.iter().enumerate() {
                    rho[col + oa] = block[b * m + a];
                }
            }
        }
    }
}

fn mixed_data(state: &mut QuantumState) -> Result<(&mut [C64], usize)> {
    state.promote()?;
    match &mut state.repr {
        Repr::Mixed(m) => {
            let dim = m.nrows();
            Ok((m.as_mut_slice(), dim))
        }
        Repr::Pure(_) => unreachable!("promoted above"),
    }
}

/// Cascade amplitude damping on every site for `duration`.
pub fn apply_t1(state: &mut QuantumState, duration: f64, noise: &NoiseModel) -> Result<()> {
    if duration < 0.0 {
        return Err(DaqcError::InvalidInput(format!("negative duration {duration}")));
    }
    if noise.t1.is_infinite() || duration == 0.0 {
        return Ok(());
    }
    let (d, n) = (state.d, state.n);
    let p = cascade_matrix(d, duration, noise.t1);
    let x = duration / noise.t1;
    let coherence: Vec<f64> = (0..d * d)
        .map(|ab| {
            let (a, b) = (ab / d, ab % d);
            (-x * ((a > 0) as u8 + (b > 0) as u8) as f64 / 2.0).exp()
        })
        .collect();
    let (data, dim) = mixed_data(state)?;
    let mut pops = vec![C64::default(); d];
    for site in 0..n {
        let layout = LocalLayout::new(d, n, &[site]);
        for_each_block(data, dim, &layout, |blk| {
            for k in 0..d {
                pops[k] = blk[k * d + k];
            }
            for b in 0..d {
                for a in 0..d {
                    if a == b {
                        blk[a * d + a] = (0..d).map(|k| pops[k] * p[a][k]).sum();
                    } else {
                        blk[b * d + a] *= coherence[a * d + b];
                    }
                }
            }
        });
    }
    Ok(())
}

/// Depolarizing strength `λ` in `ρ → (1−λ)ρ + λ Tr_S ρ ⊗ I/D` for average gate fidelity `fidelity`.
///
/// `p = (1−F)(D+1)/D` is the weight of the non-identity Weyl errors; the
/// channel is completely positive for `p ≤ 1`.
pub fn depolarizing_strength(local_dim: usize, fidelity: f64) -> Result<f64> {
    let dd = local_dim as f64;
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(DaqcError::InvalidInput(format!("gate fidelity {fidelity} outside (0, 1]")));
    }
    let p = (1.0 - fidelity) * (dd + 1.0) / dd;
    if p > 1.0 + 1e-12 {
        return Err(DaqcError::InvalidInput(format!(
            "gate fidelity {fidelity} is below 1/(D+1) = {} and has no depolarizing channel",
            1.0 / (dd + 1.0)
        )));
    }
    Ok(p * dd * dd / (dd * dd - 1.0))
}

/// Local depolarizing noise on `sites` with the given average gate fidelity.
pub fn apply_gate_noise(state: &mut QuantumState, sites: &[usize], fidelity: f64) -> Result<()> {
    let local_dim = state.d.pow(sites.len() as u32);
    let lambda = depolarizing_strength(local_dim, fidelity)?;
    check_sites(state, sites)?;
    if lambda == 0.0 {
        return Ok(());
    }
    let layout = LocalLayout::new(state.d, state.n, sites);
    let (data, dim) = mixed_data(state)?;
    let m = local_dim;
    for_each_block(data, dim, &layout, |blk| {
        let tr: C64 = (0..m).map(|k| blk[k * m + k]).sum();
        for v in blk.iter_mut() {
            *v *= 1.0 - lambda;
        }
        for k in 0..m {
            blk[k * m + k] += tr * (lambda / m as f64);
        }
    });
    Ok(())
}

fn check_sites(state: &QuantumState, sites: &[usize]) -> Result<()> {
    let mut seen = vec![false; state.n];
    for &s in sites {
        if s >= state.n || seen[s] {
            return Err(DaqcError::InvalidInput(format!("bad site list {sites:?} for n = {}", state.n)));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Weyl-twirl Kraus operators of the same depolarizing channel on `k` sites.
pub fn depolarizing_kraus(d: usize, k: usize, fidelity: f64) -> Result<Vec<Operator>> {
    let dd = d.pow(k as u32);
    let lambda = depolarizing_strength(dd, fidelity)?;
    let dd2 = (dd * dd) as f64;
    let p = lambda * (dd2 - 1.0) / dd2;
    let words = enumerate_words(d, k, None, None)?;
    let mut ops = Vec::with_capacity(words.len());
    for w in words {
        let mut op = Operator::from_element(1, 1, C64::new(1.0, 0.0));
        for &l in w.labels() {
            op = op.kronecker(&weyl_operator(d, l)?);
        }
        let weight = if w.is_identity() { 1.0 - p } else { p / (dd2 - 1.0) };
        ops.push(op * C64::new(weight.sqrt(), 0.0));
    }
    Ok(ops)
}

/// `ρ → Σ K ρ K†` with the Kraus operators acting on `sites`.
pub fn apply_kraus(state: &mut QuantumState, sites: &[usize], kraus: &[Operator]) -> Result<()> {
    check_sites(state, sites)?;
    state.promote()?;
    let original = state.clone();
    let mut acc: Option<nalgebra::DMatrix<C64>> = None;
    for k in kraus {
        let mut branch = original.clone();
        branch_apply(&mut branch, sites, k);
        let m = branch.density_matrix();
        acc = Some(match acc {
            None => m,
            Some(a) => a + m,
        });
    }
    if let Some(a) = acc {
        state.repr = Repr::Mixed(a);
    }
    Ok(())
}

/// `K ρ K†` for a possibly non-unitary `K`.
fn branch_apply(state: &mut QuantumState, sites: &[usize], k: &Operator) {
    let layout = LocalLayout::new(state.d, state.n, sites);
    if let Repr::Mixed(m) = &mut state.repr {
        let dim = m.nrows();
        for col in m.as_mut_slice().chunks_mut(dim) {
            layout.left(col, k);
        }
        layout.right_adjoint(m.as_mut_slice(), dim, k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::{ghz_state, state_fidelity};

    #[test]
    fn qubit_decay_is_exponential() {
        let noise = NoiseModel { t1: 2.0, ..NoiseModel::standard(1.0) };
        let mut s = QuantumState::basis(2, 1, &[1]).unwrap();
        apply_t1(&mut s, 2.0, &noise).unwrap();
        assert!((s.population(1) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((s.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_infinite_durations() {
        let noise = NoiseModel::standard(1.0);
        let g = ghz_state(3, 2).unwrap();
        let mut s = g.clone();
        apply_t1(&mut s, 0.0, &noise).unwrap();
        assert!((s.density_matrix() - g.density_matrix()).camax() < 1e-15);
        apply_t1(&mut s, 1e5, &noise).unwrap();
        assert!((s.population(0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fast_t1_matches_kraus_form() {
        let noise = NoiseModel { t1: 0.7, ..NoiseModel::standard(1.0) };
        for (d, n) in [(2, 2), (3, 2), (4, 2)] {
            let g = ghz_state(d, n).unwrap();
            let mut fast = g.clone();
            apply_t1(&mut fast, 0.45, &noise).unwrap();
            let mut slow = g.clone();
            let kraus = t1_kraus(d, 0.45, 0.7);
            for site in 0..n {
                apply_kraus(&mut slow, &[site], &kraus).unwrap();
            }
            assert!((fast.density_matrix() - slow.density_matrix()).camax() < 1e-13, "d={d}");
            let comp = kraus.iter().fold(Operator::zeros(d, d), |acc, k| acc + k.adjoint() * k);
            assert!((comp - Operator::identity(d, d)).camax() < 1e-13);
        }
    }

    #[test]
    fn fast_depolarizing_matches_kraus_form() {
        for (d, sites) in [(3, vec![1]), (3, vec![2, 0]), (2, vec![0, 1])] {
            let g = ghz_state(d, 3).unwrap();
            let mut fast = g.clone();
            apply_gate_noise(&mut fast, &sites, 0.9).unwrap();
            let mut slow = g.clone();
            let kraus = depolarizing_kraus(d, sites.len(), 0.9).unwrap();
            apply_kraus(&mut slow, &sites, &kraus).unwrap();
            assert!((fast.density_matrix() - slow.density_matrix()).camax() < 1e-13);
            assert!((fast.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_fidelity_is_identity_and_full_strength_mixes_site() {
        let g = ghz_state(3, 2).unwrap();
        let mut s = g.clone();
        apply_gate_noise(&mut s, &[0], 1.0).unwrap();
        assert!(state_fidelity(&s, &g).unwrap() > 1.0 - 1e-15);
        // λ = 1 at F = 1/d
        let mut s = g.clone();
        apply_gate_noise(&mut s, &[0], 1.0 / 3.0).unwrap();
        let rho = s.density_matrix();
        // marginal of site 0 is I/3
        for a in 0..3 {
            for b in 0..3 {
                let v: C64 = (0..3).map(|k| rho[(a * 3 + k, b * 3 + k)]).sum();
                let expected = if a == b { 1.0 / 3.0 } else { 0.0 };
                assert!((v - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_fidelity() {
        let mut s = ghz_state(3, 2).unwrap();
        assert!(apply_gate_noise(&mut s, &[0], 0.0).is_err());
        assert!(apply_gate_noise(&mut s, &[0], 1.2).is_err());
        assert!(apply_gate_noise(&mut s, &[0], 0.2).is_err());
    }
}
