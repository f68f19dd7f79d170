//! Ideal, stepwise, banged and digital executions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::channels::{apply_gate_noise, apply_t1, NoiseModel};
use super::state::{diagonal_phases, QuantumState, Repr};
use crate::error::{DaqcError, Result};
use crate::hamiltonian::{blbq_edge_operator, QuditHamiltonian};
use crate::linalg;
use crate::phase_matrix::GateWord;
use crate::schedule::Schedule;
use crate::weyl::{weyl_operator, Operator, WeylLabel};

/// Substeps of the symmetric splitting inside one banged gate window.
pub const BANG_SUBSTEPS: usize = 16;

/// Time evolution under a fixed Hamiltonian.
#[derive(Debug, Clone)]
pub enum Propagator {
    Diagonal(Vec<f64>),
    Dense { vectors: DMatrix<C64>, values: DVector<f64> },
}

impl Propagator {
    /// Diagonal fast path for `Z`-type Hamiltonians, eigendecomposition otherwise.
    pub fn new(h: &QuditHamiltonian) -> Result<Self> {
        if let Some(e) = h.diagonal_energies() {
            return Ok(Propagator::Diagonal(e));
        }
        let eig = h.materialize()?.symmetric_eigen();
        Ok(Propagator::Dense { vectors: eig.eigenvectors, values: eig.eigenvalues })
    }

    pub fn unitary(&self, t: f64) -> Operator {
        match self {
            Propagator::Diagonal(e) => Operator::from_diagonal(&DVector::from_vec(diagonal_phases(e, t))),
            Propagator::Dense { vectors, values } => {
                let ph = values.map(|l| C64::from_polar(1.0, -t * l));
                vectors * DMatrix::from_diagonal(&ph) * vectors.adjoint()
            }
        }
    }

    pub fn evolve(&self, state: &mut QuantumState, t: f64) {
        if t == 0.0 {
            return;
        }
        match self {
            Propagator::Diagonal(e) => state.apply_diagonal(&diagonal_phases(e, t)),
            Propagator::Dense { .. } => {
                let u = self.unitary(t);
                match &mut state.repr {
                    Repr::Pure(v) => *v = &u * &*v,
                    Repr::Mixed(m) => *m = &u * &*m * u.adjoint(),
                }
            }
        }
    }
}

fn check_register(state: &QuantumState, d: usize, n: usize, what: &str) -> Result<()> {
    if state.d != d || state.n != n {
        return Err(DaqcError::DimensionMismatch(format!(
            "{what} is (d={d}, n={n}), state is (d={}, n={})",
            state.d, state.n
        )));
    }
    Ok(())
}

/// `exp(−iT H) |state⟩`.
pub fn ideal_evolution(h: &QuditHamiltonian, total_time: f64, state: &QuantumState) -> Result<QuantumState> {
    check_register(state, h.d(), h.n(), "Hamiltonian")?;
    let mut out = state.clone();
    Propagator::new(h)?.evolve(&mut out, total_time);
    Ok(out)
}

fn word_gate(d: usize, label: WeylLabel) -> Result<Operator> {
    weyl_operator(d, label)
}

/// True when `u` is a global phase times the identity.
fn is_scalar(u: &Operator) -> bool {
    let c = u[(0, 0)];
    u.iter().enumerate().all(|(k, z)| {
        let (i, j) = (k % u.nrows(), k / u.nrows());
        if i == j {
            (z - c).norm() < 1e-12
        } else {
            z.norm() < 1e-12
        }
    })
}

/// Single-qudit gates applied at one block boundary.
#[derive(Debug, Clone)]
pub struct Transition {
    pub gates: Vec<(usize, Operator)>,
}

/// Boundaries `G_1, G_2 G_1†, …, G_Q†` of the nonzero blocks, plus the durations between them.
pub fn transitions(schedule: &Schedule) -> Result<(Vec<Transition>, Vec<f64>)> {
    let (d, n) = (schedule.d, schedule.n);
    let blocks: Vec<_> = schedule.blocks.iter().filter(|b| b.duration > 0.0).collect();
    let mut words: Vec<GateWord> = vec![GateWord::identity(n)];
    words.extend(blocks.iter().map(|b| b.word.clone()));
    words.push(GateWord::identity(n));
    let mut out = Vec::with_capacity(words.len() - 1);
    for pair in words.windows(2) {
        let mut gates = Vec::new();
        for site in 0..n {
            let (prev, next) = (pair[0].label(site), pair[1].label(site));
            if prev == next {
                continue;
            }
            let u = word_gate(d, next)? * word_gate(d, prev)?.adjoint();
            if !is_scalar(&u) {
                gates.push((site, u));
            }
        }
        out.push(Transition { gates });
    }
    Ok((out, blocks.iter().map(|b| b.duration).collect()))
}

fn check_schedule(schedule: &Schedule, source: &QuditHamiltonian, state: &QuantumState) -> Result<()> {
    if schedule.d != source.d() || schedule.n != source.n() {
        return Err(DaqcError::DimensionMismatch("schedule and source registers differ".into()));
    }
    check_register(state, schedule.d, schedule.n, "schedule")
}

/// Analog evolution with damping applied in substeps no longer than `Δt`.
fn analog(prop: &Propagator, state: &mut QuantumState, t: f64, noise: Option<&NoiseModel>) -> Result<()> {
    match noise {
        Some(nm) if nm.t1.is_finite() && t > 0.0 => {
            let steps = (t / nm.single_gate_duration).ceil().max(1.0) as usize;
            let dt = t / steps as f64;
            for _ in 0..steps {
                prop.evolve(state, dt);
                apply_t1(state, dt, nm)?;
            }
            Ok(())
        }
        _ => {
            prop.evolve(state, t);
            Ok(())
        }
    }
}

fn gate_noise(state: &mut QuantumState, sites: impl Iterator<Item = usize>, noise: &NoiseModel) -> Result<()> {
    if noise.single_gate_fidelity < 1.0 {
        for s in sites {
            apply_gate_noise(state, &[s], noise.single_gate_fidelity)?;
        }
    }
    Ok(())
}

fn final_layer(schedule: &Schedule, state: &mut QuantumState, noise: Option<&NoiseModel>) -> Result<()> {
    for g in &schedule.final_local_layer {
        if is_scalar(&g.unitary) {
            continue;
        }
        state.apply_local(&[g.site], &g.unitary);
        if let Some(nm) = noise {
            gate_noise(state, std::iter::once(g.site), nm)?;
            apply_t1(state, nm.single_gate_duration, nm)?;
        }
    }
    Ok(())
}

/// Stepwise execution: the source is switched off while gates act.
///
/// Without noise the gates are instantaneous; with noise every gate layer
/// takes `Δt`, followed by depolarizing noise on the gated sites.
pub fn run_sdaqc(
    schedule: &Schedule,
    source: &QuditHamiltonian,
    noise: Option<&NoiseModel>,
    state: &QuantumState,
) -> Result<QuantumState> {
    check_schedule(schedule, source, state)?;
    if let Some(nm) = noise {
        nm.validate()?;
    }
    let noise = noise.filter(|nm| !nm.is_noiseless());
    let prop = Propagator::new(source)?;
    let (trans, durations) = transitions(schedule)?;
    let mut s = state.clone();
    for (q, tr) in trans.iter().enumerate() {
        if !tr.gates.is_empty() {
            for (site, u) in &tr.gates {
                s.apply_local(&[*site], u);
            }
            if let Some(nm) = noise {
                gate_noise(&mut s, tr.gates.iter().map(|g| g.0), nm)?;
                apply_t1(&mut s, nm.single_gate_duration, nm)?;
            }
        }
        if let Some(&t) = durations.get(q) {
            analog(&prop, &mut s, t, noise)?;
        }
    }
    final_layer(schedule, &mut s, noise)?;
    Ok(s)
}

/// Banged execution: gates act while the source stays on.
///
/// Every nonempty boundary is a window of length `Δt` centred on it, during
/// which the register evolves under `H_S + Σ H_G` with `exp(−iΔt H_G) = G`.
/// Windows eat `Δt/2` from each adjacent block so block wall times stay `t_q`.
pub fn run_bdaqc(
    schedule: &Schedule,
    source: &QuditHamiltonian,
    noise: &NoiseModel,
    state: &QuantumState,
) -> Result<QuantumState> {
    check_schedule(schedule, source, state)?;
    noise.validate()?;
    let dt = noise.single_gate_duration;
    let damping = (!noise.is_noiseless()).then_some(noise);
    let prop = Propagator::new(source)?;
    let (trans, durations) = transitions(schedule)?;
    let active: Vec<bool> = trans.iter().map(|t| !t.gates.is_empty()).collect();
    let mut s = state.clone();
    let sub = dt / BANG_SUBSTEPS as f64;
    for (q, tr) in trans.iter().enumerate() {
        if active[q] {
            let steps: Vec<(usize, Operator)> = tr
                .gates
                .iter()
                .map(|(site, u)| (*site, linalg::expm_hermitian(&linalg::unitary_generator(u), 1.0 / BANG_SUBSTEPS as f64)))
                .collect();
            prop.evolve(&mut s, sub / 2.0);
            for k in 0..BANG_SUBSTEPS {
                for (site, u) in &steps {
                    s.apply_local(&[*site], u);
                }
                prop.evolve(&mut s, if k + 1 == BANG_SUBSTEPS { sub / 2.0 } else { sub });
            }
            if let Some(nm) = damping {
                apply_t1(&mut s, dt, nm)?;
                gate_noise(&mut s, tr.gates.iter().map(|g| g.0), nm)?;
            }
        }
        if let Some(&t) = durations.get(q) {
            let eaten = dt / 2.0 * (active[q] as u8 + active[q + 1] as u8) as f64;
            if t < eaten {
                return Err(DaqcError::InvalidSchedule(format!(
                    "block {q} lasts {t:e}, shorter than its embedded gate time {eaten:e}"
                )));
            }
            analog(&prop, &mut s, t - eaten, damping)?;
        }
    }
    final_layer(schedule, &mut s, damping)?;
    Ok(s)
}

/// One time slice of a gate-model circuit.
#[derive(Debug, Clone)]
pub enum CircuitLayer {
    Single(Vec<(usize, Operator)>),
    Two(Vec<((usize, usize), Operator)>),
}

#[derive(Debug, Clone)]
pub struct DigitalCircuit {
    pub d: usize,
    pub n: usize,
    pub layers: Vec<CircuitLayer>,
}

impl DigitalCircuit {
    pub fn single_gate_count(&self) -> usize {
        self.layers.iter().map(|l| if let CircuitLayer::Single(g) = l { g.len() } else { 0 }).sum()
    }

    pub fn two_gate_count(&self) -> usize {
        self.layers.iter().map(|l| if let CircuitLayer::Two(g) = l { g.len() } else { 0 }).sum()
    }
}

/// Brick-wall circuit for `exp(−iT H_BLBQ(θ))` on a qutrit chain.
///
/// Each edge gate is the native two-qutrit gate `(X†⊗X†) e^{−iT h} (X⊗X)`
/// wrapped by `X†` before and `X` after on both sites. Wrappers that meet on
/// a site between layers are merged.
pub fn brick_wall_circuit(n: usize, theta: f64, total_time: f64) -> Result<DigitalCircuit> {
    if n < 2 {
        return Err(DaqcError::InvalidInput(format!("chain needs n >= 2, got {n}")));
    }
    let d = 3;
    let x = weyl_operator(d, WeylLabel::x_power(d, 1))?;
    let xd = x.adjoint();
    let xx = x.kronecker(&x);
    let edge = linalg::expm_hermitian(&blbq_edge_operator(theta)?, total_time);
    let native = xx.adjoint() * edge * &xx;
    let mut pending: Vec<Option<Operator>> = vec![None; n];
    let mut layers = Vec::new();
    let flush = |pending: &mut Vec<Option<Operator>>, sites: &[usize], layers: &mut Vec<CircuitLayer>| {
        let gates: Vec<(usize, Operator)> =
            sites.iter().filter_map(|&s| pending[s].take().map(|u| (s, u))).filter(|(_, u)| !is_scalar(u)).collect();
        if !gates.is_empty() {
            layers.push(CircuitLayer::Single(gates));
        }
    };
    for parity in [0, 1] {
        let edges: Vec<(usize, usize)> = (parity..n - 1).step_by(2).map(|i| (i, i + 1)).collect();
        if edges.is_empty() {
            continue;
        }
        let touched: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        for &s in &touched {
            pending[s] = Some(match pending[s].take() {
                None => xd.clone(),
                Some(p) => &xd * p,
            });
        }
        flush(&mut pending, &touched, &mut layers);
        layers.push(CircuitLayer::Two(edges.iter().map(|&e| (e, native.clone())).collect()));
        for &s in &touched {
            pending[s] = Some(x.clone());
        }
    }
    let all: Vec<usize> = (0..n).collect();
    flush(&mut pending, &all, &mut layers);
    Ok(DigitalCircuit { d, n, layers })
}

/// Executes a circuit layer by layer; each layer lasts one gate duration.
pub fn run_circuit(circuit: &DigitalCircuit, noise: Option<&NoiseModel>, state: &QuantumState) -> Result<QuantumState> {
    check_register(state, circuit.d, circuit.n, "circuit")?;
    if let Some(nm) = noise {
        nm.validate()?;
    }
    let noise = noise.filter(|nm| !nm.is_noiseless());
    let mut s = state.clone();
    for layer in &circuit.layers {
        match layer {
            CircuitLayer::Single(gates) => {
                for (site, u) in gates {
                    s.apply_local(&[*site], u);
                }
                if let Some(nm) = noise {
                    gate_noise(&mut s, gates.iter().map(|g| g.0), nm)?;
                    apply_t1(&mut s, nm.single_gate_duration, nm)?;
                }
            }
            CircuitLayer::Two(gates) => {
                for ((a, b), u) in gates {
                    s.apply_local(&[*a, *b], u);
                }
                if let Some(nm) = noise {
                    if nm.two_gate_fidelity < 1.0 {
                        for ((a, b), _) in gates {
                            apply_gate_noise(&mut s, &[*a, *b], nm.two_gate_fidelity)?;
                        }
                    }
                    apply_t1(&mut s, nm.two_gate_duration, nm)?;
                }
            }
        }
    }
    Ok(s)
}

/// Digital baseline for the BLBQ chain.
pub fn run_digital(n: usize, theta: f64, total_time: f64, noise: &NoiseModel, state: &QuantumState) -> Result<QuantumState> {
    if state.d != 3 {
        return Err(DaqcError::InvalidInput(format!("the digital baseline is defined for qutrits, got d = {}", state.d)));
    }
    run_circuit(&brick_wall_circuit(n, theta, total_time)?, Some(noise), state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{blbq_problem, zz_source};
    use crate::schedule::{compile, CompileOptions};
    use crate::sim::state::{ghz_state, state_fidelity};
    use std::f64::consts::PI;

    #[test]
    fn ideal_evolution_matches_dense_exponential() {
        let h = blbq_problem(2, PI / 3.0).unwrap();
        let g = ghz_state(3, 2).unwrap();
        let out = ideal_evolution(&h, 1.0, &g).unwrap();
        let u = linalg::expm_hermitian(&h.materialize().unwrap(), 1.0);
        let Repr::Pure(v0) = &g.repr else { panic!() };
        let Repr::Pure(v1) = &out.repr else { panic!() };
        assert!((&u * v0 - v1).camax() < 1e-10);
        let same = ideal_evolution(&h, 0.0, &g).unwrap();
        assert_eq!(same, g);
    }

    #[test]
    fn diagonal_source_only_changes_phases() {
        let h = zz_source(2, 3).unwrap();
        let b = QuantumState::basis(3, 2, &[0, 1]).unwrap();
        let out = ideal_evolution(&h, 0.8, &b).unwrap();
        assert!((out.population(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_sdaqc_reproduces_target() {
        for n in [2, 3] {
            let hs = zz_source(n, 3).unwrap();
            for k in 0..9 {
                let theta = PI * k as f64 / 8.0;
                let hp = blbq_problem(n, theta).unwrap();
                let s = compile(&hs, &hp, 1.0, &CompileOptions::default()).unwrap();
                let g = ghz_state(3, n).unwrap();
                let out = run_sdaqc(&s, &hs, None, &g).unwrap();
                let ideal = ideal_evolution(&hp, 1.0, &g).unwrap();
                assert!(state_fidelity(&out, &ideal).unwrap() > 1.0 - 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn noise_lowers_fidelity() {
        let (hs, hp) = (zz_source(3, 3).unwrap(), blbq_problem(3, 0.3 * PI).unwrap());
        let s = compile(&hs, &hp, 1.0, &CompileOptions::default()).unwrap();
        let g = ghz_state(3, 3).unwrap();
        let ideal = ideal_evolution(&hp, 1.0, &g).unwrap();
        let noisy = run_sdaqc(&s, &hs, Some(&NoiseModel::standard(1.0)), &g).unwrap();
        let f = state_fidelity(&noisy, &ideal).unwrap();
        assert!(f < 1.0 - 1e-4 && f > 0.5);
        assert!((noisy.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn digital_circuit_shape_and_exactness() {
        let c = brick_wall_circuit(6, 0.4, 1.0).unwrap();
        assert_eq!(c.two_gate_count(), 5);
        assert_eq!(c.single_gate_count(), 12);
        for n in [2, 3, 4] {
            let theta = 0.7;
            let g = ghz_state(3, n).unwrap();
            let out = run_circuit(&brick_wall_circuit(n, theta, 1.0).unwrap(), None, &g).unwrap();
            let ideal = ideal_evolution(&blbq_problem(n, theta).unwrap(), 1.0, &g).unwrap();
            assert!(state_fidelity(&out, &ideal).unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn digital_noise_is_monotone() {
        let (n, theta) = (3, 0.9);
        let g = ghz_state(3, n).unwrap();
        let ideal = ideal_evolution(&blbq_problem(n, theta).unwrap(), 1.0, &g).unwrap();
        let full = NoiseModel::standard(1.0);
        let single_only = NoiseModel { two_gate_fidelity: 1.0, ..full };
        let f_full = state_fidelity(&run_digital(n, theta, 1.0, &full, &g).unwrap(), &ideal).unwrap();
        let f_single = state_fidelity(&run_digital(n, theta, 1.0, &single_only, &g).unwrap(), &ideal).unwrap();
        assert!(f_full < f_single && f_single < 1.0);
    }

    #[test]
    fn banged_execution_converges_to_stepwise() {
        let (hs, hp) = (zz_source(3, 3).unwrap(), blbq_problem(3, 0.3 * PI).unwrap());
        let s = compile(&hs, &hp, 1.0, &CompileOptions::default()).unwrap();
        let g = ghz_state(3, 3).unwrap();
        let step = run_sdaqc(&s, &hs, None, &g).unwrap();
        let mut gaps = Vec::new();
        for dt in [1e-2, 1e-3, 1e-4] {
            let banged = run_bdaqc(&s, &hs, &NoiseModel::noiseless(dt), &g).unwrap();
            gaps.push(1.0 - state_fidelity(&banged, &step).unwrap());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] < 1e-6);
    }

    #[test]
    fn banged_rejects_blocks_shorter_than_gates() {
        let (hs, hp) = (zz_source(2, 3).unwrap(), blbq_problem(2, 0.05).unwrap());
        let s = compile(&hs, &hp, 1.0, &CompileOptions::default()).unwrap();
        let g = ghz_state(3, 2).unwrap();
        assert!(matches!(
            run_bdaqc(&s, &hs, &NoiseModel::noiseless(0.1), &g),
            Err(DaqcError::InvalidSchedule(_))
        ));
    }
}
