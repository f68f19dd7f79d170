//! Dense execution of schedules and digital circuits with noise.

pub mod channels;
pub mod run;
pub mod state;
pub mod sweep;

pub use channels::{apply_gate_noise, apply_t1, NoiseModel};
pub use run::{ideal_evolution, run_bdaqc, run_digital, run_sdaqc};
pub use state::{ghz_state, state_fidelity, QuantumState};
pub use sweep::{sweep, SweepOptions, SweepRow};
