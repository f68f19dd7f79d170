//! Digital-analog compilation of qudit Hamiltonians.
//!
//! A target two-body Hamiltonian written in the Weyl–Heisenberg basis is
//! synthesised from a fixed source Hamiltonian by conjugating analog
//! evolution blocks with single-qudit Weyl gates. The block durations solve
//! the nonnegative linear system `M t = T h_p / h_s`, where `M` collects the
//! root-of-unity phases every coupling picks up under every gate-word.
//!
//! Modules, bottom-up:
//!
//! * [`weyl`] – clock/shift operators, conjugation phases, spin matrices.
//! * [`hamiltonian`] – Weyl-basis Hamiltonians, BLBQ problem and ZZ source.
//! * [`phase_matrix`] – gate-words, the phase matrix and its algebraic checks.
//! * [`schedule`] – nonnegative solves, sparsification, pruning, compilation.
//! * [`spin`] – spin-basis compilation through the qubit sign matrix.
//! * [`sim`] – state-vector / density-matrix execution with noise.

pub mod config;
pub mod error;
mod exact;
pub mod hamiltonian;
pub mod linalg;
pub mod phase_matrix;
pub mod schedule;
pub mod sim;
pub mod spin;
pub mod weyl;

pub use error::{DaqcError, Result};
pub use hamiltonian::{CouplingTerm, LocalTerm, QuditHamiltonian};
pub use phase_matrix::{GateWord, PhaseMatrix, RowKey, WordSet};
pub use schedule::{compile, CompileOptions, Schedule};
pub use weyl::{Operator, WeylLabel};

pub use num_complex::Complex64 as C64;
