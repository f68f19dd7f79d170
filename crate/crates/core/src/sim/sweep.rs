//! θ sweep of the BLBQ chain: compile, prune, run banged and digital, compare.

use serde::{Deserialize, Serialize};

use super::channels::NoiseModel;
use super::run::{ideal_evolution, run_bdaqc, run_digital};
use super::state::{ghz_state, state_fidelity};
use crate::error::Result;
use crate::hamiltonian::{blbq_problem, zz_source};
use crate::phase_matrix::WordSet;
use crate::schedule::{compile, CompileOptions, Pruning, Schedule};

pub const CSV_HEADER: &str = "theta,t_A,t_A_r,fidelity_bdaqc,fidelity_dqc,gate_count,block_count";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub n: usize,
    pub total_time: f64,
    pub noise: NoiseModel,
    pub pruning_factor: f64,
    pub word_set: WordSet,
}

impl SweepOptions {
    pub fn standard(n: usize) -> Self {
        SweepOptions { n, total_time: 1.0, noise: NoiseModel::standard(1.0), pruning_factor: 4.0, word_set: WordSet::Auto }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    /// Analog time of the unpruned schedule.
    pub t_a: f64,
    /// Analog time after pruning.
    pub t_a_r: f64,
    pub fidelity_bdaqc: f64,
    pub fidelity_dqc: f64,
    pub gate_count: usize,
    pub block_count: usize,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub row: SweepRow,
    pub schedule: Schedule,
}

/// `k π / (points − 1)` for `k = 0 … points − 1`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| std::f64::consts::PI * k as f64 / (points - 1) as f64).collect(),
    }
}

/// One sweep point.
pub fn sweep_point(theta: f64, opts: &SweepOptions) -> Result<SweepPoint> {
    let (n, t) = (opts.n, opts.total_time);
    let source = zz_source(n, 3)?;
    let problem = blbq_problem(n, theta)?;
    let options = CompileOptions {
        word_set: opts.word_set.clone(),
        pruning: Some(Pruning { delta_t: opts.noise.single_gate_duration, factor: opts.pruning_factor }),
        theta: Some(theta),
        ..Default::default()
    };
    let schedule = compile(&source, &problem, t, &options)?;
    let ghz = ghz_state(3, n)?;
    let ideal = ideal_evolution(&problem, t, &ghz)?;
    let banged = run_bdaqc(&schedule, &source, &opts.noise, &ghz)?;
    let digital = run_digital(n, theta, t, &opts.noise, &ghz)?;
    let row = SweepRow {
        theta,
        t_a: schedule.metadata.ideal_analog_time,
        t_a_r: schedule.metadata.total_analog_time,
        fidelity_bdaqc: state_fidelity(&banged, &ideal)?,
        fidelity_dqc: state_fidelity(&digital, &ideal)?,
        gate_count: schedule.gate_count(),
        block_count: schedule.block_count(),
    };
    Ok(SweepPoint { row, schedule })
}

/// All points, in input order. Points run in parallel when the `parallel` feature is on.
pub fn sweep(thetas: &[f64], opts: &SweepOptions) -> Result<Vec<SweepPoint>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        thetas.par_iter().map(|&th| sweep_point(th, opts)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        thetas.iter().map(|&th| sweep_point(th, opts)).collect()
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.theta, r.t_a, r.t_a_r, r.fidelity_bdaqc, r.fidelity_dqc, r.gate_count, r.block_count
        ));
    }
    out
}

/// Parses a table written by [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<SweepRow>> {
    use crate::error::DaqcError;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(DaqcError::InvalidInput("missing or unexpected result table header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(DaqcError::InvalidInput(format!("row has {} fields: {l}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| DaqcError::InvalidInput(format!("{s}: {e}")));
            let int = |s: &str| s.trim().parse::<usize>().map_err(|e| DaqcError::InvalidInput(format!("{s}: {e}")));
            Ok(SweepRow {
                theta: num(f[0])?,
                t_a: num(f[1])?,
                t_a_r: num(f[2])?,
                fidelity_bdaqc: num(f[3])?,
                fidelity_dqc: num(f[4])?,
                gate_count: int(f[5])?,
                block_count: int(f[6])?,
            })
        })
        .collect()
}
