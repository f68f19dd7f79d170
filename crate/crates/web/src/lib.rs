//! Browser bindings. Every export returns a JSON string.

use qudaqc::hamiltonian::{blbq_problem, zz_source, CouplingKey};
use qudaqc::phase_matrix::{verify_properties, PhaseMatrix, RowKey};
use qudaqc::schedule::Pruning;
use qudaqc::sim::sweep::{sweep_point, SweepOptions};
use qudaqc::{compile, CompileOptions, GateWord, WeylLabel};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest chain the page will simulate; the density matrix grows as 9^n.
pub const MAX_SIM_SITES: usize = 4;

/// Compile the BLBQ chain at `theta` from the S_z S_z source with unit total time.
pub fn compile_blbq_json(n: usize, theta: f64, delta_t: f64, pruning_factor: f64) -> Result<String, String> {
    let source = zz_source(n, 3).map_err(|e| e.to_string())?;
    let problem = blbq_problem(n, theta).map_err(|e| e.to_string())?;
    let pruning = (pruning_factor > 0.0).then_some(Pruning { delta_t, factor: pruning_factor });
    let options = CompileOptions { pruning, theta: Some(theta), ..Default::default() };
    let schedule = compile(&source, &problem, 1.0, &options).map_err(|e| e.to_string())?;
    let blocks: Vec<_> = schedule
        .blocks
        .iter()
        .map(|b| {
            let word: Vec<String> = b.word.labels().iter().map(|l| l.to_string()).collect();
            json!({ "word": word.join(" "), "duration": b.duration })
        })
        .collect();
    Ok(json!({
        "theta": theta,
        "blocks": blocks,
        "block_count": schedule.block_count(),
        "gate_count": schedule.gate_count(),
        "analog_time": schedule.total_analog_time(),
        "ideal_analog_time": schedule.metadata.ideal_analog_time,
        "residual": schedule.metadata.residual,
    })
    .to_string())
}

/// Exponent table of the single-pair phase matrix for local dimension `d`, plus the block identity checks.
pub fn phase_matrix_json(d: usize) -> Result<String, String> {
    if !(2..=5).contains(&d) {
        return Err(format!("d must lie in 2..=5, got {d}"));
    }
    let labels: Vec<WeylLabel> = (0..d * d).map(|i| WeylLabel::new(d, (i / d) as i64, (i % d) as i64)).collect();
    let rows: Vec<RowKey> = labels
        .iter()
        .flat_map(|&l| labels.iter().map(move |&r| RowKey::Coupling(CouplingKey::new(0, 1, l, r))))
        .collect();
    let words: Vec<GateWord> = labels
        .iter()
        .flat_map(|&l| labels.iter().map(move |&r| GateWord::from_labels(vec![l, r])))
        .collect();
    let m = PhaseMatrix::build(d, rows, words).map_err(|e| e.to_string())?;
    let exponents: Vec<Vec<usize>> = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m.exponent(r, c)).collect()).collect();
    let report = verify_properties(d).map_err(|e| e.to_string())?;
    Ok(json!({ "d": d, "exponents": exponents, "checks": report.checks }).to_string())
}

/// Noisy banged and digital fidelities for one angle under the standard noise model.
pub fn fidelity_point_json(n: usize, theta: f64) -> Result<String, String> {
    if n > MAX_SIM_SITES {
        return Err(format!("the page simulates at most {MAX_SIM_SITES} qutrits"));
    }
    let point = sweep_point(theta, &SweepOptions::standard(n)).map_err(|e| e.to_string())?;
    serde_json::to_string(&point.row).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn compile_blbq(n: usize, theta: f64, delta_t: f64, pruning_factor: f64) -> Result<String, JsValue> {
    compile_blbq_json(n, theta, delta_t, pruning_factor).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn phase_matrix(d: usize) -> Result<String, JsValue> {
    phase_matrix_json(d).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fidelity_point(n: usize, theta: f64) -> Result<String, JsValue> {
    fidelity_point_json(n, theta).map_err(|e| JsValue::from_str(&e))
}
