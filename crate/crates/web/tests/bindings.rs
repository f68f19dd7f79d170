use qudaqc_web::{compile_blbq_json, fidelity_point_json, phase_matrix_json};

#[test]
fn compile_returns_blocks() {
    let v: serde_json::Value = serde_json::from_str(&compile_blbq_json(3, 0.5, 0.01, 0.0).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["blocks"].as_array().unwrap().len(), v["block_count"].as_u64().unwrap() as usize);
    assert!(compile_blbq_json(1, 0.5, 0.01, 0.0).is_err());
}

#[test]
fn phase_matrix_table_is_square() {
    let v: serde_json::Value = serde_json::from_str(&phase_matrix_json(3).unwrap()).unwrap();
    let rows = v["exponents"].as_array().unwrap();
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 81));
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(phase_matrix_json(6).is_err());
}

#[test]
fn fidelity_point_is_bounded() {
    let v: serde_json::Value = serde_json::from_str(&fidelity_point_json(2, 0.7).unwrap()).unwrap();
    for key in ["fidelity_bdaqc", "fidelity_dqc"] {
        let f = v[key].as_f64().unwrap();
        assert!(f > 0.0 && f <= 1.0 + 1e-9, "{key} = {f}");
    }
    assert!(fidelity_point_json(5, 0.7).is_err());
}
