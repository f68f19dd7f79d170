//! Run configuration shared by the command line and the demo.

use serde::{Deserialize, Serialize};

use crate::error::{DaqcError, Result};
use crate::phase_matrix::WordSet;
use crate::sim::channels::NoiseModel;
use crate::sim::sweep::{theta_grid, SweepOptions};

/// Either a point count over `[0, π]` or explicit angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaGrid {
    Points(usize),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<ThetaGrid>,
    #[serde(rename = "t1_over_T")]
    pub t1_over_t: f64,
    #[serde(rename = "delta_t_over_T")]
    pub delta_t_over_t: f64,
    pub single_gate_fidelity: f64,
    pub two_gate_fidelity: f64,
    #[serde(rename = "two_gate_duration_over_T")]
    pub two_gate_duration_over_t: f64,
    pub pruning_factor: f64,
    pub word_set: WordSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results_out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_dump_dir: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 3,
            n: 6,
            total_time: 1.0,
            theta: None,
            theta_grid: None,
            t1_over_t: 100.0,
            delta_t_over_t: 0.01,
            single_gate_fidelity: 0.994,
            two_gate_fidelity: 0.95,
            two_gate_duration_over_t: 0.05,
            pruning_factor: 4.0,
            word_set: WordSet::Auto,
            schedule_out: None,
            results_out: None,
            schedule_dump_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(DaqcError::InvalidDimension(self.d));
        }
        if self.n < 2 {
            return Err(DaqcError::InvalidInput(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return Err(DaqcError::InvalidInput(format!("T must be positive, got {}", self.total_time)));
        }
        if !(self.pruning_factor >= 0.0) {
            return Err(DaqcError::InvalidInput(format!("pruning_factor must be nonnegative, got {}", self.pruning_factor)));
        }
        self.noise().validate()
    }

    /// Angles to evaluate: the explicit grid, else the single `theta`, else 33 points over `[0, π]`.
    pub fn thetas(&self) -> Vec<f64> {
        match (&self.theta_grid, self.theta) {
            (Some(ThetaGrid::Points(p)), _) => theta_grid(*p),
            (Some(ThetaGrid::Values(v)), _) => v.clone(),
            (None, Some(t)) => vec![t],
            (None, None) => theta_grid(33),
        }
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t_over_t * self.total_time
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            t1: self.t1_over_t * self.total_time,
            single_gate_duration: self.delta_t(),
            single_gate_fidelity: self.single_gate_fidelity,
            two_gate_fidelity: self.two_gate_fidelity,
            two_gate_duration: self.two_gate_duration_over_t * self.total_time,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            n: self.n,
            total_time: self.total_time,
            noise: self.noise(),
            pruning_factor: self.pruning_factor,
            word_set: self.word_set.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_keys() {
        let c = RunConfig::default();
        let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        for key in ["d", "n", "T", "t1_over_T", "delta_t_over_T", "single_gate_fidelity", "two_gate_fidelity", "pruning_factor", "word_set", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["t1_over_T"], 100.0);
        assert_eq!(v["delta_t_over_T"], 0.01);
        assert_eq!(c.thetas().len(), 33);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_json(r#"{"n": 3, "theta_grid": 9}"#).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.thetas().len(), 9);
        assert_eq!(c.single_gate_fidelity, 0.994);
        let c = RunConfig::from_json(r#"{"theta_grid": [0.1, 0.2]}"#).unwrap();
        assert_eq!(c.thetas(), vec![0.1, 0.2]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_json(r#"{"single_gate_fidelity": 1.5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
