//! Experiment configuration (strict JSON) and the machine-readable run
//! manifest.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{PftError, Result};
use crate::lattice::{Boundary, LatticeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SchrodingerRecovery,
    FoliationIndependence,
    DualPathEquality,
    BoostVacuum,
    QuenchBogoliubov,
    QrfParticleCreation,
    AnomalyCheck,
    MicrocausalityCheck,
    TsResidual,
    HeisenbergResidual,
    TrinityBattery,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SchrodingerRecovery => "schrodinger_recovery",
            Self::FoliationIndependence => "foliation_independence",
            Self::DualPathEquality => "dual_path_equality",
            Self::BoostVacuum => "boost_vacuum",
            Self::QuenchBogoliubov => "quench_bogoliubov",
            Self::QrfParticleCreation => "qrf_particle_creation",
            Self::AnomalyCheck => "anomaly_check",
            Self::MicrocausalityCheck => "microcausality_check",
            Self::TsResidual => "ts_residual",
            Self::HeisenbergResidual => "heisenberg_residual",
            Self::TrinityBattery => "trinity_battery",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| PftError::ConfigError(format!("unknown experiment '{name}'")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub boundary: Boundary,
}

impl LatticeConfig {
    pub fn to_spec(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.n_sites, self.spacing, self.mass, self.boundary)
            .map_err(|e| PftError::ConfigError(format!("lattice: {e}")))
    }
}

/// Top-level experiment configuration. Experiment-specific parameters live
/// under `params` and are validated strictly by each experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_params")]
    pub params: serde_json::Value,
}

fn default_params() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PftError::ConfigError(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PftError::ConfigError(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Deserialize the strict experiment-specific parameter block.
    pub fn params_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| PftError::ConfigError(format!("params: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub magnitude: f64,
    pub threshold: f64,
}

impl CheckResult {
    pub fn new(name: &str, magnitude: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: magnitude.is_finite() && magnitude <= threshold,
            magnitude,
            threshold,
        }
    }

    /// For quantities that must exceed a floor (e.g. measured orders).
    pub fn at_least(name: &str, magnitude: f64, floor: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: magnitude.is_finite() && magnitude >= floor,
            magnitude,
            threshold: floor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub name: String,
    pub order: f64,
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Machine-readable record of one run. Written exactly once per run, also
/// on failure. `wall_time_ms` is the only field that varies between
/// identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub wall_time_ms: u64,
    pub checks: Vec<CheckResult>,
    pub convergence_fits: Vec<ConvergenceFit>,
    pub passed: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|_| "{}".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "experiment": "quench_bogoliubov",
                "lattice": {"n_sites": 16, "spacing": 0.25, "mass": 1.0, "boundary": "periodic"},
                "seed": 7
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::QuenchBogoliubov);
        assert_eq!(cfg.lattice.to_spec().unwrap().n_sites, 16);
    }

    #[test]
    fn missing_key_is_named() {
        let err = ExperimentConfig::from_json(
            r#"{
                "experiment": "quench_bogoliubov",
                "lattice": {"spacing": 0.25, "mass": 1.0, "boundary": "periodic"}
            }"#,
        )
        .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("n_sites"), "message should name the key: {msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_json(
            r#"{
                "experiment": "quench_bogoliubov",
                "lattice": {"n_sites": 16, "spacing": 0.25, "mass": 1.0, "boundary": "periodic"},
                "surprise": 1
            }"#,
        )
        .unwrap_err();
        assert!(format!("{err}").contains("surprise"));
    }
}
