//! Named experiments behind the CLI: each one runs a scenario, writes
//! plot-ready CSV artifacts, and reports pass/fail checks plus convergence
//! fits in a run manifest.

mod checks;
mod dynamics;
mod frames;
mod local_laws;

pub use checks::run_check_battery;

use std::path::Path;
use std::time::Instant;

use crate::config::{CheckResult, ConvergenceFit, ExperimentConfig, ExperimentKind, RunManifest};
use crate::error::{PftError, Result};

/// Stable listing (name, one-line description).
pub const EXPERIMENTS: [(&str, &str); 11] = [
    (
        "schrodinger_recovery",
        "coherent mean along an inertial foliation against a refined classical oracle",
    ),
    (
        "foliation_independence",
        "final-state distance between two interpolating foliations under refinement",
    ),
    (
        "dual_path_equality",
        "path-ordered evolution against the single-shot frame-change map",
    ),
    (
        "boost_vacuum",
        "particle content of the vacuum across a flat-to-boosted frame change",
    ),
    (
        "quench_bogoliubov",
        "mass-quench Bogoliubov map against the analytic per-mode oracle",
    ),
    (
        "qrf_particle_creation",
        "weighted-frame particle numbers: smeared vs transformed-operator routes",
    ),
    (
        "anomaly_check",
        "pointwise and integrated conformal anomaly on flat and bump slices",
    ),
    (
        "microcausality_check",
        "exact vanishing of flux commutators at spacelike-separated supports",
    ),
    (
        "ts_residual",
        "local normal-deformation residual convergence in the deformation size",
    ),
    (
        "heisenberg_residual",
        "functional Heisenberg-equation residual convergence",
    ),
    (
        "trinity_battery",
        "agreement of conditional, deparametrized and relational expectations",
    ),
];

/// What an experiment produces besides the manifest.
#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub checks: Vec<CheckResult>,
    pub fits: Vec<ConvergenceFit>,
    /// (file name, contents) pairs written verbatim into the output dir
    pub artifacts: Vec<(String, String)>,
}

impl ExperimentOutput {
    pub fn check(&mut self, name: &str, magnitude: f64, threshold: f64) {
        self.checks.push(CheckResult::new(name, magnitude, threshold));
    }

    pub fn check_at_least(&mut self, name: &str, magnitude: f64, floor: f64) {
        self.checks.push(CheckResult::at_least(name, magnitude, floor));
    }

    pub fn fit(&mut self, name: &str, hs: Vec<f64>, errors: Vec<f64>) -> f64 {
        let order = crate::numeric::fit_order(&hs, &errors);
        self.fits.push(ConvergenceFit { name: name.to_string(), order, hs, errors });
        order
    }

    pub fn artifact(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.to_string(), contents));
    }
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Run one experiment: dispatch, write artifacts and the manifest into
/// `out_dir`, and return the manifest. The manifest is written exactly once,
/// also when the experiment fails.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<RunManifest> {
    std::fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PftError::ExperimentError(format!("thread pool: {e}")))?;
    let result = pool.install(|| dispatch(cfg));

    let (output, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (ExperimentOutput::default(), Some(format!("{e}"))),
    };
    for (name, contents) in &output.artifacts {
        std::fs::write(out_dir.join(name), contents)?;
    }
    let passed = error.is_none() && output.checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        version: crate::VERSION.to_string(),
        seed: cfg.seed,
        threads,
        config: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
        wall_time_ms: started.elapsed().as_millis() as u64,
        checks: output.checks,
        convergence_fits: output.fits,
        passed,
        error,
    };
    std::fs::write(out_dir.join("manifest.json"), manifest.to_json())?;
    Ok(manifest)
}

fn dispatch(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::SchrodingerRecovery => dynamics::schrodinger_recovery(cfg),
        ExperimentKind::FoliationIndependence => dynamics::foliation_independence(cfg),
        ExperimentKind::DualPathEquality => dynamics::dual_path_equality(cfg),
        ExperimentKind::BoostVacuum => frames::boost_vacuum(cfg),
        ExperimentKind::QuenchBogoliubov => frames::quench_bogoliubov(cfg),
        ExperimentKind::QrfParticleCreation => frames::qrf_particle_creation(cfg),
        ExperimentKind::AnomalyCheck => local_laws::anomaly_check(cfg),
        ExperimentKind::MicrocausalityCheck => local_laws::microcausality_check(cfg),
        ExperimentKind::TsResidual => local_laws::ts_residual_experiment(cfg),
        ExperimentKind::HeisenbergResidual => local_laws::heisenberg_residual_experiment(cfg),
        ExperimentKind::TrinityBattery => local_laws::trinity_battery(cfg),
    }
}
