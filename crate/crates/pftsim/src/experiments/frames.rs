//! Frame-comparison experiments: boosted vacua, mass quenches, and weighted
//! frame families.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{fmt_f, ExperimentOutput};
use crate::bogoliubov::{bogoliubov_between, quench_beta_squared};
use crate::config::ExperimentConfig;
use crate::embedding_geometry::{DeformationVector, Embedding};
use crate::error::{PftError, Result};
use crate::evolve::{frame_change_unitary, vacuum_state};
use crate::field_model::{dispersion, flat_mode_frame, flat_mode_frame_with_mass};
use crate::lattice::{Boundary, LatticeSpec};
use crate::qrf::{
    member_bogoliubov, smeared_particle_number, transformed_number_expectation, EmbeddingEnsemble,
    EnsembleMember,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BoostParams {
    rapidity: f64,
    resolutions: Vec<(usize, f64)>,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rapidity: 0.2,
            resolutions: vec![(64, 0.2), (128, 0.1), (256, 0.05)],
        }
    }
}

/// Flat-to-boosted frame change on a clamped lattice: the per-mode particle
/// number is a pure lattice artifact and must shrink under refinement.
pub fn boost_vacuum(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: BoostParams = cfg.params_as()?;
    if cfg.lattice.boundary != Boundary::FixedZero {
        return Err(PftError::ConfigError(
            "boost_vacuum requires boundary = fixed-zero".into(),
        ));
    }
    if p.resolutions.len() < 2 {
        return Err(PftError::ConfigError("need at least two resolutions".into()));
    }
    let lam = p.rapidity.tanh();
    let mut out = ExperimentOutput::default();
    let mut csv = String::from("n_sites,dx,mode,k,number\n");
    // per-resolution numbers for modes shared across the ladder
    let mut per_res: Vec<Vec<f64>> = Vec::new();
    let mut finest_max: f64 = 0.0;

    for &(n, dx) in &p.resolutions {
        let spec = LatticeSpec::new(n, dx, cfg.lattice.mass, Boundary::FixedZero)?;
        let flat = Embedding::flat(spec);
        let c = spec.center_x();
        let tilted = Embedding::from_profile(spec, |x| (lam * (x - c), x))?;
        let frame_a = flat_mode_frame(&spec, &flat)?;
        let prop = frame_change_unitary(&spec, &flat, &tilted)?;
        let moved = frame_a.transported(&prop.symplectic, &flat, &tilted)?;
        let frame_b = flat_mode_frame(&spec, &tilted)?;
        let map = bogoliubov_between(&frame_b, &moved, &tilted)?;
        let kmax = std::f64::consts::PI / (4.0 * dx);
        let mut numbers = Vec::new();
        for (k_idx, label) in frame_b.labels.iter().enumerate() {
            if *label <= kmax {
                let num = map.expected_number(k_idx)?;
                numbers.push(num);
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    n,
                    fmt_f(dx),
                    k_idx,
                    fmt_f(*label),
                    fmt_f(num)
                ));
            }
        }
        per_res.push(numbers);
    }

    if let Some(last) = per_res.last() {
        finest_max = last.iter().copied().fold(0.0, f64::max);
    }
    out.check("finest_max_number", finest_max, 1e-3);

    // monotone decrease on the modes present at every resolution
    let shared = per_res.iter().map(|v| v.len()).min().unwrap_or(0);
    let mut worst_increase: f64 = 0.0;
    for m in 0..shared {
        for r in 1..per_res.len() {
            worst_increase = worst_increase.max(per_res[r][m] - per_res[r - 1][m]);
        }
    }
    out.check("monotone_refinement_increase", worst_increase, 1e-12);
    out.artifact("boost_vacuum.csv", csv);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QuenchParams {
    mass_to: f64,
}

impl Default for QuenchParams {
    fn default() -> Self {
        Self { mass_to: 2.0 }
    }
}

/// Sudden mass quench on a shared flat slice against the analytic per-mode
/// coefficient, with canonical-relation accounting.
pub fn quench_bogoliubov(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: QuenchParams = cfg.params_as()?;
    let spec = cfg.lattice.to_spec()?;
    let mut out = ExperimentOutput::default();
    let emb = Embedding::flat(spec);
    let f1 = flat_mode_frame(&spec, &emb)?;
    let f2 = flat_mode_frame_with_mass(&spec, &emb, p.mass_to)?;
    let map = bogoliubov_between(&f2, &f1, &emb)?;

    let mut csv = String::from("mode,k,number,analytic,abs_error\n");
    let mut worst: f64 = 0.0;
    for (k_idx, label) in f2.labels.iter().enumerate() {
        let w1 = dispersion(spec.mass, 1.0, spec.spacing, *label);
        let w2 = dispersion(p.mass_to, 1.0, spec.spacing, *label);
        let analytic = quench_beta_squared(w1, w2);
        let got = map.expected_number(k_idx)?;
        let err = (got - analytic).abs();
        worst = worst.max(err);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            k_idx,
            fmt_f(*label),
            fmt_f(got),
            fmt_f(analytic),
            fmt_f(err)
        ));
    }
    let rows: Vec<usize> = (0..map.n_from()).collect();
    let (d1, d2) = map.canonical_defects_on(&rows);
    out.check("quench_number_error", worst, 1e-10);
    out.check("canonical_normalization_defect", d1, 1e-8);
    out.check("canonical_symmetry_defect", d2, 1e-8);
    out.artifact("quench_bogoliubov.csv", csv);
    let mut matrix_csv = Vec::new();
    map.export_csv(&mut matrix_csv)?;
    out.artifact(
        "bogoliubov_matrix.csv",
        String::from_utf8(matrix_csv).unwrap_or_default(),
    );
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QrfParams {
    /// (mass parameter, weight) pairs of the quench family
    members: Vec<(f64, f64)>,
    n_random_ensembles: usize,
}

impl Default for QrfParams {
    fn default() -> Self {
        Self { members: vec![(1.5, 0.5), (2.0, 0.5)], n_random_ensembles: 10 }
    }
}

/// Weighted-frame particle creation: the conditional-weighting route against
/// the transformed-operator route, the delta-ensemble classical limit, and
/// strict positivity for quench families.
pub fn qrf_particle_creation(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: QrfParams = cfg.params_as()?;
    let spec = cfg.lattice.to_spec()?;
    let mut out = ExperimentOutput::default();
    let emb = Embedding::flat(spec);
    let frame_b = flat_mode_frame(&spec, &emb)?;
    let vac_b = vacuum_state(&spec, &frame_b, &emb)?;
    let retained = frame_b.retained(spec.spacing);

    // configured quench-family ensemble
    let ens = EmbeddingEnsemble::from_weights(
        p.members
            .iter()
            .map(|(mass, w)| (*w, emb.clone(), Some(*mass)))
            .collect(),
    )?;
    let weights = ens.weights();
    let mut csv = String::from("k,branch,weight,branch_number,smeared,transformed\n");
    let mut worst_eq: f64 = 0.0;
    let mut max_number: f64 = 0.0;
    for &k in &retained {
        let smeared = smeared_particle_number(&spec, &ens, &frame_b, &emb, k)?;
        let transformed =
            transformed_number_expectation(&spec, &ens, &frame_b, &emb, &vac_b, k)?;
        worst_eq = worst_eq.max((smeared - transformed).abs());
        max_number = max_number.max(smeared);
        for (b, member) in ens.members.iter().enumerate() {
            let map = member_bogoliubov(&spec, &frame_b, &emb, member)?;
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k,
                b,
                fmt_f(weights[b]),
                fmt_f(map.expected_number(k)?),
                fmt_f(smeared),
                fmt_f(transformed)
            ));
        }
    }
    out.check("route_equality", worst_eq, 1e-12);
    out.check_at_least("quench_family_positive_number", max_number, 1e-12);

    // delta ensemble recovers the single-frame value exactly
    let delta = EmbeddingEnsemble::new(vec![EnsembleMember {
        emb: emb.clone(),
        amplitude: Complex64::new(1.0, 0.0),
        mode_mass: Some(p.members[0].0),
    }])?;
    let single = member_bogoliubov(&spec, &frame_b, &emb, &delta.members[0])?;
    let mut delta_err: f64 = 0.0;
    for &k in &retained {
        let a = smeared_particle_number(&spec, &delta, &frame_b, &emb, k)?;
        delta_err = delta_err.max((a - single.expected_number(k)?).abs());
    }
    out.check("delta_ensemble_recovery", delta_err, 0.0);

    // randomized ensembles: route equality under mixed quench/translation
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_rand: f64 = 0.0;
    for _ in 0..p.n_random_ensembles {
        let n_members = rng.gen_range(2..=4);
        let mut members = Vec::new();
        for i in 0..n_members {
            let w = rng.gen_range(0.1..1.0);
            if i % 2 == 0 {
                members.push((w, emb.clone(), Some(rng.gen_range(1.2..3.0))));
            } else {
                let v = DeformationVector::constant(spec.n_sites, 1.0, 0.0);
                let shifted = emb.translate(&v, rng.gen_range(0.05..0.5))?;
                members.push((w, shifted, None));
            }
        }
        let ens = EmbeddingEnsemble::from_weights(members)?;
        for &k in retained.iter().take(4) {
            let a = smeared_particle_number(&spec, &ens, &frame_b, &emb, k)?;
            let b = transformed_number_expectation(&spec, &ens, &frame_b, &emb, &vac_b, k)?;
            worst_rand = worst_rand.max((a - b).abs());
        }
    }
    out.check("random_ensemble_route_equality", worst_rand, 1e-12);
    out.artifact("qrf_particle_creation.csv", csv);
    Ok(out)
}
