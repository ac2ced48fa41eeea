//! Evolution experiments: classical-oracle recovery, foliation independence,
//! and the dual-path comparison.

use nalgebra::DVector;
use serde::Deserialize;

use super::{fmt_f, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::embedding_geometry::{DeformationVector, Embedding};
use crate::error::{PftError, Result};
use crate::evolve::{apply_frame_change, coherent_state, evolve_foliation, vacuum_state};
use crate::field_model::flat_mode_frame;
use crate::foliation::{build_interpolating, Schedule};
use crate::lattice::LatticeSpec;

fn coarsened(spec: &LatticeSpec, factor: usize) -> Result<LatticeSpec> {
    if spec.n_sites % factor != 0 {
        return Err(PftError::ConfigError(format!(
            "n_sites = {} not divisible by refinement factor {factor}",
            spec.n_sites
        )));
    }
    LatticeSpec::new(
        spec.n_sites / factor,
        spec.spacing * factor as f64,
        spec.mass,
        spec.boundary,
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SchrodingerParams {
    t_final: f64,
    dt: f64,
    amplitude: f64,
    width: f64,
    refinement_levels: usize,
}

impl Default for SchrodingerParams {
    fn default() -> Self {
        Self { t_final: 1.0, dt: 1e-3, amplitude: 1.0, width: 1.5, refinement_levels: 3 }
    }
}

/// Coherent-state mean along the rest-frame inertial foliation against a
/// tenfold-refined independent leapfrog.
pub fn schrodinger_recovery(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: SchrodingerParams = cfg.params_as()?;
    let base = cfg.lattice.to_spec()?;
    let mut out = ExperimentOutput::default();
    let mut csv = String::from("level,n_sites,dx,dt,max_error\n");
    let mut dts = Vec::new();
    let mut errs = Vec::new();

    for level in 0..p.refinement_levels {
        let factor = 1 << (p.refinement_levels - 1 - level);
        let spec = coarsened(&base, factor)?;
        let dt = p.dt * factor as f64;
        let emb = Embedding::flat(spec);
        let frame = flat_mode_frame(&spec, &emb)?;
        let vac = vacuum_state(&spec, &frame, &emb)?;
        let n = spec.n_sites;
        let c = spec.center_x();
        let mut mean = DVector::zeros(2 * n);
        for i in 0..n {
            let u = (spec.site_x(i) - c) / p.width;
            mean[i] = p.amplitude * (-u * u).exp();
        }
        let state = coherent_state(&vac, mean.clone())?;
        let n_steps = (p.t_final / dt).round().max(1.0) as usize;
        let fol = crate::foliation::build_inertial(&spec, 0.0, (0.0, p.t_final), n_steps)?;
        let (evolved, _) = evolve_foliation(&spec, &state, &fol)?;
        let (phi, pi) = crate::oracles::leapfrog_classical(
            &spec,
            &mean.rows(0, n).into_owned(),
            &mean.rows(n, n).into_owned(),
            p.t_final,
            dt / 10.0,
        );
        let mut err: f64 = 0.0;
        for i in 0..n {
            err = err.max((evolved.mean[i] - phi[i]).abs());
            err = err.max((evolved.mean[n + i] - pi[i]).abs());
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            level,
            spec.n_sites,
            fmt_f(spec.spacing),
            fmt_f(dt),
            fmt_f(err)
        ));
        dts.push(dt);
        errs.push(err);
    }

    let final_err = *errs.last().unwrap();
    out.check("mean_error_vs_oracle", final_err, 1e-4);
    if p.refinement_levels >= 2 {
        let order = out.fit("mean_error_order", dts, errs);
        out.check_at_least("convergence_order", order, 1.9);
    }
    out.artifact("schrodinger_recovery.csv", csv);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FoliationParams {
    tau: f64,
    dt: f64,
    bump_amplitude: f64,
    refinement_levels: usize,
}

impl Default for FoliationParams {
    fn default() -> Self {
        Self { tau: 0.4, dt: 1e-3, bump_amplitude: 0.002, refinement_levels: 3 }
    }
}

fn endpoints(spec: &LatticeSpec, tau: f64) -> Result<(Embedding, Embedding)> {
    let e1 = Embedding::flat(*spec);
    let v = DeformationVector::constant(spec.n_sites, 1.0, 0.0);
    let e2 = e1.translate(&v, tau)?;
    Ok((e1, e2))
}

/// Covariance distance restricted to smooth smeared probes (low harmonics of
/// the field and momentum). Comparable across lattice resolutions, which the
/// per-entry max is not: raw entries at the Brillouin edge carry lattice
/// artifacts with no continuum counterpart.
fn smeared_covariance_distance(
    spec: &LatticeSpec,
    a: &nalgebra::DMatrix<f64>,
    b: &nalgebra::DMatrix<f64>,
    n_harmonics: usize,
) -> f64 {
    let n = spec.n_sites;
    let l = spec.total_length();
    let mut probes: Vec<DVector<f64>> = Vec::new();
    let mut push_pair = |f: &dyn Fn(f64) -> f64| {
        let mut phi = DVector::zeros(2 * n);
        let mut pi = DVector::zeros(2 * n);
        for i in 0..n {
            let x = spec.site_x(i);
            phi[i] = spec.spacing * f(x);
            pi[n + i] = f(x);
        }
        probes.push(phi);
        probes.push(pi);
    };
    push_pair(&|_x| 1.0 / l.sqrt());
    for h in 1..=n_harmonics {
        let k = 2.0 * std::f64::consts::PI * h as f64 / l;
        push_pair(&move |x| (k * x).cos() * (2.0 / l).sqrt());
        push_pair(&move |x| (k * x).sin() * (2.0 / l).sqrt());
    }
    let d = a - b;
    let mut worst: f64 = 0.0;
    for p in &probes {
        for q in &probes {
            worst = worst.max((p.transpose() * &d * q)[(0, 0)].abs());
        }
    }
    worst
}

/// Vacuum evolved between fixed endpoint slices along two genuinely distinct
/// interpolating foliations; the final covariances must converge together.
pub fn foliation_independence(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: FoliationParams = cfg.params_as()?;
    let base = cfg.lattice.to_spec()?;
    let mut out = ExperimentOutput::default();
    let mut csv = String::from("level,n_sites,dx,dt,smeared_distance,raw_distance\n");
    let mut dts = Vec::new();
    let mut dists = Vec::new();

    for level in 0..p.refinement_levels {
        let factor = 1 << (p.refinement_levels - 1 - level);
        let spec = coarsened(&base, factor)?;
        let dt = p.dt * factor as f64;
        let (e1, e2) = endpoints(&spec, p.tau)?;
        let frame = flat_mode_frame(&spec, &e1)?;
        let vac = vacuum_state(&spec, &frame, &e1)?;
        let n_steps = (p.tau / dt).round().max(2.0) as usize;
        let fol_a = build_interpolating(&e1, &e2, Schedule::Linear, n_steps)?;
        let fol_b =
            build_interpolating(&e1, &e2, Schedule::Bump { amplitude: p.bump_amplitude }, n_steps)?;
        let (sa, _) = evolve_foliation(&spec, &vac, &fol_a)?;
        let (sb, _) = evolve_foliation(&spec, &vac, &fol_b)?;
        let d = smeared_covariance_distance(&spec, &sa.covariance, &sb.covariance, 2);
        let d_raw = (&sa.covariance - &sb.covariance).amax();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            level,
            spec.n_sites,
            fmt_f(spec.spacing),
            fmt_f(dt),
            fmt_f(d),
            fmt_f(d_raw)
        ));
        dts.push(dt);
        dists.push(d);
    }

    out.check("covariance_distance", *dists.last().unwrap(), 1e-5);
    if p.refinement_levels >= 2 {
        let order = out.fit("foliation_distance_order", dts, dists);
        out.check_at_least("convergence_order", order, 1.9);
    }
    out.artifact("foliation_independence.csv", csv);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DualPathParams {
    tau: f64,
    dt: f64,
    bump_amplitude: f64,
}

impl Default for DualPathParams {
    fn default() -> Self {
        Self { tau: 0.4, dt: 1e-3, bump_amplitude: 0.002 }
    }
}

/// Path-ordered evolution along a curved interpolating foliation against the
/// single-shot frame-change map between its endpoints.
pub fn dual_path_equality(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p: DualPathParams = cfg.params_as()?;
    let spec = cfg.lattice.to_spec()?;
    let mut out = ExperimentOutput::default();
    let (e1, e2) = endpoints(&spec, p.tau)?;
    let frame = flat_mode_frame(&spec, &e1)?;
    let vac = vacuum_state(&spec, &frame, &e1)?;
    let n_steps = (p.tau / p.dt).round().max(2.0) as usize;

    let mut csv = String::from("schedule,smeared_distance,raw_distance,mean_distance\n");
    let mut worst: f64 = 0.0;
    let single = apply_frame_change(&spec, &vac, &e1, &e2)?;
    for (name, schedule) in [
        ("linear", Schedule::Linear),
        ("bump", Schedule::Bump { amplitude: p.bump_amplitude }),
    ] {
        let fol = build_interpolating(&e1, &e2, schedule, n_steps)?;
        let (path, _) = evolve_foliation(&spec, &vac, &fol)?;
        let dc = smeared_covariance_distance(&spec, &path.covariance, &single.covariance, 2);
        let dc_raw = (&path.covariance - &single.covariance).amax();
        let dm = (&path.mean - &single.mean).amax();
        csv.push_str(&format!("{name},{},{},{}\n", fmt_f(dc), fmt_f(dc_raw), fmt_f(dm)));
        worst = worst.max(dc).max(dm);
    }
    out.check("dual_path_distance", worst, 1e-5);
    out.artifact("dual_path_equality.csv", csv);
    Ok(out)
}
