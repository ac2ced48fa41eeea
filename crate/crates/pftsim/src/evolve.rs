//! Evolution of pure Gaussian field states along foliations, single-shot
//! frame-change maps, and the local normal-deformation residual.
//!
//! The conditional dynamics is quadratic throughout, so first and second
//! moments carry complete state information. Per-step propagators are Cayley
//! transforms of the flow generator Omega M dt evaluated on the midpoint
//! slice (second order, exactly symplectic); single-shot maps use the
//! squared-Cayley exponential, accurate to the configured tolerance.
//!
//! Phase convention: stepped evolution accumulates
//! (anomaly_rate - (<H> - e_ref)) dt, with e_ref the reference vacuum energy
//! stored in the state, so the fiducial vacuum is phase-stationary.
//! Single-shot frame changes accumulate the raw generator expectation
//! (anomaly_rate - <G>): distinct frame configurations then imprint distinct
//! phases even on stationary states.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::io::Write;

use crate::embedding_geometry::{DeformationVector, Embedding};
use crate::error::{PftError, Result};
use crate::field_model::{flow_generator, stress_energy_forms, ModeFrame, QuadraticForm, SparseForm};
use crate::foliation::Foliation;
use crate::hamiltonian::{smear_flux, SmearedHamiltonian};
use crate::lattice::LatticeSpec;
use crate::numeric::{cayley, mul_omega, symplectic_drift, symplectic_exp, symplectify};

/// Per-step norm limit: |Omega M| dt must stay below this.
pub const STEP_NORM_LIMIT: f64 = 1.0;
const STEP_DRIFT_TOL: f64 = 1e-12;

/// Pure Gaussian field state on one hypersurface.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub phase: f64,
    pub embedding_fp: u64,
    /// reference vacuum energy subtracted from the stepped phase rate
    pub phase_ref_energy: f64,
}

impl GaussianState {
    pub fn n_sites(&self) -> usize {
        self.mean.len() / 2
    }

    /// Deviation of (2 Sigma Omega^{-1})^2 from -I; zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        let p = mul_omega(&self.covariance).scale(2.0); // 2 Sigma Omega = -2 Sigma Omega^{-1}
        let n = p.nrows();
        let mut sq = &p * &p;
        for i in 0..n {
            sq[(i, i)] += 1.0;
        }
        sq.amax()
    }

    /// CSV snapshot (site, mean_phi, mean_pi).
    pub fn export_moments_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "site,mean_phi,mean_pi")?;
        let n = self.n_sites();
        for i in 0..n {
            writeln!(w, "{},{:.16e},{:.16e}", i, self.mean[i], self.mean[n + i])?;
        }
        Ok(())
    }

    /// Dense covariance CSV, one row per phase-space index.
    pub fn export_covariance_csv(&self, mut w: impl Write) -> Result<()> {
        for i in 0..self.covariance.nrows() {
            let row: Vec<String> = (0..self.covariance.ncols())
                .map(|j| format!("{:.16e}", self.covariance[(i, j)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Vacuum of a complete KG-orthonormal mode frame: Sigma = sum_k Re(z_k* z_k^T).
pub fn vacuum_state(spec: &LatticeSpec, frame: &ModeFrame, emb: &Embedding) -> Result<GaussianState> {
    if frame.zero_mode_excluded {
        return Err(PftError::FrameMismatch(
            "frame is missing the massless zero mode; its vacuum is undefined".into(),
        ));
    }
    if frame.embedding_fp != emb.fingerprint() {
        return Err(PftError::FrameMismatch(
            "frame does not live on the given embedding".into(),
        ));
    }
    let n = spec.n_sites;
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for m in &frame.modes {
        let z = m.phase_vector(emb)?;
        for a in 0..2 * n {
            for b in a..2 * n {
                let v = (z[a].conj() * z[b]).re;
                cov[(a, b)] += v;
                if a != b {
                    cov[(b, a)] += v;
                }
            }
        }
    }
    let mut state = GaussianState {
        mean: DVector::zeros(2 * n),
        covariance: cov,
        phase: 0.0,
        embedding_fp: emb.fingerprint(),
        phase_ref_energy: 0.0,
    };
    // reference energy: the normal (lapse-one) Hamiltonian on this slice
    let normal = emb.unit_normal()?;
    let v = DeformationVector::new(
        normal.iter().map(|p| p.0).collect(),
        normal.iter().map(|p| p.1).collect(),
    )?;
    let h = smear_flux(spec, emb, &v)?;
    state.phase_ref_energy = h.total.expectation(&state.mean, &state.covariance);
    Ok(state)
}

/// Coherent state: vacuum covariance with shifted first moments.
pub fn coherent_state(vacuum: &GaussianState, mean: DVector<f64>) -> Result<GaussianState> {
    if mean.len() != vacuum.mean.len() {
        return Err(PftError::DimensionMismatch(format!(
            "mean of length {}, state dimension {}",
            mean.len(),
            vacuum.mean.len()
        )));
    }
    Ok(GaussianState { mean, ..vacuum.clone() })
}

/// Symplectic propagator with its c-number phase increment.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub symplectic: DMatrix<f64>,
    pub phase_increment: f64,
}

impl Propagator {
    pub fn identity(n_sites: usize) -> Self {
        Propagator {
            symplectic: DMatrix::identity(2 * n_sites, 2 * n_sites),
            phase_increment: 0.0,
        }
    }

    pub fn drift(&self) -> f64 {
        symplectic_drift(&self.symplectic)
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn step_propagator(h: &SmearedHamiltonian, dt: f64) -> Result<(DMatrix<f64>, f64)> {
    let k = flow_generator(&h.total).scale(dt);
    let knorm = inf_norm(&k);
    if knorm >= STEP_NORM_LIMIT {
        return Err(PftError::StepTooLarge(knorm, STEP_NORM_LIMIT));
    }
    let mut s = cayley(&k).ok_or_else(|| {
        PftError::ExperimentError("Cayley solve failed (singular I - K/2)".into())
    })?;
    let mut drift = symplectic_drift(&s);
    if drift > STEP_DRIFT_TOL {
        s = symplectify(&s);
        drift = symplectic_drift(&s);
    }
    Ok((s, drift))
}

/// One evolution step under a smeared Hamiltonian.
pub fn step(state: &GaussianState, h: &SmearedHamiltonian, dt: f64) -> Result<GaussianState> {
    let (s, _) = step_propagator(h, dt)?;
    let energy = h.total.expectation(&state.mean, &state.covariance);
    let mut out = state.clone();
    out.mean = &s * &state.mean;
    out.covariance = &s * &state.covariance * s.transpose();
    out.phase += (h.anomaly_rate - (energy - state.phase_ref_energy)) * dt;
    Ok(out)
}

/// Evolution diagnostics collected along a foliation.
#[derive(Debug, Clone, Serialize)]
pub struct EvolveDiagnostics {
    pub n_steps: usize,
    pub max_step_symplectic_drift: f64,
    pub final_purity_defect: f64,
    /// (parameter value, generator expectation) at every generator change
    pub energy_trace: Vec<(f64, f64)>,
    /// set when the family is not a proper foliation (non-positive lapse)
    pub non_foliating: bool,
}

impl EvolveDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|_| "{}".into())
    }
}

/// Path-ordered evolution along a foliation. Per-step generators are
/// evaluated on midpoint slices; runs of bitwise-identical generators are
/// composed by binary powering.
pub fn evolve_foliation(
    spec: &LatticeSpec,
    state: &GaussianState,
    fol: &Foliation,
) -> Result<(GaussianState, EvolveDiagnostics)> {
    if state.embedding_fp != fol.leaves[0].fingerprint() {
        return Err(PftError::LeafMismatch);
    }
    let n_steps = fol.n_steps();
    let mut out = state.clone();
    let mut diag = EvolveDiagnostics {
        n_steps,
        max_step_symplectic_drift: 0.0,
        final_purity_defect: 0.0,
        energy_trace: Vec::new(),
        non_foliating: !fol.is_proper(),
    };

    let mut k = 0;
    while k < n_steps {
        let dt = fol.times[k + 1] - fol.times[k];
        let mid = midpoint_embedding(spec, &fol.leaves[k], &fol.leaves[k + 1])?;
        let v = fol.step_deformation(k)?;
        let h = smear_flux(spec, &mid, &v)?;
        // extend the run while the generator repeats bitwise
        let mut run = 1usize;
        while k + run < n_steps {
            let dt2 = fol.times[k + run + 1] - fol.times[k + run];
            if dt2 != dt {
                break;
            }
            let mid2 = midpoint_embedding(spec, &fol.leaves[k + run], &fol.leaves[k + run + 1])?;
            let v2 = fol.step_deformation(k + run)?;
            let h2 = smear_flux(spec, &mid2, &v2)?;
            if h2.total.matrix != h.total.matrix || h2.anomaly_rate != h.anomaly_rate {
                break;
            }
            run += 1;
        }
        let (s_step, drift) = step_propagator(&h, dt)?;
        diag.max_step_symplectic_drift = diag.max_step_symplectic_drift.max(drift);
        let energy = h.total.expectation(&out.mean, &out.covariance);
        diag.energy_trace.push((fol.times[k], energy));
        let s_run = matrix_power(&s_step, run);
        out.mean = &s_run * &out.mean;
        out.covariance = &s_run * &out.covariance * s_run.transpose();
        // the midpoint rule conserves its quadratic generator exactly, so the
        // phase rate is constant across a run
        out.phase += (h.anomaly_rate - (energy - out.phase_ref_energy)) * dt * run as f64;
        k += run;
    }

    out.embedding_fp = fol.leaves[n_steps].fingerprint();
    diag.final_purity_defect = out.purity_defect();
    Ok((out, diag))
}

fn matrix_power(s: &DMatrix<f64>, mut p: usize) -> DMatrix<f64> {
    let mut base = s.clone();
    let mut acc = DMatrix::identity(s.nrows(), s.ncols());
    while p > 0 {
        if p & 1 == 1 {
            acc = &acc * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    acc
}

fn midpoint_embedding(spec: &LatticeSpec, a: &Embedding, b: &Embedding) -> Result<Embedding> {
    let t = a
        .t_coord()
        .iter()
        .zip(b.t_coord())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let x = a
        .x_coord()
        .iter()
        .zip(b.x_coord())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Embedding::new(*spec, t, x)
}

/// Single-shot frame-change map U[e_to - e_from], generated by the flux
/// smeared with the full coordinate difference on `e_from` and exponentiated
/// to the stated tolerance.
pub fn frame_change_unitary(
    spec: &LatticeSpec,
    e_from: &Embedding,
    e_to: &Embedding,
) -> Result<Propagator> {
    let v = DeformationVector::between(e_from, e_to)?;
    let h = smear_flux(spec, e_from, &v)?;
    let k = flow_generator(&h.total);
    let mut s = symplectic_exp(&k).ok_or_else(|| {
        PftError::ExperimentError("symplectic exponential failed".into())
    })?;
    if symplectic_drift(&s) > STEP_DRIFT_TOL {
        s = symplectify(&s);
    }
    Ok(Propagator { symplectic: s, phase_increment: h.anomaly_rate })
}

/// Apply a frame change to a state, advancing the phase by the raw generator
/// expectation plus the c-number increment.
pub fn apply_frame_change(
    spec: &LatticeSpec,
    state: &GaussianState,
    e_from: &Embedding,
    e_to: &Embedding,
) -> Result<GaussianState> {
    if state.embedding_fp != e_from.fingerprint() {
        return Err(PftError::LeafMismatch);
    }
    let v = DeformationVector::between(e_from, e_to)?;
    let h = smear_flux(spec, e_from, &v)?;
    let prop = frame_change_unitary(spec, e_from, e_to)?;
    let gen_expect = h.total.expectation(&state.mean, &state.covariance);
    let mut out = state.clone();
    out.mean = &prop.symplectic * &state.mean;
    out.covariance = &prop.symplectic * &state.covariance * prop.symplectic.transpose();
    out.phase += prop.phase_increment - gen_expect;
    out.embedding_fp = e_to.fingerprint();
    Ok(out)
}

/// Anything that can produce a conditional state on a requested hypersurface.
pub trait ConditionalFamily {
    fn conditional_state(&self, emb: &Embedding) -> Result<GaussianState>;
}

/// Residual of the local normal-deformation law at one site:
/// centered difference of the conditional family under a one-site deformation
/// eps sqrt(gamma) n, compared against the flow of the local flux generator.
///
/// The generator side is assembled from the covariant stress contraction,
/// the family side goes through the lapse/shift frame-change route, so the
/// residual also cross-checks the two assemblies.
pub fn ts_residual(
    spec: &LatticeSpec,
    family: &impl ConditionalFamily,
    emb: &Embedding,
    site: usize,
    eps: f64,
) -> Result<f64> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(PftError::DeformationNotSpacelike(format!(
            "degenerate deformation size eps = {eps}"
        )));
    }
    if site >= spec.n_sites {
        return Err(PftError::DimensionMismatch(format!(
            "site {site} on {} sites",
            spec.n_sites
        )));
    }
    let gamma = emb.induced_metric()?;
    let normal = emb.unit_normal()?;
    let sg = gamma[site].sqrt();
    let mut vt = vec![0.0; spec.n_sites];
    let mut vx = vec![0.0; spec.n_sites];
    vt[site] = sg * normal[site].0;
    vx[site] = sg * normal[site].1;
    let w = DeformationVector::new(vt, vx)?;

    let deform = |s: f64| -> Result<GaussianState> {
        let e = emb.translate(&w, s).map_err(|e| match e {
            PftError::NotSpacelike(m) => PftError::DeformationNotSpacelike(m),
            other => other,
        })?;
        family.conditional_state(&e)
    };
    let plus = deform(eps)?;
    let minus = deform(-eps)?;
    let base = family.conditional_state(emb)?;

    // generator: dx sqrt(gamma) n^mu h_mu at the site, covariant assembly
    let stress = stress_energy_forms(spec, emb)?;
    let mut g = SparseForm::default();
    g.add_assign(&stress[site].h[0], spec.spacing * sg * normal[site].0);
    g.add_assign(&stress[site].h[1], spec.spacing * sg * normal[site].1);
    let gen = flow_generator(&g.to_dense(spec.n_sites));

    let dmean_fd = (&plus.mean - &minus.mean).scale(0.5 / eps);
    let dcov_fd = (&plus.covariance - &minus.covariance).scale(0.5 / eps);
    let dmean_gen = &gen * &base.mean;
    let dcov_gen = &gen * &base.covariance + &base.covariance * gen.transpose();
    let r1 = (dmean_fd - dmean_gen).amax();
    let r2 = (dcov_fd - dcov_gen).amax();
    Ok(r1.max(r2))
}

/// Gaussian expectation of a quadratic form on a state.
pub fn expectation(form: &QuadraticForm, state: &GaussianState) -> f64 {
    form.expectation(&state.mean, &state.covariance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::flat_mode_frame;
    use crate::foliation::build_inertial;
    use crate::lattice::Boundary;

    fn pspec(n: usize, dx: f64, m: f64) -> LatticeSpec {
        LatticeSpec::new(n, dx, m, Boundary::Periodic).unwrap()
    }

    fn flat_vacuum(spec: &LatticeSpec) -> (Embedding, GaussianState) {
        let emb = Embedding::flat(*spec);
        let frame = flat_mode_frame(spec, &emb).unwrap();
        let state = vacuum_state(spec, &frame, &emb).unwrap();
        (emb, state)
    }

    #[test]
    fn vacuum_matches_diagonalization_and_is_pure() {
        let spec = pspec(8, 0.4, 1.0);
        let (_, state) = flat_vacuum(&spec);
        // oracle: Sigma_phiphi = W^{-1/2}/(2 dx), Sigma_pipi = dx W^{1/2}/2
        let n = 8;
        let dx = 0.4;
        let mut w: DMatrix<f64> = DMatrix::zeros(n, n);
        for i in 0..n {
            w[(i, i)] += 1.0 + 2.0 / (dx * dx);
            w[(i, (i + 1) % n)] -= 1.0 / (dx * dx);
            w[((i + 1) % n, i)] -= 1.0 / (dx * dx);
        }
        let eig = w.clone().symmetric_eigen();
        let sqrt_w = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.sqrt()))
            * eig.eigenvectors.transpose();
        let inv_sqrt_w = sqrt_w.clone().try_inverse().unwrap();
        let phiphi = state.covariance.view((0, 0), (n, n));
        let pipi = state.covariance.view((n, n), (n, n));
        assert!((phiphi - inv_sqrt_w.scale(0.5 / dx)).amax() < 1e-10);
        assert!((pipi - sqrt_w.scale(0.5 * dx)).amax() < 1e-10);
        assert!(state.purity_defect() < 1e-10);
    }

    #[test]
    fn single_oscillator_step_rotates_phase_space() {
        let _spec = pspec(4, 1.0, 1.0);
        let n = 4;
        let w = 0.9_f64;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m[(1, 1)] = w;
        m[(n + 1, n + 1)] = w;
        let h = SmearedHamiltonian {
            total: QuadraticForm::new(m.clone(), 0.0).unwrap(),
            perp: QuadraticForm::new(m, 0.0).unwrap(),
            par: QuadraticForm::zeros(n),
            anomaly_rate: 0.0,
            embedding_fp: 0,
        };
        let mut state = GaussianState {
            mean: DVector::zeros(2 * n),
            covariance: DMatrix::identity(2 * n, 2 * n).scale(0.5),
            phase: 0.0,
            embedding_fp: 0,
            phase_ref_energy: 0.0,
        };
        state.mean[1] = 1.0;
        let dt = 1e-3;
        let mut cur = state.clone();
        for _ in 0..200 {
            cur = step(&cur, &h, dt).unwrap();
        }
        let theta = w * 0.2;
        assert!((cur.mean[1] - theta.cos()).abs() < 5e-8);
        assert!((cur.mean[n + 1] + theta.sin()).abs() < 5e-8);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let spec = pspec(8, 1.0, 1.0);
        let (_, state) = flat_vacuum(&spec);
        let h = SmearedHamiltonian {
            total: QuadraticForm::zeros(8),
            perp: QuadraticForm::zeros(8),
            par: QuadraticForm::zeros(8),
            anomaly_rate: 0.0,
            embedding_fp: 0,
        };
        let out = step(&state, &h, 0.1).unwrap();
        assert_eq!((&out.mean - &state.mean).amax(), 0.0);
        assert_eq!((&out.covariance - &state.covariance).amax(), 0.0);
    }

    #[test]
    fn vacuum_is_stationary_under_inertial_evolution() {
        let spec = pspec(16, 0.25, 1.0);
        let (_, state) = flat_vacuum(&spec);
        let fol = build_inertial(&spec, 0.0, (0.0, 0.5), 100).unwrap();
        let (out, diag) = evolve_foliation(&spec, &state, &fol).unwrap();
        assert!((&out.covariance - &state.covariance).amax() < 1e-12);
        assert!((&out.mean - &state.mean).amax() < 1e-14);
        assert!(out.phase.abs() < 1e-10, "vacuum phase rate subtracted");
        assert!(diag.max_step_symplectic_drift < 1e-12);
        assert!(!diag.non_foliating);
    }

    #[test]
    fn coherent_mean_follows_classical_oracle() {
        let spec = pspec(16, 0.5, 1.0);
        let (emb, vac) = flat_vacuum(&spec);
        let n = 16;
        let c = spec.center_x();
        let mut mean = DVector::zeros(2 * n);
        for i in 0..n {
            let u = (spec.site_x(i) - c) / 1.5;
            mean[i] = (-u * u).exp();
        }
        let state = coherent_state(&vac, mean.clone()).unwrap();
        let t_final = 0.5;
        let fol = build_inertial(&spec, 0.0, (0.0, t_final), 100).unwrap();
        let fol_shifted = {
            // state lives on the flat slice; reuse same first leaf
            assert_eq!(fol.leaves[0].fingerprint(), emb.fingerprint());
            fol
        };
        let (out, _) = evolve_foliation(&spec, &state, &fol_shifted).unwrap();
        // independent leapfrog oracle at 10x finer step
        let (phi, pi) = crate::oracles::leapfrog_classical(
            &spec,
            &mean.rows(0, n).into_owned(),
            &mean.rows(n, n).into_owned(),
            t_final,
            5e-4,
        );
        for i in 0..n {
            assert!((out.mean[i] - phi[i]).abs() < 2e-4, "site {i}");
            assert!((out.mean[n + i] - pi[i]).abs() < 2e-4, "site {i}");
        }
    }

    #[test]
    fn single_step_foliation_equals_step() {
        let spec = pspec(8, 0.4, 1.0);
        let (emb, state) = flat_vacuum(&spec);
        let fol = build_inertial(&spec, 0.0, (0.0, 0.01), 1).unwrap();
        let (out, _) = evolve_foliation(&spec, &state, &fol).unwrap();
        let mid = midpoint_embedding(&spec, &fol.leaves[0], &fol.leaves[1]).unwrap();
        let v = fol.step_deformation(0).unwrap();
        let h = smear_flux(&spec, &mid, &v).unwrap();
        let direct = step(&state, &h, 0.01).unwrap();
        assert_eq!((&out.mean - &direct.mean).amax(), 0.0);
        assert_eq!((&out.covariance - &direct.covariance).amax(), 0.0);
        let _ = emb;
    }

    #[test]
    fn leaf_mismatch_detected() {
        let spec = pspec(8, 0.4, 1.0);
        let (_, state) = flat_vacuum(&spec);
        let fol = build_inertial(&spec, 0.0, (0.5, 1.0), 2).unwrap();
        assert!(matches!(
            evolve_foliation(&spec, &state, &fol),
            Err(PftError::LeafMismatch)
        ));
    }

    #[test]
    fn step_too_large_rejected() {
        let spec = pspec(8, 0.4, 1.0);
        let (emb, state) = flat_vacuum(&spec);
        let v = DeformationVector::constant(8, 1.0, 0.0);
        let h = smear_flux(&spec, &emb, &v).unwrap();
        assert!(matches!(
            step(&state, &h, 10.0),
            Err(PftError::StepTooLarge(_, _))
        ));
    }

    #[test]
    fn frame_change_identity_and_symplecticity() {
        let spec = pspec(12, 0.3, 1.0);
        let emb = Embedding::flat(spec);
        let p = frame_change_unitary(&spec, &emb, &emb).unwrap();
        assert!((p.symplectic.clone() - DMatrix::identity(24, 24)).amax() < 1e-14);
        // nontrivial change stays symplectic
        let v = DeformationVector::constant(12, 1.0, 0.0);
        let e2 = emb.translate(&v, 0.37).unwrap();
        let p2 = frame_change_unitary(&spec, &emb, &e2).unwrap();
        assert!(p2.drift() < 1e-10);
    }

    #[test]
    fn dual_path_time_translation_agrees() {
        // flat -> time-translated flat: single-shot equals the path-ordered
        // product over the inertial foliation
        let spec = pspec(16, 0.25, 1.0);
        let (emb, state) = flat_vacuum(&spec);
        let n_steps = 200;
        let tau = 0.4;
        let fol = build_inertial(&spec, 0.0, (0.0, tau), n_steps).unwrap();
        let (path, _) = evolve_foliation(&spec, &state, &fol).unwrap();
        let single = apply_frame_change(&spec, &state, &emb, &fol.leaves[n_steps]).unwrap();
        assert!((&path.covariance - &single.covariance).amax() < 1e-6);
        assert!((&path.mean - &single.mean).amax() < 1e-8);
    }

    #[test]
    fn ts_residual_orders_and_degenerate_eps() {
        struct Fam {
            spec: LatticeSpec,
            anchor: Embedding,
            state: GaussianState,
        }
        impl ConditionalFamily for Fam {
            fn conditional_state(&self, emb: &Embedding) -> Result<GaussianState> {
                apply_frame_change(&self.spec, &self.state, &self.anchor, emb)
            }
        }
        let spec = pspec(12, 0.4, 1.0);
        let (emb, state) = flat_vacuum(&spec);
        let fam = Fam { spec, anchor: emb.clone(), state };
        let mut errs = Vec::new();
        let eps_list = [0.08, 0.04, 0.02];
        for &e in &eps_list {
            errs.push(ts_residual(&spec, &fam, &emb, 5, e).unwrap());
        }
        let order = crate::numeric::fit_order(&eps_list, &errs);
        assert!(order >= 1.9, "order {order}, errs {errs:?}");
        assert!(matches!(
            ts_residual(&spec, &fam, &emb, 5, 0.0),
            Err(PftError::DeformationNotSpacelike(_))
        ));
    }

    #[test]
    fn energy_conserved_on_static_foliation() {
        let spec = pspec(16, 0.25, 1.0);
        let (emb, vac) = flat_vacuum(&spec);
        let mut mean = DVector::zeros(32);
        mean[3] = 0.7;
        mean[20] = -0.2;
        let state = coherent_state(&vac, mean).unwrap();
        let v = DeformationVector::constant(16, 1.0, 0.0);
        let h = smear_flux(&spec, &emb, &v).unwrap();
        let e0 = h.total.expectation(&state.mean, &state.covariance);
        let fol = build_inertial(&spec, 0.0, (0.0, 1.0), 1000).unwrap();
        let (out, _) = evolve_foliation(&spec, &state, &fol).unwrap();
        let e1 = h.total.expectation(&out.mean, &out.covariance);
        assert!((e1 - e0).abs() < 1e-10, "dE = {:.3e}", e1 - e0);
    }
}
