//! Quantum-reference-frame structure over finite embedding ensembles: the
//! change-of-frame map, the nonlocal transformed number operator, and the
//! weighted particle-number expectation.
//!
//! The continuum superposition over frame configurations is replaced by a
//! finite weighted family. Branches belonging to distinct members never
//! interfere in number expectations (frame configurations are orthogonal),
//! so expectations reduce to weighted sums which are checked against the
//! operator-conjugation route.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bogoliubov::{bogoliubov_between, BogoliubovMap};
use crate::embedding_geometry::Embedding;
use crate::error::{PftError, Result};
use crate::evolve::{apply_frame_change, frame_change_unitary, GaussianState, Propagator};
use crate::field_model::{flat_mode_frame_with_mass, ModeFrame, QuadraticForm};
use crate::lattice::LatticeSpec;

/// One frame configuration: a hypersurface, a complex amplitude, and the
/// mode mass of the frame carried on it (defaults to the lattice mass).
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub emb: Embedding,
    pub amplitude: Complex64,
    pub mode_mass: Option<f64>,
}

/// Finite weighted family of frame configurations modeling a state of the
/// embedding degrees of freedom.
#[derive(Debug, Clone)]
pub struct EmbeddingEnsemble {
    pub members: Vec<EnsembleMember>,
}

impl EmbeddingEnsemble {
    pub fn new(members: Vec<EnsembleMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(PftError::ConfigError("empty ensemble".into()));
        }
        let norm: f64 = members.iter().map(|m| m.amplitude.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(PftError::ConfigError(format!(
                "ensemble weights sum to {norm}, expected 1"
            )));
        }
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let same_geom =
                    members[i].emb.max_coordinate_distance(&members[j].emb) == 0.0;
                let same_mass = members[i].mode_mass == members[j].mode_mass;
                if same_geom && same_mass {
                    return Err(PftError::ConfigError(format!(
                        "ensemble members {i} and {j} are identical frames"
                    )));
                }
            }
        }
        Ok(Self { members })
    }

    /// Build from (weight, member) pairs, normalizing the weights.
    pub fn from_weights(members: Vec<(f64, Embedding, Option<f64>)>) -> Result<Self> {
        let total: f64 = members.iter().map(|(w, _, _)| w).sum();
        if !(total > 0.0) {
            return Err(PftError::ConfigError("non-positive total weight".into()));
        }
        EmbeddingEnsemble::new(
            members
                .into_iter()
                .map(|(w, emb, mass)| EnsembleMember {
                    emb,
                    amplitude: Complex64::new((w / total).sqrt(), 0.0),
                    mode_mass: mass,
                })
                .collect(),
        )
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.amplitude.norm_sqr()).collect()
    }
}

/// Conditional state dressed with the frame branch it belongs to.
#[derive(Debug, Clone)]
pub struct RelationalBranchState {
    pub branches: Vec<(Embedding, GaussianState, Complex64)>,
}

impl RelationalBranchState {
    /// Max covariance distance between any two branches: a witness that the
    /// output is genuinely entangled with the frame configuration.
    pub fn branch_distinguishability(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.branches.len() {
            for j in (i + 1)..self.branches.len() {
                let d = (&self.branches[i].1.covariance - &self.branches[j].1.covariance).amax();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Transform a conditional state on `from` into the branch decomposition
/// relative to the ensemble: branch q carries amplitude psi_q and the
/// frame-changed state on member q's hypersurface.
pub fn change_frame(
    spec: &LatticeSpec,
    conditional: &GaussianState,
    from: &Embedding,
    ensemble: &EmbeddingEnsemble,
) -> Result<RelationalBranchState> {
    let mut branches = Vec::with_capacity(ensemble.members.len());
    for m in &ensemble.members {
        let state = if m.emb.fingerprint() == from.fingerprint() {
            conditional.clone()
        } else {
            apply_frame_change(spec, conditional, from, &m.emb)?
        };
        branches.push((m.emb.clone(), state, m.amplitude));
    }
    Ok(RelationalBranchState { branches })
}

/// The mode frame carried by one ensemble member.
pub fn member_frame(spec: &LatticeSpec, member: &EnsembleMember) -> Result<ModeFrame> {
    flat_mode_frame_with_mass(spec, &member.emb, member.mode_mass.unwrap_or(spec.mass))
}

/// Bogoliubov map from the reference frame (modes `frame_b` on `emb_b`) to
/// one member's frame, computed on the member's slice.
pub fn member_bogoliubov(
    spec: &LatticeSpec,
    frame_b: &ModeFrame,
    emb_b: &Embedding,
    member: &EnsembleMember,
) -> Result<BogoliubovMap> {
    let target = member_frame(spec, member)?;
    let from_frame = if member.emb.fingerprint() == emb_b.fingerprint() {
        frame_b.clone()
    } else {
        let prop: Propagator = frame_change_unitary(spec, emb_b, &member.emb)?;
        frame_b.transported(&prop.symplectic, emb_b, &member.emb)?
    };
    bogoliubov_between(&target, &from_frame, &member.emb)
}

/// Weighted particle-number expectation of member-frame mode k in the
/// reference vacuum: sum_q |psi_q|^2 sum_j |beta_jk(q)|^2.
pub fn smeared_particle_number(
    spec: &LatticeSpec,
    ensemble: &EmbeddingEnsemble,
    frame_b: &ModeFrame,
    emb_b: &Embedding,
    k: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for m in &ensemble.members {
        let map = member_bogoliubov(spec, frame_b, emb_b, m)?;
        acc += m.amplitude.norm_sqr() * map.expected_number(k)?;
    }
    Ok(acc)
}

/// Number operator of one frame mode as a phase-space quadratic form:
/// N = (1/2) z^T (conj(a) a^T + a conj(a)^T) z - 1/2 with a = -i Omega z_k.
pub fn number_operator_form(
    frame: &ModeFrame,
    emb: &Embedding,
    k: usize,
) -> Result<QuadraticForm> {
    if k >= frame.len() {
        return Err(PftError::ModeOutOfRange(k, frame.len()));
    }
    let z = frame.modes[k].phase_vector(emb)?;
    let n2 = z.len();
    let half = n2 / 2;
    // a = -i Omega z
    let mut a: DVector<Complex64> = DVector::zeros(n2);
    for i in 0..half {
        a[i] = -Complex64::i() * z[half + i];
        a[half + i] = Complex64::i() * z[i];
    }
    let mut m = DMatrix::zeros(n2, n2);
    for i in 0..n2 {
        for j in 0..n2 {
            m[(i, j)] = (a[i].conj() * a[j] + a[i] * a[j].conj()).re;
        }
    }
    QuadraticForm::new(m, -0.5)
}

/// Expectation of the frame-transformed (nonlocal) number operator in the
/// joint state "ensemble x reference vacuum", evaluated by explicit block
/// assembly: each member contributes its weight times the Gaussian moment
/// expectation of its own number form in the frame-changed vacuum.
pub fn transformed_number_expectation(
    spec: &LatticeSpec,
    ensemble: &EmbeddingEnsemble,
    frame_b: &ModeFrame,
    emb_b: &Embedding,
    vacuum_b: &GaussianState,
    k: usize,
) -> Result<f64> {
    if frame_b.embedding_fp != emb_b.fingerprint()
        || vacuum_b.embedding_fp != emb_b.fingerprint()
    {
        return Err(PftError::FrameMismatch(
            "reference frame and vacuum must live on the reference slice".into(),
        ));
    }
    let mut acc = 0.0;
    for m in &ensemble.members {
        let branch = if m.emb.fingerprint() == emb_b.fingerprint() {
            vacuum_b.clone()
        } else {
            apply_frame_change(spec, vacuum_b, emb_b, &m.emb)?
        };
        let target = member_frame(spec, m)?;
        let n_form = number_operator_form(&target, &m.emb, k)?;
        acc += m.amplitude.norm_sqr() * n_form.expectation(&branch.mean, &branch.covariance);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::quench_beta_squared;
    use crate::embedding_geometry::DeformationVector;
    use crate::evolve::vacuum_state;
    use crate::field_model::{dispersion, flat_mode_frame};
    use crate::lattice::Boundary;

    fn setup(n: usize, dx: f64, m: f64) -> (LatticeSpec, Embedding, ModeFrame, GaussianState) {
        let spec = LatticeSpec::new(n, dx, m, Boundary::Periodic).unwrap();
        let emb = Embedding::flat(spec);
        let frame = flat_mode_frame(&spec, &emb).unwrap();
        let vac = vacuum_state(&spec, &frame, &emb).unwrap();
        (spec, emb, frame, vac)
    }

    #[test]
    fn ensemble_validation() {
        let (spec, emb, _, _) = setup(8, 0.4, 1.0);
        let _ = spec;
        let bad = EmbeddingEnsemble::new(vec![EnsembleMember {
            emb: emb.clone(),
            amplitude: Complex64::new(0.5, 0.0),
            mode_mass: None,
        }]);
        assert!(bad.is_err(), "unnormalized");
        let dup = EmbeddingEnsemble::new(vec![
            EnsembleMember {
                emb: emb.clone(),
                amplitude: Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                mode_mass: None,
            },
            EnsembleMember {
                emb: emb.clone(),
                amplitude: Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                mode_mass: None,
            },
        ]);
        assert!(dup.is_err(), "identical frames");
    }

    #[test]
    fn single_member_change_frame_is_plain_map() {
        let (spec, emb, _, vac) = setup(8, 0.4, 1.0);
        let v = DeformationVector::constant(8, 1.0, 0.0);
        let e2 = emb.translate(&v, 0.3).unwrap();
        let ens = EmbeddingEnsemble::new(vec![EnsembleMember {
            emb: e2.clone(),
            amplitude: Complex64::new(1.0, 0.0),
            mode_mass: None,
        }])
        .unwrap();
        let out = change_frame(&spec, &vac, &emb, &ens).unwrap();
        assert_eq!(out.branches.len(), 1);
        let direct = apply_frame_change(&spec, &vac, &emb, &e2).unwrap();
        assert_eq!(
            (&out.branches[0].1.covariance - &direct.covariance).amax(),
            0.0
        );
    }

    #[test]
    fn time_translated_vacuum_branches_differ_only_in_phase() {
        let (spec, emb, _, vac) = setup(12, 0.3, 1.0);
        let v = DeformationVector::constant(12, 1.0, 0.0);
        let e1 = emb.translate(&v, 0.2).unwrap();
        let e2 = emb.translate(&v, 0.5).unwrap();
        let ens = EmbeddingEnsemble::from_weights(vec![
            (0.5, e1, None),
            (0.5, e2, None),
        ])
        .unwrap();
        let out = change_frame(&spec, &vac, &emb, &ens).unwrap();
        let d = (&out.branches[0].1.covariance - &out.branches[1].1.covariance).amax();
        assert!(d < 1e-9, "vacuum covariance is stationary, d = {d:.3e}");
        let dphase = (out.branches[0].1.phase - out.branches[1].1.phase).abs();
        assert!(dphase > 1e-6, "branch phases must differ, got {dphase:.3e}");
    }

    #[test]
    fn distinct_geometry_branches_are_distinguishable() {
        let (spec, emb, _, vac) = setup(16, 0.4, 1.0);
        let c = spec.center_x();
        let bump = Embedding::from_profile(spec, |x| {
            let u = (x - c) / 1.2;
            (0.15 * (-u * u).exp(), x)
        })
        .unwrap();
        let v = DeformationVector::constant(16, 1.0, 0.0);
        let flat2 = emb.translate(&v, 0.1).unwrap();
        let ens = EmbeddingEnsemble::from_weights(vec![
            (0.5, flat2, None),
            (0.5, bump, None),
        ])
        .unwrap();
        let out = change_frame(&spec, &vac, &emb, &ens).unwrap();
        assert!(out.branch_distinguishability() > 1e-6);
    }

    #[test]
    fn delta_ensemble_recovers_single_frame_values() {
        let (spec, emb, frame, _) = setup(12, 0.3, 1.0);
        // delta at the reference frame itself: zero particles
        let ens_same = EmbeddingEnsemble::new(vec![EnsembleMember {
            emb: emb.clone(),
            amplitude: Complex64::new(1.0, 0.0),
            mode_mass: Some(1.0),
        }])
        .unwrap();
        // the member frame equals the reference frame: identity map
        for k in 0..6 {
            let n = smeared_particle_number(&spec, &ens_same, &frame, &emb, k).unwrap();
            assert!(n.abs() < 1e-20, "mode {k}: {n}");
        }
        // delta at a quenched frame: the classical quench value
        let ens_q = EmbeddingEnsemble::new(vec![EnsembleMember {
            emb: emb.clone(),
            amplitude: Complex64::new(1.0, 0.0),
            mode_mass: Some(2.5),
        }])
        .unwrap();
        for (k, label) in frame.labels.iter().enumerate() {
            let w1 = dispersion(1.0, 1.0, spec.spacing, *label);
            let w2 = dispersion(2.5, 1.0, spec.spacing, *label);
            let got = smeared_particle_number(&spec, &ens_q, &frame, &emb, k).unwrap();
            assert!((got - quench_beta_squared(w1, w2)).abs() < 1e-12, "mode {k}");
        }
    }

    #[test]
    fn two_member_weighting_is_linear() {
        let (spec, emb, frame, _) = setup(12, 0.3, 1.0);
        let p: f64 = 0.3;
        let mk = |mass: f64| EnsembleMember {
            emb: emb.clone(),
            amplitude: Complex64::new(1.0, 0.0),
            mode_mass: Some(mass),
        };
        let k = 2;
        let n1 = {
            let e = EmbeddingEnsemble::new(vec![mk(1.6)]).unwrap();
            smeared_particle_number(&spec, &e, &frame, &emb, k).unwrap()
        };
        let n2 = {
            let e = EmbeddingEnsemble::new(vec![mk(2.2)]).unwrap();
            smeared_particle_number(&spec, &e, &frame, &emb, k).unwrap()
        };
        let mut m1 = mk(1.6);
        m1.amplitude = Complex64::new(p.sqrt(), 0.0);
        let mut m2 = mk(2.2);
        m2.amplitude = Complex64::new((1.0 - p).sqrt(), 0.0);
        let ens = EmbeddingEnsemble::new(vec![m1, m2]).unwrap();
        let n = smeared_particle_number(&spec, &ens, &frame, &emb, k).unwrap();
        assert!((n - (p * n1 + (1.0 - p) * n2)).abs() < 1e-13);
    }

    #[test]
    fn operator_route_equals_weighted_route() {
        let (spec, emb, frame, vac) = setup(12, 0.3, 1.0);
        let v = DeformationVector::constant(12, 1.0, 0.0);
        let e2 = emb.translate(&v, 0.25).unwrap();
        let ens = EmbeddingEnsemble::from_weights(vec![
            (0.4, emb.clone(), Some(1.8)),
            (0.35, e2, Some(1.3)),
            (0.25, emb.clone(), Some(2.1)),
        ])
        .unwrap();
        for k in [0usize, 1, 3, 5] {
            let smeared = smeared_particle_number(&spec, &ens, &frame, &emb, k).unwrap();
            let block =
                transformed_number_expectation(&spec, &ens, &frame, &emb, &vac, k).unwrap();
            assert!(
                (smeared - block).abs() < 1e-12,
                "mode {k}: {smeared} vs {block}"
            );
            assert!(smeared >= 0.0);
        }
    }

    #[test]
    fn number_form_vanishes_on_own_vacuum() {
        let (spec, emb, frame, vac) = setup(8, 0.4, 1.0);
        let _ = spec;
        for k in 0..8 {
            let n_form = number_operator_form(&frame, &emb, k).unwrap();
            let e = n_form.expectation(&vac.mean, &vac.covariance);
            assert!(e.abs() < 1e-12, "mode {k}: {e}");
        }
    }
}
