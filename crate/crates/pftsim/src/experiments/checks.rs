//! The `check` subcommand: a fast cross-module invariant battery on small
//! lattices, reported with magnitudes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bogoliubov::bogoliubov_between;
use crate::config::CheckResult;
use crate::embedding_geometry::{DeformationVector, Embedding};
use crate::error::Result;
use crate::evolve::{apply_frame_change, step, vacuum_state};
use crate::field_model::{
    commutator_form, flat_mode_frame, flat_mode_frame_with_mass, kg_inner_product,
    smeared_flux_form, ModePair,
};
use crate::foliation::{build_inertial, decompose_deformation};
use crate::hamiltonian::{integrated_anomaly, smear_flux};
use crate::lattice::{Boundary, LatticeSpec};
use crate::numeric::symplectic_drift;

/// Run the whole invariant battery with a fixed seed.
pub fn run_check_battery(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let spec = LatticeSpec::new(16, 0.3, 1.0, Boundary::Periodic)?;
    let emb = Embedding::flat(spec);

    // form symmetry of a generic smeared flux
    let v = DeformationVector::new(
        (0..16).map(|_| rng.gen::<f64>() - 0.2).collect(),
        (0..16).map(|_| 0.3 * (rng.gen::<f64>() - 0.5)).collect(),
    )?;
    let h = smear_flux(&spec, &emb, &v)?;
    checks.push(CheckResult::new(
        "quadratic_form_symmetry",
        h.total.max_asymmetry() / h.total.matrix.amax().max(1.0),
        1e-14,
    ));
    checks.push(CheckResult::new(
        "perp_par_split",
        (&h.perp.matrix + &h.par.matrix - &h.total.matrix).amax(),
        1e-13,
    ));
    checks.push(CheckResult::new(
        "canonical_vs_covariant_assembly",
        (&smeared_flux_form(&spec, &emb, &v)?.matrix - &h.total.matrix).amax(),
        1e-12,
    ));

    // KG product symmetries on random pairs
    let mut kg_defect: f64 = 0.0;
    for _ in 0..10 {
        let pair = |rng: &mut ChaCha8Rng| ModePair {
            u: DVector::from_fn(16, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            }),
            udot: DVector::from_fn(16, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            }),
        };
        let a = pair(&mut rng);
        let b = pair(&mut rng);
        let ab = kg_inner_product(&a, &b, &emb)?;
        let ba = kg_inner_product(&b, &a, &emb)?;
        let cc = kg_inner_product(&a.conj(), &b.conj(), &emb)?;
        kg_defect = kg_defect.max((ab - ba.conj()).norm()).max((cc + ab.conj()).norm());
    }
    checks.push(CheckResult::new("kg_product_symmetries", kg_defect, 1e-12));

    // mode frame orthonormality
    let frame = flat_mode_frame(&spec, &emb)?;
    checks.push(CheckResult::new(
        "mode_frame_orthonormality",
        frame.orthonormality_defect(&emb)?,
        1e-10,
    ));

    // translate: eigenvalue shift and bitwise group law
    let mut translate_defect = 0.0;
    for _ in 0..20 {
        let vv = DeformationVector::new(
            (0..16).map(|_| 0.05 * (rng.gen::<f64>() - 0.5)).collect(),
            (0..16).map(|_| 0.02 * (rng.gen::<f64>() - 0.5)).collect(),
        )?;
        let (s1, s2) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let one = emb.translate(&vv, s1).and_then(|e| e.translate(&vv, s2));
        let two = emb.translate(&vv, s1 + s2);
        match (one, two) {
            (Ok(a), Ok(b)) => {
                if a.t_coord() != b.t_coord() || a.x_coord() != b.x_coord() {
                    translate_defect = 1.0;
                }
            }
            (Err(_), Err(_)) => {} // both reject consistently
            _ => translate_defect = 1.0,
        }
    }
    checks.push(CheckResult::new("translate_group_law_bitwise", translate_defect, 0.0));

    // unit normal properties on a wiggly slice
    let fspec = LatticeSpec::new(24, 0.25, 1.0, Boundary::FixedZero)?;
    let wiggle = Embedding::from_profile(fspec, |x| (0.1 * (0.8 * x).sin(), x))?;
    let mut normal_defect: f64 = 0.0;
    let nrm = wiggle.unit_normal()?;
    for i in 0..24 {
        let (dt, dx) = wiggle.d1(i);
        let (n0, n1) = nrm[i];
        normal_defect = normal_defect
            .max((-n0 * n0 + n1 * n1 + 1.0).abs())
            .max((-n0 * dt + n1 * dx).abs());
    }
    checks.push(CheckResult::new("unit_normal_defect", normal_defect, 1e-12));

    // lapse/shift reconstruction on an inertial family
    let fol = build_inertial(&spec, 0.0, (0.0, 0.2), 4)?;
    let dec = decompose_deformation(&fol, 1)?;
    let u = fol.step_deformation(1)?;
    let nrm2 = fol.leaves[1].unit_normal()?;
    let mut rec_defect: f64 = 0.0;
    for i in 0..16 {
        let (dt, dx) = fol.leaves[1].d1(i);
        rec_defect = rec_defect
            .max((dec[i].0 * nrm2[i].0 + dec[i].1 * dt - u.t_comp[i]).abs())
            .max((dec[i].0 * nrm2[i].1 + dec[i].1 * dx - u.x_comp[i]).abs());
    }
    checks.push(CheckResult::new("lapse_shift_reconstruction", rec_defect, 1e-12));

    // vacuum purity and step symplecticity
    let vac = vacuum_state(&spec, &frame, &emb)?;
    checks.push(CheckResult::new("vacuum_purity", vac.purity_defect(), 1e-8));
    let hn = smear_flux(&spec, &emb, &DeformationVector::constant(16, 1.0, 0.0))?;
    let stepped = step(&vac, &hn, 1e-3)?;
    checks.push(CheckResult::new(
        "vacuum_stationarity",
        (&stepped.covariance - &vac.covariance).amax(),
        1e-12,
    ));
    let prop = crate::evolve::frame_change_unitary(&spec, &emb, &fol.leaves[4])?;
    checks.push(CheckResult::new("propagator_symplecticity", symplectic_drift(&prop.symplectic), 1e-10));

    // microcausality sample
    let mut micro: f64 = 0.0;
    for _ in 0..20 {
        let a0 = rng.gen_range(0..6);
        let b0 = a0 + rng.gen_range(3..6);
        let mut va = vec![0.0; 16];
        va[a0] = rng.gen::<f64>() + 0.1;
        let mut vb = vec![0.0; 16];
        vb[b0] = rng.gen::<f64>() + 0.1;
        let fa = smeared_flux_form(&spec, &emb, &DeformationVector::new(va, vec![0.0; 16])?)?;
        let fb = smeared_flux_form(&spec, &emb, &DeformationVector::new(vec![0.0; 16], vb)?)?;
        micro = micro.max(commutator_form(&fa, &fb)?.matrix.amax());
    }
    checks.push(CheckResult::new("microcausality_sample", micro, 0.0));

    // anomaly: flat zero and telescoping on a periodic wiggle
    let mspec = LatticeSpec::new(24, 0.25, 0.0, Boundary::Periodic)?;
    let membr = Embedding::flat(mspec);
    let a_flat = crate::hamiltonian::anomaly_potential(&mspec, &membr)?;
    checks.push(CheckResult::new(
        "anomaly_flat_zero",
        a_flat.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max),
        0.0,
    ));
    let l = mspec.total_length();
    let wavy = Embedding::from_profile(mspec, |x| {
        (0.05 * (2.0 * std::f64::consts::PI * x / l).sin(), x)
    })?;
    let total = integrated_anomaly(&mspec, &wavy, &DeformationVector::constant(24, 1.0, 0.0))?;
    checks.push(CheckResult::new("anomaly_telescoping", total.abs(), 1e-12));

    // quench canonical relations
    let f2 = flat_mode_frame_with_mass(&spec, &emb, 2.0)?;
    let map = bogoliubov_between(&f2, &frame, &emb)?;
    let rows: Vec<usize> = (0..16).collect();
    let (d1, d2) = map.canonical_defects_on(&rows);
    checks.push(CheckResult::new("bogoliubov_canonical_relations", d1.max(d2), 1e-8));

    // frame-change consistency: two gauge-related evaluations of a vacuum family
    let v2 = DeformationVector::constant(16, 1.0, 0.0);
    let e_mid = emb.translate(&v2, 0.1)?;
    let e_far = emb.translate(&v2, 0.3)?;
    let direct = apply_frame_change(&spec, &vac, &emb, &e_far)?;
    let mid = apply_frame_change(&spec, &vac, &emb, &e_mid)?;
    let via = apply_frame_change(&spec, &mid, &e_mid, &e_far)?;
    checks.push(CheckResult::new(
        "frame_change_composition",
        (&direct.covariance - &via.covariance).amax(),
        1e-9,
    ));

    // trinity sample
    let fam = crate::relational::PhysicalFamily::new(spec, emb.clone(), vac.clone())?;
    let mut trinity: f64 = 0.0;
    for _ in 0..3 {
        let mut m = DMatrix::from_fn(32, 32, |_, _| rng.gen::<f64>() - 0.5);
        m = (&m + m.transpose()).scale(0.5);
        let a0 = crate::field_model::QuadraticForm::new(m, 0.0)?;
        let psi_q = crate::relational::reduce(&fam, &e_far)?;
        let schro = a0.expectation(&psi_q.mean, &psi_q.covariance);
        let a_h = crate::relational::heisenberg_observable(&spec, &a0, &e_far, &emb)?;
        let heis = a_h.expectation(&vac.mean, &vac.covariance);
        trinity = trinity.max((schro - heis).abs());
    }
    checks.push(CheckResult::new("trinity_sample", trinity, 1e-10));

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let checks = run_check_battery(42).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: {:.3e} > {:.3e}", c.name, c.magnitude, c.threshold);
        }
    }
}
