//! One-parameter families of spacelike embeddings with per-step lapse/shift
//! decomposition.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::embedding_geometry::{DeformationVector, Embedding};
use crate::error::{PftError, Result};
use crate::lattice::LatticeSpec;

/// Interpolation schedule between two endpoint embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Schedule {
    /// straight-line interpolation of the coordinate functions
    Linear,
    /// 3s^2 - 2s^3 easing, same path as linear but reparameterized
    Smoothstep,
    /// linear path plus a transverse time-bump that vanishes at both
    /// endpoints, producing a genuinely different intermediate foliation
    Bump { amplitude: f64 },
}

/// Ordered family of spacelike leaves with strictly increasing parameter
/// values.
#[derive(Debug, Clone)]
pub struct Foliation {
    pub leaves: Vec<Embedding>,
    pub times: Vec<f64>,
}

impl Foliation {
    pub fn new(leaves: Vec<Embedding>, times: Vec<f64>) -> Result<Self> {
        if leaves.len() != times.len() || leaves.len() < 2 {
            return Err(PftError::NonTimelikeDeformation(format!(
                "need >= 2 leaves with matching times, got {} / {}",
                leaves.len(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PftError::NonTimelikeDeformation(
                "parameter values not strictly increasing".into(),
            ));
        }
        let fol = Self { leaves, times };
        fol.validate_deformations()?;
        Ok(fol)
    }

    pub fn n_steps(&self) -> usize {
        self.leaves.len() - 1
    }

    /// Discrete deformation vector (X_{k+1} - X_k) / dt of step k.
    pub fn step_deformation(&self, k: usize) -> Result<DeformationVector> {
        if k >= self.n_steps() {
            return Err(PftError::DimensionMismatch(format!(
                "step {k} of {} steps",
                self.n_steps()
            )));
        }
        let dt = self.times[k + 1] - self.times[k];
        let d = DeformationVector::between(&self.leaves[k], &self.leaves[k + 1])?;
        DeformationVector::new(
            d.t_comp.iter().map(|v| v / dt).collect(),
            d.x_comp.iter().map(|v| v / dt).collect(),
        )
    }

    // Every nonzero per-step deformation must be future-timelike. Exactly
    // vanishing deformations (coincident leaves) are allowed and evolve as
    // the identity.
    fn validate_deformations(&self) -> Result<()> {
        for k in 0..self.n_steps() {
            let u = self.step_deformation(k)?;
            for i in 0..u.len() {
                let (ut, ux) = (u.t_comp[i], u.x_comp[i]);
                if ut == 0.0 && ux == 0.0 {
                    continue;
                }
                if ut <= 0.0 || ut * ut - ux * ux <= 0.0 {
                    return Err(PftError::NonTimelikeDeformation(format!(
                        "step {k}, site {i}: u = ({ut:.3e}, {ux:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// A proper foliation has strictly positive lapse everywhere; families
    /// violating this are still evolvable but get flagged in diagnostics.
    pub fn is_proper(&self) -> bool {
        (0..self.n_steps()).all(|k| decompose_deformation(self, k).is_ok())
    }

    /// CSV export (step, site, T, X, N, N^x). The lapse/shift columns hold
    /// the forward-step decomposition; the final leaf carries zeros.
    pub fn export_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "step,site,T,X,N,Nx")?;
        for k in 0..self.leaves.len() {
            let dec = if k < self.n_steps() {
                Some(decompose_deformation(self, k)?)
            } else {
                None
            };
            let leaf = &self.leaves[k];
            for i in 0..leaf.len() {
                let (n, nx) = dec.as_ref().map_or((0.0, 0.0), |d| d[i]);
                writeln!(
                    w,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    k,
                    i,
                    leaf.t_coord()[i],
                    leaf.x_coord()[i],
                    n,
                    nx
                )?;
            }
        }
        Ok(())
    }
}

/// Inertial foliation: leaves X(0) + s v with v = (cosh w, -sinh w), starting
/// from the boosted flat slice of rapidity w.
pub fn build_inertial(
    spec: &LatticeSpec,
    rapidity: f64,
    t_range: (f64, f64),
    n_steps: usize,
) -> Result<Foliation> {
    if n_steps == 0 {
        return Err(PftError::NonTimelikeDeformation("n_steps = 0".into()));
    }
    let seed = Embedding::flat(*spec).boost(rapidity)?;
    let v = DeformationVector::constant(spec.n_sites, rapidity.cosh(), -rapidity.sinh());
    let (t0, t1) = t_range;
    let dt = (t1 - t0) / n_steps as f64;
    let mut leaves = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let t = t0 + k as f64 * dt;
        leaves.push(seed.translate(&v, t)?);
        times.push(t);
    }
    Foliation::new(leaves, times)
}

/// Interpolating foliation between two endpoint embeddings on the unit
/// parameter interval.
pub fn build_interpolating(
    e_start: &Embedding,
    e_end: &Embedding,
    schedule: Schedule,
    n_steps: usize,
) -> Result<Foliation> {
    if n_steps == 0 {
        return Err(PftError::NonTimelikeDeformation("n_steps = 0".into()));
    }
    if e_start.spec != e_end.spec {
        return Err(PftError::DimensionMismatch(
            "endpoint embeddings on different lattices".into(),
        ));
    }
    let spec = e_start.spec;
    let n = spec.n_sites;
    let center = spec.center_x();
    let width = spec.total_length() / 4.0;
    let mut leaves = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let s = k as f64 / n_steps as f64;
        let (frac, dev) = match schedule {
            Schedule::Linear => (s, 0.0),
            Schedule::Smoothstep => (s * s * (3.0 - 2.0 * s), 0.0),
            Schedule::Bump { amplitude } => (s, amplitude * 16.0 * s * s * (1.0 - s) * (1.0 - s)),
        };
        let mut t = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let dt_end = e_end.t_coord()[i] - e_start.t_coord()[i];
            let dx_end = e_end.x_coord()[i] - e_start.x_coord()[i];
            let u = (spec.site_x(i) - center) / width;
            t.push(e_start.t_coord()[i] + frac * dt_end + dev * (-u * u).exp());
            x.push(e_start.x_coord()[i] + frac * dx_end);
        }
        leaves.push(Embedding::new(spec, t, x)?);
        times.push(s);
    }
    Foliation::new(leaves, times)
}

/// Lapse/shift split of the discrete deformation of step k:
/// u^mu = N n^mu + N^x d_x X^mu on the leaf where the step starts.
/// Errors with `NonTimelikeDeformation` if N <= 0 at a site with nonzero
/// deformation.
pub fn decompose_deformation(fol: &Foliation, k: usize) -> Result<Vec<(f64, f64)>> {
    let u = fol.step_deformation(k)?;
    let leaf = &fol.leaves[k];
    let normal = leaf.unit_normal()?;
    let mut out = Vec::with_capacity(leaf.len());
    for i in 0..leaf.len() {
        let (ut, ux) = (u.t_comp[i], u.x_comp[i]);
        if ut == 0.0 && ux == 0.0 {
            out.push((0.0, 0.0));
            continue;
        }
        let (n0, n1) = normal[i];
        let (dt, dx) = leaf.d1(i);
        // solve [n^mu, d_x X^mu] (N, Nx) = u
        let det = n0 * dx - n1 * dt;
        let lapse = (u.t_comp[i] * dx - u.x_comp[i] * dt) / det;
        let shift = (n0 * u.x_comp[i] - n1 * u.t_comp[i]) / det;
        if lapse <= 0.0 {
            return Err(PftError::NonTimelikeDeformation(format!(
                "step {k}, site {i}: lapse {lapse:.3e}"
            )));
        }
        out.push((lapse, shift));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn spec(n: usize, dx: f64) -> LatticeSpec {
        LatticeSpec::new(n, dx, 1.0, Boundary::FixedZero).unwrap()
    }

    #[test]
    fn inertial_rest_frame_leaves_and_lapse() {
        let s = spec(16, 0.1);
        let fol = build_inertial(&s, 0.0, (0.0, 1.0), 4).unwrap();
        assert_eq!(fol.leaves.len(), 5);
        for (k, leaf) in fol.leaves.iter().enumerate() {
            for (i, t) in leaf.t_coord().iter().enumerate() {
                assert_eq!(*t, 0.25 * k as f64);
                assert_eq!(leaf.x_coord()[i], s.site_x(i));
            }
        }
        for (n, nx) in decompose_deformation(&fol, 2).unwrap() {
            assert!((n - 1.0).abs() < 1e-12);
            assert!(nx.abs() < 1e-12);
        }
    }

    #[test]
    fn boosted_inertial_family_has_unit_lapse() {
        let w = 0.5_f64;
        let s = spec(16, 0.1);
        let fol = build_inertial(&s, w, (0.0, 0.8), 4).unwrap();
        // deformation is (cosh w, -sinh w), the unit normal of every leaf
        let u = fol.step_deformation(1).unwrap();
        for i in 0..16 {
            assert!((u.t_comp[i] - w.cosh()).abs() < 1e-12);
            assert!((u.x_comp[i] + w.sinh()).abs() < 1e-12);
        }
        for (i, (n, nx)) in decompose_deformation(&fol, 1).unwrap().into_iter().enumerate() {
            if i > 0 && i < 15 {
                assert!((n - 1.0).abs() < 1e-10, "lapse {n}");
                assert!(nx.abs() < 1e-10, "shift {nx}");
            }
        }
    }

    #[test]
    fn single_step_family() {
        let s = spec(8, 0.2);
        let fol = build_inertial(&s, 0.0, (0.0, 0.1), 1).unwrap();
        assert_eq!(fol.n_steps(), 1);
        let u = fol.step_deformation(0).unwrap();
        assert!((u.t_comp[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_endpoints_all_schedules() {
        let s = spec(8, 0.2);
        let e = Embedding::flat(s);
        for sched in [Schedule::Linear, Schedule::Smoothstep, Schedule::Bump { amplitude: 0.0 }] {
            let fol = build_interpolating(&e, &e, sched, 3).unwrap();
            for leaf in &fol.leaves {
                assert_eq!(leaf.max_coordinate_distance(&e), 0.0);
            }
        }
    }

    #[test]
    fn linear_time_translation_is_inertial() {
        let s = spec(8, 0.2);
        let e0 = Embedding::flat(s);
        let v = DeformationVector::constant(8, 1.0, 0.0);
        let e1 = e0.translate(&v, 0.5).unwrap();
        let fol = build_interpolating(&e0, &e1, Schedule::Linear, 5).unwrap();
        let inertial = build_inertial(&s, 0.0, (0.0, 0.5), 5).unwrap();
        for (a, b) in fol.leaves.iter().zip(&inertial.leaves) {
            assert!(a.max_coordinate_distance(b) < 1e-15);
        }
    }

    #[test]
    fn bump_amplitude_exceeding_step_fails() {
        let s = spec(16, 0.1);
        let e0 = Embedding::flat(s);
        let v = DeformationVector::constant(16, 1.0, 0.0);
        let e1 = e0.translate(&v, 0.2).unwrap();
        // small amplitude passes
        assert!(build_interpolating(&e0, &e1, Schedule::Bump { amplitude: 0.002 }, 10).is_ok());
        // bump rate beyond the per-step time advance breaks timelikeness
        let res = build_interpolating(&e0, &e1, Schedule::Bump { amplitude: 0.2 }, 10);
        assert!(matches!(res, Err(PftError::NonTimelikeDeformation(_))));
    }

    #[test]
    fn spatial_drag_has_no_positive_lapse() {
        let s = spec(8, 0.2);
        let e0 = Embedding::flat(s);
        // drag x by a fraction of a link per unit parameter, keep T fixed
        let drag = DeformationVector::constant(8, 0.0, 0.05);
        let e1 = e0.translate(&drag, 1.0).unwrap();
        let leaves = vec![e0, e1];
        let fol = Foliation { leaves, times: vec![0.0, 1.0] };
        assert!(matches!(
            decompose_deformation(&fol, 0),
            Err(PftError::NonTimelikeDeformation(_))
        ));
        assert!(!fol.is_proper());
    }

    #[test]
    fn tilted_leaves_match_two_by_two_solve() {
        let s = spec(16, 0.1);
        let lam = 0.3;
        let e0 = Embedding::from_profile(s, |x| (lam * x, x)).unwrap();
        let v = DeformationVector::constant(16, 1.0, 0.2);
        let e1 = e0.translate(&v, 0.05).unwrap();
        let fol = Foliation::new(vec![e0.clone(), e1], vec![0.0, 0.05]).unwrap();
        let dec = decompose_deformation(&fol, 0).unwrap();
        let normal = e0.unit_normal().unwrap();
        for i in 0..16 {
            let (n, nx) = dec[i];
            let (dt, dx) = e0.d1(i);
            // reconstruction residual
            let rt = n * normal[i].0 + nx * dt - 1.0;
            let rx = n * normal[i].1 + nx * dx - 0.2;
            assert!(rt.abs() < 1e-12 && rx.abs() < 1e-12, "site {i}");
        }
    }

    #[test]
    fn reconstruction_residual_small_on_generated_families() {
        let s = spec(32, 0.1);
        let e0 = Embedding::flat(s);
        let c = s.center_x();
        let e1 = Embedding::from_profile(s, |x| {
            (0.3 + 0.02 * (-(x - c) * (x - c)).exp(), x)
        })
        .unwrap();
        let fol = build_interpolating(&e0, &e1, Schedule::Bump { amplitude: 0.01 }, 8).unwrap();
        for k in 0..fol.n_steps() {
            let dec = decompose_deformation(&fol, k).unwrap();
            let u = fol.step_deformation(k).unwrap();
            let leaf = &fol.leaves[k];
            let normal = leaf.unit_normal().unwrap();
            for i in 0..32 {
                let (dt, dx) = leaf.d1(i);
                let rt = dec[i].0 * normal[i].0 + dec[i].1 * dt - u.t_comp[i];
                let rx = dec[i].0 * normal[i].1 + dec[i].1 * dx - u.x_comp[i];
                assert!(rt.abs() < 1e-12 && rx.abs() < 1e-12);
            }
        }
    }
}
