//! Independent reference implementations used to cross-check the main
//! evolution paths. These deliberately avoid the form-assembly and Cayley
//! machinery: the stiffness is built inline and integrated with a plain
//! leapfrog.

use nalgebra::DVector;

use crate::lattice::{Boundary, LatticeSpec};

fn stiffness_apply(spec: &LatticeSpec, phi: &DVector<f64>) -> DVector<f64> {
    let n = spec.n_sites;
    let dx2 = spec.spacing * spec.spacing;
    let m2 = spec.mass * spec.mass;
    DVector::from_fn(n, |i, _| {
        let right = match spec.boundary {
            Boundary::Periodic => phi[(i + 1) % n],
            Boundary::FixedZero => {
                if i + 1 < n {
                    phi[i + 1]
                } else {
                    0.0
                }
            }
        };
        let left = match spec.boundary {
            Boundary::Periodic => phi[(i + n - 1) % n],
            Boundary::FixedZero => {
                if i > 0 {
                    phi[i - 1]
                } else {
                    0.0
                }
            }
        };
        m2 * phi[i] + (2.0 * phi[i] - right - left) / dx2
    })
}

/// Leapfrog integration of the lattice wave equation in canonical site
/// variables (phi_i, pi_i): dphi/dt = pi/dx, dpi/dt = -dx (W phi).
pub fn leapfrog_classical(
    spec: &LatticeSpec,
    phi0: &DVector<f64>,
    pi0: &DVector<f64>,
    t_final: f64,
    dt: f64,
) -> (DVector<f64>, DVector<f64>) {
    let n_steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / n_steps as f64;
    let dx = spec.spacing;
    let mut phi = phi0.clone();
    let mut pi = pi0.clone();
    for _ in 0..n_steps {
        let acc = stiffness_apply(spec, &phi).scale(dx);
        pi -= acc.scale(0.5 * h);
        phi += pi.scale(h / dx);
        let acc2 = stiffness_apply(spec, &phi).scale(dx);
        pi -= acc2.scale(0.5 * h);
    }
    (phi, pi)
}
