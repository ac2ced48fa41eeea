//! Lattice phase space, quadratic observables, the discrete stress-energy
//! tensor, mode frames, and the Klein-Gordon inner product.
//!
//! Phase-space vectors are ordered z = (phi_0..phi_{N-1}, pi_0..pi_{N-1}),
//! where pi_i is the canonical momentum of the lattice site ({phi_i, pi_j} =
//! delta_ij; the continuum momentum density at x_i is pi_i / dx). A
//! `QuadraticForm` M represents the Weyl-ordered observable
//! (1/2) z^T M z + offset.
//!
//! Discrete density conventions, with gamma the induced metric and Dn, Ds the
//! normal and tangential field derivatives:
//!
//!   energy density    H(x)  = (sqrt(gamma)/2) (Dn^2 + Ds^2 + m^2 phi^2)
//!   momentum density  Hx(x) = pi dphi/dx            (weight one)
//!
//! Squared gradients are discretized with the symmetrized link stencil
//! ((d+ phi)^2 + (d- phi)^2)/2; gradients appearing linearly use the centered
//! difference. This keeps smeared fluxes local (stencil width one link) and
//! gives the lattice dispersion w_k^2 = m^2 + (4/dx^2) sin^2(k dx / 2).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::embedding_geometry::Embedding;
use crate::error::{PftError, Result};
use crate::lattice::{Boundary, LatticeSpec};
use crate::numeric::{mul_omega, omega_mul};

pub const SYMMETRY_TOL: f64 = 1e-14;

/// Symmetric quadratic form (1/2) z^T M z + offset on lattice phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub matrix: DMatrix<f64>,
    pub offset: f64,
}

impl QuadraticForm {
    pub fn new(matrix: DMatrix<f64>, offset: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 0 {
            return Err(PftError::DimensionMismatch(format!(
                "quadratic form of shape {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.amax().max(1e-300);
        let mut asym: f64 = 0.0;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(PftError::DimensionMismatch(format!(
                "matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e} relative"
            )));
        }
        Ok(Self { matrix, offset })
    }

    pub fn zeros(n_sites: usize) -> Self {
        Self { matrix: DMatrix::zeros(2 * n_sites, 2 * n_sites), offset: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Gaussian expectation value on a state with the given moments.
    pub fn expectation(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let quad = 0.5 * (&self.matrix * cov).trace();
        let m = 0.5 * (mean.transpose() * &self.matrix * mean)[(0, 0)];
        quad + m + self.offset
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut asym: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in (i + 1)..self.matrix.ncols() {
                asym = asym.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        asym
    }

    /// Conjugated form S^T M S (+ same offset): the observable seen through a
    /// symplectic map applied to states.
    pub fn conjugated(&self, s: &DMatrix<f64>) -> QuadraticForm {
        QuadraticForm {
            matrix: s.transpose() * &self.matrix * s,
            offset: self.offset,
        }
    }
}

/// (1/i) [A, B] of two Weyl-ordered quadratic forms. Exactly the Poisson
/// bracket for quadratics: matrix A Omega B - B Omega A, vanishing c-number.
pub fn commutator_form(a: &QuadraticForm, b: &QuadraticForm) -> Result<QuadraticForm> {
    if a.dim() != b.dim() {
        return Err(PftError::DimensionMismatch(format!(
            "commutator of forms with dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let a_om = mul_omega(&a.matrix);
    let b_om = mul_omega(&b.matrix);
    let m = &a_om * &b.matrix - b_om * &a.matrix;
    Ok(QuadraticForm { matrix: m, offset: 0.0 })
}

// --- sparse building blocks --------------------------------------------------

/// Sparse symmetric quadratic form used for per-site densities.
#[derive(Debug, Clone, Default)]
pub struct SparseForm {
    /// (row, col, value) with row <= col; off-diagonal entries count once and
    /// stand for the symmetric pair.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseForm {
    fn push(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((a, b, v));
    }

    /// Add c * (r^T z)(s^T z) for linear functionals given as index/value lists.
    fn add_product(&mut self, c: f64, r: &[(usize, f64)], s: &[(usize, f64)]) {
        for &(i, ri) in r {
            for &(j, sj) in s {
                let v = c * ri * sj;
                if i == j {
                    self.push(i, j, 2.0 * v);
                } else {
                    self.push(i, j, v);
                }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> SparseForm {
        SparseForm {
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, c * v)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &SparseForm, c: f64) {
        for &(i, j, v) in &other.entries {
            self.push(i, j, c * v);
        }
    }

    pub fn to_dense(&self, n_sites: usize) -> QuadraticForm {
        let mut m = DMatrix::zeros(2 * n_sites, 2 * n_sites);
        for &(i, j, v) in &self.entries {
            if i == j {
                m[(i, i)] += v;
            } else {
                m[(i, j)] += v;
                m[(j, i)] += v;
            }
        }
        QuadraticForm { matrix: m, offset: 0.0 }
    }
}

fn idx_phi(i: usize) -> usize {
    i
}

fn idx_pi(n_sites: usize, i: usize) -> usize {
    n_sites + i
}

/// Per-site stress-energy data: the four components T^nu_mu and the
/// densitized Hamiltonian flux h_mu = n_nu T^nu_mu.
#[derive(Debug, Clone)]
pub struct SiteStress {
    /// t[nu][mu]
    pub t: [[SparseForm; 2]; 2],
    /// h[mu]
    pub h: [SparseForm; 2],
}

/// Discrete stress-energy tensor as quadratic forms at every site.
///
/// The contraction with the densitized conormal reproduces the canonical
/// densities: n^mu h_mu = H(x) and (d_x X^mu) h_mu = Hx(x).
pub fn stress_energy_forms(spec: &LatticeSpec, emb: &Embedding) -> Result<Vec<SiteStress>> {
    check_lattice(spec, emb)?;
    let n = spec.n_sites;
    let dx = spec.spacing;
    let gamma = emb.induced_metric()?;
    let normal = emb.unit_normal()?;
    let mut out = Vec::with_capacity(n);

    for i in 0..n {
        let sg = gamma[i].sqrt();
        let (n0, n1) = normal[i]; // n^mu
        let n_lo = (-n0, n1); // n_mu
        let (dt, dxx) = emb.d1(i);
        let s_up = (dt / sg, dxx / sg); // s^mu
        let s_lo = (-dt / sg, dxx / sg); // s_mu

        // linear functionals
        let r_dn = vec![(idx_pi(n, i), 1.0 / (dx * sg))];
        let mut r_dsc: Vec<(usize, f64)> = Vec::new();
        if let Some(r) = spec.right(i) {
            r_dsc.push((idx_phi(r), 1.0 / (2.0 * dx * sg)));
        }
        if let Some(l) = spec.left(i) {
            r_dsc.push((idx_phi(l), -1.0 / (2.0 * dx * sg)));
        }
        let r_phi = vec![(idx_phi(i), 1.0)];

        // quadratic blocks
        let mut dn2 = SparseForm::default();
        dn2.add_product(1.0, &r_dn, &r_dn);
        let mut dnds = SparseForm::default();
        dnds.add_product(1.0, &r_dn, &r_dsc);
        let mut phi2 = SparseForm::default();
        phi2.add_product(1.0, &r_phi, &r_phi);
        // symmetrized link stencil for Ds^2; a clamped boundary link carries
        // the full weight (its ghost endpoint contributes no half of its own),
        // which keeps this route identical to the canonical link assembly
        let mut ds2 = SparseForm::default();
        let c_link = 1.0 / (2.0 * gamma[i] * dx * dx);
        for nb in [spec.right(i), spec.left(i)] {
            let mut d: Vec<(usize, f64)> = vec![(idx_phi(i), -1.0)];
            let mut c = c_link;
            match nb {
                Some(j) => d.push((idx_phi(j), 1.0)),
                None => c *= 2.0,
            }
            ds2.add_product(c, &d, &d);
        }

        let m2 = spec.mass * spec.mass;
        let mut t: [[SparseForm; 2]; 2] = Default::default();
        let n_up = [n0, n1];
        let s_upv = [s_up.0, s_up.1];
        let n_lov = [n_lo.0, n_lo.1];
        let s_lov = [s_lo.0, s_lo.1];
        for nu in 0..2 {
            for mu in 0..2 {
                let f = &mut t[nu][mu];
                // -(d^nu phi)(d_mu phi)
                f.add_assign(&dn2, -n_up[nu] * n_lov[mu]);
                f.add_assign(&dnds, n_up[nu] * s_lov[mu] + s_upv[nu] * n_lov[mu]);
                f.add_assign(&ds2, -s_upv[nu] * s_lov[mu]);
                // - delta^nu_mu L, L = (Dn^2 - Ds^2 - m^2 phi^2)/2
                if nu == mu {
                    f.add_assign(&dn2, -0.5);
                    f.add_assign(&ds2, 0.5);
                    f.add_assign(&phi2, 0.5 * m2);
                }
            }
        }

        // densitized conormal contraction h_mu = n_nu(dens) T^nu_mu
        let n_dens = [dxx, -dt];
        let mut h: [SparseForm; 2] = Default::default();
        for mu in 0..2 {
            for nu in 0..2 {
                h[mu].add_assign(&t[nu][mu], n_dens[nu]);
            }
        }

        out.push(SiteStress { t, h });
    }
    Ok(out)
}

/// Dense smeared flux form sum_i dx v^mu(x_i) h_mu(x_i).
pub fn smeared_flux_form(
    spec: &LatticeSpec,
    emb: &Embedding,
    v: &crate::embedding_geometry::DeformationVector,
) -> Result<QuadraticForm> {
    if v.len() != spec.n_sites {
        return Err(PftError::DimensionMismatch(format!(
            "deformation on {} sites, lattice has {}",
            v.len(),
            spec.n_sites
        )));
    }
    let stress = stress_energy_forms(spec, emb)?;
    let mut total = SparseForm::default();
    for i in 0..spec.n_sites {
        total.add_assign(&stress[i].h[0], spec.spacing * v.t_comp[i]);
        total.add_assign(&stress[i].h[1], spec.spacing * v.x_comp[i]);
    }
    Ok(total.to_dense(spec.n_sites))
}

fn check_lattice(spec: &LatticeSpec, emb: &Embedding) -> Result<()> {
    if emb.spec != *spec {
        return Err(PftError::InvalidEmbedding(
            "embedding built on a different lattice".into(),
        ));
    }
    Ok(())
}

// --- mode frames --------------------------------------------------------------

/// One classical solution sampled on a hypersurface: field values u(x_i) and
/// normal-derivative values udot(x_i) = n . du.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub u: DVector<Complex64>,
    pub udot: DVector<Complex64>,
}

impl ModePair {
    pub fn conj(&self) -> ModePair {
        ModePair { u: self.u.map(|c| c.conj()), udot: self.udot.map(|c| c.conj()) }
    }

    /// Complex phase-space vector z = (u, dx sqrt(gamma) udot).
    pub fn phase_vector(&self, emb: &Embedding) -> Result<DVector<Complex64>> {
        let n = self.u.len();
        let gamma = emb.induced_metric()?;
        let mut z = DVector::zeros(2 * n);
        for i in 0..n {
            z[i] = self.u[i];
            z[n + i] = self.udot[i] * Complex64::new(emb.spec.spacing * gamma[i].sqrt(), 0.0);
        }
        Ok(z)
    }

    pub fn from_phase_vector(z: &DVector<Complex64>, emb: &Embedding) -> Result<ModePair> {
        let n = z.len() / 2;
        let gamma = emb.induced_metric()?;
        let mut u = DVector::zeros(n);
        let mut udot = DVector::zeros(n);
        for i in 0..n {
            u[i] = z[i];
            udot[i] = z[n + i] / Complex64::new(emb.spec.spacing * gamma[i].sqrt(), 0.0);
        }
        Ok(ModePair { u, udot })
    }
}

/// Discrete Klein-Gordon inner product on the embedded slice:
/// (a, b) = -i sum_i sqrt(gamma_i) dx (a_i* bdot_i - b_i adot_i*).
///
/// In phase-space variables this is -i a^dag Omega b, so symplectic evolution
/// preserves it exactly.
pub fn kg_inner_product(a: &ModePair, b: &ModePair, emb: &Embedding) -> Result<Complex64> {
    let n = emb.len();
    if a.u.len() != n || b.u.len() != n {
        return Err(PftError::DimensionMismatch(format!(
            "mode pairs of {} / {} samples on {} sites",
            a.u.len(),
            b.u.len(),
            n
        )));
    }
    let gamma = emb.induced_metric()?;
    let dx = emb.spec.spacing;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let w = gamma[i].sqrt() * dx;
        acc += (a.u[i].conj() * b.udot[i] - b.u[i] * a.udot[i].conj()) * w;
    }
    Ok(-Complex64::i() * acc)
}

/// KG-orthonormal positive-frequency mode frame on a hypersurface.
#[derive(Debug, Clone)]
pub struct ModeFrame {
    pub modes: Vec<ModePair>,
    /// lattice momentum label of each mode
    pub labels: Vec<f64>,
    /// per-mode frequency with respect to the slice normal
    pub frequencies: Vec<f64>,
    pub embedding_fp: u64,
    /// set when a massless zero mode was projected out
    pub zero_mode_excluded: bool,
}

impl ModeFrame {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Modes with |k| dx <= pi/2 are well resolved; the rest sit near the
    /// Brillouin edge and are excluded from canonical-relation accounting.
    pub fn retained(&self, spacing: f64) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, k)| k.abs() * spacing <= std::f64::consts::FRAC_PI_2 + 1e-12)
            .map(|(i, _)| i)
            .collect()
    }

    /// Max deviation from KG orthonormality: |(u_j,u_k) - delta_jk| and
    /// |(u_j, u_k*)|.
    pub fn orthonormality_defect(&self, emb: &Embedding) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            for k in 0..self.len() {
                let d = kg_inner_product(&self.modes[j], &self.modes[k], emb)?;
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((d - Complex64::new(target, 0.0)).norm());
                let c = kg_inner_product(&self.modes[j], &self.modes[k].conj(), emb)?;
                worst = worst.max(c.norm());
            }
        }
        Ok(worst)
    }

    /// Transport every mode pair with a symplectic propagator onto a new
    /// slice; mode pairs evolve as classical phase-space data.
    pub fn transported(&self, s: &DMatrix<f64>, emb_from: &Embedding, emb_to: &Embedding) -> Result<ModeFrame> {
        let mut modes = Vec::with_capacity(self.len());
        for m in &self.modes {
            let z = m.phase_vector(emb_from)?;
            let re = z.map(|c| c.re);
            let im = z.map(|c| c.im);
            let re2 = s * re;
            let im2 = s * im;
            let z2 = DVector::from_fn(z.len(), |i, _| Complex64::new(re2[i], im2[i]));
            modes.push(ModePair::from_phase_vector(&z2, emb_to)?);
        }
        Ok(ModeFrame {
            modes,
            labels: self.labels.clone(),
            frequencies: self.frequencies.clone(),
            embedding_fp: emb_to.fingerprint(),
            zero_mode_excluded: self.zero_mode_excluded,
        })
    }
}

/// Lattice dispersion relation on a slice of constant induced metric gamma:
/// w(k)^2 = m^2 + (4 / (gamma dx^2)) sin^2(k dx / 2).
pub fn dispersion(mass: f64, gamma: f64, spacing: f64, k: f64) -> f64 {
    let s = (0.5 * k * spacing).sin() * 2.0 / spacing;
    (mass * mass + s * s / gamma).sqrt()
}

/// Positive-frequency KG-orthonormal mode frame on a flat (affine) slice.
///
/// Modes satisfy udot = +i w u; with the sign convention of
/// `kg_inner_product` these have unit norm. For m = 0 on a periodic lattice
/// the k = 0 mode has no positive-frequency representative and is excluded
/// (`zero_mode_excluded`).
pub fn flat_mode_frame(spec: &LatticeSpec, emb: &Embedding) -> Result<ModeFrame> {
    flat_mode_frame_with_mass(spec, emb, spec.mass)
}

/// Same as `flat_mode_frame` with an overriding mode mass; used to build
/// quenched frames on a shared slice.
pub fn flat_mode_frame_with_mass(
    spec: &LatticeSpec,
    emb: &Embedding,
    mode_mass: f64,
) -> Result<ModeFrame> {
    check_lattice(spec, emb)?;
    let n = spec.n_sites;
    // affine check: constant metric, vanishing curvature
    let gamma = emb.induced_metric()?;
    let g0 = gamma.iter().sum::<f64>() / n as f64;
    let scale = 1.0 + emb.t_coord().iter().chain(emb.x_coord()).fold(0.0f64, |a, &b| a.max(b.abs()));
    for (i, g) in gamma.iter().enumerate() {
        if (g - g0).abs() > 1e-8 * g0 {
            return Err(PftError::CurvedEmbedding(format!(
                "gamma varies at site {i}: {g} vs {g0}"
            )));
        }
    }
    for (i, k) in emb.extrinsic_curvature_trace()?.iter().enumerate() {
        if k.abs() > 1e-6 * scale {
            return Err(PftError::CurvedEmbedding(format!("K({i}) = {k:.3e}")));
        }
    }

    let dx = spec.spacing;
    let sg = g0.sqrt();
    let mut modes = Vec::new();
    let mut labels = Vec::new();
    let mut frequencies = Vec::new();
    let mut zero_excluded = false;

    match spec.boundary {
        Boundary::Periodic => {
            for idx in 0..n {
                let m = if idx <= n / 2 { idx as f64 } else { idx as f64 - n as f64 };
                let k = 2.0 * std::f64::consts::PI * m / (n as f64 * dx);
                let w = dispersion(mode_mass, g0, dx, k);
                if w == 0.0 {
                    zero_excluded = true;
                    continue;
                }
                let amp = 1.0 / (2.0 * w * sg * n as f64 * dx).sqrt();
                let u = DVector::from_fn(n, |j, _| {
                    Complex64::from_polar(amp, k * spec.site_x(j))
                });
                let udot = u.map(|c| Complex64::i() * w * c);
                modes.push(ModePair { u, udot });
                labels.push(k);
                frequencies.push(w);
            }
        }
        Boundary::FixedZero => {
            for m in 1..=n {
                let k = std::f64::consts::PI * m as f64 / ((n + 1) as f64 * dx);
                let w = dispersion(mode_mass, g0, dx, k);
                let amp = 1.0 / (w * sg * (n + 1) as f64 * dx).sqrt();
                let u = DVector::from_fn(n, |j, _| {
                    Complex64::new(amp * (k * (j + 1) as f64 * dx).sin(), 0.0)
                });
                let udot = u.map(|c| Complex64::i() * w * c);
                modes.push(ModePair { u, udot });
                labels.push(k);
                frequencies.push(w);
            }
        }
    }

    Ok(ModeFrame {
        modes,
        labels,
        frequencies,
        embedding_fp: emb.fingerprint(),
        zero_mode_excluded: zero_excluded,
    })
}

/// Hermitian part of Omega M Omega^T ... convenience for tests needing the
/// phi-phi stiffness block of a form.
pub fn phi_block(form: &QuadraticForm) -> DMatrix<f64> {
    let n = form.n_sites();
    form.matrix.view((0, 0), (n, n)).into()
}

pub fn pi_block(form: &QuadraticForm) -> DMatrix<f64> {
    let n = form.n_sites();
    form.matrix.view((n, n), (n, n)).into()
}

/// Flow generator Omega M of a quadratic Hamiltonian.
pub fn flow_generator(form: &QuadraticForm) -> DMatrix<f64> {
    omega_mul(&form.matrix)
}
