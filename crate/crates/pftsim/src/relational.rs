//! Conditioning of global relational states on hypersurface configurations,
//! relational observables, and the deparametrized (Heisenberg) picture.
//!
//! A physical family is stored by its anchor data plus the generator rule:
//! the conditional state on any requested slice is the single-shot
//! frame-change image of the anchor. Conditioning after reconstruction is
//! the identity by construction; the dynamical content lives in the
//! frame-change maps.

use nalgebra::DMatrix;

use crate::embedding_geometry::Embedding;
use crate::error::{PftError, Result};
use crate::evolve::{apply_frame_change, frame_change_unitary, ConditionalFamily, GaussianState};
use crate::field_model::{commutator_form, flow_generator, stress_energy_forms, QuadraticForm, SparseForm};
use crate::lattice::LatticeSpec;
use crate::numeric::symplectic_inverse;

/// Global relational state represented by anchor data and the frame-change
/// generator rule.
#[derive(Debug, Clone)]
pub struct PhysicalFamily {
    pub spec: LatticeSpec,
    pub anchor_emb: Embedding,
    pub anchor_state: GaussianState,
}

impl PhysicalFamily {
    pub fn new(spec: LatticeSpec, anchor_emb: Embedding, anchor_state: GaussianState) -> Result<Self> {
        if anchor_state.embedding_fp != anchor_emb.fingerprint() {
            return Err(PftError::FrameMismatch(
                "anchor state does not live on the anchor embedding".into(),
            ));
        }
        Ok(Self { spec, anchor_emb, anchor_state })
    }
}

impl ConditionalFamily for PhysicalFamily {
    fn conditional_state(&self, emb: &Embedding) -> Result<GaussianState> {
        reduce(self, emb)
    }
}

/// Condition the family on a hypersurface: returns the conditional state on
/// `emb`.
pub fn reduce(family: &PhysicalFamily, emb: &Embedding) -> Result<GaussianState> {
    if emb.fingerprint() == family.anchor_emb.fingerprint() {
        return Ok(family.anchor_state.clone());
    }
    apply_frame_change(&family.spec, &family.anchor_state, &family.anchor_emb, emb).map_err(|e| {
        PftError::UnreachableEmbedding(format!("{e}"))
    })
}

/// Reconstruct the family from one conditional state; `reduce` at the same
/// slice returns the state exactly.
pub fn reduce_inverse(
    spec: LatticeSpec,
    state: GaussianState,
    emb: Embedding,
) -> Result<PhysicalFamily> {
    PhysicalFamily::new(spec, emb, state)
}

/// Expectation of a fixed quadratic observable in the conditional state on
/// `emb`: the relational (gauge-invariant) reading of the observable.
pub fn dirac_expectation(
    family: &PhysicalFamily,
    a0: &QuadraticForm,
    emb: &Embedding,
) -> Result<f64> {
    if a0.dim() != 2 * family.spec.n_sites {
        return Err(PftError::DimensionMismatch(format!(
            "observable dim {}, lattice phase space {}",
            a0.dim(),
            2 * family.spec.n_sites
        )));
    }
    let state = reduce(family, emb)?;
    Ok(a0.expectation(&state.mean, &state.covariance))
}

/// Deparametrized observable: A conjugated by the frame change from `emb_q`
/// to the fiducial `emb_0`, i.e. the form S^{-T} A S^{-1} with S the
/// symplectic of that map. Expectations of the returned form in the fiducial
/// conditional state equal expectations of `a0` in the state on `emb_q`.
pub fn heisenberg_observable(
    spec: &LatticeSpec,
    a0: &QuadraticForm,
    emb_q: &Embedding,
    emb_0: &Embedding,
) -> Result<QuadraticForm> {
    let prop = frame_change_unitary(spec, emb_q, emb_0)?;
    let s_inv = symplectic_inverse(&prop.symplectic);
    Ok(QuadraticForm {
        matrix: s_inv.transpose() * &a0.matrix * s_inv,
        offset: a0.offset,
    })
}

/// Residual of the functional Heisenberg equation at one site: centered
/// difference of the deparametrized observable under a one-site normal
/// deformation of the conditioning slice, against the commutator with the
/// local flux generator.
pub fn heisenberg_equation_residual(
    spec: &LatticeSpec,
    a0: &QuadraticForm,
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
    let w = crate::embedding_geometry::DeformationVector::new(vt, vx)?;

    let observable_at = |s: f64| -> Result<DMatrix<f64>> {
        let e = emb.translate(&w, s).map_err(|e| match e {
            PftError::NotSpacelike(m) => PftError::DeformationNotSpacelike(m),
            other => other,
        })?;
        Ok(heisenberg_observable(spec, a0, &e, emb)?.matrix)
    };
    let plus = observable_at(eps)?;
    let minus = observable_at(-eps)?;
    let fd = (plus - minus).scale(0.5 / eps);

    // local flux generator, covariant assembly
    let stress = stress_energy_forms(spec, emb)?;
    let mut g = SparseForm::default();
    g.add_assign(&stress[site].h[0], spec.spacing * sg * normal[site].0);
    g.add_assign(&stress[site].h[1], spec.spacing * sg * normal[site].1);
    let g_form = g.to_dense(spec.n_sites);
    // dA/deps = i[G, A] = -(1/i)[G, A]
    let comm = commutator_form(&g_form, a0)?;
    Ok((fd + comm.matrix).amax())
}

/// Flow generator of a deparametrized observable, for spectrum checks.
pub fn observable_flow(a: &QuadraticForm) -> DMatrix<f64> {
    flow_generator(a)
}
