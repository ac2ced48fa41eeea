//! Bogoliubov maps between mode frames via Klein-Gordon inner products.
//!
//! With `from`-frame modes v_j and `to`-frame modes w_k on a shared slice,
//!
//!   alpha_jk = (v_j, w_k),    beta_jk = -(v_j, w_k*),
//!
//! so the `to`-frame annihilation operators are c_k = sum_j (alpha_jk b_j +
//! beta*_jk b_j^dag) and the `from`-vacuum holds sum_j |beta_jk|^2 quanta of
//! mode k.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::embedding_geometry::Embedding;
use crate::error::{PftError, Result};
use crate::field_model::{kg_inner_product, ModeFrame};

#[derive(Debug, Clone)]
pub struct BogoliubovMap {
    /// alpha[(j, k)] with j indexing `from` modes, k indexing `to` modes
    pub alpha: DMatrix<Complex64>,
    pub beta: DMatrix<Complex64>,
    /// momentum labels of the `from` frame (rows)
    pub labels_from: Vec<f64>,
    /// momentum labels of the `to` frame (columns)
    pub labels_to: Vec<f64>,
    /// column indices whose labels are well resolved (|k| dx <= pi/2)
    pub retained_to: Vec<usize>,
    /// largest canonical-relation defect observed at construction
    pub canonical_defect: f64,
}

/// Tolerance above which a canonical-relation violation is reported.
pub const CANONICAL_TOL: f64 = 1e-8;

impl BogoliubovMap {
    pub fn n_from(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn n_to(&self) -> usize {
        self.alpha.ncols()
    }

    /// Expected quanta of `to`-mode k in the `from` vacuum: sum_j |beta_jk|^2.
    pub fn expected_number(&self, k: usize) -> Result<f64> {
        if k >= self.n_to() {
            return Err(PftError::ModeOutOfRange(k, self.n_to()));
        }
        Ok((0..self.n_from()).map(|j| self.beta[(j, k)].norm_sqr()).sum())
    }

    /// Total expected quanta over all retained modes.
    pub fn total_number(&self) -> f64 {
        self.retained_to
            .iter()
            .map(|&k| self.expected_number(k).unwrap_or(0.0))
            .sum()
    }

    /// Canonical-relation defects (|aa^dag - bb^dag - I|, |ab^T - ba^T|)
    /// restricted to the given row set.
    pub fn canonical_defects_on(&self, rows: &[usize]) -> (f64, f64) {
        let a = &self.alpha;
        let b = &self.beta;
        let mut d1: f64 = 0.0;
        let mut d2: f64 = 0.0;
        for &r in rows {
            for &c in rows {
                let mut aa = Complex64::new(0.0, 0.0);
                let mut bb = Complex64::new(0.0, 0.0);
                let mut ab = Complex64::new(0.0, 0.0);
                for k in 0..self.n_to() {
                    aa += a[(r, k)] * a[(c, k)].conj();
                    bb += b[(r, k)] * b[(c, k)].conj();
                    ab += a[(r, k)] * b[(c, k)] - b[(r, k)] * a[(c, k)];
                }
                let target = if r == c { 1.0 } else { 0.0 };
                d1 = d1.max((aa - bb - Complex64::new(target, 0.0)).norm());
                d2 = d2.max(ab.norm());
            }
        }
        (d1, d2)
    }

    /// CSV export (j, k, Re alpha, Im alpha, Re beta, Im beta).
    pub fn export_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "j,k,re_alpha,im_alpha,re_beta,im_beta")?;
        for j in 0..self.n_from() {
            for k in 0..self.n_to() {
                writeln!(
                    w,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    j,
                    k,
                    self.alpha[(j, k)].re,
                    self.alpha[(j, k)].im,
                    self.beta[(j, k)].re,
                    self.beta[(j, k)].im
                )?;
            }
        }
        Ok(())
    }
}

/// Bogoliubov map between two frames expressed on the same hypersurface.
/// Frames living elsewhere must be transported first
/// (`ModeFrame::transported`). Canonical defects beyond ten times the
/// tolerance are an error.
pub fn bogoliubov_between(
    frame_to: &ModeFrame,
    frame_from: &ModeFrame,
    emb: &Embedding,
) -> Result<BogoliubovMap> {
    let fp = emb.fingerprint();
    if frame_to.embedding_fp != fp || frame_from.embedding_fp != fp {
        return Err(PftError::FrameMismatch(
            "frames must be expressed on the comparison slice".into(),
        ));
    }
    let nf = frame_from.len();
    let nt = frame_to.len();
    let mut alpha = DMatrix::zeros(nf, nt);
    let mut beta = DMatrix::zeros(nf, nt);
    for j in 0..nf {
        for k in 0..nt {
            alpha[(j, k)] = kg_inner_product(&frame_from.modes[j], &frame_to.modes[k], emb)?;
            beta[(j, k)] =
                -kg_inner_product(&frame_from.modes[j], &frame_to.modes[k].conj(), emb)?;
        }
    }
    let retained_to = frame_to.retained(emb.spec.spacing);
    let mut map = BogoliubovMap {
        alpha,
        beta,
        labels_from: frame_from.labels.clone(),
        labels_to: frame_to.labels.clone(),
        retained_to,
        canonical_defect: 0.0,
    };
    let rows: Vec<usize> = frame_from.retained(emb.spec.spacing);
    let (d1, d2) = map.canonical_defects_on(&rows);
    map.canonical_defect = d1.max(d2);
    if map.canonical_defect > 10.0 * CANONICAL_TOL {
        return Err(PftError::FrameMismatch(format!(
            "canonical relations violated by {:.3e}",
            map.canonical_defect
        )));
    }
    Ok(map)
}

/// Compose a -> b and b -> c into a -> c:
///   alpha_ac = alpha_ab alpha_bc + beta_ab conj(beta_bc),
///   beta_ac  = beta_ab conj(alpha_bc) + alpha_ab beta_bc.
pub fn compose(ab: &BogoliubovMap, bc: &BogoliubovMap) -> Result<BogoliubovMap> {
    if ab.n_to() != bc.n_from() {
        return Err(PftError::DimensionMismatch(format!(
            "composition of {}-mode and {}-mode maps",
            ab.n_to(),
            bc.n_from()
        )));
    }
    let alpha = &ab.alpha * &bc.alpha + &ab.beta * bc.beta.map(|c| c.conj());
    let beta = &ab.beta * bc.alpha.map(|c| c.conj()) + &ab.alpha * &bc.beta;
    Ok(BogoliubovMap {
        alpha,
        beta,
        labels_from: ab.labels_from.clone(),
        labels_to: bc.labels_to.clone(),
        retained_to: bc.retained_to.clone(),
        canonical_defect: ab.canonical_defect.max(bc.canonical_defect),
    })
}

/// Analytic mass-quench coefficient: |beta_k|^2 for a sudden change of the
/// dispersion from w1 to w2 at fixed momentum.
pub fn quench_beta_squared(w1: f64, w2: f64) -> f64 {
    (w1 - w2) * (w1 - w2) / (4.0 * w1 * w2)
}
