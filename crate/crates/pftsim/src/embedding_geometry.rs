//! Spacelike embeddings of the lattice into 1+1D Minkowski space and the
//! classical group actions on them.
//!
//! An embedding stores the sampled coordinate functions (T(x_i), X(x_i)).
//! Metric signature is (-, +). Derived geometry:
//!
//!   gamma      = (dX/dx)^2 - (dT/dx)^2                 induced metric
//!   n^mu       = (dX/dx, dT/dx) / sqrt(gamma)          future unit normal
//!   n_mu(dens) = (dX/dx, -dT/dx)                       densitized conormal
//!   K          = (X' T'' - T' X'') / gamma^(3/2)       curvature trace
//!
//! K > 0 for slices bending toward the future. On periodic lattices X winds
//! by the total coordinate length across the seam and T closes periodically.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};

use crate::error::{PftError, Result};
use crate::lattice::{Boundary, LatticeSpec};

/// Relative margin on gamma for the strict spacelike check.
pub const SPACELIKE_MARGIN: f64 = 1e-8;

/// Deformation vector field v^mu(x_i) along the slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationVector {
    pub t_comp: Vec<f64>,
    pub x_comp: Vec<f64>,
}

impl DeformationVector {
    pub fn new(t_comp: Vec<f64>, x_comp: Vec<f64>) -> Result<Self> {
        if t_comp.len() != x_comp.len() {
            return Err(PftError::DimensionMismatch(format!(
                "deformation components: {} vs {}",
                t_comp.len(),
                x_comp.len()
            )));
        }
        if t_comp.iter().chain(&x_comp).any(|c| !c.is_finite()) {
            return Err(PftError::InvalidEmbedding(
                "non-finite deformation component".into(),
            ));
        }
        Ok(Self { t_comp, x_comp })
    }

    pub fn constant(n: usize, v_t: f64, v_x: f64) -> Self {
        Self { t_comp: vec![v_t; n], x_comp: vec![v_x; n] }
    }

    pub fn len(&self) -> usize {
        self.t_comp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_comp.is_empty()
    }

    /// Pointwise coordinate difference e_to - e_from as a vector field.
    pub fn between(e_from: &Embedding, e_to: &Embedding) -> Result<Self> {
        if e_from.len() != e_to.len() {
            return Err(PftError::DimensionMismatch(format!(
                "embeddings of {} and {} sites",
                e_from.len(),
                e_to.len()
            )));
        }
        let t = e_from
            .t_coord
            .iter()
            .zip(&e_to.t_coord)
            .map(|(a, b)| b - a)
            .collect();
        let x = e_from
            .x_coord
            .iter()
            .zip(&e_to.x_coord)
            .map(|(a, b)| b - a)
            .collect();
        DeformationVector::new(t, x)
    }
}

// Accumulated translation along a fixed vector field. Re-applying `translate`
// with a bitwise-identical field extends the parameter on the original base,
// which keeps the one-parameter group law exact in floating point.
#[derive(Debug, Clone)]
struct TranslateChain {
    base_t: Vec<f64>,
    base_x: Vec<f64>,
    v: DeformationVector,
    s: f64,
}

/// One spacelike hypersurface sampled on the lattice.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub spec: LatticeSpec,
    t_coord: Vec<f64>,
    x_coord: Vec<f64>,
    chain: Option<Box<TranslateChain>>,
}

impl PartialEq for Embedding {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.t_coord == other.t_coord && self.x_coord == other.x_coord
    }
}

impl Embedding {
    pub fn new(spec: LatticeSpec, t_coord: Vec<f64>, x_coord: Vec<f64>) -> Result<Self> {
        if t_coord.len() != spec.n_sites || x_coord.len() != spec.n_sites {
            return Err(PftError::DimensionMismatch(format!(
                "embedding arrays of {} / {} entries on {} sites",
                t_coord.len(),
                x_coord.len(),
                spec.n_sites
            )));
        }
        if t_coord.iter().chain(&x_coord).any(|c| !c.is_finite()) {
            return Err(PftError::InvalidEmbedding("non-finite coordinate".into()));
        }
        let emb = Self { spec, t_coord, x_coord, chain: None };
        emb.validate()?;
        Ok(emb)
    }

    /// Inertial slice T = 0, X = x.
    pub fn flat(spec: LatticeSpec) -> Self {
        let x = spec.site_labels();
        Self { spec, t_coord: vec![0.0; spec.n_sites], x_coord: x, chain: None }
    }

    /// Build from coordinate profiles (T(x), X(x)).
    pub fn from_profile(
        spec: LatticeSpec,
        profile: impl Fn(f64) -> (f64, f64),
    ) -> Result<Self> {
        let (t, x): (Vec<f64>, Vec<f64>) = spec.site_labels().iter().map(|&x| profile(x)).unzip();
        Self::new(spec, t, x)
    }

    pub fn len(&self) -> usize {
        self.spec.n_sites
    }

    pub fn is_empty(&self) -> bool {
        self.spec.n_sites == 0
    }

    pub fn t_coord(&self) -> &[f64] {
        &self.t_coord
    }

    pub fn x_coord(&self) -> &[f64] {
        &self.x_coord
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        let dx2 = self.spec.spacing * self.spec.spacing;
        let links = match self.spec.boundary {
            Boundary::Periodic => n,
            Boundary::FixedZero => n - 1,
        };
        for i in 0..links {
            let (dt, dxs) = self.link_delta(i);
            if dxs <= 0.0 {
                return Err(PftError::InvalidEmbedding(format!(
                    "x_coord not strictly increasing at link {i}"
                )));
            }
            if dxs * dxs - dt * dt <= SPACELIKE_MARGIN * dx2 {
                return Err(PftError::NotSpacelike(format!(
                    "link {i}: (dX)^2 - (dT)^2 = {:.3e}",
                    dxs * dxs - dt * dt
                )));
            }
        }
        Ok(())
    }

    // (dT, dX) across link i -> i+1, winding-corrected on the periodic seam.
    fn link_delta(&self, i: usize) -> (f64, f64) {
        let n = self.len();
        if i + 1 < n {
            (
                self.t_coord[i + 1] - self.t_coord[i],
                self.x_coord[i + 1] - self.x_coord[i],
            )
        } else {
            (
                self.t_coord[0] - self.t_coord[n - 1],
                self.x_coord[0] + self.spec.total_length() - self.x_coord[n - 1],
            )
        }
    }

    // Ghost values one site outside index range. Periodic: wrap with X winding.
    // Fixed-zero: affine extension, so edge curvature vanishes.
    fn ghost(&self, i: isize) -> (f64, f64) {
        let n = self.len() as isize;
        if (0..n).contains(&i) {
            return (self.t_coord[i as usize], self.x_coord[i as usize]);
        }
        match self.spec.boundary {
            Boundary::Periodic => {
                let w = self.spec.total_length();
                let (idx, shift) = if i < 0 {
                    ((i + n) as usize, -w)
                } else {
                    ((i - n) as usize, w)
                };
                (self.t_coord[idx], self.x_coord[idx] + shift)
            }
            Boundary::FixedZero => {
                let (a, b) = if i < 0 { (0usize, 1usize) } else { (n as usize - 1, n as usize - 2) };
                (
                    2.0 * self.t_coord[a] - self.t_coord[b],
                    2.0 * self.x_coord[a] - self.x_coord[b],
                )
            }
        }
    }

    /// Centered first derivatives (dT/dx, dX/dx) at site i.
    pub fn d1(&self, i: usize) -> (f64, f64) {
        let (tm, xm) = self.ghost(i as isize - 1);
        let (tp, xp) = self.ghost(i as isize + 1);
        let h = 2.0 * self.spec.spacing;
        ((tp - tm) / h, (xp - xm) / h)
    }

    /// Centered second derivatives (d2T/dx2, d2X/dx2) at site i.
    pub fn d2(&self, i: usize) -> (f64, f64) {
        let (tm, xm) = self.ghost(i as isize - 1);
        let (tp, xp) = self.ghost(i as isize + 1);
        let h2 = self.spec.spacing * self.spec.spacing;
        (
            (tp - 2.0 * self.t_coord[i] + tm) / h2,
            (xp - 2.0 * self.x_coord[i] + xm) / h2,
        )
    }

    /// Induced metric gamma(x_i) > 0, with the spacelike check.
    pub fn induced_metric(&self) -> Result<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let (dt, dx) = self.d1(i);
                let g = dx * dx - dt * dt;
                if g <= 0.0 {
                    Err(PftError::NotSpacelike(format!("gamma({i}) = {g:.3e}")))
                } else {
                    Ok(g)
                }
            })
            .collect()
    }

    /// Future-pointing unit normal n^mu(x_i) = (X', T') / sqrt(gamma).
    pub fn unit_normal(&self) -> Result<Vec<(f64, f64)>> {
        let gamma = self.induced_metric()?;
        Ok((0..self.len())
            .map(|i| {
                let (dt, dx) = self.d1(i);
                let sg = gamma[i].sqrt();
                (dx / sg, dt / sg)
            })
            .collect())
    }

    /// Densitized conormal n_mu(x_i) = (X', -T'), of norm-squared -gamma.
    pub fn densitized_conormal(&self) -> Vec<(f64, f64)> {
        (0..self.len())
            .map(|i| {
                let (dt, dx) = self.d1(i);
                (dx, -dt)
            })
            .collect()
    }

    /// Trace of the extrinsic curvature at each site.
    pub fn extrinsic_curvature_trace(&self) -> Result<Vec<f64>> {
        if self.len() < 5 {
            return Err(PftError::InvalidEmbedding(
                "curvature needs at least 5 sites".into(),
            ));
        }
        let gamma = self.induced_metric()?;
        Ok((0..self.len())
            .map(|i| {
                let (dt, dx) = self.d1(i);
                let (ddt, ddx) = self.d2(i);
                (dx * ddt - dt * ddx) / gamma[i].powf(1.5)
            })
            .collect())
    }

    /// Shift the coordinate functions by s * v^mu(x). Repeated translations
    /// along the same field accumulate s on the original base, so
    /// translate(translate(e, v, s1), v, s2) == translate(e, v, s1 + s2)
    /// bitwise.
    pub fn translate(&self, v: &DeformationVector, s: f64) -> Result<Embedding> {
        if v.len() != self.len() {
            return Err(PftError::DimensionMismatch(format!(
                "deformation on {} sites, embedding on {}",
                v.len(),
                self.len()
            )));
        }
        let (base_t, base_x, s_total) = match &self.chain {
            Some(c) if c.v == *v => (c.base_t.clone(), c.base_x.clone(), c.s + s),
            _ => (self.t_coord.clone(), self.x_coord.clone(), s),
        };
        let t: Vec<f64> = base_t.iter().zip(&v.t_comp).map(|(a, b)| a + s_total * b).collect();
        let x: Vec<f64> = base_x.iter().zip(&v.x_comp).map(|(a, b)| a + s_total * b).collect();
        let mut out = Embedding::new(self.spec, t, x)?;
        out.chain = Some(Box::new(TranslateChain { base_t, base_x, v: v.clone(), s: s_total }));
        Ok(out)
    }

    /// Apply a finite Lorentz boost of rapidity w:
    /// T' = T cosh w - X sinh w, X' = X cosh w - T sinh w.
    pub fn boost(&self, rapidity: f64) -> Result<Embedding> {
        let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
        let t: Vec<f64> = self
            .t_coord
            .iter()
            .zip(&self.x_coord)
            .map(|(t, x)| t * ch - x * sh)
            .collect();
        let x: Vec<f64> = self
            .t_coord
            .iter()
            .zip(&self.x_coord)
            .map(|(t, x)| x * ch - t * sh)
            .collect();
        Embedding::new(self.spec, t, x)
    }

    /// Finite special conformal map with acceleration parameter `accel`,
    /// b^mu = (0, 1/accel):
    ///   X'^mu = (X^mu - b^mu X.X) / beta,
    ///   beta  = 2 X / accel - X.X / accel^2,  X.X = -T^2 + X^2.
    pub fn special_conformal(&self, accel: f64) -> Result<Embedding> {
        if !(accel > 0.0) {
            return Err(PftError::InvalidEmbedding(format!("accel = {accel}")));
        }
        let mut t = Vec::with_capacity(self.len());
        let mut x = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let (tt, xx) = (self.t_coord[i], self.x_coord[i]);
            let x2 = -tt * tt + xx * xx;
            let beta = 2.0 * xx / accel - x2 / (accel * accel);
            if beta.abs() < 1e-12 {
                return Err(PftError::SingularConformalMap(format!(
                    "beta({i}) = {beta:.3e} at X = ({tt}, {xx})"
                )));
            }
            t.push(tt / beta);
            x.push((xx - x2 / accel) / beta);
        }
        // the projective map may reverse the spatial orientation; the image
        // is compared geometrically, so re-parameterize to increasing X
        if self.len() >= 2 && x[1] < x[0] {
            t.reverse();
            x.reverse();
        }
        Embedding::new(self.spec, t, x)
    }

    /// Max coordinate distance between geometric images.
    pub fn max_coordinate_distance(&self, other: &Embedding) -> f64 {
        self.t_coord
            .iter()
            .zip(&other.t_coord)
            .chain(self.x_coord.iter().zip(&other.x_coord))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Fingerprint of the geometric data, used to tag states with the
    /// hypersurface they live on.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.spec.n_sites.hash(&mut h);
        self.spec.spacing.to_bits().hash(&mut h);
        self.spec.mass.to_bits().hash(&mut h);
        (self.spec.boundary == Boundary::Periodic).hash(&mut h);
        for v in self.t_coord.iter().chain(&self.x_coord) {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Write as CSV with columns (index, x_label, T, X) at full precision.
    pub fn export_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "index,x_label,T,X")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                i,
                self.spec.site_x(i),
                self.t_coord[i],
                self.x_coord[i]
            )?;
        }
        Ok(())
    }

    /// Read back an embedding written by `export_csv`.
    pub fn import_csv(spec: LatticeSpec, r: impl BufRead) -> Result<Embedding> {
        let mut t = Vec::new();
        let mut x = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            if ln == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(PftError::InvalidEmbedding(format!(
                    "csv line {ln}: expected 4 columns, got {}",
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    PftError::InvalidEmbedding(format!("csv line {ln}: {e}"))
                })
            };
            t.push(parse(cols[2])?);
            x.push(parse(cols[3])?);
        }
        Embedding::new(spec, t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn spec(n: usize, dx: f64, b: Boundary) -> LatticeSpec {
        LatticeSpec::new(n, dx, 1.0, b).unwrap()
    }

    #[test]
    fn flat_slice_geometry() {
        let e = Embedding::flat(spec(16, 0.1, Boundary::Periodic));
        for g in e.induced_metric().unwrap() {
            assert!((g - 1.0).abs() < 1e-14);
        }
        for (n0, n1) in e.unit_normal().unwrap() {
            assert!((n0 - 1.0).abs() < 1e-14 && n1.abs() < 1e-14);
        }
        for k in e.extrinsic_curvature_trace().unwrap() {
            assert_eq!(k, 0.0);
        }
    }

    #[test]
    fn boosted_slice_matches_closed_form() {
        let w = 0.6_f64;
        let e = Embedding::flat(spec(16, 0.1, Boundary::FixedZero)).boost(w).unwrap();
        for i in 0..16 {
            let x = 0.1 * i as f64;
            assert!((e.t_coord()[i] + x * w.sinh()).abs() < 1e-14);
            assert!((e.x_coord()[i] - x * w.cosh()).abs() < 1e-14);
        }
        // gamma == 1 by the Lorentz identity, normal is the boosted normal
        for g in e.induced_metric().unwrap() {
            assert!((g - 1.0).abs() < 1e-12);
        }
        for (i, (n0, n1)) in e.unit_normal().unwrap().into_iter().enumerate() {
            if i > 0 && i < 15 {
                assert!((n0 - w.cosh()).abs() < 1e-12, "n0 = {n0}");
                assert!((n1 + w.sinh()).abs() < 1e-12, "n1 = {n1}");
            }
        }
    }

    #[test]
    fn tilted_slice_metric_and_normal() {
        let lam = 0.4_f64;
        let s = spec(32, 0.1, Boundary::FixedZero);
        let e = Embedding::from_profile(s, |x| (lam * x, x)).unwrap();
        let gamma = e.induced_metric().unwrap();
        for g in &gamma {
            assert!((g - (1.0 - lam * lam)).abs() < 1e-12);
        }
        let norm = (1.0 - lam * lam).sqrt();
        for (n0, n1) in e.unit_normal().unwrap() {
            assert!((n0 - 1.0 / norm).abs() < 1e-12);
            assert!((n1 - lam / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_is_unit_and_orthogonal() {
        let s = spec(64, 0.1, Boundary::FixedZero);
        let e = Embedding::from_profile(s, |x| (0.2 * (0.7 * x).sin(), x)).unwrap();
        let n = e.unit_normal().unwrap();
        for i in 0..e.len() {
            let (dt, dx) = e.d1(i);
            let (n0, n1) = n[i];
            assert!((-n0 * n0 + n1 * n1 + 1.0).abs() < 1e-12);
            assert!((-n0 * dt + n1 * dx).abs() < 1e-12);
            assert!(n0 > 0.0);
        }
    }

    #[test]
    fn hyperbola_curvature_converges_to_inverse_radius() {
        // (T, X) = (R cosh eta, R sinh eta) sampled in eta: |K| = 1/R
        let r = 2.0_f64;
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [33usize, 65, 129] {
            let deta = 1.0 / (n - 1) as f64;
            let s = LatticeSpec::new(n, deta, 1.0, Boundary::FixedZero).unwrap();
            let c = s.center_x();
            let e = Embedding::from_profile(s, |x| {
                let eta = x - c;
                (r * eta.cosh(), r * eta.sinh())
            })
            .unwrap();
            let k = e.extrinsic_curvature_trace().unwrap();
            let mid = n / 2;
            errs.push((k[mid].abs() - 1.0 / r).abs());
            hs.push(deta);
            assert!(k[mid] > 0.0, "future-bending sign");
        }
        let order = crate::numeric::fit_order(&hs, &errs);
        assert!(order >= 1.9, "measured order {order}");
    }

    #[test]
    fn bump_curvature_matches_symbolic_formula() {
        let eps = 0.05_f64;
        let s = spec(128, 0.1, Boundary::FixedZero);
        let c = s.center_x();
        let e = Embedding::from_profile(s, |x| (eps * (-(x - c) * (x - c)).exp(), x)).unwrap();
        let k = e.extrinsic_curvature_trace().unwrap();
        for i in 2..126 {
            let u = s.site_x(i) - c;
            let g = (-u * u).exp();
            let tp = -2.0 * u * eps * g;
            let tpp = eps * g * (4.0 * u * u - 2.0);
            let k_exact = tpp / (1.0 - tp * tp).powf(1.5);
            assert!((k[i] - k_exact).abs() < 2e-3, "site {i}: {} vs {}", k[i], k_exact);
        }
    }

    #[test]
    fn translate_is_exact_shift_and_group() {
        let s = spec(16, 0.1, Boundary::FixedZero);
        let e = Embedding::flat(s);
        let v = DeformationVector::constant(16, 1.0, 0.0);
        let e1 = e.translate(&v, 2.5).unwrap();
        for t in e1.t_coord() {
            assert_eq!(*t, 2.5);
        }
        let a = e.translate(&v, 0.1).unwrap().translate(&v, 0.2).unwrap();
        let b = e.translate(&v, 0.1 + 0.2).unwrap();
        assert_eq!(a.t_coord(), b.t_coord());
        assert_eq!(a.x_coord(), b.x_coord());
    }

    #[test]
    fn boost_additivity_and_identity() {
        let s = spec(16, 0.1, Boundary::FixedZero);
        let e = Embedding::from_profile(s, |x| (0.01 * (x - 0.75).powi(2), x)).unwrap();
        let a = e.boost(0.3).unwrap().boost(0.4).unwrap();
        let b = e.boost(0.7).unwrap();
        assert!(a.max_coordinate_distance(&b) < 1e-12);
        let id = e.boost(0.0).unwrap();
        assert!(id.max_coordinate_distance(&e) < 1e-15);
    }

    #[test]
    fn boost_covariance_of_normal() {
        let s = spec(32, 0.1, Boundary::FixedZero);
        let e = Embedding::from_profile(s, |x| (0.1 * (0.5 * x).sin(), x)).unwrap();
        let w = 0.5_f64;
        let eb = e.boost(w).unwrap();
        let n = e.unit_normal().unwrap();
        let nb = eb.unit_normal().unwrap();
        for i in 1..31 {
            let (n0, n1) = n[i];
            let b0 = n0 * w.cosh() - n1 * w.sinh();
            let b1 = n1 * w.cosh() - n0 * w.sinh();
            assert!((nb[i].0 - b0).abs() < 1e-10);
            assert!((nb[i].1 - b1).abs() < 1e-10);
        }
    }

    #[test]
    fn conformal_window_and_singularity() {
        let alpha = 1.0_f64;
        // sites strictly inside (0, 2 alpha)
        let s = LatticeSpec::new(16, 0.1, 1.0, Boundary::FixedZero).unwrap();
        let e = Embedding::from_profile(s, |x| (0.0, 0.2 + 0.08 * x)).unwrap();
        let ec = e.special_conformal(alpha).unwrap();
        // pointwise formula oracle; the image is reversed to keep X increasing
        let mut expect: Vec<f64> = e
            .x_coord()
            .iter()
            .map(|&xx| {
                let beta = 2.0 * xx / alpha - xx * xx / (alpha * alpha);
                (xx - xx * xx / alpha) / beta
            })
            .collect();
        expect.reverse();
        for (i, t) in ec.t_coord().iter().enumerate() {
            assert_eq!(*t, 0.0, "site {i}");
            assert!((ec.x_coord()[i] - expect[i]).abs() < 1e-14);
        }
        // a site at exactly 2 alpha makes beta vanish
        let bad = Embedding::from_profile(s, |x| (0.0, 1.5 + 0.5 * x)).unwrap();
        assert!(bad.x_coord().iter().any(|&x| x == 2.0 * alpha));
        match bad.special_conformal(alpha) {
            Err(PftError::SingularConformalMap(_)) => {}
            other => panic!("expected singular map, got {other:?}"),
        }
    }

    #[test]
    fn spacelike_violation_rejected() {
        let s = spec(8, 0.1, Boundary::FixedZero);
        let res = Embedding::from_profile(s, |x| (1.1 * x, x));
        assert!(matches!(res, Err(PftError::NotSpacelike(_))));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = spec(16, 0.1, Boundary::FixedZero);
        let e = Embedding::from_profile(s, |x| {
            (0.123456789012345e-3 * (x * 1.7).sin(), x + 1.0 / 3.0 * 1e-4)
        })
        .unwrap();
        let mut buf = Vec::new();
        e.export_csv(&mut buf).unwrap();
        let back = Embedding::import_csv(s, buf.as_slice()).unwrap();
        assert_eq!(e.t_coord(), back.t_coord());
        assert_eq!(e.x_coord(), back.x_coord());
    }
}
