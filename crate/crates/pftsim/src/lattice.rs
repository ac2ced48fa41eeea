//! Spatial lattice underlying the field model.
//!
//! Sites are labeled by the coordinate x_i = i * spacing. Periodic lattices
//! close after `n_sites` links; fixed-zero lattices clamp the field to zero
//! on ghost sites one link outside either end.

use serde::{Deserialize, Serialize};

use crate::error::{PftError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    FixedZero,
}

/// Lattice geometry and field mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(n_sites: usize, spacing: f64, mass: f64, boundary: Boundary) -> Result<Self> {
        if n_sites < 4 {
            return Err(PftError::InvalidLattice(format!(
                "n_sites = {n_sites}, need at least 4"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(PftError::InvalidLattice(format!("spacing = {spacing}")));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(PftError::InvalidLattice(format!("mass = {mass}")));
        }
        Ok(Self { n_sites, spacing, mass, boundary })
    }

    pub fn total_length(&self) -> f64 {
        self.n_sites as f64 * self.spacing
    }

    /// Coordinate label of site `i`.
    pub fn site_x(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn site_labels(&self) -> Vec<f64> {
        (0..self.n_sites).map(|i| self.site_x(i)).collect()
    }

    /// Coordinate of the lattice midpoint, used to center test profiles.
    pub fn center_x(&self) -> f64 {
        0.5 * (self.n_sites - 1) as f64 * self.spacing
    }

    /// Neighbor index to the right, if any. `None` marks a fixed-zero ghost.
    pub fn right(&self, i: usize) -> Option<usize> {
        match self.boundary {
            Boundary::Periodic => Some((i + 1) % self.n_sites),
            Boundary::FixedZero => (i + 1 < self.n_sites).then_some(i + 1),
        }
    }

    /// Neighbor index to the left, if any. `None` marks a fixed-zero ghost.
    pub fn left(&self, i: usize) -> Option<usize> {
        match self.boundary {
            Boundary::Periodic => Some((i + self.n_sites - 1) % self.n_sites),
            Boundary::FixedZero => i.checked_sub(1),
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_specs() {
        assert!(LatticeSpec::new(3, 0.1, 1.0, Boundary::Periodic).is_err());
        assert!(LatticeSpec::new(8, 0.0, 1.0, Boundary::Periodic).is_err());
        assert!(LatticeSpec::new(8, 0.1, -1.0, Boundary::Periodic).is_err());
        assert!(LatticeSpec::new(8, 0.1, f64::NAN, Boundary::Periodic).is_err());
    }

    #[test]
    fn coordinate_length() {
        let spec = LatticeSpec::new(16, 0.25, 0.0, Boundary::FixedZero).unwrap();
        assert_eq!(spec.total_length(), 4.0);
        assert_eq!(spec.site_x(4), 1.0);
    }

    #[test]
    fn neighbors_respect_boundary() {
        let p = LatticeSpec::new(4, 1.0, 0.0, Boundary::Periodic).unwrap();
        assert_eq!(p.right(3), Some(0));
        assert_eq!(p.left(0), Some(3));
        let f = LatticeSpec::new(4, 1.0, 0.0, Boundary::FixedZero).unwrap();
        assert_eq!(f.right(3), None);
        assert_eq!(f.left(0), None);
    }
}
