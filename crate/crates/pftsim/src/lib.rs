//! Desk-scale simulator of a free scalar field in 1+1D Minkowski space,
//! described relative to dynamical spacelike hypersurfaces.
//!
//! The crate models field states as pure Gaussians on sampled hypersurfaces
//! and implements hypersurface geometry and group actions, smeared quadratic
//! generators of hypersurface deformations, symplectic evolution along
//! foliations, single-shot frame-change maps, Bogoliubov analysis between
//! mode frames, and particle-number expectations relative to weighted
//! families of frame configurations.

pub mod bogoliubov;
pub mod config;
pub mod embedding_geometry;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod field_model;
pub mod foliation;
pub mod hamiltonian;
pub mod lattice;
pub mod numeric;
pub mod oracles;
pub mod qrf;
pub mod relational;

pub use error::{PftError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
