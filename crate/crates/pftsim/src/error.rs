use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum PftError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("embedding is not spacelike: {0}")]
    NotSpacelike(String),
    #[error("embedding is not affine (curved): {0}")]
    CurvedEmbedding(String),
    #[error("special conformal map singular: {0}")]
    SingularConformalMap(String),
    #[error("deformation is not future-timelike: {0}")]
    NonTimelikeDeformation(String),
    #[error("deformation is not spacelike-compatible: {0}")]
    DeformationNotSpacelike(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("anomaly potential requires a massless field (mass = {0})")]
    MassiveField(f64),
    #[error("state does not live on the foliation's first leaf")]
    LeafMismatch,
    #[error("time step too large: |K| dt = {0:.3e} exceeds limit {1:.3e}")]
    StepTooLarge(f64, f64),
    #[error("mode frames are not comparable: {0}")]
    FrameMismatch(String),
    #[error("mode index {0} out of range (retained modes: {1})")]
    ModeOutOfRange(usize, usize),
    #[error("embedding not reachable from the family anchor: {0}")]
    UnreachableEmbedding(String),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error("experiment error: {0}")]
    ExperimentError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PftError>;
