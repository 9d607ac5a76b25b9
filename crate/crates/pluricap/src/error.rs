use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative cap for weighted-degree enumeration")]
    NegativeCap,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("lambda is linearly dependent over Z; use sparseness_scan instead")]
    DependentLambda,
    #[error("lambda is linearly independent over Z; no witness relation exists")]
    IndependentLambda,
    #[error("direction set undefined in dimension 1")]
    DirectionSetDimension,
    #[error("input contains antiholomorphic (z-bar) terms")]
    NotHolomorphic,
    #[error("nonpositive radius")]
    NonPositiveRadius,
    #[error("evaluation requires Re t > 0")]
    NotInRightHalfPlane,
    #[error("series has too few blocks: need {need}, got {got}")]
    TooFewBlocks { need: usize, got: usize },
    #[error("grid contains the origin; direction rescaling is undefined at 0")]
    ZeroGridPoint,
    #[error("no valid subsequence found: {0}")]
    NoValidSubsequence(String),
    #[error("linear program degenerate: {0}")]
    DegenerateProgram(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
