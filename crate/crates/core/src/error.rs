use thiserror::Error;

/// Errors raised across the design and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("matrix entry at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Rank-deficient least-squares or linear solve. Carries the conditioning
    /// diagnostic so callers can tell "ill-conditioned" from "singular".
    #[error("singular system in {op}: smallest singular value {smallest_sv:e}, condition number {condition:e}")]
    Singular {
        op: &'static str,
        smallest_sv: f64,
        condition: f64,
    },

    #[error("input matrix cannot be put in regular form: last entry {last:e} is numerically zero")]
    NotTransformable { last: f64 },

    #[error("relative degree is not one: C·B_delta = {h0:e}")]
    RelativeDegree { h0: f64 },

    #[error("matrix is not delta-stable at tau = {tau:e}")]
    NotDeltaStable { tau: f64 },

    #[error("matrix is not positive definite: {what}")]
    NotPositiveDefinite { what: &'static str },

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("output stack holds {have} of {need} samples")]
    InsufficientHistory { have: usize, need: usize },

    #[error("plant is not {0} at the working tolerance")]
    Structural(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
