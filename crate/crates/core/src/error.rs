use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QrcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid Gaussian state: {0}")]
    InvalidGaussianState(String),

    #[error("input component {index} = {value} outside domain [{lo}, {hi}]")]
    InputOutOfDomain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("input has {got} components, expected {expected}")]
    InputArity { expected: usize, got: usize },

    #[error("basis `{name}` is incomplete for dimension {dim}")]
    IncompleteBasis { name: String, dim: usize },

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error("mixture weights leave the probability simplex at u = {u:?}: {weights:?}")]
    WeightsOffSimplex { u: Vec<f64>, weights: Vec<f64> },

    #[error("vector length {0} is not a perfect square")]
    NotSquareLength(usize),

    #[error("{what} violated at step {step} (t = {time}): defect {defect:e}")]
    InvariantViolation {
        what: &'static str,
        step: usize,
        time: f64,
        defect: f64,
    },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("generator is not safely diagonalizable (eigenvector condition number {condition:e})")]
    IllConditionedEigenbasis { condition: f64 },

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QrcError>;
