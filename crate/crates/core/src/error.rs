//! Crate-wide error type.

use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Numeric validation failures carry the measured deviation so callers can
/// report how far an input is from satisfying the violated invariant.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("dimension {dim} exceeds configured cap {cap}")]
    DimCap { dim: usize, cap: usize },

    #[error("matrix is not Hermitian: max |a - a*| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },

    #[error("trace deviates from 1 by {deviation:.3e}")]
    TraceNotOne { deviation: f64 },

    #[error("eigensolver failed to converge: off-diagonal norm {off_diagonal:.3e}")]
    EigenFailed { off_diagonal: f64 },

    #[error("measurement family is empty")]
    EmptyPovm,

    #[error("measurement family is not complete: residual {residual:.3e}")]
    Incomplete { residual: f64 },

    #[error("measurement family is not bi-stochastic: residual {residual:.3e}")]
    NotBistochastic { residual: f64 },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vector sums differ beyond tolerance: {left} vs {right}")]
    SumMismatch { left: f64, right: f64 },

    #[error("vector is not sorted non-increasing at position {position}")]
    NotSorted { position: usize },

    #[error("majorization fails at prefix {prefix}: slack {slack:.3e}")]
    NotMajorized { prefix: usize, slack: f64 },

    #[error("matrix is not doubly stochastic: deviation {deviation:.3e}")]
    NotDoublyStochastic { deviation: f64 },

    #[error("decomposition failed: remaining mass {residual:.3e} admits no permutation")]
    BirkhoffStuck { residual: f64 },

    #[error("decomposition used {terms} terms, exceeding the bound {bound}")]
    BirkhoffTermBound { terms: usize, bound: usize },

    #[error("channel reconstruction residual {residual:.3e} exceeds tolerance")]
    Reconstruction { residual: f64 },

    #[error("rank {rank} out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },

    #[error("agent {agent} out of range for {parties} parties")]
    AgentOutOfRange { agent: usize, parties: usize },

    #[error("observer coincides with the measuring agent {agent}")]
    ObserverIsMeasurer { agent: usize },

    #[error("operator is not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("protocol step {step} (history \"{history}\"): {source}")]
    ProtocolStep {
        step: usize,
        history: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {reason}")]
    Config { reason: &'static str },
}

impl Error {
    /// Wrap an error with the protocol step and branch history it occurred in.
    pub fn at_step(self, step: usize, history: &[usize]) -> Error {
        let history = history
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(",");
        Error::ProtocolStep {
            step,
            history,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
