use thiserror::Error;

use crate::group::GroupModel;

/// Errors raised by the library.
///
/// Mathematical verdicts (a field failing a convexity test, a set failing
/// cyclic monotonicity) are reported through the report types, never as
/// errors. Errors signal misuse, unsupported inputs, or quantities that do
/// not exist.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model mismatch: expected {expected}, found {found}")]
    ModelMismatch { expected: GroupModel, found: GroupModel },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("not differentiable at the sampled stencil: {0}")]
    NotDifferentiable(String),

    #[error("unsupported cost: {0}")]
    UnsupportedCost(String),

    #[error("potential is unbounded: positive cycle through nodes {cycle:?} with weight {weight:e}")]
    Unbounded { cycle: Vec<usize>, weight: f64 },

    #[error("transport instance is infeasible: every plan has value -inf (isolated mu atoms {isolated_mu:?}, isolated nu atoms {isolated_nu:?})")]
    Infeasible {
        isolated_mu: Vec<usize>,
        isolated_nu: Vec<usize>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent subgradient data: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
