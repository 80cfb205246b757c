use thiserror::Error;

use crate::linprog::LpStatus;

/// Errors raised by model construction and by the solvers built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadratic term is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("equality matrix does not have full row rank (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("hinge-squared functions are only supported as objectives")]
    HingeConstraint,

    #[error("hinge-squared functions must be lifted before reaching the barrier kernel")]
    UnliftedHinge,

    #[error("a forward problem needs at least one objective")]
    NoObjectives,

    #[error("non-finite value in input")]
    NonFinite,

    #[error("objective {index} is not positive at the input point ({value:e})")]
    NonPositiveObjective { index: usize, value: f64 },

    #[error("weight vector must be nonnegative and finite")]
    InvalidWeights,

    #[error("weight vector is identically zero")]
    ZeroWeightVector,

    #[error("invalid scaling scheme: {0}")]
    InvalidScheme(&'static str),

    #[error("index {index} out of range for {len} objectives")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("input point is infeasible (max violation {violation:e})")]
    InfeasibleInput { violation: f64 },

    #[error("problem is infeasible")]
    Infeasible,

    #[error("generated instance is infeasible")]
    InstanceInfeasible,

    #[error("problem is unbounded")]
    Unbounded,

    #[error("iteration limit reached")]
    MaxIterations,

    #[error("linear program terminated with status {0:?}")]
    Lp(LpStatus),

    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
