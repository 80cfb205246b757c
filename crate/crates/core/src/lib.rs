//! Inverse multi-objective convex optimization: impute objective weights
//! from an observed solution with trade-off preserving inverse models, their
//! linearizations, and KKT-residual models.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod forward;
pub mod hygiene;
pub mod instances;
pub mod inverse;
pub mod kes;
pub mod kernel;
pub mod linear_inverse;
mod linalg;
pub mod linprog;
pub mod model;
#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use forward::{
    classical_inverse, membership, reoptimization_gap, solve_fop, solve_fop_with, sweep_pareto, sweep_weights,
    ClassicalVerdict, Membership, MembershipVerdict, ParetoSample,
};
pub use inverse::{
    absolute_gap, iop_kkt_residual, relative_gap, solve_iop, solve_iop_absolute, solve_iop_relative, solve_iop_with,
    InverseResult, PreservationVerdict,
};
pub use kernel::{KernelOptions, KernelSolution, KernelStatus, SmoothProgram};
pub use kes::{kes_as_degenerate_iop, kes_liop_bridge, solve_kes, KesConfig, KesNormalization, KesPenalty, KesSolution};
pub use linalg::population_variance;
pub use linear_inverse::{
    run_slp, solve_liop, solve_liop_detailed, LiopInstance, LiopSolution, SlpIterate, SlpOptions, SlpTermination, SlpTrace,
};
pub use linprog::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use model::{
    ConvexFunction, DualCertificate, ForwardProblem, KktResiduals, LiftedProblem, ScalingScheme, SchemeKind,
    WeightVector,
};
