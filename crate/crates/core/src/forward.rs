//! Weighted-sum forward solves, Pareto sweeps, feasibility checks, and the
//! classical KKT-feasibility inverse.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{self, KernelOptions, KernelStatus, SmoothProgram};
use crate::linalg::inf_norm;
use crate::linprog::{solve_lp, LinearProgram, LpStatus};
use crate::model::{ConvexFunction, ForwardProblem, KktResiduals, WeightVector};

/// Absolute tolerance on constraint values for feasibility verdicts.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;

/// Short summary of the kernel run behind a forward solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub status: KernelStatus,
    pub iterations: usize,
    pub residuals: KktResiduals,
    pub barrier_gap_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSample {
    pub alpha: WeightVector,
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    pub kernel: KernelReport,
}

pub(crate) fn status_error(status: KernelStatus) -> Error {
    match status {
        KernelStatus::Infeasible => Error::Infeasible,
        KernelStatus::Unbounded => Error::Unbounded,
        KernelStatus::MaxIterations => Error::MaxIterations,
        KernelStatus::Optimal => unreachable!("optimal status is not an error"),
    }
}

/// Solves `min Σ αₖ fₖ(x)` over the feasible set.
pub fn solve_fop(p: &ForwardProblem, alpha: &WeightVector) -> Result<ParetoSample> {
    solve_fop_with(p, alpha, &KernelOptions::default())
}

pub fn solve_fop_with(p: &ForwardProblem, alpha: &WeightVector, opts: &KernelOptions) -> Result<ParetoSample> {
    if alpha.len() != p.n_objectives() {
        return Err(Error::DimensionMismatch { expected: p.n_objectives(), found: alpha.len() });
    }
    // objectives with zero weight are dropped so their lifting variables do
    // not leave the barrier without a center
    let keep: Vec<usize> = (0..alpha.len()).filter(|&k| alpha.as_slice()[k] > 0.0).collect();
    let sub = p.with_objective_subset(&keep);
    let lifted = sub.epigraph_reformulate();
    let lp = &lifted.problem;
    let terms: Vec<(f64, &ConvexFunction)> =
        keep.iter().zip(lp.objectives()).map(|(&k, f)| (alpha.as_slice()[k], f)).collect();
    let objective = ConvexFunction::weighted_sum(&terms, lp.n_vars());
    let program =
        SmoothProgram::new(objective, lp.inequalities().to_vec(), lp.eq_a().clone(), lp.eq_b().clone())?;
    let sol = kernel::solve(&program, opts)?;
    if sol.status != KernelStatus::Optimal {
        return Err(status_error(sol.status));
    }
    let x = lifted.project(&sol.x);
    let f = p.objective_values_unchecked(&x);
    Ok(ParetoSample {
        alpha: alpha.clone(),
        x,
        f,
        kernel: KernelReport {
            status: sol.status,
            iterations: sol.iterations,
            residuals: sol.dual.residuals,
            barrier_gap_final: sol.barrier_gap_final,
        },
    })
}

/// Weight vectors used by [`sweep_pareto`]: an evenly spaced grid ordered by
/// `α₁` when `K = 2`, seeded Dirichlet(1, …, 1) draws when `K ≥ 3`.
pub fn sweep_weights(k: usize, grid_size: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if grid_size < 2 {
        return Err(Error::InvalidOption("grid size must be at least 2"));
    }
    match k {
        0 => Err(Error::NoObjectives),
        1 => (0..grid_size).map(|_| WeightVector::from_slice(&[1.0])).collect(),
        2 => (0..grid_size)
            .map(|i| {
                let a1 = i as f64 / (grid_size - 1) as f64;
                WeightVector::from_slice(&[a1, 1.0 - a1])
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid_size)
                .map(|_| {
                    let e: Vec<f64> = (0..k).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
                    let s: f64 = e.iter().sum();
                    WeightVector::new(DVector::from_iterator(k, e.iter().map(|v| v / s)))
                })
                .collect()
        }
    }
}

/// Forward solves over [`sweep_weights`]; failures are reported per sample.
pub fn sweep_pareto(p: &ForwardProblem, grid_size: usize, seed: u64) -> Result<Vec<Result<ParetoSample>>> {
    let weights = sweep_weights(p.n_objectives(), grid_size, seed)?;
    Ok(weights.iter().map(|a| solve_fop(p, a)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipVerdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub verdict: MembershipVerdict,
    /// Largest of `gₗ(x)` and `|Ax − b|`, clipped below at zero.
    pub max_violation: f64,
    /// `gₗ(x)` for each inequality; negative values are slack.
    pub inequality_values: DVector<f64>,
    pub equality_residual: DVector<f64>,
}

/// Feasibility of `x` within [`MEMBERSHIP_TOLERANCE`].
pub fn membership(p: &ForwardProblem, x: &DVector<f64>) -> Result<Membership> {
    p.check_point(x)?;
    let g = p.constraint_values(x);
    let r = p.eq_residual(x);
    let max_violation = g.iter().fold(inf_norm(&r), |a, &v| a.max(v)).max(0.0);
    let verdict =
        if max_violation <= MEMBERSHIP_TOLERANCE { MembershipVerdict::Feasible } else { MembershipVerdict::Infeasible };
    Ok(Membership { verdict, max_violation, inequality_values: g, equality_residual: r })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalVerdict {
    /// L1-normalized weights under which `x̂` satisfies the forward KKT system.
    Weights(WeightVector),
    OnlyZeroSolution,
}

/// Searches for `α ≥ 0`, `Σα = 1`, `σ ≥ 0`, `π` with
/// `Σ αₖ∇fₖ(x̂) + Σ σₗ∇gₗ(x̂) − Aᵀπ = 0` and `σₗ gₗ(x̂) = 0`.
///
/// Complementarity lets `σₗ` be nonzero only where `|gₗ(x̂)|` is within the
/// membership tolerance. Stationarity is solved in least-L1 form and accepted
/// when its residual is below `1e−7·(1 + max‖∇fₖ‖∞)`.
pub fn classical_inverse(p: &ForwardProblem, xhat: &DVector<f64>) -> Result<ClassicalVerdict> {
    p.check_point(xhat)?;
    let n = p.n_vars();
    let k = p.n_objectives();
    let l = p.n_inequalities();
    let m = p.n_equalities();
    let grads: Vec<DVector<f64>> = p.objectives().iter().map(|f| f.grad(xhat)).collect();
    let g = p.constraint_values(xhat);

    // columns: α (K), σ (L), π (m), δ⁺ (n), δ⁻ (n)
    let nv = k + l + m + 2 * n;
    let mut a = DMatrix::zeros(n + 1, nv);
    for (j, gr) in grads.iter().enumerate() {
        a.view_mut((0, j), (n, 1)).copy_from(gr);
        a[(n, j)] = 1.0;
    }
    for (j, gl) in p.inequalities().iter().enumerate() {
        a.view_mut((0, k + j), (n, 1)).copy_from(&gl.grad(xhat));
    }
    a.view_mut((0, k + l), (n, m)).copy_from(&(-p.eq_a().transpose()));
    for i in 0..n {
        a[(i, k + l + m + i)] = -1.0;
        a[(i, k + l + m + n + i)] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b[n] = 1.0;
    let mut cost = DVector::zeros(nv);
    for j in k + l + m..nv {
        cost[j] = 1.0;
    }
    let mut lower = DVector::zeros(nv);
    let mut upper = DVector::from_element(nv, f64::INFINITY);
    for j in 0..l {
        if g[j].abs() > MEMBERSHIP_TOLERANCE {
            upper[k + j] = 0.0;
        }
    }
    for j in k + l..k + l + m {
        lower[j] = f64::NEG_INFINITY;
    }
    let lp = LinearProgram::new(cost).with_equalities(a, b)?.with_bounds(lower, upper)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(sol.status));
    }
    let scale = 1.0 + grads.iter().map(inf_norm).fold(0.0, f64::max);
    if sol.objective > 1e-7 * scale {
        return Ok(ClassicalVerdict::OnlyZeroSolution);
    }
    let alpha = WeightVector::from_multipliers(&sol.x.rows(0, k).into_owned())?;
    Ok(ClassicalVerdict::Weights(alpha.normalized()))
}

/// `|αᵀf(x(α)) − αᵀf(x*)| / (1 + |αᵀf(x*)|)` where `x(α)` re-solves the
/// forward problem.
pub fn reoptimization_gap(p: &ForwardProblem, alpha: &WeightVector, xstar: &DVector<f64>) -> Result<f64> {
    let sample = solve_fop(p, alpha)?;
    let fx = p.objective_values(xstar)?;
    let a = alpha.as_vector();
    let target = a.dot(&fx);
    Ok((a.dot(&sample.f) - target).abs() / (1.0 + target.abs()))
}
