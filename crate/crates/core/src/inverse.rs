//! Trade-off preserving inverse models.
//!
//! All three variants minimize `ε` over `x ∈ X` subject to one epigraph row
//! per objective. The general and absolute rows read
//! `fₖ(x) − fₖ(x̂) − μₖε ≤ 0`; the relative rows read `fₖ(x) − ε·fₖ(x̂) ≤ 0`,
//! so the relative `ε*` is a ratio and equals one at a Pareto optimal `x̂`.
//! The multipliers of the epigraph rows are the imputed weights.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forward::{self, membership, solve_fop, status_error, MembershipVerdict};
use crate::kernel::{self, KernelOptions, KernelStatus, SmoothProgram};
use crate::linalg::{inf_norm, population_variance};
use crate::model::{ConvexFunction, DualCertificate, ForwardProblem, ScalingScheme, SchemeKind, WeightVector};

/// Absolute slack below which an epigraph row counts as tight.
pub const TIGHTNESS_TOLERANCE: f64 = 1e-7;
/// Weights at or below this count as zero.
pub const ZERO_WEIGHT: f64 = 1e-7;
/// Relative closeness of a zero-weight deviation to `ε*` that raises the
/// degeneracy flag.
pub const DEGENERACY_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreservationVerdict {
    /// Every epigraph row is tight.
    Perfect,
    /// Rows that are not tight all carry zero weight.
    PartialWithZeroWeights,
    NotPreserved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseResult {
    pub kind: SchemeKind,
    pub mu: DVector<f64>,
    pub epsilon: f64,
    /// Weights scaled so that `Σ μₖαₖ = 1`.
    pub alpha_raw: DVector<f64>,
    /// L1-normalized weights.
    pub alpha: WeightVector,
    pub x: DVector<f64>,
    /// Multipliers in the units of `alpha_raw`.
    pub dual: DualCertificate,
    pub f_xhat: DVector<f64>,
    pub f_xstar: DVector<f64>,
    /// `fₖ(x*)/fₖ(x̂)` for relative schemes, `(fₖ(x*) − fₖ(x̂))/μₖ` otherwise
    /// (the plain difference where `μₖ = 0`).
    pub ratios: DVector<f64>,
    /// Population variance of `ratios` over objectives with `μₖ > 0`.
    pub ratio_variance: f64,
    pub tight: Vec<bool>,
    /// Zero weight while the deviation coincides with `ε*`.
    pub degenerate: Vec<bool>,
    pub verdict: PreservationVerdict,
    /// The multiplier was chosen by the minimum-norm rule.
    pub dual_degenerate: bool,
    pub iterations: usize,
}

impl InverseResult {
    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

/// Epigraph rows `fₖ(x) − offset[k] − scale[k]·ε ≤ 0`.
#[derive(Debug, Clone)]
pub(crate) struct Rows {
    pub offset: DVector<f64>,
    pub scale: DVector<f64>,
}

pub(crate) fn rows_for(p: &ForwardProblem, xhat: &DVector<f64>, scheme: &ScalingScheme) -> Result<(Rows, DVector<f64>)> {
    let k = p.n_objectives();
    if scheme.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: scheme.len() });
    }
    p.check_point(xhat)?;
    let fx = p.objective_values_unchecked(xhat);
    let rows = match scheme.kind() {
        SchemeKind::Relative => {
            for (index, &value) in fx.iter().enumerate() {
                if value <= crate::model::POSITIVITY_THRESHOLD {
                    return Err(Error::NonPositiveObjective { index, value });
                }
            }
            Rows { offset: DVector::zeros(k), scale: fx.clone() }
        }
        SchemeKind::General | SchemeKind::Absolute => Rows { offset: fx.clone(), scale: scheme.mu().clone() },
    };
    Ok((rows, fx))
}

/// Solves the exact model for any scheme.
pub fn solve_iop(p: &ForwardProblem, xhat: &DVector<f64>, scheme: &ScalingScheme) -> Result<InverseResult> {
    solve_iop_with(p, xhat, scheme, &KernelOptions::default())
}

/// Relative scheme with reference objective 0.
pub fn solve_iop_relative(p: &ForwardProblem, xhat: &DVector<f64>) -> Result<InverseResult> {
    solve_iop(p, xhat, &ScalingScheme::relative(p, xhat, 0)?)
}

pub fn solve_iop_absolute(p: &ForwardProblem, xhat: &DVector<f64>) -> Result<InverseResult> {
    solve_iop(p, xhat, &ScalingScheme::absolute(p.n_objectives())?)
}

pub fn solve_iop_with(
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    scheme: &ScalingScheme,
    opts: &KernelOptions,
) -> Result<InverseResult> {
    let (rows, fx) = rows_for(p, xhat, scheme)?;
    let k = p.n_objectives();
    let l = p.n_inequalities();
    let lifted = p.epigraph_reformulate();
    let lp = &lifted.problem;
    let nl = lp.n_vars();
    let eps = nl;
    let total = nl + 1;

    let mut ineqs: Vec<ConvexFunction> = Vec::with_capacity(k + lp.n_inequalities());
    for (j, f) in lp.objectives().iter().enumerate() {
        ineqs.push(f.extended(total, &[(eps, -rows.scale[j])], -rows.offset[j]));
    }
    for g in lp.inequalities() {
        ineqs.push(g.extended(total, &[], 0.0));
    }
    let mut a = DMatrix::zeros(lp.n_equalities(), total);
    a.view_mut((0, 0), (lp.n_equalities(), nl)).copy_from(lp.eq_a());
    let mut cost = DVector::zeros(total);
    cost[eps] = 1.0;
    let program = SmoothProgram::new(ConvexFunction::Linear { c: cost, d: 0.0 }, ineqs, a, lp.eq_b().clone())?;

    // start from a strictly feasible point of X near x̂ with ε above every ratio
    let start = interior_start(p, xhat, opts);
    let lifted_hat = lifted.lift(p, &start, 1.0);
    let f_start = lp.objective_values_unchecked(&lifted_hat);
    let mut eps0 = 0.0_f64;
    for j in 0..k {
        if rows.scale[j] > 0.0 {
            eps0 = eps0.max((f_start[j] - rows.offset[j]) / rows.scale[j]);
        }
    }
    let mut hint = DVector::zeros(total);
    hint.rows_mut(0, nl).copy_from(&lifted_hat);
    hint[eps] = eps0 + 1.0 + eps0.abs();

    let sol = kernel::solve_with_hint(&program, opts, Some(&hint))?;
    if sol.status != KernelStatus::Optimal {
        return Err(status_error(sol.status));
    }
    let x = lifted.project(&sol.x.rows(0, nl).into_owned());
    let epsilon = sol.x[eps];
    let lambda = &sol.dual.sigma;
    let alpha_solver = DVector::from_iterator(k, (0..k).map(|j| lambda[j].max(0.0)));
    let sigma_solver = DVector::from_iterator(l, (0..l).map(|j| lambda[k + j].max(0.0)));
    let pi_solver = sol.dual.pi.clone();
    let iterations = sol.iterations;
    build_result(
        p,
        scheme,
        &rows,
        fx,
        x,
        epsilon,
        &alpha_solver,
        &sigma_solver,
        &pi_solver,
        sol.dual.residuals,
        sol.dual_degenerate,
        iterations,
    )
}

/// `x̂` itself when it is strictly feasible, otherwise a phase-one point of
/// `X` seeded at `x̂` (falling back to `x̂` when `X` has no interior).
pub(crate) fn interior_start(p: &ForwardProblem, xhat: &DVector<f64>, opts: &KernelOptions) -> DVector<f64> {
    let n = p.n_vars();
    let program = SmoothProgram::new(
        ConvexFunction::Linear { c: DVector::zeros(n), d: 0.0 },
        p.inequalities().to_vec(),
        p.eq_a().clone(),
        p.eq_b().clone(),
    );
    match program.and_then(|prog| kernel::phase_one_with_hint(&prog, opts, xhat)) {
        Ok(x) => x,
        Err(_) => xhat.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_result(
    p: &ForwardProblem,
    scheme: &ScalingScheme,
    rows: &Rows,
    fx: DVector<f64>,
    x: DVector<f64>,
    epsilon: f64,
    alpha_solver: &DVector<f64>,
    sigma_solver: &DVector<f64>,
    pi_solver: &DVector<f64>,
    residuals: crate::model::KktResiduals,
    dual_degenerate: bool,
    iterations: usize,
) -> Result<InverseResult> {
    let k = p.n_objectives();
    let mu = scheme.mu().clone();
    let weight = mu.dot(alpha_solver);
    let unit = if weight > 0.0 { 1.0 / weight } else { 1.0 };
    let alpha_raw = alpha_solver * unit;
    let alpha = WeightVector::new(alpha_raw.clone())?.normalized();
    let fs = p.objective_values_unchecked(&x);

    let ratios = DVector::from_iterator(
        k,
        (0..k).map(|j| match scheme.kind() {
            SchemeKind::Relative => fs[j] / fx[j],
            _ if mu[j] > 0.0 => (fs[j] - fx[j]) / mu[j],
            _ => fs[j] - fx[j],
        }),
    );
    let positive: Vec<f64> = (0..k).filter(|&j| mu[j] > 0.0).map(|j| ratios[j]).collect();
    let ratio_variance = population_variance(&positive);

    let tight: Vec<bool> =
        (0..k).map(|j| rows.offset[j] + rows.scale[j] * epsilon - fs[j] <= TIGHTNESS_TOLERANCE).collect();
    let band = DEGENERACY_TOLERANCE * epsilon.abs().max(1.0);
    let degenerate: Vec<bool> = (0..k)
        .map(|j| mu[j] > 0.0 && alpha.as_slice()[j] <= ZERO_WEIGHT && (ratios[j] - epsilon).abs() <= band)
        .collect();
    let verdict = if tight.iter().all(|&t| t) {
        PreservationVerdict::Perfect
    } else if (0..k).all(|j| tight[j] || alpha.as_slice()[j] <= ZERO_WEIGHT) {
        PreservationVerdict::PartialWithZeroWeights
    } else {
        PreservationVerdict::NotPreserved
    };

    Ok(InverseResult {
        kind: scheme.kind(),
        mu,
        epsilon,
        alpha,
        dual: DualCertificate {
            alpha: alpha_raw.clone(),
            sigma: sigma_solver * unit,
            pi: pi_solver * unit,
            residuals,
        },
        alpha_raw,
        x,
        f_xhat: fx,
        f_xstar: fs,
        ratios,
        ratio_variance,
        tight,
        degenerate,
        verdict,
        dual_degenerate,
        iterations,
    })
}

/// Largest violation of the exact model's KKT system at the result's primal
/// and dual values: weight normalization, stationarity, complementarity,
/// primal feasibility and multiplier signs.
pub fn iop_kkt_residual(p: &ForwardProblem, xhat: &DVector<f64>, result: &InverseResult) -> Result<f64> {
    let k = p.n_objectives();
    let scheme = match result.kind {
        SchemeKind::Relative => ScalingScheme::relative(p, xhat, 0)?,
        SchemeKind::Absolute => ScalingScheme::absolute(k)?,
        SchemeKind::General => ScalingScheme::general(result.mu.clone(), 0)?,
    };
    let (rows, _) = rows_for(p, xhat, &scheme)?;
    let x = &result.x;
    let a = &result.dual.alpha;
    let sigma = &result.dual.sigma;
    let pi = &result.dual.pi;

    let norm = match result.kind {
        // ratio-form rows: the weights sum against the scaled row coefficients
        SchemeKind::Relative => (result.mu.dot(a) - 1.0).abs(),
        _ => (rows.scale.dot(a) - 1.0).abs(),
    };
    let mut stat = -p.eq_a().tr_mul(pi);
    let mut gscale = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut feas = inf_norm(&p.eq_residual(x));
    let mut sign = 0.0_f64;
    for (j, f) in p.objectives().iter().enumerate() {
        let g = f.grad(x);
        gscale = gscale.max(inf_norm(&g));
        stat.axpy(a[j], &g, 1.0);
        let row = f.eval(x) - rows.offset[j] - rows.scale[j] * result.epsilon;
        comp = comp.max((a[j] * row).abs() / (1.0 + rows.offset[j].abs() + rows.scale[j].abs()));
        feas = feas.max(row);
        sign = sign.max(-a[j]);
    }
    for (l, g) in p.inequalities().iter().enumerate() {
        let v = g.eval(x);
        stat.axpy(sigma[l], &g.grad(x), 1.0);
        comp = comp.max((sigma[l] * v).abs());
        feas = feas.max(v);
        sign = sign.max(-sigma[l]);
    }
    let stat = inf_norm(&stat) / (1.0 + gscale);
    Ok(norm.max(stat).max(comp).max(feas).max(sign))
}

fn feasible_input(p: &ForwardProblem, xhat: &DVector<f64>) -> Result<()> {
    let m = membership(p, xhat)?;
    if m.verdict != MembershipVerdict::Feasible {
        return Err(Error::InfeasibleInput { violation: m.max_violation });
    }
    Ok(())
}

/// `αᵀf(x(α)) / αᵀf(x̂)`, at most one for feasible `x̂`; its maximum over
/// the simplex equals the relative `ε*`.
pub fn relative_gap(p: &ForwardProblem, xhat: &DVector<f64>, alpha: &WeightVector) -> Result<f64> {
    feasible_input(p, xhat)?;
    let sample = solve_fop(p, alpha)?;
    let fx = p.objective_values_unchecked(xhat);
    Ok(alpha.as_vector().dot(&sample.f) / alpha.as_vector().dot(&fx))
}

/// `αᵀf(x̂) − αᵀf(x(α))` with `α` L1-normalized; nonnegative for feasible
/// `x̂`, and its minimum over the simplex equals minus the absolute `ε*`.
pub fn absolute_gap(p: &ForwardProblem, xhat: &DVector<f64>, alpha: &WeightVector) -> Result<f64> {
    feasible_input(p, xhat)?;
    let a = alpha.normalized();
    let sample = forward::solve_fop(p, &a)?;
    let fx = p.objective_values_unchecked(xhat);
    Ok(a.as_vector().dot(&fx) - a.as_vector().dot(&sample.f))
}
