//! KKT-residual inverse models.
//!
//! At `x̂` the unknowns are `α ≥ 0`, `σ ≥ 0` and `π`, and the residuals are
//!
//! ```text
//! δ = Σ αₖ∇fₖ(x̂) + Σ σₗ∇gₗ(x̂) − Aᵀπ
//! γₗ = σₗ gₗ(x̂)
//! ρᵢ = πᵢ (aᵢᵀx̂ − bᵢ)
//! ```
//!
//! A penalty on `(δ, γ, ρ)` is minimized subject to a weight normalization.
//! Every residual is linear in the unknowns, so the sum of squares is a QP
//! and the L1 and gap penalties are LPs.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forward::status_error;
use crate::kernel::{self, KernelOptions, KernelStatus, SmoothProgram};
use crate::linear_inverse::{solve_liop, LiopInstance};
use crate::linprog::{solve_lp, LinearProgram, LpStatus};
use crate::model::{ConvexFunction, DualCertificate, ForwardProblem, KktResiduals, ScalingScheme, WeightVector};

/// Relative Tikhonov term that keeps the sum-of-squares QP strictly convex.
const SOS_REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KesPenalty {
    /// `‖δ‖₂² + ‖γ‖₂² + ‖ρ‖₂²`.
    SumOfSquares,
    /// `‖δ‖₁ + ‖γ‖₁ + ‖ρ‖₁`.
    L1,
    /// `−γᵀe + ρᵀe` with `δ = 0` imposed.
    GapLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KesNormalization {
    /// `αₖ = 1` (zero-based index).
    FixWeight(usize),
    /// `Σ μₖαₖ = 1`.
    MuWeighted(ScalingScheme),
    /// `Σ αₖ = 1`.
    L1Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KesConfig {
    pub penalty: KesPenalty,
    pub normalization: KesNormalization,
    /// Include `ρ`; without it `π` is unconstrained by the equality residual.
    pub include_eq_residuals: bool,
    /// For feasible `x̂`, use `‖γ‖₁ + ‖ρ‖₁` in place of the gap penalty.
    pub gap_as_l1: bool,
    /// Factor applied to every gradient in `δ`, which reweights `δ` against
    /// `γ` and `ρ` in the sum-of-squares and L1 penalties. Defaults to 0.5,
    /// so `δ` is measured in half-gradient units.
    pub stationarity_scale: f64,
}

impl KesConfig {
    pub fn new(penalty: KesPenalty, normalization: KesNormalization) -> Self {
        KesConfig { penalty, normalization, include_eq_residuals: true, gap_as_l1: false, stationarity_scale: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KesResiduals {
    pub delta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub rho: DVector<f64>,
    pub penalty_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KesSolution {
    /// L1-normalized weights.
    pub alpha: WeightVector,
    pub residuals: KesResiduals,
    /// Multipliers under the configured normalization.
    pub dual: DualCertificate,
}

/// Linear map from `(α, σ, π)` to `(δ, γ, ρ)` at `x̂`.
struct ResidualMap {
    k: usize,
    l: usize,
    m: usize,
    n: usize,
    /// `n × (K+L+m)`.
    stat: DMatrix<f64>,
    g: DVector<f64>,
    eq: DVector<f64>,
}

impl ResidualMap {
    fn new(p: &ForwardProblem, xhat: &DVector<f64>, scale: f64) -> Self {
        let (n, k, l, m) = (p.n_vars(), p.n_objectives(), p.n_inequalities(), p.n_equalities());
        let mut stat = DMatrix::zeros(n, k + l + m);
        for (j, f) in p.objectives().iter().enumerate() {
            stat.set_column(j, &f.grad(xhat));
        }
        for (j, g) in p.inequalities().iter().enumerate() {
            stat.set_column(k + j, &g.grad(xhat));
        }
        stat.view_mut((0, k + l), (n, m)).copy_from(&(-p.eq_a().transpose()));
        stat *= scale;
        ResidualMap { k, l, m, n, stat, g: p.constraint_values(xhat), eq: p.eq_residual(xhat) }
    }

    fn nv(&self) -> usize {
        self.k + self.l + self.m
    }

    fn evaluate(&self, v: &DVector<f64>, include_eq: bool) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let delta = &self.stat * v;
        let gamma = DVector::from_fn(self.l, |j, _| v[self.k + j] * self.g[j]);
        let rho = if include_eq {
            DVector::from_fn(self.m, |i, _| v[self.k + self.l + i] * self.eq[i])
        } else {
            DVector::zeros(self.m)
        };
        (delta, gamma, rho)
    }

    /// Stacked `[δ; γ; ρ]` as a matrix acting on `(α, σ, π)`.
    fn jacobian(&self, include_eq: bool) -> DMatrix<f64> {
        let rows = self.n + self.l + if include_eq { self.m } else { 0 };
        let mut j = DMatrix::zeros(rows, self.nv());
        j.view_mut((0, 0), (self.n, self.nv())).copy_from(&self.stat);
        for l in 0..self.l {
            j[(self.n + l, self.k + l)] = self.g[l];
        }
        if include_eq {
            for i in 0..self.m {
                j[(self.n + self.l + i, self.k + self.l + i)] = self.eq[i];
            }
        }
        j
    }

    /// One row `wᵀα = 1` over `(α, σ, π)`.
    fn normalization(&self, norm: &KesNormalization) -> Result<DVector<f64>> {
        let mut row = DVector::zeros(self.nv());
        match norm {
            KesNormalization::FixWeight(idx) => {
                if *idx >= self.k {
                    return Err(Error::IndexOutOfRange { index: *idx, len: self.k });
                }
                row[*idx] = 1.0;
            }
            KesNormalization::MuWeighted(scheme) => {
                if scheme.len() != self.k {
                    return Err(Error::DimensionMismatch { expected: self.k, found: scheme.len() });
                }
                row.rows_mut(0, self.k).copy_from(scheme.mu());
            }
            KesNormalization::L1Unit => row.rows_mut(0, self.k).fill(1.0),
        }
        Ok(row)
    }
}

pub fn solve_kes(p: &ForwardProblem, xhat: &DVector<f64>, cfg: &KesConfig) -> Result<KesSolution> {
    p.check_point(xhat)?;
    if !(cfg.stationarity_scale > 0.0 && cfg.stationarity_scale.is_finite()) {
        return Err(Error::InvalidOption("stationarity scale must be positive"));
    }
    let map = ResidualMap::new(p, xhat, cfg.stationarity_scale);
    let norm = map.normalization(&cfg.normalization)?;
    let (v, residuals) = match cfg.penalty {
        KesPenalty::SumOfSquares => solve_sos(&map, &norm, cfg.include_eq_residuals)?,
        KesPenalty::L1 | KesPenalty::GapLinear => solve_linear(&map, &norm, cfg)?,
    };
    let (k, l, m) = (map.k, map.l, map.m);
    let (delta, gamma, rho) = map.evaluate(&v, cfg.include_eq_residuals);
    let penalty_value = match cfg.penalty {
        KesPenalty::SumOfSquares => delta.norm_squared() + gamma.norm_squared() + rho.norm_squared(),
        KesPenalty::L1 => delta.lp_norm(1) + gamma.lp_norm(1) + rho.lp_norm(1),
        KesPenalty::GapLinear if cfg.gap_as_l1 => gamma.lp_norm(1) + rho.lp_norm(1),
        KesPenalty::GapLinear => -gamma.sum() + rho.sum(),
    };
    let alpha_raw = DVector::from_iterator(k, (0..k).map(|j| v[j].max(0.0)));
    let alpha = WeightVector::new(alpha_raw.clone())?.normalized();
    Ok(KesSolution {
        alpha,
        residuals: KesResiduals { delta, gamma, rho, penalty_value },
        dual: DualCertificate {
            alpha: alpha_raw,
            sigma: DVector::from_iterator(l, (0..l).map(|j| v[k + j].max(0.0))),
            pi: v.rows(k + l, m).into_owned(),
            residuals,
        },
    })
}

fn solve_sos(map: &ResidualMap, norm: &DVector<f64>, include_eq: bool) -> Result<(DVector<f64>, KktResiduals)> {
    let nv = map.nv();
    let j = map.jacobian(include_eq);
    let mut q = j.tr_mul(&j) * 2.0;
    let scale = q.diagonal().amax().max(1.0);
    for i in 0..nv {
        q[(i, i)] += SOS_REGULARIZATION * scale;
    }
    let objective = ConvexFunction::Quadratic { q, c: DVector::zeros(nv), d: 0.0 };
    let ineqs: Vec<ConvexFunction> = (0..map.k + map.l)
        .map(|i| {
            let mut c = DVector::zeros(nv);
            c[i] = -1.0;
            ConvexFunction::Linear { c, d: 0.0 }
        })
        .collect();
    let program = SmoothProgram::new(objective, ineqs, DMatrix::from_row_slice(1, nv, norm.as_slice()), DVector::from_element(1, 1.0))?;
    // strictly positive start on the normalization plane
    let mut hint = DVector::zeros(nv);
    hint.rows_mut(0, map.k + map.l).fill(1.0);
    let s = norm.dot(&hint);
    hint /= s;
    let sol = kernel::solve_with_hint(&program, &KernelOptions::default(), Some(&hint))?;
    if sol.status != KernelStatus::Optimal {
        return Err(status_error(sol.status));
    }
    Ok((sol.x, sol.dual.residuals))
}

fn solve_linear(map: &ResidualMap, norm: &DVector<f64>, cfg: &KesConfig) -> Result<(DVector<f64>, KktResiduals)> {
    let (n, k, l, m) = (map.n, map.k, map.l, map.m);
    let nv = map.nv();
    let include_eq = cfg.include_eq_residuals;
    let gap = cfg.penalty == KesPenalty::GapLinear && !cfg.gap_as_l1;
    let abs_delta = cfg.penalty == KesPenalty::L1;
    let m_rho = if include_eq { m } else { 0 };

    // columns: v (nv), then |δ| bounds (n) when penalized, then |γ| (l) and
    // |ρ| (m_rho) bounds for the absolute-value penalties
    let n_abs_delta = if abs_delta { n } else { 0 };
    let n_abs = if gap { 0 } else { l + m_rho };
    let total = nv + n_abs_delta + n_abs;
    let mut cost = DVector::zeros(total);
    let mut ineq_rows: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut eq_rows: Vec<(DVector<f64>, f64)> = Vec::new();

    let mut norm_row = DVector::zeros(total);
    norm_row.rows_mut(0, nv).copy_from(norm);
    eq_rows.push((norm_row, 1.0));

    for i in 0..n {
        let mut row = DVector::zeros(total);
        row.rows_mut(0, nv).copy_from(&map.stat.row(i).transpose());
        if abs_delta {
            // ±δᵢ ≤ tᵢ
            let t = nv + i;
            let mut neg = -&row;
            row[t] = -1.0;
            neg[t] = -1.0;
            ineq_rows.push((row, 0.0));
            ineq_rows.push((neg, 0.0));
            cost[t] = 1.0;
        } else {
            eq_rows.push((row, 0.0));
        }
    }
    if gap {
        for j in 0..l {
            cost[k + j] = -map.g[j];
        }
        if include_eq {
            for i in 0..m {
                cost[k + l + i] = map.eq[i];
            }
        }
    } else {
        for j in 0..l {
            let t = nv + n_abs_delta + j;
            let mut row = DVector::zeros(total);
            row[k + j] = map.g[j];
            let mut neg = -&row;
            row[t] = -1.0;
            neg[t] = -1.0;
            ineq_rows.push((row, 0.0));
            ineq_rows.push((neg, 0.0));
            cost[t] = 1.0;
        }
        for i in 0..m_rho {
            let t = nv + n_abs_delta + l + i;
            let mut row = DVector::zeros(total);
            row[k + l + i] = map.eq[i];
            let mut neg = -&row;
            row[t] = -1.0;
            neg[t] = -1.0;
            ineq_rows.push((row, 0.0));
            ineq_rows.push((neg, 0.0));
            cost[t] = 1.0;
        }
    }

    let stack = |rows: &[(DVector<f64>, f64)]| {
        let mut a = DMatrix::zeros(rows.len(), total);
        let mut b = DVector::zeros(rows.len());
        for (i, (r, v)) in rows.iter().enumerate() {
            a.set_row(i, &r.transpose());
            b[i] = *v;
        }
        (a, b)
    };
    let (g, h) = stack(&ineq_rows);
    let (a, b) = stack(&eq_rows);
    let mut lower = DVector::from_element(total, f64::NEG_INFINITY);
    let upper = DVector::from_element(total, f64::INFINITY);
    for i in 0..k + l {
        lower[i] = 0.0;
    }
    for i in nv..total {
        lower[i] = 0.0;
    }
    let lp = LinearProgram::new(cost).with_inequalities(g, h)?.with_equalities(a, b)?.with_bounds(lower, upper)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
        LpStatus::IterationLimit => return Err(Error::MaxIterations),
    }
    let cert = sol.certify(&lp);
    let residuals = KktResiduals {
        stationarity: cert.stationarity.max(cert.dual_infeasibility),
        complementarity: cert.complementarity.max(cert.duality_gap),
        feasibility: cert.primal_infeasibility,
    };
    Ok((sol.x.rows(0, nv).into_owned(), residuals))
}

/// Weights from the gap-penalty model under `Σ μₖαₖ = 1`, weights from the
/// duals of `LIOP(x̂, x̂)`, and their L∞ distance.
pub fn kes_liop_bridge(
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    scheme: &ScalingScheme,
) -> Result<(WeightVector, WeightVector, f64)> {
    let kes = solve_kes(
        p,
        xhat,
        &KesConfig::new(KesPenalty::GapLinear, KesNormalization::MuWeighted(scheme.clone())),
    )?;
    let liop = solve_liop(&LiopInstance::at_xhat(p.clone(), xhat.clone(), scheme.clone()))?;
    let d = kes.alpha.distance(&liop.alpha);
    Ok((kes.alpha, liop.alpha, d))
}

/// Weights from `LIOP(x̂, x̂)` with `μ` the unit vector on `k_fix`, weights
/// from the gap-penalty model with `α_{k_fix} = 1`, and their L∞ distance.
pub fn kes_as_degenerate_iop(
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    k_fix: usize,
) -> Result<(WeightVector, WeightVector, f64)> {
    let k = p.n_objectives();
    if k_fix >= k {
        return Err(Error::IndexOutOfRange { index: k_fix, len: k });
    }
    let mut mu = DVector::zeros(k);
    mu[k_fix] = 1.0;
    let scheme = ScalingScheme::general(mu, k_fix)?;
    let liop = solve_liop(&LiopInstance::at_xhat(p.clone(), xhat.clone(), scheme))?;
    let kes = solve_kes(p, xhat, &KesConfig::new(KesPenalty::GapLinear, KesNormalization::FixWeight(k_fix)))?;
    let d = liop.alpha.distance(&kes.alpha);
    Ok((liop.alpha, kes.alpha, d))
}
