//! Linearized inverse model and the trust-region SLP loop built on it.
//!
//! `LIOP(x̂, x̃)` replaces every `fₖ` and `gₗ` in the exact inverse model by
//! its first-order expansion at `x̃`. Convexity makes the linearized feasible
//! region an outer approximation, so its `ε*` bounds the exact one from below.
//! Hinge objectives are linearized in the original variables.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::inverse::{build_result, rows_for, InverseResult, Rows};
use crate::linalg::{inf_norm, l1_norm, l2_norm};
use crate::linprog::{solve_lp, LinearProgram, LpSolution, LpStatus};
use crate::model::{ForwardProblem, KktResiduals, ScalingScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct LiopInstance {
    pub base: ForwardProblem,
    pub xhat: DVector<f64>,
    /// Linearization point.
    pub xtilde: DVector<f64>,
    pub scheme: ScalingScheme,
    /// Half-width of the box `[x̂ − κe, x̂ + κe]`, if any.
    pub trust_kappa: Option<f64>,
}

impl LiopInstance {
    /// Linearizes at `x̂` itself, without a trust region.
    pub fn at_xhat(base: ForwardProblem, xhat: DVector<f64>, scheme: ScalingScheme) -> Self {
        LiopInstance { base, xtilde: xhat.clone(), xhat, scheme, trust_kappa: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiopSolution {
    pub result: InverseResult,
    /// Box half-width in effect, including one inserted after an unbounded LP.
    pub trust_radius: Option<f64>,
    /// Some coordinate of the solution sits on the box.
    pub trust_binding: bool,
    pub lp_iterations: usize,
}

/// Default box half-width `max(1, ‖x̂‖∞)`.
pub fn default_kappa(xhat: &DVector<f64>) -> f64 {
    inf_norm(xhat).max(1.0)
}

pub fn solve_liop(inst: &LiopInstance) -> Result<InverseResult> {
    solve_liop_detailed(inst).map(|s| s.result)
}

pub fn solve_liop_detailed(inst: &LiopInstance) -> Result<LiopSolution> {
    let p = &inst.base;
    p.check_point(&inst.xtilde)?;
    if let Some(kappa) = inst.trust_kappa {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidOption("trust radius must be positive"));
        }
    }
    let (rows, fx) = rows_for(p, &inst.xhat, &inst.scheme)?;
    let mut radius = inst.trust_kappa;
    let mut lin = Linearized::build(p, &rows, &inst.xtilde, radius.map(|r| (&inst.xhat, r)), None, None)?;
    let mut sol = solve_lp(&lin.lp)?;
    if sol.status == LpStatus::Unbounded && radius.is_none() {
        let r = default_kappa(&inst.xhat);
        radius = Some(r);
        lin = Linearized::build(p, &rows, &inst.xtilde, Some((&inst.xhat, r)), None, None)?;
        sol = solve_lp(&lin.lp)?;
    }
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
        LpStatus::IterationLimit => return Err(Error::MaxIterations),
    }
    let trust_binding = lin.box_active(&sol);
    let result = lin.result(p, &inst.scheme, &rows, fx, &sol, None)?;
    Ok(LiopSolution { result, trust_radius: radius, trust_binding, lp_iterations: sol.iterations })
}

/// The LP `min ε (+ ρ·slacks)` over `(x, ε, slacks)` built from first-order
/// expansions at `x̃`. In elastic mode every `gₗ` row, every zero-scale
/// trade-off row and every equality row carries a penalized slack.
struct Linearized {
    lp: LinearProgram,
    n: usize,
    k: usize,
    l: usize,
    m: usize,
}

impl Linearized {
    fn build(
        p: &ForwardProblem,
        rows: &Rows,
        xt: &DVector<f64>,
        trust: Option<(&DVector<f64>, f64)>,
        elastic: Option<f64>,
        correction: Option<&DVector<f64>>,
    ) -> Result<Self> {
        let n = p.n_vars();
        let k = p.n_objectives();
        let l = p.n_inequalities();
        let m = p.n_equalities();
        let eps = n;
        let zero_rows: Vec<usize> = (0..k).filter(|&j| rows.scale[j] == 0.0).collect();
        let n_slack = if elastic.is_some() { l + zero_rows.len() + 2 * m } else { 0 };
        let nv = n + 1 + n_slack;

        let mut g = DMatrix::zeros(k + l, nv);
        let mut h = DVector::zeros(k + l);
        for (j, f) in p.objectives().iter().enumerate() {
            let gr = f.grad(xt);
            g.view_mut((j, 0), (1, n)).copy_from(&gr.transpose());
            g[(j, eps)] = -rows.scale[j];
            h[j] = rows.offset[j] - f.eval(xt) + gr.dot(xt);
        }
        for (j, gl) in p.inequalities().iter().enumerate() {
            let gr = gl.grad(xt);
            g.view_mut((k + j, 0), (1, n)).copy_from(&gr.transpose());
            h[k + j] = -gl.eval(xt) + gr.dot(xt);
        }
        if let Some(c) = correction {
            h -= c;
        }
        let mut a = DMatrix::zeros(m, nv);
        a.view_mut((0, 0), (m, n)).copy_from(p.eq_a());

        let mut cost = DVector::zeros(nv);
        cost[eps] = 1.0;
        let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(nv, f64::INFINITY);
        if let Some(rho) = elastic {
            let mut col = n + 1;
            for j in 0..l {
                g[(k + j, col)] = -1.0;
                col += 1;
            }
            for &j in &zero_rows {
                g[(j, col)] = -1.0;
                col += 1;
            }
            for i in 0..m {
                a[(i, col)] = -1.0;
                a[(i, col + 1)] = 1.0;
                col += 2;
            }
            for j in n + 1..nv {
                cost[j] = rho;
                lower[j] = 0.0;
            }
        }
        if let Some((center, r)) = trust {
            for i in 0..n {
                lower[i] = center[i] - r;
                upper[i] = center[i] + r;
            }
        }
        let lp = LinearProgram::new(cost)
            .with_inequalities(g, h)?
            .with_equalities(a, p.eq_b().clone())?
            .with_bounds(lower, upper)?;
        Ok(Linearized { lp, n, k, l, m })
    }

    fn x(&self, sol: &LpSolution) -> DVector<f64> {
        sol.x.rows(0, self.n).into_owned()
    }

    fn epsilon(&self, sol: &LpSolution) -> f64 {
        sol.x[self.n]
    }

    fn box_active(&self, sol: &LpSolution) -> bool {
        (0..self.n).any(|i| {
            let (lo, hi) = (self.lp.lower[i], self.lp.upper[i]);
            let tol = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            (lo.is_finite() && sol.x[i] - lo <= tol) || (hi.is_finite() && hi - sol.x[i] <= tol)
        })
    }

    fn result(
        &self,
        p: &ForwardProblem,
        scheme: &ScalingScheme,
        rows: &Rows,
        fx: DVector<f64>,
        sol: &LpSolution,
        x: Option<DVector<f64>>,
    ) -> Result<InverseResult> {
        let y = &sol.dual_ineq;
        let alpha = DVector::from_iterator(self.k, (0..self.k).map(|j| y[j].max(0.0)));
        let sigma = DVector::from_iterator(self.l, (0..self.l).map(|j| y[self.k + j].max(0.0)));
        let pi = sol.dual_eq.rows(0, self.m).into_owned();
        let cert = sol.certify(&self.lp);
        let residuals = KktResiduals {
            stationarity: cert.stationarity.max(cert.dual_infeasibility),
            complementarity: cert.complementarity.max(cert.duality_gap),
            feasibility: cert.primal_infeasibility,
        };
        build_result(
            p,
            scheme,
            rows,
            fx,
            x.unwrap_or_else(|| self.x(sol)),
            self.epsilon(sol),
            &alpha,
            &sigma,
            &pi,
            residuals,
            false,
            sol.iterations,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlpOptions {
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Penalty weight on constraint violation in the merit function.
    pub rho: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub shrink: f64,
    pub expand: f64,
    /// Initial radius; `None` means `0.1·max(1, ‖x̂‖∞)`.
    pub initial_radius: Option<f64>,
    /// Smallest merit decrease that counts as progress.
    pub min_decrease: f64,
}

impl Default for SlpOptions {
    fn default() -> Self {
        SlpOptions {
            step_tol: 1e-3,
            max_iterations: 100,
            rho: 1e3,
            eta1: 0.25,
            eta2: 0.75,
            shrink: 0.5,
            expand: 2.0,
            initial_radius: None,
            min_decrease: 1e-12,
        }
    }
}

impl SlpOptions {
    fn validate(&self) -> Result<()> {
        let radius_ok = self.initial_radius.map_or(true, |r| r > 0.0 && r.is_finite());
        if !(self.step_tol > 0.0
            && self.rho > 0.0
            && 0.0 < self.shrink
            && self.shrink < 1.0
            && self.expand > 1.0
            && 0.0 <= self.eta1
            && self.eta1 <= self.eta2
            && radius_ok)
        {
            return Err(Error::InvalidOption("inconsistent SLP options"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlpIterate {
    /// Current iterate after this attempt.
    pub x: DVector<f64>,
    /// `ε` of the attempt's LP (the merit's max term for the first entry).
    pub epsilon: f64,
    pub radius: f64,
    pub accepted: bool,
    pub merit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpTermination {
    StepNorm,
    MaxIterations,
    LpFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlpTrace {
    /// Starts with `x̂`; one entry per LP attempt after that.
    pub iterates: Vec<SlpIterate>,
    pub termination: SlpTermination,
    /// Weights from an LP linearized at the final iterate, with `x*` the final
    /// iterate. `None` only when no LP succeeded.
    pub final_result: Option<InverseResult>,
    /// The box was active in that final LP.
    pub final_trust_binding: bool,
    pub lp_solves: usize,
}

impl SlpTrace {
    /// Attempts after the starting entry.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }
}

/// `max_{μₖ>0} (fₖ(x) − cₖ)/wₖ + ρ·Σ max(0, gₗ(x)) + ρ·Σ_{wₖ=0} max(0, fₖ(x) − cₖ) + ρ·‖Ax − b‖₁`.
fn merit(p: &ForwardProblem, rows: &Rows, rho: f64, x: &DVector<f64>) -> (f64, f64) {
    let mut top = f64::NEG_INFINITY;
    let mut violation = l1_norm(&p.eq_residual(x));
    for (j, f) in p.objectives().iter().enumerate() {
        let v = f.eval(x) - rows.offset[j];
        if rows.scale[j] > 0.0 {
            top = top.max(v / rows.scale[j]);
        } else {
            violation += v.max(0.0);
        }
    }
    for g in p.inequalities() {
        violation += g.eval(x).max(0.0);
    }
    (top + rho * violation, top)
}

/// Second-order remainders `c(y) − c(x) − ∇c(x)ᵀ(y − x)` of the trade-off and
/// inequality rows, nonnegative by convexity.
fn remainders(p: &ForwardProblem, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let d = y - x;
    let rem = |f: &crate::model::ConvexFunction| (f.eval(y) - f.eval(x) - f.grad(x).dot(&d)).max(0.0);
    DVector::from_iterator(
        p.n_objectives() + p.n_inequalities(),
        p.objectives().iter().chain(p.inequalities()).map(rem),
    )
}

/// Trust-region successive linear programming from `x̂`, with the box centered
/// at the current iterate and an ℓ1-penalty merit function.
pub fn run_slp(p: &ForwardProblem, xhat: &DVector<f64>, scheme: &ScalingScheme, opts: &SlpOptions) -> Result<SlpTrace> {
    opts.validate()?;
    let (rows, fx) = rows_for(p, xhat, scheme)?;
    let mut x = xhat.clone();
    let mut radius = opts.initial_radius.unwrap_or(0.1 * inf_norm(xhat).max(1.0));
    let (mut phi, top) = merit(p, &rows, opts.rho, &x);
    let mut iterates = alloc::vec![SlpIterate { x: x.clone(), epsilon: top, radius, accepted: true, merit: phi }];
    let mut termination = SlpTermination::MaxIterations;
    let mut lp_solves = 0;

    for _ in 0..opts.max_iterations {
        let lin = Linearized::build(p, &rows, &x, Some((&x, radius)), Some(opts.rho), None)?;
        let sol = solve_lp(&lin.lp)?;
        lp_solves += 1;
        if sol.status != LpStatus::Optimal {
            termination = SlpTermination::LpFailure;
            break;
        }
        let candidate = lin.x(&sol);
        let step = &candidate - &x;
        let predicted = phi - sol.objective;
        if predicted <= 1e-14 * (1.0 + phi.abs()) {
            iterates.push(SlpIterate { x: x.clone(), epsilon: lin.epsilon(&sol), radius, accepted: false, merit: phi });
            termination = SlpTermination::StepNorm;
            break;
        }
        let (mut phi_new, _) = merit(p, &rows, opts.rho, &candidate);
        let mut candidate = candidate;
        let mut step = step;
        if phi - phi_new < opts.eta1 * predicted {
            // second-order correction against curvature of the active rows
            let rem = remainders(p, &x, &candidate);
            let soc = Linearized::build(p, &rows, &x, Some((&x, radius)), Some(opts.rho), Some(&rem))?;
            let soc_sol = solve_lp(&soc.lp)?;
            lp_solves += 1;
            if soc_sol.status == LpStatus::Optimal {
                let corrected = soc.x(&soc_sol);
                let (phi_soc, _) = merit(p, &rows, opts.rho, &corrected);
                if phi_soc < phi_new {
                    step = &corrected - &x;
                    candidate = corrected;
                    phi_new = phi_soc;
                }
            }
        }
        let actual = phi - phi_new;
        let ratio = actual / predicted;
        let accepted = ratio > 0.0 && actual >= opts.min_decrease;
        if accepted {
            x = candidate;
            phi = phi_new;
        }
        iterates.push(SlpIterate { x: x.clone(), epsilon: lin.epsilon(&sol), radius, accepted, merit: phi });
        if l2_norm(&step) < opts.step_tol {
            termination = SlpTermination::StepNorm;
            break;
        }
        if ratio < opts.eta1 {
            radius *= opts.shrink;
        } else if ratio > opts.eta2 && inf_norm(&step) >= 0.999 * radius {
            radius *= opts.expand;
        }
    }

    let mut final_result = None;
    let mut final_trust_binding = false;
    if termination != SlpTermination::LpFailure {
        let lin = Linearized::build(p, &rows, &x, Some((&x, radius)), Some(opts.rho), None)?;
        let sol = solve_lp(&lin.lp)?;
        lp_solves += 1;
        if sol.status == LpStatus::Optimal {
            final_trust_binding = lin.box_active(&sol);
            let mut result = lin.result(p, scheme, &rows, fx, &sol, Some(x))?;
            result.iterations = iterates.len() - 1;
            final_result = Some(result);
        } else {
            termination = SlpTermination::LpFailure;
        }
    }
    Ok(SlpTrace { iterates, termination, final_result, final_trust_binding, lp_solves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::*;
    use crate::inverse::{iop_kkt_residual, solve_iop, solve_iop_relative};
    use crate::model::{ConvexFunction, SchemeKind};
    use alloc::vec;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    /// Minimizes `cᵀz` over `Gz ≤ h` by checking every basis of active rows.
    fn vertex_oracle(c: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>) -> (f64, DVector<f64>) {
        let (rows, n) = g.shape();
        let mut best = (f64::INFINITY, DVector::zeros(n));
        let mut pick = vec![0usize; n];
        fn next(pick: &mut [usize], rows: usize) -> bool {
            let n = pick.len();
            for i in (0..n).rev() {
                if pick[i] < rows - n + i {
                    pick[i] += 1;
                    for j in i + 1..n {
                        pick[j] = pick[j - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }
        for (i, p) in pick.iter_mut().enumerate() {
            *p = i;
        }
        loop {
            let sub = DMatrix::from_fn(n, n, |i, j| g[(pick[i], j)]);
            let rhs = DVector::from_fn(n, |i, _| h[pick[i]]);
            if let Some(z) = sub.lu().solve(&rhs) {
                if (g * &z - h).max() <= 1e-9 {
                    let val = c.dot(&z);
                    if val < best.0 {
                        best = (val, z);
                    }
                }
            }
            if !next(&mut pick, rows) {
                break;
            }
        }
        best
    }

    #[test]
    fn pareto_point_gives_unit_epsilon() {
        let p = example1();
        let xa = example1_point_a();
        let s = ScalingScheme::relative(&p, &xa, 0).unwrap();
        let r = solve_liop(&LiopInstance::at_xhat(p, xa, s)).unwrap();
        assert!((r.epsilon - 1.0).abs() < 1e-8);
        assert!((r.alpha.as_slice()[0] - 0.5).abs() < 1e-8);
        assert!((r.mu.dot(&r.alpha_raw) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn boxed_point_b_matches_vertex_oracle() {
        let p = example1();
        let xb = example1_point_b();
        let s = ScalingScheme::relative(&p, &xb, 0).unwrap();
        let inst = LiopInstance { trust_kappa: Some(1.0), ..LiopInstance::at_xhat(p.clone(), xb.clone(), s) };
        let r = solve_liop(&inst).unwrap();

        // rows over z = (x₁, x₂, ε): linearized trade-offs, linearized disk, box
        let fx = p.objective_values(&xb).unwrap();
        let mut g = DMatrix::zeros(7, 3);
        let mut h = DVector::zeros(7);
        for j in 0..2 {
            let f = &p.objectives()[j];
            let gr = f.grad(&xb);
            g[(j, 0)] = gr[0];
            g[(j, 1)] = gr[1];
            g[(j, 2)] = -fx[j];
            h[j] = gr.dot(&xb) - f.eval(&xb);
        }
        let d = &p.inequalities()[0];
        let gr = d.grad(&xb);
        g[(2, 0)] = gr[0];
        g[(2, 1)] = gr[1];
        h[2] = gr.dot(&xb) - d.eval(&xb);
        for i in 0..2 {
            g[(3 + 2 * i, i)] = 1.0;
            h[3 + 2 * i] = xb[i] + 1.0;
            g[(4 + 2 * i, i)] = -1.0;
            h[4 + 2 * i] = 1.0 - xb[i];
        }
        let (val, z) = vertex_oracle(&v(&[0.0, 0.0, 1.0]), &g, &h);
        assert!((r.epsilon - val).abs() < 1e-9);
        assert!((r.x[0] - z[0]).abs() < 1e-8 && (r.x[1] - z[1]).abs() < 1e-8);
        let exact = solve_iop_relative(&p, &xb).unwrap();
        assert!(r.epsilon <= exact.epsilon + 1e-8);
    }

    #[test]
    fn linear_problems_agree_with_exact_model() {
        // two linear objectives over a triangle
        let f1 = ConvexFunction::linear(v(&[1.0, 2.0]), 1.0).unwrap();
        let f2 = ConvexFunction::linear(v(&[3.0, 1.0]), 2.0).unwrap();
        let g = vec![
            ConvexFunction::linear(v(&[-1.0, 0.0]), 0.0).unwrap(),
            ConvexFunction::linear(v(&[0.0, -1.0]), 0.0).unwrap(),
            ConvexFunction::linear(v(&[1.0, 1.0]), -3.0).unwrap(),
            ConvexFunction::linear(v(&[-1.0, -1.0]), 0.5).unwrap(),
        ];
        let p = ForwardProblem::new(vec![f1, f2], g).unwrap();
        let xhat = v(&[1.0, 1.2]);
        for scheme in [ScalingScheme::absolute(2).unwrap(), ScalingScheme::relative(&p, &xhat, 0).unwrap()] {
            let lin = solve_liop(&LiopInstance::at_xhat(p.clone(), xhat.clone(), scheme.clone())).unwrap();
            let exact = solve_iop(&p, &xhat, &scheme).unwrap();
            assert!((lin.epsilon - exact.epsilon).abs() < 1e-7, "{} vs {}", lin.epsilon, exact.epsilon);
        }
    }

    #[test]
    fn unbounded_lp_gets_a_box() {
        // f = x over x ≥ −5 linearized at 0 with f₂ = x²: the epigraph of the
        // tangent line is unbounded below
        let f1 = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), v(&[0.0]), 1.0).unwrap();
        let f2 = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), v(&[-4.0]), 5.0).unwrap();
        let p = ForwardProblem::new(vec![f1, f2], vec![]).unwrap();
        let s = ScalingScheme::absolute(2).unwrap();
        let sol = solve_liop_detailed(&LiopInstance::at_xhat(p, v(&[3.0]), s)).unwrap();
        assert_eq!(sol.trust_radius, Some(3.0));
    }

    #[test]
    fn slp_converges_on_point_b() {
        let p = example1();
        let xb = example1_point_b();
        let s = ScalingScheme::relative(&p, &xb, 0).unwrap();
        let trace = run_slp(&p, &xb, &s, &SlpOptions::default()).unwrap();
        assert_eq!(trace.termination, SlpTermination::StepNorm);
        assert!(trace.iterations() <= 50);
        let r = trace.final_result.as_ref().unwrap();
        let exact = solve_iop_relative(&p, &xb).unwrap();
        assert!((r.epsilon - exact.epsilon).abs() < 1e-2);
        assert!(iop_kkt_residual(&p, &xb, r).unwrap() <= 1e-4);
        let mut last = f64::INFINITY;
        for it in trace.iterates.iter().filter(|it| it.accepted) {
            assert!(it.merit < last);
            last = it.merit;
        }
        let liop = solve_liop(&LiopInstance::at_xhat(p, xb, s)).unwrap();
        assert!(liop.epsilon <= r.epsilon + 1e-9);
        if !trace.final_trust_binding {
            assert!(r.epsilon <= exact.epsilon + 1e-6);
        }
    }

    #[test]
    fn slp_stops_at_pareto_input() {
        let p = example1();
        let xa = example1_point_a();
        let s = ScalingScheme::relative(&p, &xa, 0).unwrap();
        let trace = run_slp(&p, &xa, &s, &SlpOptions::default()).unwrap();
        assert_eq!(trace.termination, SlpTermination::StepNorm);
        assert!(trace.iterations() <= 2);
        assert!((&trace.final_result.unwrap().x - &xa).amax() < 1e-6);
    }

    #[test]
    fn slp_on_linear_problem_is_one_step() {
        let f = ConvexFunction::linear(v(&[1.0, 1.0]), 1.0).unwrap();
        let g = vec![
            ConvexFunction::linear(v(&[-1.0, 0.0]), 0.0).unwrap(),
            ConvexFunction::linear(v(&[0.0, -1.0]), 0.0).unwrap(),
        ];
        let p = ForwardProblem::new(vec![f], g).unwrap();
        let xhat = v(&[0.05, 0.05]);
        let s = ScalingScheme::relative(&p, &xhat, 0).unwrap();
        let trace = run_slp(&p, &xhat, &s, &SlpOptions::default()).unwrap();
        let liop = solve_liop(&LiopInstance::at_xhat(p, xhat, s)).unwrap();
        assert_eq!(trace.iterates.iter().skip(1).filter(|it| it.accepted).count(), 1);
        let r = trace.final_result.unwrap();
        assert!((r.epsilon - liop.epsilon).abs() < 1e-10);
        assert!((&r.x - &liop.x).amax() < 1e-10);
        assert_eq!(r.kind, SchemeKind::Relative);
    }

    #[test]
    fn rejects_bad_options() {
        let p = example1();
        let xb = example1_point_b();
        let s = ScalingScheme::absolute(2).unwrap();
        let opts = SlpOptions { shrink: 1.5, ..SlpOptions::default() };
        assert!(run_slp(&p, &xb, &s, &opts).is_err());
    }
}
