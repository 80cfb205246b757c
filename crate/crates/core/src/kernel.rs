//! Log-barrier interior-point solver for smooth convex programs
//!
//! ```text
//! minimize f₀(x)  s.t.  gₗ(x) ≤ 0,  Ax = b
//! ```
//!
//! with linear or convex quadratic `f₀, gₗ`. Multipliers follow the sign
//! convention `∇f₀ + Σ λₗ∇gₗ − Aᵀπ = 0`, `λ ≥ 0`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hygiene;
use crate::linalg::{self, inf_norm};
use crate::model::{ConvexFunction, DualCertificate, KktResiduals};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOptions {
    /// Bound on each scaled KKT residual of an `Optimal` return.
    pub tol: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer step.
    pub mu: f64,
    pub t0: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Centering stops once half the squared Newton decrement falls below this.
    pub newton_tol: f64,
    /// Outer loop stops when `L/t ≤ gap_tol·(1 + |f₀|)`.
    pub gap_tol: f64,
    pub phase_one_margin: f64,
    pub unbounded_below: f64,
    /// Sharpen the barrier solution with Newton steps on the exact KKT system.
    pub polish: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tol: 1e-8,
            max_newton: 200,
            mu: 10.0,
            t0: 1.0,
            armijo: 0.01,
            backtrack: 0.5,
            newton_tol: 1e-10,
            gap_tol: 1e-9,
            phase_one_margin: 1e-6,
            unbounded_below: -1e12,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    pub status: KernelStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    /// `sigma` holds the inequality multipliers λ; `alpha` is the single
    /// objective multiplier `[1]`.
    pub dual: DualCertificate,
    pub iterations: usize,
    /// `L/t` at the last barrier parameter.
    pub barrier_gap_final: f64,
    /// Set when the exact-KKT system was rank deficient and the
    /// minimum-norm multiplier was selected.
    pub dual_degenerate: bool,
}

/// A smooth convex program in the form the kernel accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothProgram {
    objective: ConvexFunction,
    inequalities: Vec<ConvexFunction>,
    eq_a: DMatrix<f64>,
    eq_b: DVector<f64>,
}

impl SmoothProgram {
    pub fn new(
        objective: ConvexFunction,
        inequalities: Vec<ConvexFunction>,
        eq_a: DMatrix<f64>,
        eq_b: DVector<f64>,
    ) -> Result<Self> {
        let n = objective.dim();
        for f in core::iter::once(&objective).chain(inequalities.iter()) {
            if f.is_hinge() {
                return Err(Error::UnliftedHinge);
            }
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
            }
        }
        if eq_a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: eq_a.ncols() });
        }
        if eq_a.nrows() != eq_b.len() {
            return Err(Error::DimensionMismatch { expected: eq_a.nrows(), found: eq_b.len() });
        }
        Ok(SmoothProgram { objective, inequalities, eq_a, eq_b })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.dim()
    }

    pub fn objective(&self) -> &ConvexFunction {
        &self.objective
    }

    pub fn inequalities(&self) -> &[ConvexFunction] {
        &self.inequalities
    }

    pub fn eq_a(&self) -> &DMatrix<f64> {
        &self.eq_a
    }

    pub fn eq_b(&self) -> &DVector<f64> {
        &self.eq_b
    }

    /// Scaled KKT residuals of a candidate primal-dual triple.
    pub fn kkt_residuals(&self, x: &DVector<f64>, lambda: &DVector<f64>, pi: &DVector<f64>) -> KktResiduals {
        let g0 = self.objective.grad(x);
        let mut r = g0.clone() - self.eq_a.tr_mul(pi);
        let mut comp = 0.0_f64;
        let mut feas = inf_norm(&(&self.eq_a * x - &self.eq_b));
        for (l, g) in self.inequalities.iter().enumerate() {
            let gv = g.eval(x);
            if lambda[l] != 0.0 {
                r.axpy(lambda[l], &g.grad(x), 1.0);
            }
            comp = comp.max((lambda[l] * gv).abs());
            feas = feas.max(gv);
        }
        KktResiduals {
            stationarity: inf_norm(&r) / (1.0 + inf_norm(&g0)),
            complementarity: comp / (1.0 + self.objective.eval(x).abs()),
            feasibility: feas.max(0.0),
        }
    }
}

/// Inequalities split into a dense linear block and individual quadratics.
struct Compiled<'a> {
    objective: &'a ConvexFunction,
    lin_idx: Vec<usize>,
    g_lin: DMatrix<f64>,
    lin_nz: Vec<Vec<(usize, f64)>>,
    d_lin: DVector<f64>,
    quad_idx: Vec<usize>,
    quad: Vec<&'a ConvexFunction>,
    a: &'a DMatrix<f64>,
}

impl<'a> Compiled<'a> {
    fn new(objective: &'a ConvexFunction, ineqs: &'a [ConvexFunction], a: &'a DMatrix<f64>) -> Self {
        let n = objective.dim();
        let mut lin_idx = Vec::new();
        let mut quad_idx = Vec::new();
        let mut quad = Vec::new();
        for (l, g) in ineqs.iter().enumerate() {
            if g.is_linear() {
                lin_idx.push(l);
            } else {
                quad_idx.push(l);
                quad.push(g);
            }
        }
        let mut g_lin = DMatrix::zeros(lin_idx.len(), n);
        let mut d_lin = DVector::zeros(lin_idx.len());
        for (r, &l) in lin_idx.iter().enumerate() {
            if let ConvexFunction::Linear { c, d } = &ineqs[l] {
                g_lin.set_row(r, &c.transpose());
                d_lin[r] = *d;
            }
        }
        let lin_nz = (0..lin_idx.len())
            .map(|r| (0..n).filter(|&j| g_lin[(r, j)] != 0.0).map(|j| (j, g_lin[(r, j)])).collect())
            .collect();
        Compiled { objective, lin_idx, g_lin, lin_nz, d_lin, quad_idx, quad, a }
    }

    fn n_ineq(&self) -> usize {
        self.lin_idx.len() + self.quad_idx.len()
    }

    /// `−gₗ(x)` in compiled order (linear rows first).
    fn slacks(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut s = DVector::zeros(self.n_ineq());
        let lin = &self.g_lin * x + &self.d_lin;
        let nl = self.lin_idx.len();
        for r in 0..nl {
            s[r] = -lin[r];
        }
        for (k, g) in self.quad.iter().enumerate() {
            s[nl + k] = -g.eval(x);
        }
        s
    }

    fn to_original(&self, compiled: &DVector<f64>, len: usize) -> DVector<f64> {
        let mut out = DVector::zeros(len);
        let nl = self.lin_idx.len();
        for (r, &l) in self.lin_idx.iter().enumerate() {
            out[l] = compiled[r];
        }
        for (k, &l) in self.quad_idx.iter().enumerate() {
            out[l] = compiled[nl + k];
        }
        out
    }

    fn barrier_value(&self, x: &DVector<f64>, t: f64) -> f64 {
        let s = self.slacks(x);
        if s.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        t * self.objective.eval(x) - s.iter().map(|&v| libm::log(v)).sum::<f64>()
    }

    /// Gradient of `t·f₀ − Σ log sₗ` and the primal-dual Hessian with scaled
    /// multipliers `w = t·λ`; `w = 1/s` gives the primal barrier Hessian.
    fn barrier_derivatives(
        &self,
        x: &DVector<f64>,
        s: &DVector<f64>,
        w: &DVector<f64>,
        t: f64,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = self.objective.grad(x) * t;
        let mut hess = self.objective.hessian(x) * t;
        let nl = self.lin_idx.len();
        if nl > 0 {
            let inv = DVector::from_iterator(nl, (0..nl).map(|r| 1.0 / s[r]));
            grad += self.g_lin.tr_mul(&inv);
            for (r, nz) in self.lin_nz.iter().enumerate() {
                let d = w[r] * inv[r];
                for &(i, ci) in nz {
                    let di = d * ci;
                    for &(j, cj) in nz {
                        hess[(i, j)] += di * cj;
                    }
                }
            }
        }
        for (k, g) in self.quad.iter().enumerate() {
            let sk = s[nl + k];
            let wk = w[nl + k];
            let gg = g.grad(x);
            grad.axpy(1.0 / sk, &gg, 1.0);
            hess.ger(wk / sk, &gg, &gg, 1.0);
            hess += g.hessian(x) * wk;
        }
        (grad, hess)
    }

    /// `∇gₗᵀd` in compiled order.
    fn directional(&self, x: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
        let nl = self.lin_idx.len();
        let mut out = DVector::zeros(self.n_ineq());
        out.rows_mut(0, nl).copy_from(&(&self.g_lin * d));
        for (k, g) in self.quad.iter().enumerate() {
            out[nl + k] = g.grad(x).dot(d);
        }
        out
    }

    /// Largest step in (0, 1] keeping linear slacks positive.
    fn max_linear_step(&self, s: &DVector<f64>, dx: &DVector<f64>) -> f64 {
        let ds = &self.g_lin * dx;
        let mut step = 1.0_f64;
        for r in 0..self.lin_idx.len() {
            if ds[r] > 0.0 {
                step = step.min(0.99 * s[r] / ds[r]);
            }
        }
        step
    }
}

/// Solves `[H Aᵀ; A 0][dx; w] = [−g; 0]`.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, a: &DMatrix<f64>) -> DVector<f64> {
    let n = h.nrows();
    let m = a.nrows();
    if m == 0 {
        return linalg::solve_spd(h, &(-g)).unwrap_or_else(|| linalg::min_norm_solve(h, &(-g)));
    }
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(h);
    k.view_mut((n, 0), (m, n)).copy_from(a);
    k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-g));
    if let Some(sol) = k.clone().lu().solve(&rhs) {
        if linalg::all_finite(&sol) && inf_norm(&(&k * &sol - &rhs)) <= 1e-9 * (1.0 + inf_norm(&rhs)) {
            return sol.rows(0, n).into_owned();
        }
    }
    let scale = 1.0 + (0..n).fold(0.0_f64, |acc, i| acc.max(h[(i, i)].abs()));
    for i in 0..n {
        k[(i, i)] += 1e-10 * scale;
    }
    linalg::solve_square(&k, &rhs).rows(0, n).into_owned()
}

/// Squared Newton decrement below which a damped Newton step is taken even
/// when rounding hides the barrier decrease.
const LOCAL_DECREMENT: f64 = 0.0625;
const LOCAL_STALL: usize = 3;

enum CenterOutcome {
    Centered,
    Unbounded,
    MaxIterations,
}

fn center(
    c: &Compiled,
    x: &mut DVector<f64>,
    w: &mut DVector<f64>,
    t: f64,
    opts: &KernelOptions,
    iters: &mut usize,
    stop: &impl Fn(&DVector<f64>) -> bool,
) -> CenterOutcome {
    let (mut last_local, mut stalled) = (f64::INFINITY, 0);
    loop {
        if stop(x) {
            return CenterOutcome::Centered;
        }
        if *iters >= opts.max_newton {
            return CenterOutcome::MaxIterations;
        }
        let s = c.slacks(x);
        let (grad, hess) = c.barrier_derivatives(x, &s, w, t);
        let dx = newton_direction(&hess, &grad, c.a);
        let dec = -grad.dot(&dx);
        if !dec.is_finite() || dec / 2.0 <= opts.newton_tol || inf_norm(&dx) <= 1e-14 * (1.0 + inf_norm(x)) {
            return CenterOutcome::Centered;
        }
        let gd = c.directional(x, &dx);
        let dw = DVector::from_iterator(s.len(), (0..s.len()).map(|l| 1.0 / s[l] - w[l] + w[l] / s[l] * gd[l]));
        let phi = c.barrier_value(x, t);
        let mut step = c.max_linear_step(&s, &dx);
        let damped = if dec <= LOCAL_DECREMENT { 1.0 / (1.0 + dec.sqrt()) } else { 0.0 };
        let noise = 1e-11 * (1.0 + t * c.objective.eval(x).abs());
        let mut accepted = false;
        while step > 1e-14 {
            let trial = &*x + &dx * step;
            let v = c.barrier_value(&trial, t);
            let sufficient = v < phi && v <= phi - opts.armijo * step * dec;
            let local = step <= damped && v <= phi + noise;
            if sufficient || local {
                if !sufficient {
                    stalled = if dec > 0.5 * last_local { stalled + 1 } else { 0 };
                    last_local = dec;
                }
                *x = trial;
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        *iters += 1;
        if !accepted || stalled >= LOCAL_STALL {
            return CenterOutcome::Centered;
        }
        let mut dual_step = 1.0_f64;
        for l in 0..w.len() {
            if dw[l] < 0.0 {
                dual_step = dual_step.min(-0.99 * w[l] / dw[l]);
            }
        }
        let s = c.slacks(x);
        for l in 0..w.len() {
            let target = 1.0 / s[l];
            w[l] = (w[l] + dual_step * dw[l]).clamp(target * 1e-4, target * 1e4);
        }
        if c.objective.eval(x) < opts.unbounded_below {
            return CenterOutcome::Unbounded;
        }
    }
}

struct BarrierRun {
    x: DVector<f64>,
    t: f64,
    iterations: usize,
    status: KernelStatus,
}

fn barrier(c: &Compiled, x0: DVector<f64>, opts: &KernelOptions, stop: impl Fn(&DVector<f64>) -> bool) -> BarrierRun {
    let mut t = initial_t(c, &x0, opts.t0);
    let mut x = x0;
    let mut iterations = 0;
    let p = c.n_ineq() as f64;
    let mut w = c.slacks(&x).map(|v| 1.0 / v);
    loop {
        match center(c, &mut x, &mut w, t, opts, &mut iterations, &stop) {
            CenterOutcome::Centered => {}
            CenterOutcome::Unbounded => return BarrierRun { x, t, iterations, status: KernelStatus::Unbounded },
            CenterOutcome::MaxIterations => {
                return BarrierRun { x, t, iterations, status: KernelStatus::MaxIterations }
            }
        }
        if p == 0.0 || stop(&x) || p / t <= opts.gap_tol * (1.0 + c.objective.eval(&x).abs()) {
            return BarrierRun { x, t, iterations, status: KernelStatus::Optimal };
        }
        t *= opts.mu;
        w *= opts.mu;
    }
}

/// Barrier parameter that best centers `x`: minimizes the Newton-norm of
/// `t∇f₀ + ∇φ` over `t`, clamped around `fallback`.
fn initial_t(c: &Compiled, x: &DVector<f64>, fallback: f64) -> f64 {
    if c.n_ineq() == 0 {
        return fallback;
    }
    let s = c.slacks(x);
    if s.iter().any(|&v| !(v > 0.0)) {
        return fallback;
    }
    let (gphi, hphi) = c.barrier_derivatives(x, &s, &s.map(|v| 1.0 / v), 0.0);
    let g0 = c.objective.grad(x);
    let d0 = newton_direction(&hphi, &g0, c.a);
    let dphi = newton_direction(&hphi, &gphi, c.a);
    let t = -g0.dot(&dphi) / g0.dot(&d0);
    let floor = c.n_ineq() as f64 / (1.0 + c.objective.eval(x).abs());
    let t = if t.is_finite() && t > 0.0 { t.max(floor) } else { floor.max(fallback) };
    t.clamp(fallback * 1e-6, fallback * 1e6)
}

fn project_onto_equalities(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 {
        return x.clone();
    }
    let r = a * x - b;
    x - linalg::min_norm_solve(a, &r)
}

/// Finds a strictly feasible point, starting from the projection of `hint`
/// (or the origin) onto `Ax = b`.
pub fn phase_one(p: &SmoothProgram, opts: &KernelOptions) -> Result<DVector<f64>> {
    phase_one_from(p, opts, None)
}

/// Like [`phase_one`], seeded at `hint`.
pub fn phase_one_with_hint(p: &SmoothProgram, opts: &KernelOptions, hint: &DVector<f64>) -> Result<DVector<f64>> {
    if hint.len() != p.n_vars() {
        return Err(Error::DimensionMismatch { expected: p.n_vars(), found: hint.len() });
    }
    phase_one_from(p, opts, Some(hint))
}

fn phase_one_from(p: &SmoothProgram, opts: &KernelOptions, hint: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let n = p.n_vars();
    let start = hint.cloned().unwrap_or_else(|| DVector::zeros(n));
    let x0 = project_onto_equalities(&p.eq_a, &p.eq_b, &start);
    if !linalg::all_finite(&x0) {
        return Err(Error::NonFinite);
    }
    if p.eq_a.nrows() > 0 && inf_norm(&(&p.eq_a * &x0 - &p.eq_b)) > 1e-8 * (1.0 + inf_norm(&p.eq_b)) {
        return Err(Error::Infeasible);
    }
    let worst = p.inequalities.iter().map(|g| g.eval(&x0)).fold(f64::NEG_INFINITY, f64::max);
    if p.inequalities.is_empty() || worst <= -opts.phase_one_margin {
        return Ok(x0);
    }

    // variables (x, s): minimize s  s.t.  gₗ(x) − s ≤ 0,  −s − 1 ≤ 0, and a
    // wide box around x₀ so the barrier has a center
    let mut ineqs: Vec<ConvexFunction> = p.inequalities.iter().map(|g| g.extended(n + 1, &[(n, -1.0)], 0.0)).collect();
    let mut cap = DVector::zeros(n + 1);
    cap[n] = -1.0;
    ineqs.push(ConvexFunction::Linear { c: cap, d: -1.0 });
    let radius = 1e6 * (1.0 + inf_norm(&x0));
    for j in 0..n {
        let mut e = DVector::zeros(n + 1);
        e[j] = 1.0;
        ineqs.push(ConvexFunction::Linear { c: e.clone(), d: -x0[j] - radius });
        ineqs.push(ConvexFunction::Linear { c: -e, d: x0[j] - radius });
    }
    let mut cost = DVector::zeros(n + 1);
    cost[n] = 1.0;
    let obj = ConvexFunction::Linear { c: cost, d: 0.0 };
    let mut a = DMatrix::zeros(p.eq_a.nrows(), n + 1);
    a.view_mut((0, 0), (p.eq_a.nrows(), n)).copy_from(&p.eq_a);
    let compiled = Compiled::new(&obj, &ineqs, &a);

    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(&x0);
    z0[n] = worst.max(-0.5) + 1.0;
    let inner = KernelOptions { max_newton: opts.max_newton.max(200), gap_tol: 1e-10, ..opts.clone() };
    let run = barrier(&compiled, z0, &inner, |z| z[n] <= -0.5);
    let s = run.x[n];
    if !(s <= -1e-9) || !linalg::all_finite(&run.x) {
        return Err(Error::Infeasible);
    }
    Ok(run.x.rows(0, n).into_owned())
}

/// Solves the program, starting from a phase-one point.
pub fn solve(p: &SmoothProgram, opts: &KernelOptions) -> Result<KernelSolution> {
    solve_with_hint(p, opts, None)
}

/// Like [`solve`]; `hint` seeds phase one and is used directly when it is
/// already strictly feasible.
pub fn solve_with_hint(p: &SmoothProgram, opts: &KernelOptions, hint: Option<&DVector<f64>>) -> Result<KernelSolution> {
    let n = p.n_vars();
    if let Some(h) = hint {
        if h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: h.len() });
        }
    }
    let x0 = match phase_one_from(p, opts, hint) {
        Ok(x) => x,
        Err(Error::Infeasible) => return Ok(infeasible_solution(p)),
        Err(e) => return Err(e),
    };
    let compiled = Compiled::new(&p.objective, &p.inequalities, &p.eq_a);
    let run = barrier(&compiled, x0, opts, |_| false);
    let l = p.inequalities.len();
    let s = compiled.slacks(&run.x);
    let lambda_c = DVector::from_iterator(s.len(), s.iter().map(|&v| 1.0 / (run.t * v)));
    let lambda = compiled.to_original(&lambda_c, l);
    let pi = equality_multipliers(p, &run.x, &lambda);
    let mut x = run.x;
    let mut lambda = lambda;
    let mut pi = pi;
    let mut degenerate = false;

    if run.status == KernelStatus::Optimal && opts.polish && l + p.eq_a.nrows() > 0 {
        let base = p.kkt_residuals(&x, &lambda, &pi).max();
        let slack_orig = compiled.to_original(&s, l);
        if let Some(pol) = polish(p, &x, &lambda, &pi, &slack_orig) {
            let res = p.kkt_residuals(&pol.x, &pol.lambda, &pol.pi).max();
            if res <= base.max(opts.tol) {
                x = pol.x;
                lambda = pol.lambda;
                pi = pol.pi;
                degenerate = pol.degenerate;
            }
        }
    }

    let residuals = p.kkt_residuals(&x, &lambda, &pi);
    let objective = p.objective.eval(&x);
    if run.status == KernelStatus::Optimal {
        hygiene::record_kernel(certify(p, &x, &lambda, &pi, opts.tol));
    }
    Ok(KernelSolution {
        status: run.status,
        objective,
        x,
        dual: DualCertificate { alpha: DVector::from_element(1, 1.0), sigma: lambda, pi, residuals },
        iterations: run.iterations,
        barrier_gap_final: l as f64 / run.t,
        dual_degenerate: degenerate,
    })
}

fn infeasible_solution(p: &SmoothProgram) -> KernelSolution {
    KernelSolution {
        status: KernelStatus::Infeasible,
        x: DVector::zeros(p.n_vars()),
        objective: f64::INFINITY,
        dual: DualCertificate {
            alpha: DVector::from_element(1, 1.0),
            sigma: DVector::zeros(p.inequalities.len()),
            pi: DVector::zeros(p.eq_a.nrows()),
            residuals: KktResiduals::default(),
        },
        iterations: 0,
        barrier_gap_final: f64::INFINITY,
        dual_degenerate: false,
    }
}

/// Independent re-check of an `Optimal` return: residuals within `tol`,
/// `λ ≥ −1e−12`, and Lagrangian gap `−Σλₗgₗ` within `1e−6·(1 + |f₀|)`.
pub fn certify(p: &SmoothProgram, x: &DVector<f64>, lambda: &DVector<f64>, pi: &DVector<f64>, tol: f64) -> bool {
    let r = p.kkt_residuals(x, lambda, pi);
    let f0 = p.objective.eval(x);
    let gap: f64 = -p.inequalities.iter().zip(lambda.iter()).map(|(g, &l)| l * g.eval(x)).sum::<f64>();
    r.max() <= tol && lambda.iter().all(|&l| l >= -1e-12) && gap.abs() <= 1e-6 * (1.0 + f0.abs())
}

fn equality_multipliers(p: &SmoothProgram, x: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    if p.eq_a.nrows() == 0 {
        return DVector::zeros(0);
    }
    let mut r = p.objective.grad(x);
    for (l, g) in p.inequalities.iter().enumerate() {
        if lambda[l] != 0.0 {
            r.axpy(lambda[l], &g.grad(x), 1.0);
        }
    }
    linalg::min_norm_solve(&p.eq_a.transpose(), &r)
}

const POLISH_ROUNDS: usize = 8;

struct Polished {
    x: DVector<f64>,
    lambda: DVector<f64>,
    pi: DVector<f64>,
    degenerate: bool,
}

/// Newton on `[∇f₀ + Σ_A λₗ∇gₗ − Aᵀπ; g_A(x); Ax − b] = 0` over the
/// estimated active set `A = {l : λₗ > sₗ}`.
fn polish(p: &SmoothProgram, x0: &DVector<f64>, lambda0: &DVector<f64>, pi0: &DVector<f64>, s: &DVector<f64>) -> Option<Polished> {
    let n = p.n_vars();
    let m = p.eq_a.nrows();
    let l_total = p.inequalities.len();
    let mut active: Vec<usize> = (0..l_total).filter(|&l| lambda0[l] > s[l]).collect();

    for _round in 0..POLISH_ROUNDS {
        let na = active.len();
        let dim = n + na + m;
        let mut x = x0.clone();
        let mut lam = DVector::from_iterator(na, active.iter().map(|&l| lambda0[l]));
        let mut pi = pi0.clone();
        let mut degenerate = false;
        for _ in 0..8 {
            let g0 = p.objective.grad(&x);
            let mut h = p.objective.hessian(&x);
            let mut jg = DMatrix::zeros(na, n);
            let mut f = DVector::zeros(dim);
            let mut stat = g0 - p.eq_a.tr_mul(&pi);
            for (k, &l) in active.iter().enumerate() {
                let g = &p.inequalities[l];
                let gg = g.grad(&x);
                stat.axpy(lam[k], &gg, 1.0);
                if !g.is_linear() {
                    h += g.hessian(&x) * lam[k];
                }
                jg.set_row(k, &gg.transpose());
                f[n + k] = g.eval(&x);
            }
            f.rows_mut(0, n).copy_from(&stat);
            f.rows_mut(n + na, m).copy_from(&(&p.eq_a * &x - &p.eq_b));
            if inf_norm(&f) <= 1e-14 * (1.0 + inf_norm(&x)) {
                break;
            }
            let mut j = DMatrix::zeros(dim, dim);
            j.view_mut((0, 0), (n, n)).copy_from(&h);
            j.view_mut((0, n), (n, na)).copy_from(&jg.transpose());
            j.view_mut((0, n + na), (n, m)).copy_from(&(-p.eq_a.transpose()));
            j.view_mut((n, 0), (na, n)).copy_from(&jg);
            j.view_mut((n + na, 0), (m, n)).copy_from(&p.eq_a);
            let rhs = -f;
            let lu_ok = j.clone().lu().solve(&rhs).filter(|d| {
                linalg::all_finite(d) && inf_norm(&(&j * d - &rhs)) <= 1e-10 * (1.0 + inf_norm(&rhs))
            });
            let d = match lu_ok {
                Some(d) => d,
                None => {
                    degenerate = true;
                    linalg::min_norm_solve(&j, &rhs)
                }
            };
            x += d.rows(0, n);
            lam += d.rows(n, na);
            pi += d.rows(n + na, m);
        }
        if !linalg::all_finite(&x) {
            return None;
        }
        if degenerate {
            if let Some((l2, p2)) = min_norm_multipliers(p, &x, &active) {
                lam = l2;
                pi = p2;
            }
        }
        let negative: Vec<usize> = (0..na).filter(|&k| lam[k] < -1e-10).collect();
        if !negative.is_empty() {
            active = active.iter().enumerate().filter(|(k, _)| !negative.contains(k)).map(|(_, &l)| l).collect();
            continue;
        }
        let feas_tol = 1e-9 * (1.0 + inf_norm(&x));
        let violated: Vec<usize> =
            (0..l_total).filter(|l| !active.contains(l) && p.inequalities[*l].eval(&x) > feas_tol).collect();
        if !violated.is_empty() {
            active.extend(violated);
            active.sort_unstable();
            continue;
        }
        let mut lambda = DVector::zeros(l_total);
        for (k, &l) in active.iter().enumerate() {
            lambda[l] = lam[k].max(0.0);
        }
        return Some(Polished { x, lambda, pi, degenerate });
    }
    None
}

/// Minimum-norm `(λ_A, π)` with `Σ_A λₗ∇gₗ − Aᵀπ = −∇f₀`, when it is
/// nonnegative on `A`.
fn min_norm_multipliers(p: &SmoothProgram, x: &DVector<f64>, active: &[usize]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = p.n_vars();
    let na = active.len();
    let m = p.eq_a.nrows();
    let mut j = DMatrix::zeros(n, na + m);
    for (k, &l) in active.iter().enumerate() {
        j.set_column(k, &p.inequalities[l].grad(x));
    }
    j.view_mut((0, na), (n, m)).copy_from(&(-p.eq_a.transpose()));
    let rhs = -p.objective.grad(x);
    let sol = linalg::min_norm_solve(&j, &rhs);
    if inf_norm(&(&j * &sol - &rhs)) > 1e-9 * (1.0 + inf_norm(&rhs)) {
        return None;
    }
    let lam = sol.rows(0, na).into_owned();
    if lam.iter().any(|&v| v < -1e-12) {
        return None;
    }
    Some((lam, sol.rows(na, m).into_owned()))
}
