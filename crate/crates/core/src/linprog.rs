//! Dense two-phase primal simplex with dual extraction.
//!
//! Problems take the form
//!
//! ```text
//! minimize cᵀx  s.t.  Gx ≤ h,  Ax = b,  lo ≤ x ≤ hi
//! ```
//!
//! and the reported multipliers satisfy
//! `c + Gᵀy − Aᵀπ − z_lo + z_hi = 0` with `y, z_lo, z_hi ≥ 0`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hygiene;
use crate::linalg::{self, inf_norm};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 50;
const REINVERT_EVERY: usize = 100;
const REFRESH_ROUNDS: usize = 8;
/// Tolerance used by [`LpSolution::certify`].
pub const CERT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LinearProgram {
    /// Unconstrained program over free variables.
    pub fn new(cost: DVector<f64>) -> Self {
        let n = cost.len();
        LinearProgram {
            cost,
            g: DMatrix::zeros(0, n),
            h: DVector::zeros(0),
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.ncols() != self.n_vars() {
            return Err(Error::DimensionMismatch { expected: self.n_vars(), found: g.ncols() });
        }
        if g.nrows() != h.len() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), found: h.len() });
        }
        self.g = g;
        self.h = h;
        Ok(self)
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() != self.n_vars() {
            return Err(Error::DimensionMismatch { expected: self.n_vars(), found: a.ncols() });
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.len() });
        }
        self.a = a;
        self.b = b;
        Ok(self)
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let n = self.n_vars();
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lower.len().min(upper.len()) });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::InvalidOption("lower bound exceeds upper bound"));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    fn validate(&self) -> Result<()> {
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !linalg::all_finite(&self.cost)
            || !finite(&self.g)
            || !linalg::all_finite(&self.h)
            || !finite(&self.a)
            || !linalg::all_finite(&self.b)
        {
            return Err(Error::NonFinite);
        }
        if self.lower.iter().any(|v| *v == f64::INFINITY) || self.upper.iter().any(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidOption("infinite bound on the wrong side"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    /// `y ≥ 0`, one per row of `G`.
    pub dual_ineq: DVector<f64>,
    /// `π`, one per row of `A`.
    pub dual_eq: DVector<f64>,
    pub dual_lower: DVector<f64>,
    pub dual_upper: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Optimality measures for an LP solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpCertificate {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub stationarity: f64,
    pub duality_gap: f64,
    pub complementarity: f64,
}

impl LpCertificate {
    pub fn passes(&self, objective: f64) -> bool {
        let scale = 1.0 + objective.abs();
        self.primal_infeasibility <= CERT_TOL * scale
            && self.dual_infeasibility <= CERT_TOL * scale
            && self.stationarity <= CERT_TOL * scale
            && self.duality_gap <= CERT_TOL * scale
            && self.complementarity <= CERT_TOL * scale
    }
}

impl LpSolution {
    fn failed(lp: &LinearProgram, status: LpStatus, iterations: usize) -> Self {
        let n = lp.n_vars();
        LpSolution {
            status,
            x: DVector::zeros(n),
            dual_ineq: DVector::zeros(lp.g.nrows()),
            dual_eq: DVector::zeros(lp.a.nrows()),
            dual_lower: DVector::zeros(n),
            dual_upper: DVector::zeros(n),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            iterations,
        }
    }

    /// Value of the Lagrangian dual objective
    /// `−hᵀy + bᵀπ + loᵀz_lo − hiᵀz_hi` (infinite bounds contribute nothing).
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut v = -lp.h.dot(&self.dual_ineq) + lp.b.dot(&self.dual_eq);
        for j in 0..lp.n_vars() {
            if lp.lower[j].is_finite() {
                v += lp.lower[j] * self.dual_lower[j];
            }
            if lp.upper[j].is_finite() {
                v -= lp.upper[j] * self.dual_upper[j];
            }
        }
        v
    }

    /// Recomputes feasibility, stationarity, strong duality and complementary
    /// slackness from scratch.
    pub fn certify(&self, lp: &LinearProgram) -> LpCertificate {
        let x = &self.x;
        let slack = &lp.h - &lp.g * x;
        let eq = &lp.a * x - &lp.b;
        let mut primal = inf_norm(&eq);
        for s in slack.iter() {
            primal = primal.max(-s);
        }
        let mut dual_inf = 0.0_f64;
        let mut comp = 0.0_f64;
        for (i, &y) in self.dual_ineq.iter().enumerate() {
            dual_inf = dual_inf.max(-y);
            comp = comp.max((y * slack[i]).abs());
        }
        for j in 0..lp.n_vars() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            primal = primal.max(lo - x[j]).max(x[j] - hi);
            dual_inf = dual_inf.max(-self.dual_lower[j]).max(-self.dual_upper[j]);
            if lo.is_finite() {
                comp = comp.max((self.dual_lower[j] * (x[j] - lo)).abs());
            } else {
                dual_inf = dual_inf.max(self.dual_lower[j].abs());
            }
            if hi.is_finite() {
                comp = comp.max((self.dual_upper[j] * (hi - x[j])).abs());
            } else {
                dual_inf = dual_inf.max(self.dual_upper[j].abs());
            }
        }
        let r = &lp.cost + lp.g.tr_mul(&self.dual_ineq) - lp.a.tr_mul(&self.dual_eq) - &self.dual_lower
            + &self.dual_upper;
        LpCertificate {
            primal_infeasibility: primal.max(0.0),
            dual_infeasibility: dual_inf,
            stationarity: inf_norm(&r),
            duality_gap: (self.objective - self.dual_objective(lp)).abs(),
            complementarity: comp,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + w`; `bound_row` carries `w ≤ hi − lo`.
    Shift { lo: f64, col: usize, bound_row: Option<usize> },
    /// `x = hi − w`.
    Mirror { hi: f64, col: usize },
    /// `x = w⁺ − w⁻`.
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Ineq(usize),
    Bound(usize),
    Eq(usize),
}

struct StandardForm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: DVector<f64>,
    rows: Vec<RowKind>,
    sign: Vec<f64>,
    vars: Vec<VarMap>,
    art_start: usize,
    basis: Vec<usize>,
}

fn standard_form(lp: &LinearProgram) -> StandardForm {
    let n = lp.n_vars();
    let mut vars = Vec::with_capacity(n);
    let mut n_struct = 0;
    let mut n_bound = 0;
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let map = if lo.is_finite() {
            let bound_row = if hi.is_finite() {
                n_bound += 1;
                Some(n_bound - 1)
            } else {
                None
            };
            VarMap::Shift { lo, col: n_struct, bound_row }
        } else if hi.is_finite() {
            VarMap::Mirror { hi, col: n_struct }
        } else {
            n_struct += 1;
            VarMap::Split { pos: n_struct - 1, neg: n_struct }
        };
        n_struct += 1;
        vars.push(map);
    }

    let mut t = DMatrix::zeros(n, n_struct);
    let mut offset = DVector::zeros(n);
    for (j, m) in vars.iter().enumerate() {
        match *m {
            VarMap::Shift { lo, col, .. } => {
                t[(j, col)] = 1.0;
                offset[j] = lo;
            }
            VarMap::Mirror { hi, col } => {
                t[(j, col)] = -1.0;
                offset[j] = hi;
            }
            VarMap::Split { pos, neg } => {
                t[(j, pos)] = 1.0;
                t[(j, neg)] = -1.0;
            }
        }
    }

    let p = lp.g.nrows();
    let m_eq = lp.a.nrows();
    let n_rows = p + n_bound + m_eq;
    let n_slack = p + n_bound;
    let gs = &lp.g * &t;
    let hs = &lp.h - &lp.g * &offset;
    let as_ = &lp.a * &t;
    let bs = &lp.b - &lp.a * &offset;

    let mut rows = Vec::with_capacity(n_rows);
    let mut rhs = DVector::zeros(n_rows);
    let mut body = DMatrix::zeros(n_rows, n_struct + n_slack);
    for i in 0..p {
        body.view_mut((i, 0), (1, n_struct)).copy_from(&gs.row(i));
        body[(i, n_struct + i)] = 1.0;
        rhs[i] = hs[i];
        rows.push(RowKind::Ineq(i));
    }
    for (j, m) in vars.iter().enumerate() {
        if let VarMap::Shift { lo, col, bound_row: Some(r) } = *m {
            let i = p + r;
            body[(i, col)] = 1.0;
            body[(i, n_struct + i)] = 1.0;
            rhs[i] = lp.upper[j] - lo;
            rows.push(RowKind::Bound(j));
        }
    }
    for i in 0..m_eq {
        let r = n_slack + i;
        body.view_mut((r, 0), (1, n_struct)).copy_from(&as_.row(i));
        rhs[r] = bs[i];
        rows.push(RowKind::Eq(i));
    }

    let mut sign = vec![1.0; n_rows];
    for i in 0..n_rows {
        if rhs[i] < 0.0 {
            sign[i] = -1.0;
            rhs[i] = -rhs[i];
            body.row_mut(i).neg_mut();
        }
    }

    let art_start = n_struct + n_slack;
    let needs_art: Vec<usize> = (0..n_rows).filter(|&i| i >= n_slack || sign[i] < 0.0).collect();
    let ncol = art_start + needs_art.len();
    let mut a = DMatrix::zeros(n_rows, ncol);
    a.view_mut((0, 0), (n_rows, art_start)).copy_from(&body);
    let mut basis = vec![0; n_rows];
    for i in 0..n_slack {
        basis[i] = n_struct + i;
    }
    for (k, &i) in needs_art.iter().enumerate() {
        a[(i, art_start + k)] = 1.0;
        basis[i] = art_start + k;
    }

    let mut cost = DVector::zeros(ncol);
    cost.rows_mut(0, n_struct).copy_from(&t.tr_mul(&lp.cost));

    StandardForm { a, b: rhs, cost, rows, sign, vars, art_start, basis }
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    t: DMatrix<f64>,
    beta: DVector<f64>,
    basis: Vec<usize>,
    iterations: usize,
    since_reinvert: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let mut tab = Tableau {
            sf,
            t: sf.a.clone(),
            beta: sf.b.clone(),
            basis: sf.basis.clone(),
            iterations: 0,
            since_reinvert: 0,
        };
        tab.reinvert();
        tab
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.basis.len();
        let mut bm = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bm.set_column(k, &self.sf.a.column(j));
        }
        bm
    }

    fn reinvert(&mut self) {
        self.since_reinvert = 0;
        if self.basis.is_empty() {
            return;
        }
        let lu = self.basis_matrix().lu();
        if let (Some(t), Some(beta)) = (lu.solve(&self.sf.a), lu.solve(&self.sf.b)) {
            if t.iter().all(|v| v.is_finite()) && linalg::all_finite(&beta) {
                self.t = t;
                self.beta = beta;
            }
        }
    }

    fn reduced_costs(&self, cost: &DVector<f64>) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost[j]));
        cost - self.t.tr_mul(&cb)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.t[(r, q)];
        let m = self.t.nrows();
        let ncol = self.t.ncols();
        let colq: Vec<f64> = self.t.column(q).iter().copied().collect();
        for j in 0..ncol {
            let v = self.t[(r, j)] / piv;
            self.t[(r, j)] = v;
            if v != 0.0 {
                for i in 0..m {
                    if i != r && colq[i] != 0.0 {
                        self.t[(i, j)] -= colq[i] * v;
                    }
                }
            }
        }
        let br = self.beta[r] / piv;
        self.beta[r] = br;
        for i in 0..m {
            if i != r {
                self.beta[i] -= colq[i] * br;
            }
        }
        for i in 0..m {
            if i != r {
                self.t[(i, q)] = 0.0;
            }
        }
        self.t[(r, q)] = 1.0;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_reinvert += 1;
        if self.since_reinvert >= REINVERT_EVERY {
            self.reinvert();
        }
    }

    fn run(&mut self, cost: &DVector<f64>, max_iter: usize, scale: f64) -> PhaseOutcome {
        let art = self.sf.art_start;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= max_iter {
                return PhaseOutcome::IterationLimit;
            }
            let d = self.reduced_costs(cost);
            let bland = degenerate_run >= BLAND_AFTER;
            let mut entering = None;
            let mut best = -OPT_TOL * scale;
            for j in 0..art {
                if d[j] < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d[j];
                }
            }
            let q = match entering {
                Some(q) => q,
                None => return PhaseOutcome::Optimal,
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[(i, q)];
                if a > PIVOT_TOL {
                    let ratio = self.beta[i].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio);
                            if ratio < best_ratio && !tie || tie && self.basis[i] < self.basis[r] {
                                Some((i, ratio))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let (r, ratio) = match leave {
                Some(l) => l,
                None => return PhaseOutcome::Unbounded,
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
        }
    }

    /// Moves zero-level artificials out of the basis wherever a structural or
    /// slack column can replace them.
    fn drive_out_artificials(&mut self) {
        let art = self.sf.art_start;
        for i in 0..self.basis.len() {
            if self.basis[i] < art {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art {
                let v = self.t[(i, j)].abs();
                if v > PIVOT_TOL && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(i, j);
            }
        }
    }
}

/// Solves `lp` by the two-phase simplex method. Never fails on solver
/// verdicts; they are reported through [`LpSolution::status`].
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let sf = standard_form(lp);
    let m = sf.a.nrows();
    let ncol = sf.a.ncols();
    let max_iter = 50_000.max(20 * (m + ncol));

    let mut tab = Tableau::new(&sf);
    if sf.art_start < ncol {
        let mut c1 = DVector::zeros(ncol);
        for j in sf.art_start..ncol {
            c1[j] = 1.0;
        }
        match tab.run(&c1, max_iter, 1.0 + inf_norm(&c1)) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::IterationLimit => return Ok(LpSolution::failed(lp, LpStatus::IterationLimit, tab.iterations)),
            PhaseOutcome::Unbounded => unreachable!("phase-one objective is bounded below"),
        }
        tab.reinvert();
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= sf.art_start).map(|i| tab.beta[i].max(0.0)).sum();
        if infeas > PHASE_ONE_TOL * inf_norm(&sf.b).max(1.0) {
            return Ok(LpSolution::failed(lp, LpStatus::Infeasible, tab.iterations));
        }
        tab.drive_out_artificials();
    }
    let cost_scale = 1.0 + inf_norm(&sf.cost);
    for round in 0..REFRESH_ROUNDS {
        let before = tab.iterations;
        let scale = if round == 0 { cost_scale } else { 1.0 };
        match tab.run(&sf.cost, max_iter, scale) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => return Ok(LpSolution::failed(lp, LpStatus::Unbounded, tab.iterations)),
            PhaseOutcome::IterationLimit => return Ok(LpSolution::failed(lp, LpStatus::IterationLimit, tab.iterations)),
        }
        if round > 0 && tab.iterations == before && tab.since_reinvert == 0 {
            break;
        }
        tab.reinvert();
    }

    let bm = tab.basis_matrix();
    let lu = bm.clone().lu();
    let xb = lu.solve(&sf.b).unwrap_or_else(|| tab.beta.clone());
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| sf.cost[j]));
    let ybar = bm.transpose().lu().solve(&cb).unwrap_or_else(|| linalg::min_norm_solve(&bm.transpose(), &cb));

    let mut w = DVector::zeros(ncol);
    for (i, &j) in tab.basis.iter().enumerate() {
        w[j] = xb[i].max(0.0);
    }
    let sol = recover(lp, &sf, &w, &ybar, tab.iterations);
    Ok(sol)
}

fn recover(lp: &LinearProgram, sf: &StandardForm, w: &DVector<f64>, ybar: &DVector<f64>, iterations: usize) -> LpSolution {
    let n = lp.n_vars();
    let mut x = DVector::zeros(n);
    for (j, m) in sf.vars.iter().enumerate() {
        x[j] = match *m {
            VarMap::Shift { lo, col, .. } => lo + w[col],
            VarMap::Mirror { hi, col } => hi - w[col],
            VarMap::Split { pos, neg } => w[pos] - w[neg],
        };
    }
    let mut y = DVector::zeros(lp.g.nrows());
    let mut pi = DVector::zeros(lp.a.nrows());
    let mut z_hi = DVector::zeros(n);
    for (i, kind) in sf.rows.iter().enumerate() {
        let v = sf.sign[i] * ybar[i];
        match *kind {
            RowKind::Ineq(r) => y[r] = -v,
            RowKind::Bound(j) => z_hi[j] = -v,
            RowKind::Eq(r) => pi[r] = v,
        }
    }
    let r = &lp.cost + lp.g.tr_mul(&y) - lp.a.tr_mul(&pi);
    let mut z_lo = DVector::zeros(n);
    for (j, m) in sf.vars.iter().enumerate() {
        match *m {
            VarMap::Shift { .. } => z_lo[j] = r[j] + z_hi[j],
            VarMap::Mirror { .. } => z_hi[j] = -r[j],
            VarMap::Split { .. } => {}
        }
    }
    let objective = lp.cost.dot(&x);
    let sol = LpSolution {
        status: LpStatus::Optimal,
        x,
        dual_ineq: y,
        dual_eq: pi,
        dual_lower: z_lo,
        dual_upper: z_hi,
        objective,
        iterations,
    };
    hygiene::record_lp(sol.certify(lp).passes(objective));
    sol
}
