//! Forward-problem domain types: structured convex functions with exact
//! calculus, the multi-objective forward problem, weight vectors, trade-off
//! scaling schemes and dual certificates.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest eigenvalue accepted for a symmetrized quadratic term.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Objective values at or below this are rejected by the relative scheme.
pub const POSITIVITY_THRESHOLD: f64 = 1e-12;
/// Relative singular-value cutoff for the equality rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A convex function drawn from the closed class the solvers understand.
///
/// * `Linear`: `cᵀx + d`
/// * `Quadratic`: `½ xᵀQx + cᵀx + d` with `Q` symmetric PSD
/// * `HingeSquared`: `‖(Mx − t)₊‖²`
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    Linear {
        c: DVector<f64>,
        d: f64,
    },
    Quadratic {
        q: DMatrix<f64>,
        c: DVector<f64>,
        d: f64,
    },
    HingeSquared {
        m: DMatrix<f64>,
        t: DVector<f64>,
    },
}

impl ConvexFunction {
    pub fn linear(c: DVector<f64>, d: f64) -> Result<Self> {
        if !linalg::all_finite(&c) || !d.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(ConvexFunction::Linear { c, d })
    }

    /// Builds `½ xᵀQx + cᵀx + d`. `Q` is symmetrized; inputs whose smallest
    /// eigenvalue falls below `-PSD_TOLERANCE` are rejected.
    pub fn quadratic(q: DMatrix<f64>, c: DVector<f64>, d: f64) -> Result<Self> {
        let n = c.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.nrows() });
        }
        if q.iter().any(|v| !v.is_finite()) || !linalg::all_finite(&c) || !d.is_finite() {
            return Err(Error::NonFinite);
        }
        let q = (&q + q.transpose()) * 0.5;
        check_psd(&q)?;
        Ok(ConvexFunction::Quadratic { q, c, d })
    }

    /// Builds `‖(Mx − t)₊‖²`.
    pub fn hinge_squared(m: DMatrix<f64>, t: DVector<f64>) -> Result<Self> {
        if m.nrows() != t.len() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: t.len() });
        }
        if m.iter().any(|v| !v.is_finite()) || !linalg::all_finite(&t) {
            return Err(Error::NonFinite);
        }
        Ok(ConvexFunction::HingeSquared { m, t })
    }

    /// Number of variables the function acts on.
    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Linear { c, .. } | ConvexFunction::Quadratic { c, .. } => c.len(),
            ConvexFunction::HingeSquared { m, .. } => m.ncols(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ConvexFunction::Linear { .. })
    }

    pub fn is_hinge(&self) -> bool {
        matches!(self, ConvexFunction::HingeSquared { .. })
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// Exact function value.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval(x))
    }

    /// Exact gradient.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.grad(x))
    }

    pub(crate) fn eval(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConvexFunction::Linear { c, d } => c.dot(x) + d,
            ConvexFunction::Quadratic { q, c, d } => 0.5 * x.dot(&(q * x)) + c.dot(x) + d,
            ConvexFunction::HingeSquared { m, t } => {
                let r = m * x - t;
                r.iter().map(|&v| if v > 0.0 { v * v } else { 0.0 }).sum()
            }
        }
    }

    pub(crate) fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexFunction::Linear { c, .. } => c.clone(),
            ConvexFunction::Quadratic { q, c, .. } => q * x + c,
            ConvexFunction::HingeSquared { m, t } => {
                let r = (m * x - t).map(|v| if v > 0.0 { v } else { 0.0 });
                m.tr_mul(&r) * 2.0
            }
        }
    }

    /// Hessian (the generalized one for hinge-squared terms).
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            ConvexFunction::Linear { c, .. } => DMatrix::zeros(c.len(), c.len()),
            ConvexFunction::Quadratic { q, .. } => q.clone(),
            ConvexFunction::HingeSquared { m, t } => {
                let r = m * x - t;
                let mut active = m.clone();
                for (i, &ri) in r.iter().enumerate() {
                    if ri <= 0.0 {
                        active.row_mut(i).fill(0.0);
                    }
                }
                active.tr_mul(&active) * 2.0
            }
        }
    }

    /// Re-expresses the function on `n_total ≥ dim` variables (the original
    /// variables come first), adding `Σ coef·x_idx + shift`.
    pub(crate) fn extended(&self, n_total: usize, extra: &[(usize, f64)], shift: f64) -> ConvexFunction {
        let n = self.dim();
        debug_assert!(n_total >= n);
        match self {
            ConvexFunction::Linear { c, d } => {
                let mut cc = DVector::zeros(n_total);
                cc.rows_mut(0, n).copy_from(c);
                for &(i, v) in extra {
                    cc[i] += v;
                }
                ConvexFunction::Linear { c: cc, d: d + shift }
            }
            ConvexFunction::Quadratic { q, c, d } => {
                let mut qq = DMatrix::zeros(n_total, n_total);
                qq.view_mut((0, 0), (n, n)).copy_from(q);
                let mut cc = DVector::zeros(n_total);
                cc.rows_mut(0, n).copy_from(c);
                for &(i, v) in extra {
                    cc[i] += v;
                }
                ConvexFunction::Quadratic { q: qq, c: cc, d: d + shift }
            }
            ConvexFunction::HingeSquared { m, t } => {
                debug_assert!(extra.is_empty() && shift == 0.0);
                let mut mm = DMatrix::zeros(m.nrows(), n_total);
                mm.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
                ConvexFunction::HingeSquared { m: mm, t: t.clone() }
            }
        }
    }

    /// `Σ wᵢ fᵢ` for linear/quadratic terms sharing a dimension.
    pub(crate) fn weighted_sum(terms: &[(f64, &ConvexFunction)], n: usize) -> ConvexFunction {
        let mut q: Option<DMatrix<f64>> = None;
        let mut c = DVector::zeros(n);
        let mut d = 0.0;
        for &(w, f) in terms {
            if w == 0.0 {
                continue;
            }
            match f {
                ConvexFunction::Linear { c: fc, d: fd } => {
                    c.axpy(w, fc, 1.0);
                    d += w * fd;
                }
                ConvexFunction::Quadratic { q: fq, c: fc, d: fd } => {
                    match q.as_mut() {
                        Some(acc) => *acc += fq * w,
                        None => q = Some(fq * w),
                    }
                    c.axpy(w, fc, 1.0);
                    d += w * fd;
                }
                ConvexFunction::HingeSquared { .. } => unreachable!("hinge terms are lifted first"),
            }
        }
        match q {
            Some(q) => ConvexFunction::Quadratic { q, c, d },
            None => ConvexFunction::Linear { c, d },
        }
    }
}

fn check_psd(q: &DMatrix<f64>) -> Result<()> {
    let n = q.nrows();
    if n == 0 {
        return Ok(());
    }
    let mut shifted = q.clone();
    for i in 0..n {
        shifted[(i, i)] += PSD_TOLERANCE;
    }
    if shifted.cholesky().is_some() {
        return Ok(());
    }
    let min_eigenvalue = q.clone().symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min_eigenvalue >= -PSD_TOLERANCE {
        Ok(())
    } else {
        Err(Error::NotPsd { min_eigenvalue })
    }
}

/// `minimize Σ αₖ fₖ(x)  s.t.  gₗ(x) ≤ 0,  A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProblem {
    objectives: Vec<ConvexFunction>,
    inequalities: Vec<ConvexFunction>,
    eq_a: DMatrix<f64>,
    eq_b: DVector<f64>,
    n_vars: usize,
}

impl ForwardProblem {
    /// Builds a problem without equality constraints.
    pub fn new(objectives: Vec<ConvexFunction>, inequalities: Vec<ConvexFunction>) -> Result<Self> {
        let n = objectives.first().ok_or(Error::NoObjectives)?.dim();
        Self::with_equalities(objectives, inequalities, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn with_equalities(
        objectives: Vec<ConvexFunction>,
        inequalities: Vec<ConvexFunction>,
        eq_a: DMatrix<f64>,
        eq_b: DVector<f64>,
    ) -> Result<Self> {
        let n_vars = objectives.first().ok_or(Error::NoObjectives)?.dim();
        for f in objectives.iter().chain(inequalities.iter()) {
            if f.dim() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, found: f.dim() });
            }
            if let ConvexFunction::Quadratic { q, .. } = f {
                check_psd(q)?;
            }
        }
        if inequalities.iter().any(ConvexFunction::is_hinge) {
            return Err(Error::HingeConstraint);
        }
        if eq_a.ncols() != n_vars {
            return Err(Error::DimensionMismatch { expected: n_vars, found: eq_a.ncols() });
        }
        if eq_a.nrows() != eq_b.len() {
            return Err(Error::DimensionMismatch { expected: eq_a.nrows(), found: eq_b.len() });
        }
        if eq_a.iter().any(|v| !v.is_finite()) || !linalg::all_finite(&eq_b) {
            return Err(Error::NonFinite);
        }
        if eq_a.nrows() > 0 {
            let rank = linalg::numerical_rank(&eq_a, RANK_TOLERANCE);
            if rank < eq_a.nrows() {
                return Err(Error::RankDeficient { rank, rows: eq_a.nrows() });
            }
        }
        Ok(ForwardProblem { objectives, inequalities, eq_a, eq_b, n_vars })
    }

    pub fn objectives(&self) -> &[ConvexFunction] {
        &self.objectives
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

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn n_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.eq_a.nrows()
    }

    /// True when every objective and constraint is affine.
    pub fn is_linear(&self) -> bool {
        self.objectives.iter().chain(self.inequalities.iter()).all(ConvexFunction::is_linear)
    }

    /// Same problem restricted to the listed objectives, without re-validation.
    pub(crate) fn with_objective_subset(&self, keep: &[usize]) -> ForwardProblem {
        ForwardProblem {
            objectives: keep.iter().map(|&k| self.objectives[k].clone()).collect(),
            inequalities: self.inequalities.clone(),
            eq_a: self.eq_a.clone(),
            eq_b: self.eq_b.clone(),
            n_vars: self.n_vars,
        }
    }

    pub(crate) fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: x.len() });
        }
        if !linalg::all_finite(x) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Objective vector `f(x)`.
    pub fn objective_values(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        Ok(self.objective_values_unchecked(x))
    }

    pub(crate) fn objective_values_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.objectives.len(), self.objectives.iter().map(|f| f.eval(x)))
    }

    pub(crate) fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.inequalities.len(), self.inequalities.iter().map(|g| g.eval(x)))
    }

    pub(crate) fn eq_residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.eq_a * x - &self.eq_b
    }

    /// Replaces every hinge-squared objective `‖(Mx − t)₊‖²` by `‖z‖²` over
    /// auxiliary variables `z` with `z ≥ Mx − t` and `z ≥ 0`.
    ///
    /// The lifted problem lists the original inequalities first, followed by
    /// the `Mx − t − z ≤ 0` rows and then the `−z ≤ 0` rows of each lifted
    /// objective in turn.
    pub fn epigraph_reformulate(&self) -> LiftedProblem {
        let n = self.n_vars;
        let extra: usize = self
            .objectives
            .iter()
            .map(|f| match f {
                ConvexFunction::HingeSquared { m, .. } => m.nrows(),
                _ => 0,
            })
            .sum();
        if extra == 0 {
            return LiftedProblem { problem: self.clone(), n_original: n, blocks: Vec::new() };
        }
        let total = n + extra;
        let mut objectives = Vec::with_capacity(self.objectives.len());
        let mut inequalities: Vec<ConvexFunction> =
            self.inequalities.iter().map(|g| g.extended(total, &[], 0.0)).collect();
        let mut blocks = Vec::new();
        let mut offset = n;
        for (k, f) in self.objectives.iter().enumerate() {
            match f {
                ConvexFunction::HingeSquared { m, t } => {
                    let rows = m.nrows();
                    let mut q = DMatrix::zeros(total, total);
                    for i in 0..rows {
                        q[(offset + i, offset + i)] = 2.0;
                    }
                    objectives.push(ConvexFunction::Quadratic { q, c: DVector::zeros(total), d: 0.0 });
                    for i in 0..rows {
                        let mut c = DVector::zeros(total);
                        c.rows_mut(0, n).copy_from(&m.row(i).transpose());
                        c[offset + i] = -1.0;
                        inequalities.push(ConvexFunction::Linear { c, d: -t[i] });
                    }
                    for i in 0..rows {
                        let mut c = DVector::zeros(total);
                        c[offset + i] = -1.0;
                        inequalities.push(ConvexFunction::Linear { c, d: 0.0 });
                    }
                    blocks.push(LiftBlock { objective: k, offset, rows });
                    offset += rows;
                }
                other => objectives.push(other.extended(total, &[], 0.0)),
            }
        }
        let mut eq_a = DMatrix::zeros(self.eq_a.nrows(), total);
        eq_a.view_mut((0, 0), (self.eq_a.nrows(), n)).copy_from(&self.eq_a);
        let problem = ForwardProblem {
            objectives,
            inequalities,
            eq_a,
            eq_b: self.eq_b.clone(),
            n_vars: total,
        };
        LiftedProblem { problem, n_original: n, blocks }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LiftBlock {
    objective: usize,
    offset: usize,
    rows: usize,
}

/// A forward problem with all hinge-squared objectives lifted, plus the map
/// between lifted and original variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub problem: ForwardProblem,
    pub n_original: usize,
    blocks: Vec<LiftBlock>,
}

impl LiftedProblem {
    pub fn is_identity(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Drops the auxiliary coordinates.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.n_original).into_owned()
    }

    /// Embeds an original point, setting each auxiliary block to
    /// `(Mx − t)₊ + pad`.
    pub fn lift(&self, original: &ForwardProblem, x: &DVector<f64>, pad: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.problem.n_vars());
        out.rows_mut(0, self.n_original).copy_from(x);
        for b in &self.blocks {
            if let ConvexFunction::HingeSquared { m, t } = &original.objectives[b.objective] {
                let r = m * x - t;
                for i in 0..b.rows {
                    out[b.offset + i] = r[i].max(0.0) + pad;
                }
            }
        }
        out
    }
}

/// A nonnegative, not identically zero weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(alpha: DVector<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidWeights);
        }
        if alpha.iter().all(|a| *a == 0.0) {
            return Err(Error::ZeroWeightVector);
        }
        Ok(WeightVector(alpha))
    }

    pub fn from_slice(alpha: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(alpha))
    }

    /// Clamps tiny negative entries produced by solvers to zero, then validates.
    pub(crate) fn from_multipliers(alpha: &DVector<f64>) -> Result<Self> {
        Self::new(alpha.map(|a| if a < 0.0 { 0.0 } else { a }))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// L1-normalized copy (entries sum to one).
    pub fn normalized(&self) -> WeightVector {
        let s: f64 = self.0.sum();
        WeightVector(&self.0 / s)
    }

    /// L∞ distance between the L1-normalized forms.
    pub fn distance(&self, other: &WeightVector) -> f64 {
        linalg::inf_norm(&(self.normalized().0 - other.normalized().0))
    }
}

/// Which family of trade-off scaling factors is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    General,
    Relative,
    Absolute,
}

/// Trade-off scaling factors `μₖ = u_{k̃k}` against a reference objective `k̃`;
/// pairwise factors are `u_{k₁k₂} = μ_{k₂}/μ_{k₁}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingScheme {
    kind: SchemeKind,
    mu: DVector<f64>,
    reference: usize,
    /// `f(x̂)` for relative schemes.
    anchor: Option<DVector<f64>>,
}

impl ScalingScheme {
    /// `μ = e`.
    pub fn absolute(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::NoObjectives);
        }
        Ok(ScalingScheme { kind: SchemeKind::Absolute, mu: DVector::from_element(k, 1.0), reference: 0, anchor: None })
    }

    /// User-supplied factors. Zero entries turn the matching trade-off row into
    /// a hard constraint `fₖ(x) ≤ fₖ(x̂)`.
    pub fn general(mu: DVector<f64>, reference: usize) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::NoObjectives);
        }
        if reference >= mu.len() {
            return Err(Error::IndexOutOfRange { index: reference, len: mu.len() });
        }
        if mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidScheme("scaling factors must be finite and nonnegative"));
        }
        if mu.iter().all(|m| *m == 0.0) {
            return Err(Error::InvalidScheme("at least one scaling factor must be positive"));
        }
        Ok(ScalingScheme { kind: SchemeKind::General, mu, reference, anchor: None })
    }

    /// `μₖ = fₖ(x̂)/f_{k̃}(x̂)`; needs every `fₖ(x̂) > POSITIVITY_THRESHOLD`.
    pub fn relative(p: &ForwardProblem, xhat: &DVector<f64>, reference: usize) -> Result<Self> {
        let k = p.n_objectives();
        if reference >= k {
            return Err(Error::IndexOutOfRange { index: reference, len: k });
        }
        let fx = p.objective_values(xhat)?;
        for (index, &value) in fx.iter().enumerate() {
            if value <= POSITIVITY_THRESHOLD {
                return Err(Error::NonPositiveObjective { index, value });
            }
        }
        let mu = &fx / fx[reference];
        Ok(ScalingScheme { kind: SchemeKind::Relative, mu, reference, anchor: Some(fx) })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Objective values at the bound input point, for relative schemes.
    pub fn anchor(&self) -> Option<&DVector<f64>> {
        self.anchor.as_ref()
    }

    /// Pairwise factor `u_{k₁k₂} = μ_{k₂}/μ_{k₁}`.
    pub fn pair_factor(&self, k1: usize, k2: usize) -> f64 {
        self.mu[k2] / self.mu[k1]
    }

    /// Same scheme with every factor multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidScheme("scale must be positive"));
        }
        Ok(ScalingScheme { kind: SchemeKind::General, mu: &self.mu * c, reference: self.reference, anchor: None })
    }
}

/// Residual summary of a KKT system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub complementarity: f64,
    pub feasibility: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.feasibility)
    }
}

/// Multipliers of an inverse or forward solve: `alpha` on the objective or
/// trade-off rows, `sigma ≥ 0` on `gₗ`, `pi` on the equality rows (entering
/// stationarity as `−Aᵀπ`).
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub alpha: DVector<f64>,
    pub sigma: DVector<f64>,
    pub pi: DVector<f64>,
    pub residuals: KktResiduals,
}
