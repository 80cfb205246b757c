//! Built-in and seeded synthetic forward problems.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ConvexFunction, ForwardProblem};

/// `f₁ = 4x₁² + x₂²`, `f₂ = x₁² + 4x₂²` over the disk `(x₁−2)² + (x₂−2)² ≤ 1`.
pub fn example1() -> ForwardProblem {
    let f1 = ConvexFunction::Quadratic {
        q: DMatrix::from_diagonal(&DVector::from_column_slice(&[8.0, 2.0])),
        c: DVector::zeros(2),
        d: 0.0,
    };
    let f2 = ConvexFunction::Quadratic {
        q: DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 8.0])),
        c: DVector::zeros(2),
        d: 0.0,
    };
    ForwardProblem::new(vec![f1, f2], vec![disk(2.0, 2.0, 1.0)]).expect("example problem is well formed")
}

/// `(x₁−a)² + (x₂−b)² − r² ≤ 0`.
pub(crate) fn disk(a: f64, b: f64, r: f64) -> ConvexFunction {
    ConvexFunction::Quadratic {
        q: DMatrix::identity(2, 2) * 2.0,
        c: DVector::from_column_slice(&[-2.0 * a, -2.0 * b]),
        d: a * a + b * b - r * r,
    }
}

/// The Pareto point `((4−√2)/2, (4−√2)/2)`.
pub fn example1_point_a() -> DVector<f64> {
    let v = (4.0 - libm::sqrt(2.0)) / 2.0;
    DVector::from_column_slice(&[v, v])
}

pub fn example1_point_b() -> DVector<f64> {
    DVector::from_column_slice(&[1.7, 1.3])
}

/// Lies outside the feasible disk.
pub fn example1_point_c() -> DVector<f64> {
    DVector::from_column_slice(&[1.0, 1.0])
}

pub fn example1_point_d() -> DVector<f64> {
    DVector::from_column_slice(&[1.725, 1.121])
}

pub fn example1_point_e() -> DVector<f64> {
    DVector::from_column_slice(&[1.789, 1.096])
}

/// Two-dimensional quadratics `½(x − cₖ)ᵀQₖ(x − cₖ) + 1` over the unit disk,
/// with an interior point `x̂`. Each center is placed so that `−∇fₖ(x̂)` points
/// outward at an angle of 0.2 to 0.8 rad from `x̂`, alternating sides, and
/// `‖cₖ‖ ∈ [2.5, 3.5]`. The negative gradients then span `x̂`, so the
/// linearized inverse problem at `x̂` is bounded.
pub fn random_disk_quadratic(seed: u64, k: usize) -> (ForwardProblem, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = rng.random_range(0.0..core::f64::consts::TAU);
    let rho = rng.random_range(0.3..0.8);
    let xhat = DVector::from_column_slice(&[rho * libm::cos(theta), rho * libm::sin(theta)]);
    let objectives = (0..k)
        .map(|j| {
            let l = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let q = (l.transpose() * &l * 0.3 + DMatrix::identity(2, 2)) * 2.0;
            let side = if j % 2 == 0 { 1.0 } else { -1.0 };
            let phi = theta + side * rng.random_range(0.2..0.8);
            let v = DVector::from_column_slice(&[libm::cos(phi), libm::sin(phi)]);
            let u = q.clone().cholesky().expect("positive definite").solve(&v);
            // ‖x̂ + s·u‖ = R for the positive root s
            let radius = rng.random_range(2.5..3.5);
            let (aa, bb, cc) = (u.dot(&u), 2.0 * xhat.dot(&u), xhat.dot(&xhat) - radius * radius);
            let s = (-bb + libm::sqrt(bb * bb - 4.0 * aa * cc)) / (2.0 * aa);
            let c = &xhat + u * s;
            let lin = -(&q * &c);
            let d = 0.5 * c.dot(&(&q * &c)) + 1.0;
            ConvexFunction::Quadratic { q, c: lin, d }
        })
        .collect();
    let p = ForwardProblem::new(objectives, vec![disk(0.0, 0.0, 1.0)]).expect("generated problem is well formed");
    (p, xhat)
}

/// Positive linear objectives over `{x ≥ 0, x ≤ 3e, Σxᵢ ≥ 1, aⱼᵀx ≥ bⱼ}` with
/// nonnegative cut normals. Returns the problem and an interior point.
pub fn random_linear(seed: u64, n: usize, k: usize, cuts: usize) -> (ForwardProblem, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objectives = (0..k)
        .map(|_| {
            let c = DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
            ConvexFunction::Linear { c, d: rng.random_range(0.0..1.0) }
        })
        .collect();
    let mut ineqs = Vec::new();
    for i in 0..n {
        let mut c = DVector::zeros(n);
        c[i] = -1.0;
        ineqs.push(ConvexFunction::Linear { c: c.clone(), d: 0.0 });
        ineqs.push(ConvexFunction::Linear { c: -c, d: -3.0 });
    }
    ineqs.push(ConvexFunction::Linear { c: DVector::from_element(n, -1.0), d: 1.0 });
    for _ in 0..cuts {
        let a = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let b = rng.random_range(0.5..1.0) * a.sum();
        ineqs.push(ConvexFunction::Linear { c: -a, d: b });
    }
    let p = ForwardProblem::new(objectives, ineqs).expect("generated problem is well formed");
    let xhat = DVector::from_fn(n, |_, _| rng.random_range(1.2..2.5));
    (p, xhat)
}

/// Multiplies each coordinate by `1 + noise·U` with `U` uniform on `[0, 1)`.
pub fn perturb(x: &DVector<f64>, noise: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.map(|v| v * (1.0 + noise * rng.random::<f64>()))
}

const STRUCTURE_NAMES: [&str; 5] = ["bladder", "rectum", "femur_l", "femur_r", "ring"];
const STRUCTURE_THRESHOLDS: [f64; 5] = [50.0, 50.0, 30.0, 30.0, 50.0];
const DOSE_UPPER: f64 = 81.9;
const TUMOR_MEAN: f64 = 80.0;

/// A synthetic fluence-map instance: hinge-squared dose objectives per
/// healthy structure, dose bounds, and the beamlet-to-mean ratio constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningInstance {
    pub names: Vec<String>,
    /// `Dₖ`, one per healthy structure (`mₖ × n`).
    pub dose: Vec<DMatrix<f64>>,
    pub thresholds: Vec<f64>,
    /// Upper dose bound per healthy structure.
    pub upper: Vec<f64>,
    pub tumor_dose: DMatrix<f64>,
    pub tumor_lower: f64,
    pub tumor_upper: f64,
    pub beta: f64,
}

impl PlanningInstance {
    pub fn n_beamlets(&self) -> usize {
        self.tumor_dose.ncols()
    }

    /// Forward problem: `fₖ = ‖(Dₖx − θₖe)₊‖²`, `Dₖx ≤ uₖ`,
    /// `l_T ≤ D_T x ≤ u_T`, `xᵢ − (β/n)Σxⱼ ≤ 0`, `−x ≤ 0`. Healthy lower
    /// bounds are zero and implied by `x ≥ 0`, so they are not emitted.
    pub fn forward_problem(&self) -> Result<ForwardProblem> {
        let n = self.n_beamlets();
        let mut objectives = Vec::with_capacity(self.dose.len());
        let mut ineqs = Vec::new();
        let row = |d: &DMatrix<f64>, i: usize, sign: f64, rhs: f64| ConvexFunction::Linear {
            c: d.row(i).transpose() * sign,
            d: -sign * rhs,
        };
        for (k, d) in self.dose.iter().enumerate() {
            objectives.push(ConvexFunction::hinge_squared(
                d.clone(),
                DVector::from_element(d.nrows(), self.thresholds[k]),
            )?);
            for i in 0..d.nrows() {
                ineqs.push(row(d, i, 1.0, self.upper[k]));
            }
        }
        for i in 0..self.tumor_dose.nrows() {
            ineqs.push(row(&self.tumor_dose, i, -1.0, self.tumor_lower));
            ineqs.push(row(&self.tumor_dose, i, 1.0, self.tumor_upper));
        }
        for i in 0..n {
            let mut c = DVector::from_element(n, -self.beta / n as f64);
            c[i] += 1.0;
            ineqs.push(ConvexFunction::Linear { c, d: 0.0 });
        }
        for i in 0..n {
            let mut c = DVector::zeros(n);
            c[i] = -1.0;
            ineqs.push(ConvexFunction::Linear { c, d: 0.0 });
        }
        ForwardProblem::new(objectives, ineqs)
    }
}

/// Seeded planning instance with `n` beamlets, `k` healthy structures and `m`
/// voxels per structure (the tumor included).
///
/// Healthy dose entries are `sₖ(0.5 + U)` with `sₖ = 1.2θₖ/n`, so the mean
/// structure dose at `x = e` is about `1.2θₖ`. Tumor entries are
/// `c(1 + 0.1U)` with mean dose 80 at `x = e`, and the tumor band is
/// `[0.95d̄, 1.05d̄]` around the mean tumor dose `d̄` at `x = e`.
pub fn gen_planning(seed: u64, n: usize, m: usize, k: usize) -> Result<(ForwardProblem, PlanningInstance)> {
    if n < 2 || m < 1 || k < 2 {
        return Err(Error::InvalidOption("planning instances need n ≥ 2, m ≥ 1 and K ≥ 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = Vec::with_capacity(k);
    let mut thresholds = Vec::with_capacity(k);
    let mut dose = Vec::with_capacity(k);
    for j in 0..k {
        names.push(match STRUCTURE_NAMES.get(j) {
            Some(s) => String::from(*s),
            None => format!("oar{}", j + 1),
        });
        let theta = STRUCTURE_THRESHOLDS[j % STRUCTURE_THRESHOLDS.len()];
        thresholds.push(theta);
        let s = 1.2 * theta / n as f64;
        dose.push(DMatrix::from_fn(m, n, |_, _| s * (0.5 + rng.random::<f64>())));
    }
    let c = TUMOR_MEAN / (1.05 * n as f64);
    let tumor_dose = DMatrix::from_fn(m, n, |_, _| c * (1.0 + 0.1 * rng.random::<f64>()));
    let at_e = tumor_dose.column_sum();
    let mean = at_e.mean();
    let inst = PlanningInstance {
        names,
        dose,
        thresholds,
        upper: vec![DOSE_UPPER; k],
        tumor_dose,
        tumor_lower: 0.95 * mean,
        tumor_upper: 1.05 * mean,
        beta: 2.0,
    };
    let p = inst.forward_problem()?;
    let e = DVector::from_element(n, 1.0);
    if p.constraint_values(&e).max() > 0.0 {
        return Err(Error::InstanceInfeasible);
    }
    Ok((p, inst))
}
