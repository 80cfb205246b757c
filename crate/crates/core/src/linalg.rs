//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub(crate) fn l2_norm(v: &DVector<f64>) -> f64 {
    libm::sqrt(v.dot(v))
}

pub(crate) fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Numerical rank with singular values below `rel_tol * sigma_max` treated as zero.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Minimum-norm least-squares solution of `m x = rhs`.
pub(crate) fn min_norm_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let largest = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let eps = largest * 1e-13 * (m.nrows().max(m.ncols()) as f64);
    match svd.solve(rhs, eps) {
        Ok(x) if all_finite(&x) => x,
        _ => DVector::zeros(m.ncols()),
    }
}

/// Solves a symmetric positive (semi)definite system, regularizing the diagonal
/// when the plain Cholesky factorization breaks down.
pub(crate) fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        let x = ch.solve(rhs);
        if all_finite(&x) {
            return Some(x);
        }
    }
    let scale = 1.0 + (0..h.nrows()).fold(0.0_f64, |a, i| a.max(h[(i, i)].abs()));
    let mut reg = 1e-12 * scale;
    for _ in 0..4 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            let x = ch.solve(rhs);
            if all_finite(&x) {
                return Some(x);
            }
        }
        reg *= 100.0;
    }
    None
}

/// Solves a square system by partial-pivot LU, falling back to the
/// minimum-norm least-squares solution when the matrix is (near) singular.
pub(crate) fn solve_square(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(x) = m.clone().lu().solve(rhs) {
        if all_finite(&x) {
            let r = m * &x - rhs;
            if inf_norm(&r) <= 1e-9 * (1.0 + inf_norm(rhs)) {
                return x;
            }
        }
    }
    min_norm_solve(m, rhs)
}

/// Population variance of the given values (zero for an empty slice).
pub fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_on_rank_deficient_system() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rhs = DVector::from_vec(alloc::vec![2.0, 2.0]);
        let x = min_norm_solve(&m, &rhs);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let y = solve_square(&m, &rhs);
        assert!((y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_detection() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(numerical_rank(&m, 1e-10), 1);
        assert!(numerical_rank(&m, 1e-10) < m.nrows());
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(population_variance(&[0.5, 0.5, 0.5]), 0.0);
        assert!((population_variance(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
