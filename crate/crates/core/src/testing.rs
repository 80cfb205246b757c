//! Brute-force oracles over planar regions, for tests.

use nalgebra::DVector;

fn pt(x: f64, y: f64) -> DVector<f64> {
    DVector::from_column_slice(&[x, y])
}

/// Polar grid over the disk `‖x − c‖ ≤ r` with radial spacing `step`.
pub fn polar_grid_min(
    f: &impl Fn(&DVector<f64>) -> f64,
    feasible: &impl Fn(&DVector<f64>) -> bool,
    c: (f64, f64),
    r: f64,
    step: f64,
) -> (f64, DVector<f64>) {
    let mut best = (f64::INFINITY, pt(c.0, c.1));
    let rings = libm::ceil(r / step) as usize;
    for i in 0..=rings {
        let rho = r * i as f64 / rings as f64;
        let na = ((2.0 * core::f64::consts::PI * rho / step) as usize).max(1);
        for k in 0..na {
            let th = 2.0 * core::f64::consts::PI * k as f64 / na as f64;
            let x = pt(c.0 + rho * libm::cos(th), c.1 + rho * libm::sin(th));
            if feasible(&x) {
                let v = f(&x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
    }
    best
}

/// Minimizes `g(τ)` over `[lo, hi]` by repeatedly zooming a uniform grid.
pub fn zoom_min(g: &impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64) -> Option<(f64, f64)> {
    let n = 2000;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..40 {
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let tau = lo + h * i as f64;
            if let Some(v) = g(tau) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, tau));
                }
            }
        }
        let (_, tau) = best?;
        lo = (tau - 3.0 * h).max(lo);
        hi = (tau + 3.0 * h).min(hi);
        if h < 1e-15 {
            break;
        }
    }
    best
}

/// Minimum over the feasible part of the circle `‖x − c‖ = r`.
pub fn circle_min(
    f: &impl Fn(&DVector<f64>) -> f64,
    feasible: &impl Fn(&DVector<f64>) -> bool,
    c: (f64, f64),
    r: f64,
) -> (f64, DVector<f64>) {
    let at = |th: f64| pt(c.0 + r * libm::cos(th), c.1 + r * libm::sin(th));
    let g = |th: f64| {
        let x = at(th);
        feasible(&x).then(|| f(&x))
    };
    match zoom_min(&g, -core::f64::consts::PI, core::f64::consts::PI) {
        Some((v, th)) => (v, at(th)),
        None => (f64::INFINITY, pt(c.0, c.1)),
    }
}

/// Minimum over the feasible part of the line `aᵀx + d = 0` inside the disk.
pub fn line_min(
    f: &impl Fn(&DVector<f64>) -> f64,
    feasible: &impl Fn(&DVector<f64>) -> bool,
    a: &DVector<f64>,
    d: f64,
    c: (f64, f64),
    r: f64,
) -> (f64, DVector<f64>) {
    let norm2 = a.dot(a);
    if norm2 == 0.0 {
        return (f64::INFINITY, pt(c.0, c.1));
    }
    let center = pt(c.0, c.1);
    let foot = &center - a * ((a.dot(&center) + d) / norm2);
    let dir = pt(-a[1], a[0]) / libm::sqrt(norm2);
    let at = |tau: f64| &foot + &dir * tau;
    let g = |tau: f64| {
        let x = at(tau);
        feasible(&x).then(|| f(&x))
    };
    match zoom_min(&g, -2.0 * r, 2.0 * r) {
        Some((v, tau)) => (v, at(tau)),
        None => (f64::INFINITY, center),
    }
}
