use invmo_core::instances::*;
use invmo_core::*;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn example_points() -> Vec<DVector<f64>> {
    vec![example1_point_a(), example1_point_b(), example1_point_c(), example1_point_d(), example1_point_e()]
}

fn disk_instances(count: u64) -> Vec<(ForwardProblem, DVector<f64>)> {
    (0..count).map(|seed| random_disk_quadratic(seed, 2)).collect()
}

fn schemes(p: &ForwardProblem, xhat: &DVector<f64>) -> Vec<ScalingScheme> {
    vec![ScalingScheme::relative(p, xhat, 0).unwrap(), ScalingScheme::absolute(p.n_objectives()).unwrap()]
}

/// Zooming 1-D grid search over `[lo, hi]`.
fn zoom_1d(f: impl Fn(f64) -> Option<f64>, lo: f64, hi: f64) -> f64 {
    let n = 400;
    let (mut center, mut half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let mut best = f64::INFINITY;
    for _ in 0..60 {
        let h = 2.0 * half / n as f64;
        for i in 0..=n {
            let tau = center - half + h * i as f64;
            if let Some(v) = f(tau) {
                if v < best {
                    best = v;
                    center = tau;
                }
            }
        }
        half *= 0.5;
    }
    best
}

/// Minimum of a convex function over a polygon `{x : cₗᵀx + dₗ ≤ 0} ∩ [lo, hi]²`:
/// a zooming grid over the interior plus a 1-D search along every edge line.
fn polygon_min(
    f: impl Fn(&DVector<f64>) -> f64,
    rows: &[(DVector<f64>, f64)],
    lo: f64,
    hi: f64,
) -> f64 {
    let feasible = |x: &DVector<f64>, tol: f64| rows.iter().all(|(c, d)| c.dot(x) + d <= tol);
    let n = 100;
    let (mut cx, mut cy, mut half) = ((lo + hi) / 2.0, (lo + hi) / 2.0, (hi - lo) / 2.0);
    let mut best = f64::INFINITY;
    for _ in 0..50 {
        let h = 2.0 * half / n as f64;
        for i in 0..=n {
            for j in 0..=n {
                let x = DVector::from_column_slice(&[cx - half + h * i as f64, cy - half + h * j as f64]);
                if feasible(&x, 0.0) {
                    let v = f(&x);
                    if v < best {
                        best = v;
                        cx = x[0];
                        cy = x[1];
                    }
                }
            }
        }
        half *= 0.5;
    }
    let span = (hi - lo) * 2.0;
    for (c, d) in rows {
        let nn = c.dot(c);
        if nn == 0.0 {
            continue;
        }
        let x0 = c * (-d / nn);
        let u = DVector::from_column_slice(&[-c[1], c[0]]) / nn.sqrt();
        let on_edge = |tau: f64| {
            let x = &x0 + &u * tau;
            feasible(&x, 1e-9).then(|| f(&x))
        };
        best = best.min(zoom_1d(on_edge, -span - x0.amax(), span + x0.amax()));
    }
    best
}

#[test]
fn epigraph_lifting_preserves_forward_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let Ok((p, _)) = gen_planning(seed, 2, 3, 2) else { continue };
        let a = rng.random_range(0.05..0.95);
        let alpha = WeightVector::from_slice(&[a, 1.0 - a]).unwrap();
        let kernel_value = {
            let s = solve_fop(&p, &alpha).unwrap();
            alpha.as_vector().dot(&s.f)
        };
        let objective = |x: &DVector<f64>| alpha.as_vector().dot(&p.objective_values(x).unwrap());
        let mut rows: Vec<(DVector<f64>, f64)> = p
            .inequalities()
            .iter()
            .map(|g| match g {
                ConvexFunction::Linear { c, d } => (c.clone(), *d),
                _ => unreachable!("planning constraints are linear"),
            })
            .collect();
        for i in 0..2 {
            let mut c = DVector::zeros(2);
            c[i] = 1.0;
            rows.push((c, -4.0));
        }
        let oracle = polygon_min(objective, &rows, 0.0, 4.0);
        assert!((oracle - kernel_value).abs() <= 1e-4, "seed {seed}: oracle {oracle} kernel {kernel_value}");
        checked += 1;
    }
}

#[test]
fn resolving_at_imputed_weights_reproduces_weighted_value() {
    let p = example1();
    let mut cases: Vec<(ForwardProblem, DVector<f64>)> = example_points().into_iter().map(|x| (p.clone(), x)).collect();
    cases.extend(disk_instances(20));
    for (p, xhat) in &cases {
        for s in schemes(p, xhat) {
            let r = solve_iop(p, xhat, &s).unwrap();
            let gap = reoptimization_gap(p, &r.alpha, &r.x).unwrap();
            assert!(gap <= 1e-6, "gap {gap} at {xhat:?}");
        }
    }
}

#[test]
fn positive_weights_equalize_scaled_deviations() {
    for (p, xhat) in disk_instances(20) {
        for s in schemes(&p, &xhat) {
            let r = solve_iop(&p, &xhat, &s).unwrap();
            for k in 0..p.n_objectives() {
                if r.alpha.as_slice()[k] > 1e-7 {
                    assert!((r.ratios[k] - r.epsilon).abs() <= 1e-6);
                }
            }
            if r.verdict == PreservationVerdict::Perfect {
                let d = &r.f_xstar - &r.f_xhat;
                for a in 0..d.len() {
                    for b in 0..d.len() {
                        let lhs = s.pair_factor(a, b) * d[a];
                        assert!((lhs - d[b]).abs() <= 1e-6 * (1.0 + d[b].abs()));
                    }
                }
            }
        }
    }
}

#[test]
fn classical_weights_exist_exactly_when_ratio_is_one() {
    let p = example1();
    let mut cases: Vec<(ForwardProblem, DVector<f64>)> =
        [example1_point_a(), example1_point_b(), example1_point_d(), example1_point_e()]
            .into_iter()
            .map(|x| (p.clone(), x))
            .collect();
    for (q, xhat) in disk_instances(10) {
        let pareto = solve_fop(&q, &WeightVector::from_slice(&[0.3, 0.7]).unwrap()).unwrap().x;
        cases.push((q.clone(), pareto));
        cases.push((q, xhat));
    }
    for (p, xhat) in &cases {
        let classical = classical_inverse(p, xhat).unwrap();
        let r = solve_iop_relative(p, xhat).unwrap();
        let unit = (r.epsilon - 1.0).abs() <= 1e-6;
        assert_eq!(matches!(classical, ClassicalVerdict::Weights(_)), unit, "{xhat:?}: eps {}", r.epsilon);
    }
}

#[test]
fn linearized_bound_chain() {
    let p = example1();
    let mut cases = vec![(p.clone(), example1_point_b())];
    cases.extend(disk_instances(20));
    for (p, xhat) in &cases {
        for s in schemes(p, xhat) {
            let exact = solve_iop(p, xhat, &s).unwrap();
            let liop = solve_liop_detailed(&LiopInstance::at_xhat(p.clone(), xhat.clone(), s.clone())).unwrap();
            let norm = s.mu().dot(&liop.result.alpha_raw);
            assert!((norm - 1.0).abs() <= 1e-8);
            let trace = run_slp(p, xhat, &s, &SlpOptions::default()).unwrap();
            let slp = trace.final_result.as_ref().unwrap();
            if !liop.trust_binding {
                assert!(liop.result.epsilon <= exact.epsilon + 1e-8);
            }
            if !trace.final_trust_binding {
                assert!(slp.epsilon <= exact.epsilon + 1e-6, "slp {} exact {}", slp.epsilon, exact.epsilon);
                if !liop.trust_binding {
                    assert!(liop.result.epsilon <= slp.epsilon + 1e-8);
                }
            }
        }
    }
}

#[test]
fn slp_fixed_point_satisfies_exact_kkt() {
    for (p, xhat) in disk_instances(20) {
        for s in schemes(&p, &xhat) {
            let trace = run_slp(&p, &xhat, &s, &SlpOptions::default()).unwrap();
            assert_eq!(trace.termination, SlpTermination::StepNorm);
            let r = trace.final_result.as_ref().unwrap();
            assert!(iop_kkt_residual(&p, &xhat, r).unwrap() <= 1e-4);
            let accepted: Vec<f64> =
                trace.iterates.iter().enumerate().filter(|(i, it)| *i == 0 || it.accepted).map(|(_, it)| it.merit).collect();
            for w in accepted.windows(2) {
                assert!(w[1] <= w[0] - 1e-12);
            }
        }
    }
}

#[test]
fn zero_kes_penalty_exactly_when_classical_weights_exist() {
    let p = example1();
    let mut cases: Vec<(ForwardProblem, DVector<f64>)> =
        [example1_point_a(), example1_point_b(), example1_point_c()].into_iter().map(|x| (p.clone(), x)).collect();
    for (q, xhat) in disk_instances(10) {
        let pareto = solve_fop(&q, &WeightVector::from_slice(&[0.6, 0.4]).unwrap()).unwrap().x;
        cases.push((q.clone(), pareto));
        cases.push((q, xhat));
    }
    for (p, xhat) in &cases {
        let classical = matches!(classical_inverse(p, xhat).unwrap(), ClassicalVerdict::Weights(_));
        for penalty in [KesPenalty::SumOfSquares, KesPenalty::L1] {
            let kes = solve_kes(p, xhat, &KesConfig::new(penalty, KesNormalization::L1Unit)).unwrap();
            assert_eq!(kes.residuals.penalty_value <= 1e-8, classical, "{xhat:?} {penalty:?}");
        }
    }
}

#[test]
fn gap_penalty_bridges_on_random_instances() {
    let mut cases = disk_instances(20);
    cases.extend((0..20).map(|seed| random_linear(seed, 3, 3, 2)));
    for (p, xhat) in &cases {
        for s in schemes(p, xhat) {
            let (_, _, d) = kes_liop_bridge(p, xhat, &s).unwrap();
            assert!(d <= 1e-6);
        }
        for k in 0..p.n_objectives() {
            let (_, _, d) = kes_as_degenerate_iop(p, xhat, k).unwrap();
            assert!(d <= 1e-6);
        }
    }
}

#[test]
fn planning_generator_is_deterministic() {
    let (p1, i1) = gen_planning(42, 20, 50, 3).unwrap();
    let (p2, i2) = gen_planning(42, 20, 50, 3).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(i1, i2);
    let mut bytes = Vec::new();
    for d in i1.dose.iter().chain(core::iter::once(&i1.tumor_dose)) {
        bytes.extend(d.iter().flat_map(|v| v.to_bits().to_le_bytes()));
    }
    let mut again = Vec::new();
    for d in i2.dose.iter().chain(core::iter::once(&i2.tumor_dose)) {
        again.extend(d.iter().flat_map(|v| v.to_bits().to_le_bytes()));
    }
    assert_eq!(bytes, again);
}

#[test]
fn uniform_intensities_meet_the_beamlet_ratio_rows() {
    for seed in 0..5 {
        let (p, inst) = gen_planning(seed, 20, 50, 5).unwrap();
        let n = inst.n_beamlets();
        let e = DVector::from_element(n, 1.0);
        let m = membership(&p, &e).unwrap();
        assert_eq!(m.verdict, MembershipVerdict::Feasible);
        let first = p.n_inequalities() - 2 * n;
        for i in 0..n {
            assert!(p.inequalities()[first + i].evaluate(&e).unwrap() <= 1e-12);
        }
        assert!(inst.dose.iter().all(|d| d.iter().all(|&v| v >= 0.0)));
        assert!(inst.tumor_lower <= inst.tumor_upper);
    }
}

#[test]
fn planning_forward_solve_smoke() {
    let (p, _) = gen_planning(42, 20, 50, 3).unwrap();
    let alpha = WeightVector::from_slice(&[1.0; 3]).unwrap().normalized();
    let s = solve_fop(&p, &alpha).unwrap();
    assert_eq!(s.kernel.status, KernelStatus::Optimal);
    assert!(s.kernel.iterations <= 200, "{} iterations", s.kernel.iterations);
}
