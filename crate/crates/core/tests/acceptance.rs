//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::time::{Duration, Instant};

use invmo_core::hygiene;
use invmo_core::instances::*;
use invmo_core::linear_inverse::SlpTermination;
use invmo_core::*;
use nalgebra::DVector;
use std::result::Result as StdResult;

type Check = StdResult<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> StdResult<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: invmo_core::Result<T>, what: &str) -> StdResult<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn example_points() -> Vec<DVector<f64>> {
    vec![example1_point_a(), example1_point_b(), example1_point_c(), example1_point_d(), example1_point_e()]
}

fn disk_instances(count: u64) -> Vec<(ForwardProblem, DVector<f64>)> {
    (0..count).map(|seed| random_disk_quadratic(seed, 2)).collect()
}

fn schemes(p: &ForwardProblem, xhat: &DVector<f64>) -> StdResult<Vec<ScalingScheme>, String> {
    Ok(vec![ok(ScalingScheme::relative(p, xhat, 0), "relative scheme")?, ok(ScalingScheme::absolute(p.n_objectives()), "absolute scheme")?])
}

fn kes_fixed(k: usize) -> KesConfig {
    KesConfig::new(KesPenalty::SumOfSquares, KesNormalization::FixWeight(k))
}

fn worked_residual_example() -> Check {
    let p = example1();
    let xb = example1_point_b();
    let mut detail = Vec::new();
    for (k, alpha_want, f_want) in [(0, [1.0, 0.0], [7.244, 11.910]), (1, [0.0, 1.0], [11.910, 7.244])] {
        let s = ok(solve_kes(&p, &xb, &kes_fixed(k)), "residual model")?;
        let a = s.alpha.as_slice();
        ensure((0..2).all(|j| (a[j] - alpha_want[j]).abs() <= 1e-4), || format!("FixWeight({}) gave α = {a:?}", k + 1))?;
        let f = ok(solve_fop(&p, &WeightVector::from_slice(&alpha_want).unwrap()), "forward")?.f;
        ensure((0..2).all(|j| (f[j] - f_want[j]).abs() <= 5e-3), || format!("f(x*) = {f:?}"))?;
        detail.push(format!("α = ({:.6}, {:.6}), f = ({:.4}, {:.4})", a[0], a[1], f[0], f[1]));
    }
    let unit = KesConfig { stationarity_scale: 1.0, ..kes_fixed(0) };
    let s = ok(solve_kes(&p, &xb, &unit), "residual model")?;
    detail.push(format!(
        "full-gradient scale for reference: α = ({:.3}, {:.3})",
        s.alpha.as_slice()[0],
        s.alpha.as_slice()[1]
    ));
    Ok(detail.join("; "))
}

fn classical_example() -> Check {
    let p = example1();
    match ok(classical_inverse(&p, &example1_point_a()), "classical")? {
        ClassicalVerdict::Weights(w) => {
            let a = w.as_slice();
            ensure((a[0] - 0.5).abs() <= 1e-6 && (a[1] - 0.5).abs() <= 1e-6, || format!("α = {a:?} at x̂^a"))?;
        }
        ClassicalVerdict::OnlyZeroSolution => return Err("x̂^a has no weights".into()),
    }
    for (name, x) in [("b", example1_point_b()), ("c", example1_point_c())] {
        let verdict = ok(classical_inverse(&p, &x), "classical")?;
        ensure(verdict == ClassicalVerdict::OnlyZeroSolution, || format!("x̂^{name} gave {verdict:?}"))?;
    }
    Ok("x̂^a → (0.5, 0.5); x̂^b, x̂^c → only the zero solution".into())
}

fn degenerate_example() -> Check {
    let p = example1();
    let d = ok(solve_iop_relative(&p, &example1_point_d()), "x̂^d")?;
    let e = ok(solve_iop_relative(&p, &example1_point_e()), "x̂^e")?;
    for (name, r, f_want) in [("d", &d, [13.160, 8.004]), ("e", &e, [14.000, 8.004])] {
        let a = r.alpha.as_slice();
        ensure(a[0].abs() <= 1e-4 && (a[1] - 1.0).abs() <= 1e-4, || format!("x̂^{name}: α* = {a:?}"))?;
        ensure((0..2).all(|j| (r.f_xhat[j] - f_want[j]).abs() <= 5e-3), || format!("x̂^{name}: f(x̂) = {:?}", r.f_xhat))?;
    }
    let gap = (&d.x - &e.x).amax();
    ensure(gap <= 1e-5, || format!("x* differ by {gap:e}"))?;
    ensure(d.any_degenerate(), || format!("x̂^d not flagged: {:?}", d.degenerate))?;
    Ok(format!("α* = (0, 1) at both, x* = ({:.5}, {:.5}), x̂^d flagged degenerate", d.x[0], d.x[1]))
}

fn reoptimization_property() -> Check {
    let mut cases: Vec<(ForwardProblem, DVector<f64>)> = example_points().into_iter().map(|x| (example1(), x)).collect();
    cases.extend(disk_instances(20));
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for (p, xhat) in &cases {
        for s in schemes(p, xhat)? {
            let r = ok(solve_iop(p, xhat, &s), "exact inverse")?;
            let gap = ok(reoptimization_gap(p, &r.alpha, &r.x), "re-solve")?;
            worst = worst.max(gap);
            runs += 1;
        }
    }
    ensure(worst <= 1e-6, || format!("worst relative gap {worst:e}"))?;
    Ok(format!("{runs} solves, worst relative gap {worst:.2e}"))
}

fn equal_deviation_property() -> Check {
    let mut cases: Vec<(ForwardProblem, DVector<f64>)> = example_points().into_iter().map(|x| (example1(), x)).collect();
    cases.extend(disk_instances(20));
    let (mut applicable, mut worst) = (0, 0.0_f64);
    for (p, xhat) in &cases {
        for s in schemes(p, xhat)? {
            let r = ok(solve_iop(p, xhat, &s), "exact inverse")?;
            if r.alpha.as_slice().iter().all(|&a| a > 1e-7) {
                applicable += 1;
                worst = worst.max(r.ratio_variance);
                ensure(r.ratio_variance < 1e-10 && r.ratio_variance < 2f64.powi(-14), || {
                    format!("variance {:e} with positive weights {:?}", r.ratio_variance, r.alpha.as_slice())
                })?;
            }
        }
    }
    ensure(applicable > 0, || "no case with all weights positive".into())?;
    Ok(format!("{applicable} cases with positive weights, worst variance {worst:.2e}"))
}

fn linearized_bound() -> Check {
    let mut cases = vec![(example1(), example1_point_b())];
    cases.extend(disk_instances(20));
    let (mut checked, mut worst) = (0, f64::NEG_INFINITY);
    for (p, xhat) in &cases {
        for s in schemes(p, xhat)? {
            let exact = ok(solve_iop(p, xhat, &s), "exact inverse")?;
            let lin = ok(solve_liop_detailed(&LiopInstance::at_xhat(p.clone(), xhat.clone(), s.clone())), "linearized")?;
            if lin.trust_binding {
                continue;
            }
            checked += 1;
            worst = worst.max(lin.result.epsilon - exact.epsilon);
            ensure(lin.result.epsilon <= exact.epsilon + 1e-8, || {
                format!("ε_LIOP {} > ε_IOP {}", lin.result.epsilon, exact.epsilon)
            })?;
        }
    }
    ensure(checked > 0, || "trust box binding everywhere".into())?;
    let mut linear_worst = 0.0_f64;
    for seed in 0..20 {
        let (p, xhat) = random_linear(seed, 3, 3, 2);
        for s in schemes(&p, &xhat)? {
            let exact = ok(solve_iop(&p, &xhat, &s), "exact inverse")?;
            let lin = ok(solve_liop(&LiopInstance::at_xhat(p.clone(), xhat.clone(), s)), "linearized")?;
            linear_worst = linear_worst.max((lin.epsilon - exact.epsilon).abs());
        }
    }
    ensure(linear_worst <= 1e-8, || format!("linear instances differ by {linear_worst:e}"))?;
    Ok(format!("{checked} quadratic cases, max ε_LIOP − ε_IOP = {worst:.2e}; linear max |Δε| = {linear_worst:.2e}"))
}

fn gap_oracle() -> Check {
    let p = example1();
    let xb = example1_point_b();
    let rel = ok(solve_iop_relative(&p, &xb), "relative")?;
    let abs = ok(solve_iop_absolute(&p, &xb), "absolute")?;
    let (mut rel_min, mut abs_min) = (f64::INFINITY, f64::INFINITY);
    for i in 0..=1000 {
        let a1 = i as f64 / 1000.0;
        let w = WeightVector::from_slice(&[a1, 1.0 - a1]).unwrap();
        rel_min = rel_min.min(1.0 / ok(relative_gap(&p, &xb, &w), "relative gap")?);
        abs_min = abs_min.min(ok(absolute_gap(&p, &xb, &w), "absolute gap")?);
    }
    ensure((rel_min - 1.0 / rel.epsilon).abs() <= 5e-3, || format!("relative {rel_min} vs {}", 1.0 / rel.epsilon))?;
    ensure((abs_min + abs.epsilon).abs() <= 5e-3, || format!("absolute {abs_min} vs {}", -abs.epsilon))?;
    Ok(format!(
        "relative {:.6} vs 1/ε*_r {:.6}; absolute {:.6} vs −ε*_a {:.6}",
        rel_min,
        1.0 / rel.epsilon,
        abs_min,
        -abs.epsilon
    ))
}

fn bridges() -> Check {
    let mut cases = vec![(example1(), example1_point_b())];
    cases.extend(disk_instances(20));
    let mut worst = 0.0_f64;
    for (p, xhat) in &cases {
        for s in schemes(p, xhat)? {
            let (_, _, d) = ok(kes_liop_bridge(p, xhat, &s), "gap-penalty bridge")?;
            worst = worst.max(d);
        }
        for k in 0..p.n_objectives() {
            let (_, _, d) = ok(kes_as_degenerate_iop(p, xhat, k), "degenerate-scheme bridge")?;
            worst = worst.max(d);
        }
    }
    ensure(worst <= 1e-6, || format!("distance {worst:e}"))?;
    Ok(format!("{} instances, worst distance {worst:.2e}", cases.len()))
}

/// `min_x max_k dev_k(x)` over the disk of radius 1 at (2, 2), by a polar grid
/// refined three times around its best cell.
fn polar_minimax(dev: impl Fn(f64, f64) -> f64) -> f64 {
    let (mut best, mut at) = (f64::INFINITY, (0.5, 0.0));
    let (mut rho, mut th) = ((0.0, 1.0), (0.0, std::f64::consts::TAU));
    for _ in 0..4 {
        for i in 0..=300 {
            for j in 0..=300 {
                let r = (rho.0 + (rho.1 - rho.0) * i as f64 / 300.0).clamp(0.0, 1.0);
                let t = th.0 + (th.1 - th.0) * j as f64 / 300.0;
                let val = dev(2.0 + r * t.cos(), 2.0 + r * t.sin());
                if val < best {
                    (best, at) = (val, (r, t));
                }
            }
        }
        let (dr, dt) = ((rho.1 - rho.0) / 30.0, (th.1 - th.0) / 30.0);
        (rho, th) = ((at.0 - dr, at.0 + dr), (at.1 - dt, at.1 + dt));
    }
    best
}

fn brute_force_oracle() -> Check {
    let p = example1();
    let f = |x: f64, y: f64| (4.0 * x * x + y * y, x * x + 4.0 * y * y);
    let mut detail = Vec::new();
    for (name, xhat) in [("b", example1_point_b()), ("c", example1_point_c())] {
        let (f1, f2) = f(xhat[0], xhat[1]);
        let rel = ok(solve_iop_relative(&p, &xhat), "relative")?.epsilon;
        let abs = ok(solve_iop_absolute(&p, &xhat), "absolute")?.epsilon;
        let rel_oracle = polar_minimax(|x, y| {
            let (a, b) = f(x, y);
            (a / f1).max(b / f2)
        });
        let abs_oracle = polar_minimax(|x, y| {
            let (a, b) = f(x, y);
            (a - f1).max(b - f2)
        });
        ensure((rel - rel_oracle).abs() <= 1e-3, || format!("x̂^{name} relative {rel} vs {rel_oracle}"))?;
        ensure((abs - abs_oracle).abs() <= 1e-3, || format!("x̂^{name} absolute {abs} vs {abs_oracle}"))?;
        detail.push(format!("x̂^{name}: ε*_r {rel:.6} / {rel_oracle:.6}, ε*_a {abs:.6} / {abs_oracle:.6}"));
    }
    Ok(detail.join("; "))
}

fn slp_convergence() -> Check {
    let mut cases = vec![(example1(), example1_point_b())];
    cases.extend(disk_instances(10));
    let (mut worst_eps, mut worst_kkt, mut most_iters) = (0.0_f64, 0.0_f64, 0);
    for (p, xhat) in &cases {
        let s = ok(ScalingScheme::relative(p, xhat, 0), "scheme")?;
        let trace = ok(run_slp(p, xhat, &s, &SlpOptions::default()), "SLP")?;
        ensure(trace.termination == SlpTermination::StepNorm && trace.iterations() <= 100, || {
            format!("{:?} after {} iterations", trace.termination, trace.iterations())
        })?;
        let r = trace.final_result.as_ref().ok_or("no final weights")?;
        let exact = ok(solve_iop(p, xhat, &s), "exact inverse")?;
        let kkt = ok(iop_kkt_residual(p, xhat, r), "KKT residual")?;
        worst_eps = worst_eps.max((r.epsilon - exact.epsilon).abs());
        worst_kkt = worst_kkt.max(kkt);
        most_iters = most_iters.max(trace.iterations());
    }
    ensure(worst_eps <= 1e-2, || format!("|ε_SLP − ε_IOP| = {worst_eps:e}"))?;
    ensure(worst_kkt <= 1e-4, || format!("KKT residual {worst_kkt:e}"))?;
    Ok(format!("{} runs, ≤ {most_iters} iterations, max |Δε| {worst_eps:.2e}, max KKT {worst_kkt:.2e}", cases.len()))
}

/// Variance of the plan's scaled deviations from `x̂` under the relative scheme.
fn plan_variance(p: &ForwardProblem, xhat: &DVector<f64>, alpha: &WeightVector) -> StdResult<f64, String> {
    let fs = ok(solve_fop(p, alpha), "forward")?.f;
    let fx = ok(p.objective_values(xhat), "objectives")?;
    let ratios: Vec<f64> = fs.iter().zip(fx.iter()).map(|(a, b)| a / b).collect();
    Ok(population_variance(&ratios))
}

fn planning_surrogate() -> Check {
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let (p, _) = ok(gen_planning(seed, 20, 50, 5), "instance")?;
        let pareto = ok(solve_fop(&p, &WeightVector::from_slice(&[0.2; 5]).unwrap()), "Pareto point")?.x;
        let xhat = perturb(&pareto, 0.05, seed);
        let s = ok(ScalingScheme::relative(&p, &xhat, 0), "scheme")?;

        let iop = ok(solve_iop(&p, &xhat, &s), "exact inverse")?;
        let var_iop = iop.ratio_variance;
        ensure(var_iop < 0.01, || format!("seed {seed}: Var(IOP) = {var_iop:e}"))?;

        let liop = ok(solve_liop(&LiopInstance::at_xhat(p.clone(), xhat.clone(), s.clone())), "linearized")?;
        let var_liop = plan_variance(&p, &xhat, &liop.alpha)?;

        let trace = ok(run_slp(&p, &xhat, &s, &SlpOptions::default()), "SLP")?;
        let slp = trace.final_result.as_ref().ok_or_else(|| format!("seed {seed}: SLP produced no weights"))?;
        let var_slp = slp.ratio_variance;

        let kfix = iop
            .alpha
            .as_slice()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        let kes = ok(solve_kes(&p, &xhat, &kes_fixed(kfix)), "residual model")?;
        let share = kes.alpha.as_slice()[kfix];
        let var_kes = plan_variance(&p, &xhat, &kes.alpha)?;

        ensure(share >= 0.5, || format!("seed {seed}: residual model puts {share:.3} on objective {}", kfix + 1))?;
        ensure(var_iop < var_kes, || format!("seed {seed}: Var(IOP) {var_iop:e} ≥ Var(KES) {var_kes:e}"))?;
        ensure(var_iop < var_slp && var_slp <= var_liop && var_liop < var_kes, || {
            format!("seed {seed}: IOP {var_iop:.2e}, SLP {var_slp:.2e}, LIOP {var_liop:.2e}, KES {var_kes:.2e}")
        })?;
        lines.push(format!(
            "seed {seed}: IOP {var_iop:.1e} < SLP {var_slp:.1e} ≤ LIOP {var_liop:.1e} < KES {var_kes:.1e}, share {share:.3}"
        ));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Check)> = vec![
        ("worked residual-model example", Duration::from_secs(1), worked_residual_example),
        ("classical inverse on the example", Duration::from_secs(1), classical_example),
        ("degenerate relative inverse", Duration::from_secs(2), degenerate_example),
        ("re-solving at imputed weights", Duration::from_secs(30), reoptimization_property),
        ("equal scaled deviations", Duration::from_secs(10), equal_deviation_property),
        ("linearized lower bound", Duration::from_secs(30), linearized_bound),
        ("duality-gap grid oracle", Duration::from_secs(60), gap_oracle),
        ("gap-penalty bridges", Duration::from_secs(60), bridges),
        ("brute-force minimax oracle", Duration::from_secs(30), brute_force_oracle),
        ("successive linearization", Duration::from_secs(600), slp_convergence),
        ("planning surrogate ordering", Duration::from_secs(300), planning_surrogate),
    ];
    let start = hygiene::snapshot();
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs())),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        failed += outcome.is_err() as usize;
        println!("{tag} criterion {:>2} {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    let end = hygiene::snapshot();
    let violations = end.violations() - start.violations();
    let certified = (end.lp_optimal - start.lp_optimal) + (end.kernel_optimal - start.kernel_optimal);
    let tag = if violations == 0 && certified > 0 { "PASS" } else { "FAIL" };
    failed += (tag == "FAIL") as usize;
    println!(
        "{tag} criterion 12 solver hygiene: {violations} violations over {} LP and {} kernel certificates",
        end.lp_optimal - start.lp_optimal,
        end.kernel_optimal - start.kernel_optimal
    );
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 12 acceptance criteria passed");
}
