//! Runs one inverse model on a problem and input point and assembles its
//! report.

use std::time::Instant;

use invmo_core::{
    run_slp, solve_fop, solve_iop, solve_kes, solve_liop_detailed, ForwardProblem, InverseResult, KesConfig,
    KesNormalization, KesPenalty, LiopInstance, PreservationVerdict, ScalingScheme, SchemeKind, SlpOptions,
    SlpTermination, WeightVector,
};
use invmo_core::population_variance;
use nalgebra::DVector;

use crate::document::{KesSpec, ModelKind, PenaltyName, SchemeName, SchemeSpec, SolverSpec};
use crate::report::{displayed_variance, perfect_preservation, CrossModel, ObjectiveRow, TradeoffReport};
use crate::CliError;

/// Deviations within this of the reference `ε` count as tight.
const PLAN_TIGHTNESS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub model: ModelKind,
    pub scheme: SchemeSpec,
    pub kes: KesSpec,
    pub solver: SolverSpec,
}

fn index(k1: usize, k: usize, what: &str) -> Result<usize, CliError> {
    if k1 == 0 || k1 > k {
        return Err(CliError::Input(format!("{what} must lie in 1..={k}, got {k1}")));
    }
    Ok(k1 - 1)
}

/// `iop_r` and `iop_a` fix their scheme; the other models take it from the
/// options.
pub fn build_scheme(
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    model: ModelKind,
    spec: &SchemeSpec,
) -> Result<ScalingScheme, CliError> {
    let k = p.n_objectives();
    let kref = index(spec.kref, k, "--kref")?;
    let kind = match model {
        ModelKind::IopR => SchemeName::Relative,
        ModelKind::IopA => SchemeName::Absolute,
        _ => spec.kind,
    };
    let scheme = match kind {
        SchemeName::Relative => ScalingScheme::relative(p, xhat, kref),
        SchemeName::Absolute => ScalingScheme::absolute(k),
        SchemeName::General => {
            let mu = spec.mu.as_ref().ok_or_else(|| CliError::Input("the general scheme needs --mu".into()))?;
            if mu.len() != k {
                return Err(CliError::Input(format!("--mu has {} entries for {k} objectives", mu.len())));
            }
            ScalingScheme::general(DVector::from_column_slice(mu), kref)
        }
    };
    Ok(scheme?)
}

pub fn kes_config(spec: &KesSpec, k: usize) -> Result<KesConfig, CliError> {
    let penalty = match spec.penalty {
        PenaltyName::Sos => KesPenalty::SumOfSquares,
        PenaltyName::L1 => KesPenalty::L1,
        PenaltyName::GapLinear => KesPenalty::GapLinear,
    };
    let normalization = match spec.fix {
        Some(k1) => KesNormalization::FixWeight(index(k1, k, "--kes-fix")?),
        None => KesNormalization::L1Unit,
    };
    Ok(KesConfig::new(penalty, normalization))
}

fn scheme_name(kind: SchemeKind) -> &'static str {
    match kind {
        SchemeKind::General => "general",
        SchemeKind::Relative => "relative",
        SchemeKind::Absolute => "absolute",
    }
}

pub fn model_name(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Iop => "iop",
        ModelKind::IopR => "iop_r",
        ModelKind::IopA => "iop_a",
        ModelKind::Liop => "liop",
        ModelKind::Slp => "slp",
        ModelKind::Kes => "kes",
        ModelKind::Classical => "classical",
        ModelKind::Forward => "forward",
        ModelKind::Sweep => "sweep",
    }
}

fn verdict_name(v: PreservationVerdict) -> &'static str {
    match v {
        PreservationVerdict::Perfect => "perfect",
        PreservationVerdict::PartialWithZeroWeights => "partial_with_zero_weights",
        PreservationVerdict::NotPreserved => "not_preserved",
    }
}

/// Scaled deviations of a plan, as in the exact model's report.
pub fn deviations(scheme: &ScalingScheme, fx: &DVector<f64>, fs: &DVector<f64>) -> Vec<f64> {
    let mu = scheme.mu();
    (0..fx.len())
        .map(|j| match scheme.kind() {
            SchemeKind::Relative => fs[j] / fx[j],
            _ if mu[j] > 0.0 => (fs[j] - fx[j]) / mu[j],
            _ => fs[j] - fx[j],
        })
        .collect()
}

pub fn deviation_variance(scheme: &ScalingScheme, ratios: &[f64]) -> f64 {
    let positive: Vec<f64> = (0..ratios.len()).filter(|&j| scheme.mu()[j] > 0.0).map(|j| ratios[j]).collect();
    population_variance(&positive)
}

fn l2(a: &WeightVector, b: &WeightVector) -> f64 {
    (a.as_vector() - b.as_vector()).norm()
}

fn rows(names: &[String], alpha: &WeightVector, fx: &DVector<f64>, fs: &DVector<f64>, ratios: &[f64], tight: &[bool]) -> Vec<ObjectiveRow> {
    (0..fx.len())
        .map(|j| ObjectiveRow {
            name: names[j].clone(),
            alpha: alpha.as_slice()[j],
            f_xhat: fx[j],
            f_xstar: fs[j],
            ratio: ratios[j],
            tight: tight[j],
        })
        .collect()
}

/// Report for an exact or linearized inverse result whose `x` is the plan.
fn from_inverse(model: ModelKind, names: &[String], r: &InverseResult) -> TradeoffReport {
    let ratios: Vec<f64> = r.ratios.iter().copied().collect();
    TradeoffReport {
        model: model_name(model).into(),
        scheme: scheme_name(r.kind).into(),
        objectives: rows(names, &r.alpha, &r.f_xhat, &r.f_xstar, &ratios, &r.tight),
        alpha_raw: Some(r.alpha_raw.iter().copied().collect()),
        epsilon: Some(r.epsilon),
        ratio_variance: r.ratio_variance,
        displayed_variance: displayed_variance(r.ratio_variance),
        perfect_preservation: perfect_preservation(r.ratio_variance),
        verdict: Some(verdict_name(r.verdict).into()),
        degenerate: r.degenerate.clone(),
        dual_degenerate: r.dual_degenerate,
        x_star: r.x.iter().copied().collect(),
        cross_model: None,
        iterations: Some(r.iterations),
        termination: None,
        trust_binding: None,
        penalty_value: None,
        wall_clock_seconds: 0.0,
    }
}

/// Report for weights whose plan is the forward solution `x(α)`. Deviations
/// within tolerance of `ε` (or of the largest deviation) are marked tight.
fn from_plan(
    model: ModelKind,
    names: &[String],
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    scheme: &ScalingScheme,
    alpha: &WeightVector,
    epsilon: Option<f64>,
) -> Result<TradeoffReport, CliError> {
    let plan = solve_fop(p, alpha)?;
    let fx = p.objective_values(xhat)?;
    let ratios = deviations(scheme, &fx, &plan.f);
    let variance = deviation_variance(scheme, &ratios);
    let top = epsilon.unwrap_or_else(|| ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let tight: Vec<bool> = ratios.iter().map(|r| (r - top).abs() <= PLAN_TIGHTNESS * top.abs().max(1.0)).collect();
    Ok(TradeoffReport {
        model: model_name(model).into(),
        scheme: scheme_name(scheme.kind()).into(),
        objectives: rows(names, alpha, &fx, &plan.f, &ratios, &tight),
        alpha_raw: None,
        epsilon,
        ratio_variance: variance,
        displayed_variance: displayed_variance(variance),
        perfect_preservation: perfect_preservation(variance),
        verdict: None,
        degenerate: vec![false; fx.len()],
        dual_degenerate: false,
        x_star: plan.x.iter().copied().collect(),
        cross_model: None,
        iterations: Some(plan.kernel.iterations),
        termination: None,
        trust_binding: None,
        penalty_value: None,
        wall_clock_seconds: 0.0,
    })
}

/// Runs `opts.model` at `x̂`.
///
/// * exact models report their own `x*`;
/// * `slp` reports its final iterate;
/// * `liop` and `kes` report the forward solution at their weights.
///
/// Models other than the exact ones also carry distances to the exact model
/// under the same scheme, when that solve succeeds.
pub fn invert(
    p: &ForwardProblem,
    xhat: &DVector<f64>,
    names: &[String],
    opts: &ModelOptions,
) -> Result<TradeoffReport, CliError> {
    if xhat.len() != p.n_vars() {
        return Err(CliError::Input(format!("x̂ has {} entries for {} variables", xhat.len(), p.n_vars())));
    }
    if names.len() != p.n_objectives() {
        return Err(CliError::Input(format!("{} names for {} objectives", names.len(), p.n_objectives())));
    }
    let start = Instant::now();
    let scheme = build_scheme(p, xhat, opts.model, &opts.scheme)?;
    let mut report = match opts.model {
        ModelKind::Iop | ModelKind::IopR | ModelKind::IopA => from_inverse(opts.model, names, &solve_iop(p, xhat, &scheme)?),
        ModelKind::Liop => {
            let inst = LiopInstance { trust_kappa: opts.solver.kappa, ..LiopInstance::at_xhat(p.clone(), xhat.clone(), scheme.clone()) };
            let sol = solve_liop_detailed(&inst)?;
            let mut r = from_plan(opts.model, names, p, xhat, &scheme, &sol.result.alpha, Some(sol.result.epsilon))?;
            r.alpha_raw = Some(sol.result.alpha_raw.iter().copied().collect());
            r.iterations = Some(sol.lp_iterations);
            r.trust_binding = Some(sol.trust_binding);
            r
        }
        ModelKind::Slp => {
            let slp = SlpOptions {
                step_tol: opts.solver.slp_step_tol,
                max_iterations: opts.solver.slp_max_iterations,
                ..SlpOptions::default()
            };
            let trace = run_slp(p, xhat, &scheme, &slp)?;
            let result = trace
                .final_result
                .as_ref()
                .ok_or_else(|| CliError::Solver("no linear program in the SLP run succeeded".into()))?;
            let mut r = from_inverse(opts.model, names, result);
            r.iterations = Some(trace.iterations());
            r.trust_binding = Some(trace.final_trust_binding);
            r.termination = Some(
                match trace.termination {
                    SlpTermination::StepNorm => "step_norm",
                    SlpTermination::MaxIterations => "max_iterations",
                    SlpTermination::LpFailure => "lp_failure",
                }
                .into(),
            );
            r
        }
        ModelKind::Kes => {
            let sol = solve_kes(p, xhat, &kes_config(&opts.kes, p.n_objectives())?)?;
            let mut r = from_plan(opts.model, names, p, xhat, &scheme, &sol.alpha, None)?;
            r.penalty_value = Some(sol.residuals.penalty_value);
            r
        }
        other => return Err(CliError::Input(format!("{} is not an inverse model", model_name(other)))),
    };
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    if !matches!(opts.model, ModelKind::Iop | ModelKind::IopR | ModelKind::IopA) {
        if let Ok(exact) = solve_iop(p, xhat, &scheme) {
            let alpha = WeightVector::from_slice(&report.alpha())?;
            report.cross_model = Some(CrossModel {
                epsilon_distance: report.epsilon.map(|e| (exact.epsilon - e).abs()),
                alpha_distance: l2(&exact.alpha, &alpha),
            });
        }
    }
    Ok(report)
}
