//! Property checks on one problem and input point.

use invmo_core::hygiene;
use invmo_core::{
    classical_inverse, kes_as_degenerate_iop, kes_liop_bridge, membership, reoptimization_gap, solve_iop, solve_iop_relative,
    solve_kes, solve_liop_detailed, ClassicalVerdict, ForwardProblem, KesConfig, KesNormalization, KesPenalty,
    LiopInstance, MembershipVerdict, ScalingScheme,
};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::report::perfect_preservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &str, ok: bool, detail: String) -> Self {
        Check { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, detail }
    }

    fn skip(name: &str, detail: String) -> Self {
        Check { name: name.into(), status: Status::Skip, detail }
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// The bridges need a bounded linearization at `x̂`; without one the
/// gap-penalty model has no point with zero stationarity residual.
fn undefined(e: &invmo_core::Error) -> bool {
    matches!(e, invmo_core::Error::Unbounded | invmo_core::Error::Infeasible | invmo_core::Error::Lp(_))
}

/// Runs every check under `scheme`. A check whose solve fails is a failure,
/// except where the property is undefined for the input (unbounded
/// linearizations, a binding trust box, non-positive objectives).
pub fn run(p: &ForwardProblem, xhat: &DVector<f64>, scheme: &ScalingScheme) -> Vec<Check> {
    let before = hygiene::snapshot().violations();
    let mut out = Vec::new();

    let feasible = match membership(p, xhat) {
        Ok(m) => {
            let feasible = m.verdict == MembershipVerdict::Feasible;
            out.push(Check::new("membership", true, format!("feasible={feasible} max_violation={:e}", m.max_violation)));
            feasible
        }
        Err(e) => {
            out.push(Check::new("membership", false, e.to_string()));
            return out;
        }
    };

    match (classical_inverse(p, xhat), solve_iop_relative(p, xhat)) {
        (Ok(c), Ok(r)) => {
            let classical = matches!(c, ClassicalVerdict::Weights(_));
            let unit = (r.epsilon - 1.0).abs() <= 1e-6;
            out.push(Check::new(
                "classical_iff_unit_ratio",
                classical == unit,
                format!("classical={classical} epsilon_r={:.10}", r.epsilon),
            ));
        }
        (_, Err(invmo_core::Error::NonPositiveObjective { index, .. })) => {
            out.push(Check::skip("classical_iff_unit_ratio", format!("objective {} is not positive at x̂", index + 1)))
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::new("classical_iff_unit_ratio", false, e.to_string())),
    }

    match solve_iop(p, xhat, scheme) {
        Ok(r) => {
            match reoptimization_gap(p, &r.alpha, &r.x) {
                Ok(gap) => out.push(Check::new("reoptimization", gap <= 1e-6, format!("relative gap {gap:e}"))),
                Err(e) => out.push(Check::new("reoptimization", false, e.to_string())),
            }
            if r.alpha.as_slice().iter().all(|&a| a > 1e-7) {
                out.push(Check::new(
                    "equal_deviations",
                    r.ratio_variance < 1e-10 && perfect_preservation(r.ratio_variance),
                    format!("variance {:e}", r.ratio_variance),
                ));
            } else {
                out.push(Check::skip("equal_deviations", "some weight is zero".into()));
            }
            match solve_liop_detailed(&LiopInstance::at_xhat(p.clone(), xhat.clone(), scheme.clone())) {
                Ok(l) if l.trust_binding => out.push(Check::skip("linearized_bound", "trust box is binding".into())),
                Ok(l) => out.push(Check::new(
                    "linearized_bound",
                    l.result.epsilon <= r.epsilon + 1e-8,
                    format!("liop {:.10} exact {:.10}", l.result.epsilon, r.epsilon),
                )),
                Err(e) => out.push(Check::new("linearized_bound", false, e.to_string())),
            }
        }
        Err(e) => out.push(Check::new("exact_inverse", false, e.to_string())),
    }

    if feasible {
        match kes_liop_bridge(p, xhat, scheme) {
            Ok((_, _, d)) => out.push(Check::new("kes_liop_bridge", d <= 1e-6, format!("distance {d:e}"))),
            Err(e) if undefined(&e) => out.push(Check::skip("kes_liop_bridge", format!("undefined at x̂: {e}"))),
            Err(e) => out.push(Check::new("kes_liop_bridge", false, e.to_string())),
        }
        for k in 0..p.n_objectives() {
            let name = format!("kes_degenerate_iop[{}]", k + 1);
            match kes_as_degenerate_iop(p, xhat, k) {
                Ok((_, _, d)) => out.push(Check::new(&name, d <= 1e-6, format!("distance {d:e}"))),
                Err(e) if undefined(&e) => out.push(Check::skip(&name, format!("undefined at x̂: {e}"))),
                Err(e) => out.push(Check::new(&name, false, e.to_string())),
            }
        }
    } else {
        out.push(Check::skip("kes_liop_bridge", "x̂ is infeasible".into()));
    }

    match (classical_inverse(p, xhat), solve_kes(p, xhat, &KesConfig::new(KesPenalty::SumOfSquares, KesNormalization::L1Unit))) {
        (Ok(c), Ok(kes)) => {
            let classical = matches!(c, ClassicalVerdict::Weights(_));
            let zero = kes.residuals.penalty_value <= 1e-8;
            out.push(Check::new(
                "zero_kes_penalty_iff_classical",
                zero == classical,
                format!("classical={classical} penalty={:e}", kes.residuals.penalty_value),
            ));
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::new("zero_kes_penalty_iff_classical", false, e.to_string())),
    }

    let violations = hygiene::snapshot().violations() - before;
    out.push(Check::new("solver_hygiene", violations == 0, format!("{violations} failed certificates")));
    out
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}
