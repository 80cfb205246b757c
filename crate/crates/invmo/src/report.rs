//! `TradeoffReport`: the per-objective table of an imputed weight vector with
//! its preservation summary, as JSON or CSV.

use serde::{Deserialize, Serialize};

use crate::json;
use crate::CliError;

/// Variances below `2⁻¹⁴` count as perfect preservation and display as 0.
pub const PERFECT_VARIANCE: f64 = 1.0 / 16384.0;

pub const CSV_HEADER: [&str; 8] = ["objective", "alpha", "f_xhat", "f_xstar", "ratio", "tight", "epsilon", "variance"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectiveRow {
    pub name: String,
    pub alpha: f64,
    pub f_xhat: f64,
    pub f_xstar: f64,
    /// `fₖ(x*)/fₖ(x̂)` for relative schemes, `(fₖ(x*) − fₖ(x̂))/μₖ` otherwise.
    pub ratio: f64,
    pub tight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CrossModel {
    /// `|ε^IOP − ε*|`, when the model has an `ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_distance: Option<f64>,
    /// `‖α^IOP − α*‖₂` between L1-normalized weights.
    pub alpha_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TradeoffReport {
    pub model: String,
    pub scheme: String,
    pub objectives: Vec<ObjectiveRow>,
    /// Weights scaled so that `Σ μₖαₖ = 1`, for the inverse models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_raw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub ratio_variance: f64,
    /// `ratio_variance`, or 0 below the perfect-preservation threshold.
    pub displayed_variance: f64,
    pub perfect_preservation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub degenerate: Vec<bool>,
    pub dual_degenerate: bool,
    pub x_star: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_model: Option<CrossModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trust_binding: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_value: Option<f64>,
    pub wall_clock_seconds: f64,
}

pub fn displayed_variance(v: f64) -> f64 {
    if v < PERFECT_VARIANCE {
        0.0
    } else {
        v
    }
}

pub fn perfect_preservation(v: f64) -> bool {
    v < PERFECT_VARIANCE
}

impl TradeoffReport {
    pub fn alpha(&self) -> Vec<f64> {
        self.objectives.iter().map(|r| r.alpha).collect()
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        json::to_string(self).map_err(|e| CliError::Solver(format!("report: {e}")))
    }

    /// One row per objective; `epsilon` is empty for models without one.
    pub fn csv_rows(&self) -> Vec<[String; 8]> {
        let eps = self.epsilon.map(json::real).unwrap_or_default();
        let var = json::real(self.displayed_variance);
        self.objectives
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    json::real(r.alpha),
                    json::real(r.f_xhat),
                    json::real(r.f_xstar),
                    json::real(r.ratio),
                    r.tight.to_string(),
                    eps.clone(),
                    var.clone(),
                ]
            })
            .collect()
    }
}

/// Reports as CSV. With more than one report, a leading `instance` column
/// holds the report's position.
pub fn to_csv(reports: &[TradeoffReport]) -> Result<String, CliError> {
    let multi = reports.len() > 1;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Solver(format!("csv: {e}"));
    if multi {
        w.write_record(std::iter::once("instance").chain(CSV_HEADER)).map_err(io)?;
    } else {
        w.write_record(CSV_HEADER).map_err(io)?;
    }
    for (i, r) in reports.iter().enumerate() {
        for row in r.csv_rows() {
            if multi {
                w.write_record(std::iter::once((i + 1).to_string()).chain(row)).map_err(io)?;
            } else {
                w.write_record(row).map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Solver(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Solver(format!("csv: {e}")))
}
