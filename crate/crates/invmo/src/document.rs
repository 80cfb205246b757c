//! `ProblemDocument`: a forward problem, an input point and model options in
//! one JSON text. Matrices are row-major arrays of rows.

use invmo_core::instances::PlanningInstance;
use invmo_core::{ConvexFunction, ForwardProblem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::json;
use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Iop,
    IopR,
    IopA,
    Liop,
    Slp,
    Kes,
    Classical,
    Forward,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Relative,
    Absolute,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "lower")]
pub enum PenaltyName {
    Sos,
    L1,
    GapLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Linear { c: Vec<f64>, d: f64 },
    Quadratic { q: Matrix, c: Vec<f64>, d: f64 },
    HingeSquared { m: Matrix, t: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EqualitySpec {
    pub a: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemSpec {
    pub n_vars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_names: Option<Vec<String>>,
    pub objectives: Vec<FunctionSpec>,
    #[serde(default)]
    pub inequalities: Vec<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalities: Option<EqualitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// One-based reference objective.
    pub kref: usize,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        SchemeSpec { kind: SchemeName::Relative, mu: None, kref: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KesSpec {
    pub penalty: PenaltyName,
    /// One-based objective whose weight is fixed to 1; `Σα = 1` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix: Option<usize>,
}

impl Default for KesSpec {
    fn default() -> Self {
        KesSpec { penalty: PenaltyName::Sos, fix: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverSpec {
    /// Trust-box half width for the linearized model; `max(1, ‖x̂‖∞)` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub slp_step_tol: f64,
    pub slp_max_iterations: usize,
    /// Sweep grid size.
    pub points: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { kappa: None, slp_step_tol: 1e-3, slp_max_iterations: 100, points: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PlanningSpec {
    pub names: Vec<String>,
    pub dose: Vec<Matrix>,
    pub thresholds: Vec<f64>,
    pub upper: Vec<f64>,
    pub tumor_dose: Matrix,
    pub tumor_lower: f64,
    pub tumor_upper: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema_version: String,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    pub model: ModelKind,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub kes: KesSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning: Option<PlanningSpec>,
}

impl ProblemDocument {
    pub fn new(problem: &ForwardProblem, model: ModelKind) -> Self {
        ProblemDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            problem: ProblemSpec::from_problem(problem),
            xhat: None,
            alpha: None,
            model,
            scheme: SchemeSpec::default(),
            kes: KesSpec::default(),
            solver: SolverSpec::default(),
            seed: 0,
            planning: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: ProblemDocument =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!("unsupported schema version {:?}", doc.schema_version)));
        }
        Ok(doc)
    }

    pub fn emit(&self) -> Result<String, CliError> {
        json::to_string(self).map_err(|e| CliError::Input(e.to_string()))
    }

    /// Objective names from the document, or `f1, f2, …`.
    pub fn objective_names(&self) -> Vec<String> {
        match &self.problem.objective_names {
            Some(names) => names.clone(),
            None => (1..=self.problem.objectives.len()).map(|k| format!("f{k}")).collect(),
        }
    }
}

fn matrix(rows: &Matrix, ncols: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(CliError::Input(format!("{what}: row of length {} where {ncols} was expected", bad.len())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != n {
        return Err(CliError::Input(format!("{what}: length {} where {n} was expected", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

impl FunctionSpec {
    pub fn from_function(f: &ConvexFunction) -> Self {
        match f {
            ConvexFunction::Linear { c, d } => FunctionSpec::Linear { c: c.as_slice().to_vec(), d: *d },
            ConvexFunction::Quadratic { q, c, d } => {
                FunctionSpec::Quadratic { q: rows(q), c: c.as_slice().to_vec(), d: *d }
            }
            ConvexFunction::HingeSquared { m, t } => FunctionSpec::HingeSquared { m: rows(m), t: t.as_slice().to_vec() },
        }
    }

    pub fn to_function(&self, n: usize, what: &str) -> Result<ConvexFunction, CliError> {
        let f = match self {
            FunctionSpec::Linear { c, d } => ConvexFunction::linear(vector(c, n, what)?, *d),
            FunctionSpec::Quadratic { q, c, d } => {
                if q.len() != n {
                    return Err(CliError::Input(format!("{what}: {} rows in q where {n} were expected", q.len())));
                }
                ConvexFunction::quadratic(matrix(q, n, what)?, vector(c, n, what)?, *d)
            }
            FunctionSpec::HingeSquared { m, t } => {
                ConvexFunction::hinge_squared(matrix(m, n, what)?, vector(t, m.len(), what)?)
            }
        };
        f.map_err(|e| CliError::Input(format!("{what}: {e}")))
    }
}

impl ProblemSpec {
    pub fn from_problem(p: &ForwardProblem) -> Self {
        let equalities = (p.n_equalities() > 0)
            .then(|| EqualitySpec { a: rows(p.eq_a()), b: p.eq_b().as_slice().to_vec() });
        ProblemSpec {
            n_vars: p.n_vars(),
            objective_names: None,
            objectives: p.objectives().iter().map(FunctionSpec::from_function).collect(),
            inequalities: p.inequalities().iter().map(FunctionSpec::from_function).collect(),
            equalities,
        }
    }

    pub fn to_problem(&self) -> Result<ForwardProblem, CliError> {
        let n = self.n_vars;
        let objectives = self
            .objectives
            .iter()
            .enumerate()
            .map(|(k, f)| f.to_function(n, &format!("objective {}", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let inequalities = self
            .inequalities
            .iter()
            .enumerate()
            .map(|(l, g)| g.to_function(n, &format!("inequality {}", l + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(names) = &self.objective_names {
            if names.len() != objectives.len() {
                return Err(CliError::Input(format!("{} objective names for {} objectives", names.len(), objectives.len())));
            }
        }
        let p = match &self.equalities {
            Some(eq) => {
                let a = matrix(&eq.a, n, "equalities")?;
                let b = vector(&eq.b, eq.a.len(), "equality right-hand side")?;
                ForwardProblem::with_equalities(objectives, inequalities, a, b)
            }
            None => ForwardProblem::new(objectives, inequalities),
        };
        p.map_err(|e| CliError::Input(format!("problem: {e}")))
    }
}

impl PlanningSpec {
    pub fn from_instance(inst: &PlanningInstance) -> Self {
        PlanningSpec {
            names: inst.names.clone(),
            dose: inst.dose.iter().map(rows).collect(),
            thresholds: inst.thresholds.clone(),
            upper: inst.upper.clone(),
            tumor_dose: rows(&inst.tumor_dose),
            tumor_lower: inst.tumor_lower,
            tumor_upper: inst.tumor_upper,
            beta: inst.beta,
        }
    }

    pub fn to_instance(&self) -> Result<PlanningInstance, CliError> {
        let n = self.tumor_dose.first().map_or(0, Vec::len);
        let k = self.names.len();
        if self.dose.len() != k || self.thresholds.len() != k || self.upper.len() != k {
            return Err(CliError::Input("planning: per-structure lists differ in length".into()));
        }
        Ok(PlanningInstance {
            names: self.names.clone(),
            dose: self.dose.iter().map(|d| matrix(d, n, "planning dose")).collect::<Result<_, _>>()?,
            thresholds: self.thresholds.clone(),
            upper: self.upper.clone(),
            tumor_dose: matrix(&self.tumor_dose, n, "planning tumor dose")?,
            tumor_lower: self.tumor_lower,
            tumor_upper: self.tumor_upper,
            beta: self.beta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use invmo_core::instances::example1;

    #[test]
    fn example_document_round_trips() {
        let mut doc = ProblemDocument::new(&example1(), ModelKind::IopR);
        doc.xhat = Some(vec![1.7, 1.3]);
        let text = doc.emit().unwrap();
        let back = ProblemDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.emit().unwrap(), text);
        assert_eq!(back.problem.to_problem().unwrap(), example1());
        assert!(text.contains("\"xhat\": [1.7000000000000000e0, 1.3000000000000000e0]"));
    }

    #[test]
    fn ragged_matrix_is_bad_input() {
        let spec = FunctionSpec::Quadratic { q: vec![vec![1.0, 0.0], vec![0.0]], c: vec![0.0, 0.0], d: 0.0 };
        assert!(matches!(spec.to_function(2, "f"), Err(CliError::Input(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut doc = ProblemDocument::new(&example1(), ModelKind::IopR).emit().unwrap();
        doc = doc.replacen("{\n", "{\n  \"extra\": 1,\n", 1);
        assert!(ProblemDocument::parse(&doc).is_err());
    }
}
