//! `invmo` subcommands. Exit status 0 on success, 1 on solver failure, 2 on
//! bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invmo_core::instances::{example1, gen_planning, perturb, PlanningInstance};
use invmo_core::{classical_inverse, solve_fop, sweep_weights, ClassicalVerdict, ForwardProblem, WeightVector};
use nalgebra::DVector;
use serde::Serialize;

use crate::document::{ModelKind, PenaltyName, PlanningSpec, ProblemDocument, SchemeName};
use crate::run::{build_scheme, invert, ModelOptions};
use crate::{dvh, json, pool, report, verify, CliError};

#[derive(Debug, Parser)]
#[command(name = "invmo", version, about = "Impute objective weights from observed solutions of multi-objective convex programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Built-in example problem.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=1), conflicts_with = "problem")]
    pub example: Option<u8>,
    /// Problem document; repeat to run several instances.
    #[arg(long)]
    pub problem: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for independent instances.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModelArg {
    Iop,
    IopR,
    IopA,
    Liop,
    Slp,
    Kes,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Iop => ModelKind::Iop,
            ModelArg::IopR => ModelKind::IopR,
            ModelArg::IopA => ModelKind::IopA,
            ModelArg::Liop => ModelKind::Liop,
            ModelArg::Slp => ModelKind::Slp,
            ModelArg::Kes => ModelKind::Kes,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu: Option<Vec<f64>>,
    /// Reference objective, one-based.
    #[arg(long)]
    pub kref: Option<usize>,
    /// Objective whose weight is fixed to 1 in the residual model, one-based.
    #[arg(long)]
    pub kes_fix: Option<usize>,
    #[arg(long, value_enum)]
    pub kes_penalty: Option<PenaltyName>,
    /// Trust-box half width of the linearized model.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub slp_step_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the weighted-sum problem at `--alpha`.
    Forward {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Forward solves over a weight grid (two objectives) or seeded draws,
    /// one CSV row per weight vector, ordered by the first weight.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Impute weights for `--xhat`.
    Invert {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        xhat: Option<Vec<f64>>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Weights under which `--xhat` is exactly optimal, if any.
    Classical {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        xhat: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded synthetic planning instance with a perturbed Pareto input point.
    GenInstance {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        beamlets: usize,
        #[arg(long, default_value_t = 50)]
        voxels: usize,
        #[arg(long, default_value_t = 5)]
        structures: usize,
        /// Relative noise applied to the Pareto point.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Property checks on a document or example.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        xhat: Option<Vec<f64>>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: Output,
    },
}

/// A problem with its document and parsed forms.
struct Instance {
    doc: ProblemDocument,
    problem: ForwardProblem,
}

impl Instance {
    fn xhat(&self, flag: &Option<Vec<f64>>) -> Result<DVector<f64>, CliError> {
        let v = flag
            .as_ref()
            .or(self.doc.xhat.as_ref())
            .ok_or_else(|| CliError::Input("no input point: pass --xhat or set xhat in the document".into()))?;
        if v.len() != self.problem.n_vars() {
            return Err(CliError::Input(format!("x̂ has {} entries for {} variables", v.len(), self.problem.n_vars())));
        }
        Ok(DVector::from_column_slice(v))
    }

    fn planning(&self) -> Result<Option<PlanningInstance>, CliError> {
        self.doc.planning.as_ref().map(PlanningSpec::to_instance).transpose()
    }
}

fn load(source: &Source) -> Result<Vec<Instance>, CliError> {
    if source.example.is_some() {
        let problem = example1();
        return Ok(vec![Instance { doc: ProblemDocument::new(&problem, ModelKind::IopR), problem }]);
    }
    if source.problem.is_empty() {
        return Err(CliError::Input("one of --example or --problem is required".into()));
    }
    source
        .problem
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let doc = ProblemDocument::parse(&text)
                .map_err(|e| CliError::Input(format!("{}: {}", path.display(), e)))?;
            let problem = doc.problem.to_problem()?;
            Ok(Instance { doc, problem })
        })
        .collect()
}

fn model_options(doc: &ProblemDocument, args: &ModelArgs) -> Result<ModelOptions, CliError> {
    let model = match args.model {
        Some(m) => m.into(),
        None => match doc.model {
            m @ (ModelKind::Iop | ModelKind::IopR | ModelKind::IopA | ModelKind::Liop | ModelKind::Slp | ModelKind::Kes) => m,
            _ => ModelKind::IopR,
        },
    };
    let mut scheme = doc.scheme.clone();
    if args.mu.is_some() {
        scheme.mu = args.mu.clone();
        scheme.kind = SchemeName::General;
    }
    if let Some(kind) = args.scheme {
        scheme.kind = kind;
    }
    if let Some(k) = args.kref {
        scheme.kref = k;
    }
    let mut kes = doc.kes.clone();
    if let Some(k) = args.kes_fix {
        kes.fix = Some(k);
    }
    if let Some(p) = args.kes_penalty {
        kes.penalty = p;
    }
    let mut solver = doc.solver.clone();
    if let Some(k) = args.kappa {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CliError::Input("--kappa must be positive".into()));
        }
        solver.kappa = Some(k);
    }
    if let Some(t) = args.slp_step_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input("--slp-step-tol must be positive".into()));
        }
        solver.slp_step_tol = t;
    }
    Ok(ModelOptions { model, scheme, kes, solver })
}

fn write_output(output: &Output, text: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Solver(format!("stdout: {e}")))
        }
    }
}

fn json_many<T: Serialize>(items: &[T]) -> Result<String, CliError> {
    let r = if items.len() == 1 { json::to_string(&items[0]) } else { json::to_string(&items) };
    r.map_err(|e| CliError::Solver(e.to_string()))
}

/// First error wins, in input order.
fn collect<T>(results: Vec<Result<T, CliError>>) -> Result<Vec<T>, CliError> {
    results.into_iter().collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ForwardOutput {
    alpha: Vec<f64>,
    x: Vec<f64>,
    f: Vec<f64>,
    objective_names: Vec<String>,
    iterations: usize,
}

fn forward(source: &Source, alpha: &Option<Vec<f64>>, output: &Output) -> Result<(), CliError> {
    let instances = load(source)?;
    let format = output.format.unwrap_or(Format::Json);
    let results = pool::map(output.jobs as usize, &instances, |inst| {
        let a = alpha
            .as_ref()
            .or(inst.doc.alpha.as_ref())
            .ok_or_else(|| CliError::Input("no weights: pass --alpha or set alpha in the document".into()))?;
        if a.len() != inst.problem.n_objectives() {
            return Err(CliError::Input(format!("--alpha has {} entries for {} objectives", a.len(), inst.problem.n_objectives())));
        }
        let w = WeightVector::from_slice(a)?;
        let s = solve_fop(&inst.problem, &w)?;
        Ok(ForwardOutput {
            alpha: w.as_slice().to_vec(),
            x: s.x.iter().copied().collect(),
            f: s.f.iter().copied().collect(),
            objective_names: inst.doc.objective_names(),
            iterations: s.kernel.iterations,
        })
    });
    let outs = collect(results)?;
    let text = match format {
        Format::Json => json_many(&outs)?,
        Format::Csv => {
            let mut text = String::new();
            for (inst, out) in instances.iter().zip(&outs) {
                match inst.planning()? {
                    Some(plan) => text.push_str(&dvh::to_csv(&plan, &DVector::from_column_slice(&out.x))?),
                    None => {
                        let mut w = csv::Writer::from_writer(Vec::new());
                        let io = |e: csv::Error| CliError::Solver(format!("csv: {e}"));
                        w.write_record(["objective", "alpha", "f"]).map_err(io)?;
                        for (k, name) in out.objective_names.iter().enumerate() {
                            w.write_record([name.clone(), json::real(out.alpha[k]), json::real(out.f[k])]).map_err(io)?;
                        }
                        let bytes = w.into_inner().map_err(|e| CliError::Solver(format!("csv: {e}")))?;
                        text.push_str(&String::from_utf8_lossy(&bytes));
                    }
                }
            }
            text
        }
    };
    write_output(output, &text)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepRow {
    alpha: Vec<f64>,
    f: Vec<f64>,
    x: Vec<f64>,
}

/// Rows sorted by `α₁`, duplicates of the first weight dropped so the order
/// is strict.
fn sweep(source: &Source, points: Option<usize>, seed: Option<u64>, output: &Output) -> Result<(), CliError> {
    let instances = load(source)?;
    if instances.len() != 1 {
        return Err(CliError::Input("sweep takes a single problem".into()));
    }
    let inst = &instances[0];
    let p = &inst.problem;
    let points = points.unwrap_or(inst.doc.solver.points);
    let seed = seed.unwrap_or(inst.doc.seed);
    let mut weights = sweep_weights(p.n_objectives(), points, seed)?;
    weights.sort_by(|a, b| a.as_slice()[0].total_cmp(&b.as_slice()[0]));
    weights.dedup_by(|a, b| a.as_slice()[0] == b.as_slice()[0]);
    let results = pool::map(output.jobs as usize, &weights, |w| {
        let s = solve_fop(p, w)?;
        Ok(SweepRow { alpha: w.as_slice().to_vec(), f: s.f.iter().copied().collect(), x: s.x.iter().copied().collect() })
    });
    let rows = collect(results)?;
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => json::to_string(&rows).map_err(|e| CliError::Solver(e.to_string()))?,
        Format::Csv => {
            let k = p.n_objectives();
            let n = p.n_vars();
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Solver(format!("csv: {e}"));
            let header: Vec<String> = (1..=k)
                .map(|j| format!("alpha_{j}"))
                .chain((1..=k).map(|j| format!("f_{j}")))
                .chain((1..=n).map(|i| format!("x_{i}")))
                .collect();
            w.write_record(&header).map_err(io)?;
            for r in &rows {
                w.write_record(r.alpha.iter().chain(&r.f).chain(&r.x).map(|v| json::real(*v))).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Solver(format!("csv: {e}")))?;
            String::from_utf8_lossy(&bytes).into_owned()
        }
    };
    write_output(output, &text)
}

fn invert_cmd(source: &Source, xhat: &Option<Vec<f64>>, args: &ModelArgs, output: &Output) -> Result<(), CliError> {
    let instances = load(source)?;
    let results = pool::map(output.jobs as usize, &instances, |inst| {
        let opts = model_options(&inst.doc, args)?;
        invert(&inst.problem, &inst.xhat(xhat)?, &inst.doc.objective_names(), &opts)
    });
    let reports = collect(results)?;
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json_many(&reports)?,
        Format::Csv => report::to_csv(&reports)?,
    };
    write_output(output, &text)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassicalOutput {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    objective_names: Vec<String>,
}

fn classical(source: &Source, xhat: &Option<Vec<f64>>, output: &Output) -> Result<(), CliError> {
    let instances = load(source)?;
    let results = pool::map(output.jobs as usize, &instances, |inst| {
        let out = match classical_inverse(&inst.problem, &inst.xhat(xhat)?)? {
            ClassicalVerdict::Weights(w) => ClassicalOutput {
                verdict: "weights",
                alpha: Some(w.as_slice().to_vec()),
                objective_names: inst.doc.objective_names(),
            },
            ClassicalVerdict::OnlyZeroSolution => {
                ClassicalOutput { verdict: "only_zero_solution", alpha: None, objective_names: inst.doc.objective_names() }
            }
        };
        Ok(out)
    });
    let outs = collect(results)?;
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json_many(&outs)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Solver(format!("csv: {e}"));
            w.write_record(["objective", "alpha"]).map_err(io)?;
            for out in &outs {
                for (k, name) in out.objective_names.iter().enumerate() {
                    let a = out.alpha.as_ref().map(|a| json::real(a[k])).unwrap_or_default();
                    w.write_record([name.clone(), a]).map_err(io)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| CliError::Solver(format!("csv: {e}")))?;
            String::from_utf8_lossy(&bytes).into_owned()
        }
    };
    write_output(output, &text)
}

/// The document holds the instance, its planning data, and `x̂`: the forward
/// solution at equal weights with each coordinate scaled by `1 + noise·U`.
pub fn generate(seed: u64, n: usize, m: usize, k: usize, noise: f64) -> Result<ProblemDocument, CliError> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(CliError::Input("--noise must be nonnegative".into()));
    }
    let (p, inst) = gen_planning(seed, n, m, k).map_err(|e| match e {
        invmo_core::Error::InvalidOption(_) => CliError::Input(e.to_string()),
        other => CliError::Solver(other.to_string()),
    })?;
    let pareto = solve_fop(&p, &WeightVector::new(DVector::from_element(k, 1.0 / k as f64))?)?;
    let mut doc = ProblemDocument::new(&p, ModelKind::IopR);
    doc.problem.objective_names = Some(inst.names.clone());
    doc.xhat = Some(perturb(&pareto.x, noise, seed).iter().copied().collect());
    doc.seed = seed;
    doc.planning = Some(PlanningSpec::from_instance(&inst));
    Ok(doc)
}

fn verify_cmd(source: &Source, xhat: &Option<Vec<f64>>, args: &ModelArgs, output: &Output) -> Result<bool, CliError> {
    let instances = load(source)?;
    let results = pool::map(output.jobs as usize, &instances, |inst| {
        let x = inst.xhat(xhat)?;
        let opts = model_options(&inst.doc, args)?;
        let model = match opts.model {
            ModelKind::IopA => ModelKind::IopA,
            _ if opts.scheme.kind == SchemeName::Relative => ModelKind::IopR,
            _ => ModelKind::Iop,
        };
        let scheme = build_scheme(&inst.problem, &x, model, &opts.scheme)?;
        Ok(verify::run(&inst.problem, &x, &scheme))
    });
    let suites = collect(results)?;
    let ok = suites.iter().all(|s| verify::all_passed(s));
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => json_many(&suites)?,
        Format::Csv => {
            let mut text = String::new();
            for (i, suite) in suites.iter().enumerate() {
                if suites.len() > 1 {
                    text.push_str(&format!("# instance {}\n", i + 1));
                }
                for c in suite {
                    text.push_str(&c.line());
                    text.push('\n');
                }
            }
            text
        }
    };
    write_output(output, &text)?;
    Ok(ok)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Forward { source, alpha, output } => forward(&source, &alpha, &output).map(|_| 0),
        Command::Sweep { source, points, seed, output } => sweep(&source, points, seed, &output).map(|_| 0),
        Command::Invert { source, xhat, model, output } => invert_cmd(&source, &xhat, &model, &output).map(|_| 0),
        Command::Classical { source, xhat, output } => classical(&source, &xhat, &output).map(|_| 0),
        Command::GenInstance { seed, beamlets, voxels, structures, noise, output } => {
            let doc = generate(seed, beamlets, voxels, structures, noise)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => doc.emit()?,
                Format::Csv => {
                    let plan = doc.planning.as_ref().map(PlanningSpec::to_instance).transpose()?;
                    let x = DVector::from_column_slice(doc.xhat.as_deref().unwrap_or_default());
                    dvh::to_csv(&plan.expect("generated documents carry planning data"), &x)?
                }
            };
            write_output(&output, &text).map(|_| 0)
        }
        Command::Verify { source, xhat, model, output } => {
            verify_cmd(&source, &xhat, &model, &output).map(|ok| if ok { 0 } else { 1 })
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("invmo: {e}");
            e.exit_code()
        }
    }
}
