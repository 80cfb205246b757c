use invmo::document::{
    EqualitySpec, FunctionSpec, KesSpec, ModelKind, PenaltyName, PlanningSpec, ProblemDocument, ProblemSpec,
    SchemeName, SchemeSpec, SolverSpec, SCHEMA_VERSION,
};
use proptest::prelude::*;

fn real() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => -1e3..1e3f64,
        1 => prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
    ]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(real(), n)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(vector(cols), rows)
}

fn function(n: usize) -> impl Strategy<Value = FunctionSpec> {
    prop_oneof![
        (vector(n), real()).prop_map(|(c, d)| FunctionSpec::Linear { c, d }),
        (matrix(n, n), vector(n), real()).prop_map(|(q, c, d)| FunctionSpec::Quadratic { q, c, d }),
        (1usize..4).prop_flat_map(move |m| (matrix(m, n), vector(m)).prop_map(|(m, t)| FunctionSpec::HingeSquared { m, t })),
    ]
}

fn model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(vec![
        ModelKind::Iop,
        ModelKind::IopR,
        ModelKind::IopA,
        ModelKind::Liop,
        ModelKind::Slp,
        ModelKind::Kes,
        ModelKind::Classical,
        ModelKind::Forward,
        ModelKind::Sweep,
    ])
}

fn planning() -> impl Strategy<Value = PlanningSpec> {
    (1usize..4, 1usize..3, 1usize..3).prop_flat_map(|(n, m, k)| {
        (
            prop::collection::vec(matrix(m, n), k),
            vector(k),
            vector(k),
            matrix(m, n),
            real(),
            real(),
            real(),
        )
            .prop_map(move |(dose, thresholds, upper, tumor_dose, lo, hi, beta)| PlanningSpec {
                names: (0..k).map(|j| format!("s\"{j}\\")).collect(),
                dose,
                thresholds,
                upper,
                tumor_dose,
                tumor_lower: lo,
                tumor_upper: hi,
                beta,
            })
    })
}

fn document() -> impl Strategy<Value = ProblemDocument> {
    (1usize..4, 1usize..4, 0usize..3, 0usize..2).prop_flat_map(|(n, k, l, m)| {
        let problem = (
            prop::collection::vec(function(n), k),
            prop::collection::vec(function(n), l),
            prop::option::of((matrix(m.max(1), n), vector(m.max(1)))),
            prop::option::of(Just((1..=k).map(|j| format!("obj {j}")).collect::<Vec<_>>())),
        )
            .prop_map(move |(objectives, inequalities, eq, names)| ProblemSpec {
                n_vars: n,
                objective_names: names,
                objectives,
                inequalities,
                equalities: eq.map(|(a, b)| EqualitySpec { a, b }),
            });
        let scheme = (
            prop::sample::select(vec![SchemeName::Relative, SchemeName::Absolute, SchemeName::General]),
            prop::option::of(vector(k)),
            1..=k,
        )
            .prop_map(|(kind, mu, kref)| SchemeSpec { kind, mu, kref });
        let kes = (prop::sample::select(vec![PenaltyName::Sos, PenaltyName::L1, PenaltyName::GapLinear]), prop::option::of(1..=k))
            .prop_map(|(penalty, fix)| KesSpec { penalty, fix });
        let solver = (prop::option::of(real()), real(), 0usize..1000, 2usize..50)
            .prop_map(|(kappa, slp_step_tol, slp_max_iterations, points)| SolverSpec { kappa, slp_step_tol, slp_max_iterations, points });
        (
            problem,
            prop::option::of(vector(n)),
            prop::option::of(vector(k)),
            model(),
            scheme,
            kes,
            solver,
            any::<u64>(),
            prop::option::of(planning()),
        )
            .prop_map(|(problem, xhat, alpha, model, scheme, kes, solver, seed, planning)| ProblemDocument {
                schema_version: SCHEMA_VERSION.to_string(),
                problem,
                xhat,
                alpha,
                model,
                scheme,
                kes,
                solver,
                seed,
                planning,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn documents_round_trip(doc in document()) {
        let text = doc.emit().unwrap();
        let back = ProblemDocument::parse(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.emit().unwrap(), text);
    }
}

#[test]
fn reals_keep_every_bit() {
    let mut doc = ProblemDocument::new(&invmo_core::instances::example1(), ModelKind::IopR);
    let xs = [0.1 + 0.2, f64::MIN_POSITIVE / 3.0, -f64::MAX, 1.0 - f64::EPSILON / 2.0];
    doc.xhat = Some(xs.to_vec());
    let back = ProblemDocument::parse(&doc.emit().unwrap()).unwrap();
    for (a, b) in back.xhat.unwrap().iter().zip(xs) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn non_finite_reals_do_not_emit() {
    let mut doc = ProblemDocument::new(&invmo_core::instances::example1(), ModelKind::IopR);
    doc.xhat = Some(vec![f64::INFINITY, 1.0]);
    assert!(doc.emit().is_err());
}

#[test]
fn wrong_schema_version_is_rejected() {
    let doc = ProblemDocument::new(&invmo_core::instances::example1(), ModelKind::IopR);
    let text = doc.emit().unwrap().replace("\"schemaVersion\": \"1\"", "\"schemaVersion\": \"9\"");
    assert!(ProblemDocument::parse(&text).is_err());
}
