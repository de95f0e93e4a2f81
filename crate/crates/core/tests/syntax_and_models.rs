use coalfix::gen::{self, FormulaShape};
use coalfix::models::{fixtures, Model, ModelError, ModelKind};
use coalfix::programs::normal_form;
use coalfix::syntax::{
    parse_formula, parse_formula_unchecked, parse_mu, parse_program, DiagnosticKind, FormulaError,
    InstanceId, LogicInstance,
};
use proptest::prelude::*;

fn diagnostics(text: &str, model: &Model, id: InstanceId) -> Vec<DiagnosticKind> {
    match parse_formula(text, &LogicInstance::for_model(id, model)) {
        Err(FormulaError::Invalid(d)) => d.into_iter().map(|d| d.kind).collect(),
        other => panic!("expected diagnostics for `{text}`, got {other:?}"),
    }
}

#[test]
fn instance_rules_are_enforced() {
    let m1 = fixtures::m1();
    let m2 = fixtures::m2();
    assert!(diagnostics("<a>p", &m1, InstanceId::DiamondStar)
        .contains(&DiagnosticKind::IllegalConnective));
    assert!(
        diagnostics("dia* z", &m1, InstanceId::DiamondStar).contains(&DiagnosticKind::UnknownProp)
    );
    assert!(diagnostics("<c>p", &m2, InstanceId::Pdl).contains(&DiagnosticKind::UnknownLabel));
    assert!(diagnostics("lfp{v \\/ X}(p/v)", &m1, InstanceId::Cfl)
        .contains(&DiagnosticKind::UnguardedScheme));
    let mq = fixtures::mq();
    assert!(diagnostics("0.75*p + 0.5*dia p", &mq, InstanceId::Quant)
        .contains(&DiagnosticKind::CoefficientSum));
    assert!(parse_formula(
        "sigma[0.5] p",
        &LogicInstance::for_model(InstanceId::Quant, &mq)
    )
    .is_ok());
}

#[test]
fn syntax_errors_carry_offsets() {
    let err = parse_formula_unchecked("dia* (p /\\ q").unwrap_err();
    assert_eq!(err.span.start, 12);
    let err = parse_program("a;;b").unwrap_err();
    assert_eq!(err.span.start, 2);
    let err = parse_mu("mu X. p \\/ dia").unwrap_err();
    assert_eq!(err.span.start, 14);
}

#[test]
fn star_normal_form() {
    assert_eq!(
        normal_form(&parse_program("a*").unwrap()).to_string(),
        "a;a* + eps"
    );
    assert_eq!(
        normal_form(&parse_program("a;b").unwrap()).to_string(),
        "a;b"
    );
}

#[test]
fn fixture_documents_round_trip() {
    for m in [
        fixtures::m1(),
        fixtures::m2(),
        fixtures::mq(),
        fixtures::mq2(),
        fixtures::twin_loops(),
    ] {
        let back = Model::from_json(&m.to_json_pretty()).unwrap();
        assert_eq!(back.to_json(), m.to_json());
    }
}

#[test]
fn malformed_documents_are_rejected() {
    let dup = r#"{"kind":"kripke","states":["s","s"]}"#;
    assert!(matches!(
        Model::from_json(dup),
        Err(ModelError::DuplicateState(_))
    ));
    let dangling = r#"{"kind":"kripke","states":["s"],"props":{"p":["t"]}}"#;
    assert!(matches!(
        Model::from_json(dangling),
        Err(ModelError::DanglingState { .. })
    ));
    let heavy = r#"{"kind":"prob","states":["x","y"],"payoutLabels":["p"],
        "payout":{"p":{"x":0,"y":1}},"step":{"x":{"y":0.75,"x":0.5}}}"#;
    assert!(matches!(
        Model::from_json(heavy),
        Err(ModelError::MassExceeded { .. })
    ));
    assert!(matches!(
        Model::from_json(r#"{"kind":"kripke","states":[],"bogus":1}"#),
        Err(ModelError::Schema(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_formulas_reparse(seed in any::<u64>(), pick in 0usize..4) {
        let mut rng = gen::rng(seed);
        let id = InstanceId::ALL[pick];
        let kind = match id {
            InstanceId::DiamondStar | InstanceId::Cfl => ModelKind::Kripke,
            InstanceId::Pdl => ModelKind::Labeled,
            InstanceId::Quant => ModelKind::Prob,
        };
        let m = gen::model(&mut rng, kind, 4);
        let f = gen::formula(&mut rng, &FormulaShape::for_model(id, &m));
        let printed = f.to_string();
        let back = parse_formula(&printed, &LogicInstance::for_model(id, &m)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn printed_programs_reparse(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let p = gen::program(&mut rng, &["a".to_string(), "b".to_string()], 8);
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p.clone());
        let nf = normal_form(&p).to_program();
        prop_assert_eq!(parse_program(&nf.to_string()).unwrap(), nf);
    }

    #[test]
    fn random_models_round_trip(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = gen::rng(seed);
        let kind = [ModelKind::Kripke, ModelKind::Labeled, ModelKind::Prob][k];
        let m = gen::model(&mut rng, kind, 5);
        let back = Model::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}
