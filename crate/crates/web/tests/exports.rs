use coalfix::models::fixtures;
use coalfix::models::Model;
use coalfix::oracles::{opt_stop_oracle, sigma_linear_oracle};
use coalfix_web::{format_formula, program_normal_form, sigma_curves, state_sets};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn sigma_curves_match_linear_oracle() {
    let mq2 = fixtures::mq2();
    let Model::Prob(p) = &mq2 else { unreachable!() };
    let payout = p.payout("p").unwrap().to_vec();
    let r = parse(&sigma_curves(&mq2.to_json(), "p", 10));
    let qs = r["q"].as_array().unwrap();
    assert_eq!(qs.len(), 10);
    for (k, q) in qs.iter().enumerate() {
        let q = q.as_f64().unwrap();
        let expected = sigma_linear_oracle(p, q, &payout).unwrap();
        for (i, s) in r["series"].as_array().unwrap().iter().enumerate() {
            let got = s["values"][k].as_f64().unwrap();
            assert!(
                (got - expected[i]).abs() < 1e-6,
                "q={q} state {i}: {got} vs {}",
                expected[i]
            );
        }
    }
    let stop = opt_stop_oracle(p, &payout);
    for (i, v) in r["diaStar"].as_array().unwrap().iter().enumerate() {
        assert!((v.as_f64().unwrap() - stop[i]).abs() < 1e-6);
    }
}

#[test]
fn sigma_curves_reject_set_models() {
    let r = parse(&sigma_curves(&fixtures::m1().to_json(), "p", 5));
    assert!(r["error"].as_str().unwrap().contains("probabilistic"));
}

#[test]
fn state_sets_on_fixtures() {
    let r = parse(&state_sets(
        &fixtures::m1().to_json(),
        "diamondstar",
        "dia* p",
    ));
    assert_eq!(r["least"], serde_json::json!(["s0", "s1", "s2"]));
    assert_eq!(r["initial"], r["least"]);
    assert_eq!(r["agree"], true);
    assert_eq!(r["closure"].as_array().unwrap().len(), 2);

    let r = parse(&state_sets(&fixtures::m2().to_json(), "pdl", "<a;b>p"));
    assert_eq!(r["least"], serde_json::json!(["t0"]));

    let r = parse(&state_sets(
        &fixtures::mq().to_json(),
        "quant",
        "sigma[0.5] p",
    ));
    let v: Vec<f64> = r["least"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((v[0] - 0.25).abs() < 1e-6 && (v[1] - 0.5).abs() < 1e-6);

    let r = parse(&state_sets(&fixtures::m1().to_json(), "pdl", "<a>p"));
    assert!(r["error"].is_string());
}

#[test]
fn normal_forms() {
    let r = parse(&program_normal_form("a*"));
    assert_eq!(r["normalForm"], "a;a* + eps");
    let r = parse(&program_normal_form("(a;b)*"));
    assert_eq!(r["normalForm"], "a;(b;(a;b)*) + eps");
    assert_eq!(r["derivatives"].as_array().unwrap().len(), 3);
    assert!(parse(&program_normal_form("a;;b"))["error"].is_string());
}

#[test]
fn formula_echo() {
    assert_eq!(parse(&format_formula("dia*p"))["formula"], "dia* p");
    assert_eq!(parse(&format_formula("p /\\"))["offset"], 4);
}
