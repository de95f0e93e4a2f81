use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn coalfix(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_coalfix"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out) = coalfix(args);
    (
        code,
        serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}")),
    )
}

fn values(v: &Value) -> Vec<(String, f64)> {
    v["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["state"].as_str().unwrap().to_string(),
                e["value"].as_f64().unwrap(),
            )
        })
        .collect()
}

#[test]
fn check_both_semantics_on_m1() {
    let m1 = data("m1.json");
    let (code, r) = json(&[
        "check",
        "--model",
        &m1,
        "--logic",
        "diamondstar",
        "--formula",
        "dia* p",
        "--semantics",
        "both",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["agreement"]["agrees"], true);
    for res in r["results"].as_array().unwrap() {
        assert_eq!(
            res["value"]["states"],
            serde_json::json!(["s0", "s1", "s2"])
        );
    }
}

#[test]
fn check_pdl_initial_on_m2() {
    let m2 = data("m2.json");
    let (code, r) = json(&[
        "check",
        "--model",
        &m2,
        "--logic",
        "pdl",
        "--formula",
        "<a;b>p",
        "--semantics",
        "initial",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["results"][0]["semantics"], "initial");
    assert_eq!(
        r["results"][0]["value"]["states"],
        serde_json::json!(["t0"])
    );
}

#[test]
fn check_sigma_on_mq() {
    let mq = data("mq.json");
    let (code, r) = json(&[
        "check",
        "--model",
        &mq,
        "--logic",
        "quant",
        "--formula",
        "sigma[0.5] p",
        "--semantics",
        "least",
    ]);
    assert_eq!(code, 0);
    let v = values(&r["results"][0]["value"]);
    assert_eq!(v[0].0, "x");
    assert!((v[0].1 - 0.25).abs() < 1e-9 && (v[1].1 - 0.5).abs() < 1e-9);
}

#[test]
fn normalize_examples() {
    for (program, expected) in [
        ("a*", "a;a* + eps"),
        ("eps", "eps"),
        ("(a;b)*", "a;(b;(a;b)*) + eps"),
    ] {
        let (code, r) = json(&["normalize", "--program", program]);
        assert_eq!(code, 0);
        assert_eq!(r["normal_form"]["normal_form"], expected, "{program}");
    }
}

#[test]
fn invariance_outcomes() {
    let (m1, doubled) = (data("m1.json"), data("m1_doubled.json"));
    let (code, r) = json(&[
        "invariance",
        "--model1",
        &m1,
        "--model2",
        &m1,
        "--map",
        &data("m1_identity.json"),
        "--formula",
        "dia* (p \\/ q)",
    ]);
    assert_eq!(code, 0);
    assert!(r["invariance"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["agrees"] == true));

    let (code, r) = json(&[
        "invariance",
        "--model1",
        &doubled,
        "--model2",
        &m1,
        "--map",
        &data("m1_doubled_to_m1.json"),
        "--formula",
        "dia* p",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["logic"], "diamondstar");

    let (code, r) = json(&[
        "invariance",
        "--model1",
        &doubled,
        "--model2",
        &m1,
        "--map",
        &data("m1_bad_map.json"),
        "--formula",
        "dia* p",
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "not-morphism");
    assert!(r["error"]["message"].as_str().unwrap().contains("s1"));
}

#[test]
fn oracle_compare_examples() {
    let (code, r) = json(&[
        "oracle-compare",
        "--model",
        &data("m1.json"),
        "--logic",
        "diamondstar",
        "--formula",
        "dia* p",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["oracle"]["discrepancy"], 0.0);

    let (code, r) = json(&[
        "oracle-compare",
        "--model",
        &data("mq.json"),
        "--logic",
        "quant",
        "--formula",
        "sigma[1] p",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["oracle"]["discrepancy"], 0.0);
    assert_eq!(
        values(&r["oracle"]["value"]),
        vec![("x".to_string(), 0.0), ("y".to_string(), 1.0)]
    );

    let nested = "lfp{p /\\ (q /\\ dia lfp{q /\\ dia X \\/ p /\\ box v}(X/v) \\/ p /\\ box X)}()";
    for seed in ["1", "2", "3"] {
        let (code, r) = json(&[
            "oracle-compare",
            "--model",
            "random:kripke:6",
            "--seed",
            seed,
            "--logic",
            "cfl",
            "--formula",
            nested,
        ]);
        assert_eq!(code, 0, "seed {seed}: {r}");
        assert_eq!(r["oracle"]["discrepancy"], 0.0);
    }
}

#[test]
fn reports_are_byte_deterministic() {
    let args = [
        "oracle-compare",
        "--model",
        "random:prob:7",
        "--seed",
        "42",
        "--logic",
        "quant",
        "--formula",
        "dia* p",
    ];
    assert_eq!(coalfix(&args), coalfix(&args));
    let (_, a) = coalfix(&[
        "check",
        "--model",
        "random:labeled:5",
        "--seed",
        "9",
        "--logic",
        "pdl",
        "--formula",
        "<(a+b)*>p",
        "--closure",
    ]);
    let (_, b) = coalfix(&[
        "check",
        "--model",
        "random:labeled:5",
        "--seed",
        "9",
        "--logic",
        "pdl",
        "--formula",
        "<(a+b)*>p",
        "--closure",
    ]);
    assert_eq!(a, b);
    let (_, c) = coalfix(&[
        "check",
        "--model",
        "random:labeled:5",
        "--seed",
        "10",
        "--logic",
        "pdl",
        "--formula",
        "<(a+b)*>p",
    ]);
    assert_ne!(a, c);
}

#[test]
fn user_errors_exit_with_one() {
    let m1 = data("m1.json");
    let (code, r) = json(&[
        "check",
        "--model",
        &m1,
        "--logic",
        "diamondstar",
        "--formula",
        "dia* (p",
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "syntax");
    assert_eq!(r["error"]["offset"], 7);

    let (code, r) = json(&[
        "check",
        "--model",
        &m1,
        "--logic",
        "diamondstar",
        "--formula",
        "dia* z",
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "validation");

    let (code, r) = json(&[
        "check",
        "--model",
        &m1,
        "--logic",
        "quant",
        "--formula",
        "dia* p",
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "logic");

    let (code, r) = json(&[
        "check",
        "--model",
        "no/such/file.json",
        "--logic",
        "cfl",
        "--formula",
        "p",
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["error"]["kind"], "io");

    let (code, r) = json(&[
        "oracle-compare",
        "--model",
        "random:kripke:4",
        "--logic",
        "cfl",
        "--formula",
        "~lfp{p \\/ dia X}()",
    ]);
    assert_eq!(code, 0, "{r}");

    let (code, _) = coalfix(&[
        "check",
        "--model",
        &m1,
        "--logic",
        "nonsense",
        "--formula",
        "p",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn pretty_view_is_human_readable() {
    let (code, out) = coalfix(&[
        "--pretty",
        "check",
        "--model",
        &data("m1.json"),
        "--logic",
        "diamondstar",
        "--formula",
        "dia* p",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("{s0, s1, s2}"));
    assert!(out.contains("least vs initial: agree"));
    assert!(out.ends_with("result: ok\n"));
}
