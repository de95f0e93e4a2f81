//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export takes plain strings and returns a JSON document. The
//! `*_json` functions hold the logic and run natively in tests.

use coalfix::models::Model;
use coalfix::programs::{derivative_closure, normal_form};
use coalfix::semantics::{eval_initial, eval_least};
use coalfix::syntax::{
    parse_formula, parse_formula_unchecked, parse_program, Formula, InstanceId, LogicInstance,
};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 401;
const DERIVATIVE_CAP: usize = 200;

#[derive(Serialize)]
struct Series {
    state: String,
    values: Vec<f64>,
}

fn load(model: &str) -> Result<Model, String> {
    Model::from_json(model).map_err(|e| format!("model: {e}"))
}

/// Values of `sigma[q] φ` at every state for `points` evenly spaced `q` in `(0, 1]`,
/// plus the optimal-stopping value `dia* φ` for reference.
pub fn sigma_curves_json(model: &str, formula: &str, points: usize) -> Result<String, String> {
    let m = load(model)?;
    if !m.is_quantitative() {
        return Err("sigma curves need a probabilistic model".into());
    }
    let points = points.clamp(2, MAX_POINTS);
    let phi = parse_formula(formula, &LogicInstance::for_model(InstanceId::Quant, &m))
        .map_err(|e| e.to_string())?;
    let qs: Vec<f64> = (1..=points).map(|i| i as f64 / points as f64).collect();
    let mut series: Vec<Series> = m
        .states()
        .iter()
        .map(|s| Series {
            state: s.clone(),
            values: Vec::with_capacity(points),
        })
        .collect();
    for &q in &qs {
        let v = eval_least(&m, &Formula::sigma(q, phi.clone()))
            .map_err(|e| e.to_string())?
            .value;
        for (i, s) in series.iter_mut().enumerate() {
            s.values.push(v.at(i));
        }
    }
    let stop = eval_least(&m, &Formula::dia_star(phi))
        .map_err(|e| e.to_string())?
        .value;
    let stop: Vec<f64> = (0..m.len()).map(|i| stop.at(i)).collect();
    Ok(json!({ "q": qs, "series": series, "diaStar": stop }).to_string())
}

/// Satisfying states of a formula under both semantics, with every closure member.
pub fn state_sets_json(model: &str, logic: &str, formula: &str) -> Result<String, String> {
    let m = load(model)?;
    let id: InstanceId = logic.parse()?;
    if !id.supports(m.kind()) {
        return Err(format!(
            "logic {id} cannot be evaluated on {} models",
            m.kind()
        ));
    }
    let f = parse_formula(formula, &LogicInstance::for_model(id, &m)).map_err(|e| e.to_string())?;
    let least = eval_least(&m, &f).map_err(|e| e.to_string())?;
    let initial = eval_initial(&m, &f).map_err(|e| e.to_string())?;
    let render = |p: &coalfix::lattice::Predicate| -> serde_json::Value {
        match p.as_values() {
            Some(vs) => json!(vs),
            None => json!(p
                .states()
                .iter()
                .map(|&i| &m.states()[i])
                .collect::<Vec<_>>()),
        }
    };
    let closure: Vec<serde_json::Value> = least
        .entries
        .iter()
        .map(|(g, v)| json!({ "formula": g.to_string(), "value": render(v) }))
        .collect();
    Ok(json!({
        "states": m.states(),
        "quantitative": m.is_quantitative(),
        "least": render(&least.value),
        "initial": render(&initial.value),
        "agree": least.value.distance(&initial.value).map_err(|e| e.to_string())? <= 1e-6,
        "iterations": { "least": least.iterations, "initial": initial.iterations },
        "closure": closure,
    })
    .to_string())
}

/// One-step normal form of a program and its derivatives.
pub fn normal_form_json(program: &str) -> Result<String, String> {
    let p = parse_program(program).map_err(|e| e.to_string())?;
    let derivatives = derivative_closure(&p, DERIVATIVE_CAP).map(|ds| {
        ds.iter()
            .map(|d| json!({ "program": d.to_string(), "normalForm": normal_form(d).to_string() }))
            .collect::<Vec<_>>()
    });
    Ok(json!({
        "program": p.to_string(),
        "normalForm": normal_form(&p).to_string(),
        "derivatives": derivatives,
    })
    .to_string())
}

/// Echoes the formula in canonical printed form, for live syntax feedback.
pub fn format_formula_json(formula: &str) -> Result<String, String> {
    match parse_formula_unchecked(formula) {
        Ok(f) => Ok(json!({ "formula": f.to_string() }).to_string()),
        Err(e) => Ok(json!({ "error": e.message, "offset": e.span.start }).to_string()),
    }
}

fn wrap(r: Result<String, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e }).to_string())
}

#[wasm_bindgen]
pub fn sigma_curves(model: &str, formula: &str, points: usize) -> String {
    wrap(sigma_curves_json(model, formula, points))
}

#[wasm_bindgen]
pub fn state_sets(model: &str, logic: &str, formula: &str) -> String {
    wrap(state_sets_json(model, logic, formula))
}

#[wasm_bindgen]
pub fn program_normal_form(program: &str) -> String {
    wrap(normal_form_json(program))
}

#[wasm_bindgen]
pub fn format_formula(formula: &str) -> String {
    wrap(format_formula_json(formula))
}
