//! Command implementations behind the `coalfix` binary.
//!
//! Every command produces a [`RunReport`]; the binary prints it and exits
//! with [`RunReport::exit_code`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalfix::gen;
use coalfix::lattice::Predicate;
use coalfix::models::{Model, ModelError, ModelKind, StateMap};
use coalfix::oracles::{formula_oracle, OracleError};
use coalfix::programs::{derivative_closure, normal_form};
use coalfix::semantics::{
    check_invariance, eval_initial_with, eval_least_with, EvalOptions, FlatStrategy,
    SemanticResult, SemanticsError,
};
use coalfix::syntax::{
    parse_formula, parse_program, Formula, FormulaError, InstanceId, LogicInstance, ParseError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Derivative closures larger than this are reported as unbounded.
const DERIVATIVE_CAP: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "coalfix",
    version,
    about = "Model checker for alternation-free coalgebraic fixpoint logics"
)]
pub struct Cli {
    /// Print a human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a formula on a model.
    Check(CheckArgs),
    /// Print the one-step normal form of a PDL program.
    Normalize(NormalizeArgs),
    /// Check that a state map preserves the value of every closure formula.
    Invariance(InvarianceArgs),
    /// Compare both evaluators against the brute-force oracle.
    OracleCompare(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Least,
    Initial,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlatArg {
    Dual,
    Descending,
}

#[derive(Debug, Args)]
pub struct ModelSource {
    /// Model file, or `random:<kripke|labeled|prob>:<states>` to generate one from `--seed`.
    #[arg(long)]
    pub model: String,
    /// Seed for `random:` models.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// diamondstar, pdl, quant or cfl.
    #[arg(long)]
    pub logic: InstanceId,
    #[arg(long)]
    pub formula: String,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub semantics: Mode,
    /// Agreement tolerance for quantitative values; also caps the iteration residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// How `gfp{..}` nodes are solved by the initial semantics.
    #[arg(long, value_enum, default_value_t = FlatArg::Dual)]
    pub flat: FlatArg,
    /// Also report every closure formula, not only the root.
    #[arg(long)]
    pub closure: bool,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub program: String,
}

#[derive(Debug, Args)]
pub struct InvarianceArgs {
    #[arg(long)]
    pub model1: String,
    #[arg(long)]
    pub model2: String,
    /// JSON document `{"map": {"source state": "target state", ...}}`.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub formula: String,
    /// Logic to validate against; defaults to the first one supporting the models that accepts the formula.
    #[arg(long)]
    pub logic: Option<InstanceId>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub logic: InstanceId,
    #[arg(long)]
    pub formula: String,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model `{path}`: {source}")]
    Model { path: String, source: ModelError },
    #[error("bad random model spec `{0}` (expected random:<kripke|labeled|prob>:<states>)")]
    RandomSpec(String),
    #[error("map `{path}`: {message}")]
    MapDocument { path: String, message: String },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("program syntax error {0}")]
    Program(ParseError),
    #[error("logic {logic} cannot be evaluated on {kind} models")]
    Unsupported { logic: InstanceId, kind: ModelKind },
    #[error("`{formula}` is not a formula of any logic supported by {kind} models")]
    NoLogic { formula: String, kind: ModelKind },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Model { .. } | CliError::RandomSpec(_) => "model",
            CliError::MapDocument { .. } => "map",
            CliError::Formula(FormulaError::Parse(_)) | CliError::Program(_) => "syntax",
            CliError::Formula(FormulaError::Invalid(_)) => "validation",
            CliError::Unsupported { .. } | CliError::NoLogic { .. } => "logic",
            CliError::Semantics(SemanticsError::NotMorphism(_)) => "not-morphism",
            CliError::Semantics(_) => "semantics",
            CliError::Oracle(_) => "oracle",
        }
    }

    fn offset(&self) -> Option<usize> {
        match self {
            CliError::Formula(FormulaError::Parse(e)) | CliError::Program(e) => Some(e.span.start),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateValue {
    pub state: String,
    pub value: f64,
}

/// A formula's value: a set of state names or one number per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueRecord {
    States(Vec<String>),
    Values(Vec<StateValue>),
}

impl ValueRecord {
    pub fn new(model: &Model, p: &Predicate) -> Self {
        let names = model.states();
        match p.as_values() {
            Some(vs) => ValueRecord::Values(
                vs.iter()
                    .zip(names)
                    .map(|(&value, state)| StateValue {
                        state: state.clone(),
                        value,
                    })
                    .collect(),
            ),
            None => ValueRecord::States(p.states().into_iter().map(|i| names[i].clone()).collect()),
        }
    }
}

impl std::fmt::Display for ValueRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValueRecord::States(s) => write!(f, "{{{}}}", s.join(", ")),
            ValueRecord::Values(vs) => {
                let parts: Vec<String> = vs
                    .iter()
                    .map(|v| format!("{}: {}", v.state, v.value))
                    .collect();
                write!(f, "{}", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureRecord {
    pub formula: String,
    pub value: ValueRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub semantics: Mode,
    pub value: ValueRecord,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<Vec<ClosureRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub agrees: bool,
    pub max_gap: f64,
    pub tolerance: f64,
    /// States at which the compared values differ by more than the tolerance.
    pub differing_states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormRecord {
    pub program: String,
    pub normal_form: String,
    pub eps: bool,
    /// Number of distinct derivatives, or `None` past the cap.
    pub derivative_closure_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRecord {
    pub value: ValueRecord,
    pub least: Agreement,
    pub initial: Agreement,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

/// Everything a command reports. Fields that do not apply are omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub arguments: BTreeMap<&'static str, String>,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logic: Option<InstanceId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<EvalRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Agreement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<coalfix::semantics::InvarianceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl RunReport {
    fn new(command: &'static str, arguments: BTreeMap<&'static str, String>) -> Self {
        RunReport {
            command,
            arguments,
            ok: false,
            logic: None,
            results: Vec::new(),
            agreement: None,
            normal_form: None,
            invariance: None,
            oracle: None,
            error: None,
        }
    }

    /// 0 on success with every comparison agreeing, 1 on a user error,
    /// 2 when a comparison between evaluators, oracle or models fails.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.ok {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        let args: Vec<String> = self
            .arguments
            .iter()
            .map(|(k, v)| format!("--{k} {v}"))
            .collect();
        out.push_str(&format!("{} {}\n", self.command, args.join(" ")));
        if let Some(l) = self.logic {
            out.push_str(&format!("logic: {l}\n"));
        }
        for r in &self.results {
            let label = match r.semantics {
                Mode::Least => "least",
                Mode::Initial => "initial",
                Mode::Both => "both",
            };
            out.push_str(&format!(
                "{label:<8} {}  (iterations {}, residual {:e})\n",
                r.value, r.iterations, r.residual
            ));
            for c in r.closure.iter().flatten() {
                out.push_str(&format!("    {} = {}\n", c.formula, c.value));
            }
        }
        if let Some(a) = &self.agreement {
            out.push_str(&agreement_line("least vs initial", a));
        }
        if let Some(nf) = &self.normal_form {
            out.push_str(&format!("g({}) = {}\n", nf.program, nf.normal_form));
            match nf.derivative_closure_size {
                Some(n) => out.push_str(&format!("derivative closure: {n} programs\n")),
                None => out.push_str(&format!(
                    "derivative closure: more than {DERIVATIVE_CAP} programs\n"
                )),
            }
        }
        if let Some(inv) = &self.invariance {
            for e in &inv.entries {
                let mark = if e.agrees { "ok  " } else { "FAIL" };
                out.push_str(&format!("{mark} {}  (gap {:e})\n", e.formula, e.max_gap));
            }
            if let Some(v) = &inv.violation {
                out.push_str(&format!(
                    "violation: `{}` at {}: {} vs {}\n",
                    v.formula, v.state, v.source_value, v.target_value
                ));
            }
        }
        if let Some(o) = &self.oracle {
            out.push_str(&format!("oracle   {}\n", o.value));
            out.push_str(&agreement_line("least vs oracle", &o.least));
            out.push_str(&agreement_line("initial vs oracle", &o.initial));
        }
        if let Some(e) = &self.error {
            match e.offset {
                Some(at) => out.push_str(&format!(
                    "error ({}) at offset {at}: {}\n",
                    e.kind, e.message
                )),
                None => out.push_str(&format!("error ({}): {}\n", e.kind, e.message)),
            }
        }
        out.push_str(if self.ok {
            "result: ok\n"
        } else {
            "result: FAILED\n"
        });
        out
    }
}

fn agreement_line(what: &str, a: &Agreement) -> String {
    if a.agrees {
        format!("{what}: agree (max gap {:e})\n", a.max_gap)
    } else {
        format!(
            "{what}: DISAGREE (max gap {:e} > {:e}) at {}\n",
            a.max_gap,
            a.tolerance,
            a.differing_states.join(", ")
        )
    }
}

pub fn run(cli: &Cli) -> RunReport {
    let (name, args) = echo(&cli.command);
    let mut report = RunReport::new(name, args);
    let outcome = match &cli.command {
        Command::Check(a) => check(a, &mut report),
        Command::Normalize(a) => normalize(a, &mut report),
        Command::Invariance(a) => invariance(a, &mut report),
        Command::OracleCompare(a) => oracle_compare(a, &mut report),
    };
    match outcome {
        Ok(ok) => report.ok = ok,
        Err(e) => {
            report.ok = false;
            report.error = Some(ErrorRecord {
                kind: e.kind(),
                message: e.to_string(),
                offset: e.offset(),
            });
        }
    }
    report
}

fn echo(command: &Command) -> (&'static str, BTreeMap<&'static str, String>) {
    let mut m = BTreeMap::new();
    let name = match command {
        Command::Check(a) => {
            m.insert("model", a.source.model.clone());
            if a.source.model.starts_with("random:") {
                m.insert("seed", a.source.seed.to_string());
            }
            m.insert("logic", a.logic.to_string());
            m.insert("formula", a.formula.clone());
            m.insert("semantics", format!("{:?}", a.semantics).to_lowercase());
            m.insert("tol", a.tol.to_string());
            m.insert("flat", format!("{:?}", a.flat).to_lowercase());
            "check"
        }
        Command::Normalize(a) => {
            m.insert("program", a.program.clone());
            "normalize"
        }
        Command::Invariance(a) => {
            m.insert("model1", a.model1.clone());
            m.insert("model2", a.model2.clone());
            m.insert("map", a.map.clone());
            m.insert("formula", a.formula.clone());
            if let Some(l) = a.logic {
                m.insert("logic", l.to_string());
            }
            "invariance"
        }
        Command::OracleCompare(a) => {
            m.insert("model", a.source.model.clone());
            if a.source.model.starts_with("random:") {
                m.insert("seed", a.source.seed.to_string());
            }
            m.insert("logic", a.logic.to_string());
            m.insert("formula", a.formula.clone());
            m.insert("tol", a.tol.to_string());
            "oracle-compare"
        }
    };
    (name, m)
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(Path::new(path)).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn load_model(spec: &str, seed: u64) -> Result<Model, CliError> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let bad = || CliError::RandomSpec(spec.to_string());
        let (kind, n) = rest.split_once(':').ok_or_else(bad)?;
        let kind = match kind {
            "kripke" => ModelKind::Kripke,
            "labeled" => ModelKind::Labeled,
            "prob" => ModelKind::Prob,
            _ => return Err(bad()),
        };
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        return Ok(gen::model(&mut gen::rng(seed), kind, n));
    }
    Model::from_json(&read(spec)?).map_err(|source| CliError::Model {
        path: spec.to_string(),
        source,
    })
}

fn parse_for(model: &Model, logic: InstanceId, text: &str) -> Result<Formula, CliError> {
    if !logic.supports(model.kind()) {
        return Err(CliError::Unsupported {
            logic,
            kind: model.kind(),
        });
    }
    Ok(parse_formula(
        text,
        &LogicInstance::for_model(logic, model),
    )?)
}

fn options(tol: f64, flat: FlatArg) -> EvalOptions {
    let mut opts = EvalOptions::default();
    opts.approx.tolerance = opts.approx.tolerance.min(tol);
    opts.flat = match flat {
        FlatArg::Dual => FlatStrategy::Dual,
        FlatArg::Descending => FlatStrategy::Descending,
    };
    opts
}

fn record(model: &Model, mode: Mode, r: &SemanticResult, closure: bool) -> EvalRecord {
    EvalRecord {
        semantics: mode,
        value: ValueRecord::new(model, &r.value),
        iterations: r.iterations,
        residual: r.residual,
        closure: closure.then(|| {
            r.entries
                .iter()
                .map(|(f, v)| ClosureRecord {
                    formula: f.to_string(),
                    value: ValueRecord::new(model, v),
                })
                .collect()
        }),
    }
}

/// Compares two values of the same shape; sets must match exactly.
pub fn compare(model: &Model, a: &Predicate, b: &Predicate, tol: f64) -> Agreement {
    let exact = !model.is_quantitative();
    let gaps: Vec<f64> = (0..model.len())
        .map(|i| (a.at(i) - b.at(i)).abs())
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let differs = |g: f64| if exact { g > 0.0 } else { g > tol };
    let differing_states: Vec<String> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| differs(g))
        .map(|(i, _)| model.states()[i].clone())
        .collect();
    Agreement {
        agrees: differing_states.is_empty(),
        max_gap,
        tolerance: if exact { 0.0 } else { tol },
        differing_states,
    }
}

fn check(a: &CheckArgs, report: &mut RunReport) -> Result<bool, CliError> {
    let model = load_model(&a.source.model, a.source.seed)?;
    let f = parse_for(&model, a.logic, &a.formula)?;
    report.logic = Some(a.logic);
    let opts = options(a.tol, a.flat);
    let least = matches!(a.semantics, Mode::Least | Mode::Both)
        .then(|| eval_least_with(&model, &f, &opts))
        .transpose()?;
    let initial = matches!(a.semantics, Mode::Initial | Mode::Both)
        .then(|| eval_initial_with(&model, &f, &opts))
        .transpose()?;
    if let Some(r) = &least {
        report
            .results
            .push(record(&model, Mode::Least, r, a.closure));
    }
    if let Some(r) = &initial {
        report
            .results
            .push(record(&model, Mode::Initial, r, a.closure));
    }
    if let (Some(l), Some(i)) = (&least, &initial) {
        let agreement = compare(&model, &l.value, &i.value, a.tol);
        let ok = agreement.agrees;
        report.agreement = Some(agreement);
        return Ok(ok);
    }
    Ok(true)
}

fn normalize(a: &NormalizeArgs, report: &mut RunReport) -> Result<bool, CliError> {
    let p = parse_program(&a.program).map_err(CliError::Program)?;
    let nf = normal_form(&p);
    report.normal_form = Some(NormalFormRecord {
        program: p.to_string(),
        normal_form: nf.to_string(),
        eps: nf.eps,
        derivative_closure_size: derivative_closure(&p, DERIVATIVE_CAP).map(|c| c.len()),
    });
    Ok(true)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument {
    map: BTreeMap<String, String>,
}

fn invariance(a: &InvarianceArgs, report: &mut RunReport) -> Result<bool, CliError> {
    let source = load_model(&a.model1, 0)?;
    let target = load_model(&a.model2, 0)?;
    let doc: MapDocument =
        serde_json::from_str(&read(&a.map)?).map_err(|e| CliError::MapDocument {
            path: a.map.clone(),
            message: e.to_string(),
        })?;
    let map =
        StateMap::from_names(&source, &target, &doc.map).map_err(|source| CliError::Model {
            path: a.map.clone(),
            source,
        })?;
    let (logic, f) = match a.logic {
        Some(l) => (l, parse_for(&source, l, &a.formula)?),
        None => InstanceId::ALL
            .into_iter()
            .filter(|l| l.supports(source.kind()))
            .find_map(|l| parse_for(&source, l, &a.formula).ok().map(|f| (l, f)))
            .ok_or_else(|| {
                match parse_formula(&a.formula, &LogicInstance::new(InstanceId::Cfl)) {
                    Err(e @ FormulaError::Parse(_)) => CliError::Formula(e),
                    _ => CliError::NoLogic {
                        formula: a.formula.clone(),
                        kind: source.kind(),
                    },
                }
            })?,
    };
    report.logic = Some(logic);
    let inv = check_invariance(&source, &target, &map, &f, &EvalOptions::default())?;
    let ok = inv.holds();
    report.invariance = Some(inv);
    Ok(ok)
}

fn oracle_compare(a: &OracleArgs, report: &mut RunReport) -> Result<bool, CliError> {
    let model = load_model(&a.source.model, a.source.seed)?;
    let f = parse_for(&model, a.logic, &a.formula)?;
    report.logic = Some(a.logic);
    let expected = formula_oracle(&model, &f)?;
    let opts = options(a.tol, FlatArg::Dual);
    let least = eval_least_with(&model, &f, &opts)?;
    let initial = eval_initial_with(&model, &f, &opts)?;
    report
        .results
        .push(record(&model, Mode::Least, &least, false));
    report
        .results
        .push(record(&model, Mode::Initial, &initial, false));
    let l = compare(&model, &least.value, &expected, a.tol);
    let i = compare(&model, &initial.value, &expected, a.tol);
    let ok = l.agrees && i.agrees;
    report.oracle = Some(OracleRecord {
        value: ValueRecord::new(&model, &expected),
        discrepancy: l.max_gap.max(i.max_gap),
        least: l,
        initial: i,
    });
    Ok(ok)
}
