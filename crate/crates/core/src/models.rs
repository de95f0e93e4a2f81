//! Finite coalgebras: Kripke frames, labeled transition systems and
//! probabilistic systems with payouts, plus morphism checking and quotients.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::Predicate;

/// Absolute tolerance for comparing probabilities and payouts.
pub const PROB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Schema(String),
    #[error("state `{0}` is declared twice")]
    DuplicateState(String),
    #[error("label `{0}` is declared twice")]
    DuplicateLabel(String),
    #[error("{context} refers to undeclared state `{state}`")]
    DanglingState { context: String, state: String },
    #[error("{context} refers to undeclared label `{label}`")]
    UnknownLabel { context: String, label: String },
    #[error("state index {index} is out of range for {width} states")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("outgoing mass {mass} at state `{state}` exceeds 1")]
    MassExceeded { state: String, mass: f64 },
    #[error("weight {weight} from `{state}` to `{target}` lies outside [0,1]")]
    WeightRange {
        state: String,
        target: String,
        weight: f64,
    },
    #[error("payout {value} for label `{label}` at state `{state}` lies outside [0,1]")]
    PayoutRange {
        label: String,
        state: String,
        value: f64,
    },
    #[error("probabilistic models observe states through payouts; `props` must be empty")]
    PropsOnProb,
    #[error("cannot relate a {source_kind} model to a {target_kind} model")]
    SignatureMismatch {
        source_kind: ModelKind,
        target_kind: ModelKind,
    },
    #[error("state map covers {found} states but the source has {expected}")]
    MapNotTotal { expected: usize, found: usize },
    #[error("state map refers to undeclared state `{0}`")]
    MapState(String),
    #[error("partition lists state `{0}` twice")]
    PartitionOverlap(String),
    #[error("partition block `{block}` is not a congruence: {reason}")]
    NotCongruent { block: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kripke,
    Labeled,
    Prob,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Kripke => "kripke",
            ModelKind::Labeled => "labeled",
            ModelKind::Prob => "prob",
        })
    }
}

fn check_states(states: &[String]) -> Result<HashMap<&str, usize>, ModelError> {
    let mut index = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.as_str(), i).is_some() {
            return Err(ModelError::DuplicateState(s.clone()));
        }
    }
    Ok(index)
}

fn check_labels(labels: &[String]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(ModelError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn sorted_targets(width: usize, targets: Vec<usize>) -> Result<Vec<usize>, ModelError> {
    let set: BTreeSet<usize> = targets.into_iter().collect();
    if let Some(&index) = set.iter().find(|&&i| i >= width) {
        return Err(ModelError::IndexOutOfRange { index, width });
    }
    Ok(set.into_iter().collect())
}

fn build_props(
    width: usize,
    props: BTreeMap<String, Vec<usize>>,
) -> Result<BTreeMap<String, Predicate>, ModelError> {
    props
        .into_iter()
        .map(|(name, states)| {
            let states = sorted_targets(width, states)?;
            Ok((name, Predicate::from_states(width, states)))
        })
        .collect()
}

/// `BX = P(Prop) × P(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KripkeModel {
    states: Vec<String>,
    props: BTreeMap<String, Predicate>,
    succ: Vec<Vec<usize>>,
}

impl KripkeModel {
    /// Builds a model from index-based data; successor lists are sorted and deduplicated.
    pub fn new(
        states: Vec<String>,
        props: BTreeMap<String, Vec<usize>>,
        succ: Vec<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        check_states(&states)?;
        let n = states.len();
        if succ.len() != n {
            return Err(ModelError::Schema(format!(
                "successor table has {} rows for {} states",
                succ.len(),
                n
            )));
        }
        let succ = succ
            .into_iter()
            .map(|row| sorted_targets(n, row))
            .collect::<Result<_, _>>()?;
        Ok(KripkeModel {
            props: build_props(n, props)?,
            states,
            succ,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn props(&self) -> &BTreeMap<String, Predicate> {
        &self.props
    }

    pub fn succ(&self, state: usize) -> &[usize] {
        &self.succ[state]
    }
}

/// `BX = P(Prop) × P(X)^Π`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledModel {
    states: Vec<String>,
    props: BTreeMap<String, Predicate>,
    labels: Vec<String>,
    /// Indexed by label, then by state.
    succ: Vec<Vec<Vec<usize>>>,
}

impl LabeledModel {
    pub fn new(
        states: Vec<String>,
        props: BTreeMap<String, Vec<usize>>,
        labels: Vec<String>,
        succ: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self, ModelError> {
        check_states(&states)?;
        check_labels(&labels)?;
        let n = states.len();
        if succ.len() != labels.len() || succ.iter().any(|rows| rows.len() != n) {
            return Err(ModelError::Schema(
                "successor table must have one row per label and state".into(),
            ));
        }
        let succ = succ
            .into_iter()
            .map(|rows| rows.into_iter().map(|row| sorted_targets(n, row)).collect())
            .collect::<Result<_, _>>()?;
        Ok(LabeledModel {
            props: build_props(n, props)?,
            states,
            labels,
            succ,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn props(&self) -> &BTreeMap<String, Predicate> {
        &self.props
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn succ(&self, label: usize, state: usize) -> &[usize] {
        &self.succ[label][state]
    }

    /// Successors along any label.
    pub fn any_succ(&self, state: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .succ
            .iter()
            .flat_map(|rows| rows[state].iter().copied())
            .collect();
        set.into_iter().collect()
    }
}

/// `BX = [0,1]^A × Δ(X)` with `Δ` the finitely supported subdistributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbModel {
    states: Vec<String>,
    payout_labels: Vec<String>,
    /// Indexed by payout label, then by state.
    payout: Vec<Vec<f64>>,
    /// Per state, `(target, weight)` pairs sorted by target with positive weights.
    step: Vec<Vec<(usize, f64)>>,
}

impl ProbModel {
    pub fn new(
        states: Vec<String>,
        payout_labels: Vec<String>,
        payout: Vec<Vec<f64>>,
        step: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, ModelError> {
        check_states(&states)?;
        check_labels(&payout_labels)?;
        let n = states.len();
        if payout.len() != payout_labels.len() || payout.iter().any(|row| row.len() != n) {
            return Err(ModelError::Schema(
                "payout table must have one row per payout label and state".into(),
            ));
        }
        for (l, row) in payout.iter().enumerate() {
            for (s, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ModelError::PayoutRange {
                        label: payout_labels[l].clone(),
                        state: states[s].clone(),
                        value,
                    });
                }
            }
        }
        if step.len() != n {
            return Err(ModelError::Schema(format!(
                "step table has {} rows for {} states",
                step.len(),
                n
            )));
        }
        let mut steps = Vec::with_capacity(n);
        for (s, row) in step.into_iter().enumerate() {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (t, w) in row {
                if t >= n {
                    return Err(ModelError::IndexOutOfRange { index: t, width: n });
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(ModelError::WeightRange {
                        state: states[s].clone(),
                        target: states[t].clone(),
                        weight: w,
                    });
                }
                *merged.entry(t).or_insert(0.0) += w;
            }
            let mass: f64 = merged.values().sum();
            if mass > 1.0 + PROB_TOLERANCE {
                return Err(ModelError::MassExceeded {
                    state: states[s].clone(),
                    mass,
                });
            }
            steps.push(merged.into_iter().filter(|&(_, w)| w > 0.0).collect());
        }
        Ok(ProbModel {
            states,
            payout_labels,
            payout,
            step: steps,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn payout_labels(&self) -> &[String] {
        &self.payout_labels
    }

    /// Payout vector of a label; `None` if the label is not declared.
    pub fn payout(&self, label: &str) -> Option<&[f64]> {
        self.payout_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.payout[i].as_slice())
    }

    pub fn step(&self, state: usize) -> &[(usize, f64)] {
        &self.step[state]
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.step[state].iter().map(|&(_, w)| w).sum()
    }

    /// Image of the step distribution at `state` along `map`, indexed by target state.
    pub fn pushforward(&self, state: usize, map: &[usize], width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for &(t, w) in &self.step[state] {
            out[map[t]] += w;
        }
        out
    }
}

/// A finite coalgebra for one of the supported signatures.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Kripke(KripkeModel),
    Labeled(LabeledModel),
    Prob(ProbModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Kripke(_) => ModelKind::Kripke,
            Model::Labeled(_) => ModelKind::Labeled,
            Model::Prob(_) => ModelKind::Prob,
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Model::Kripke(m) => m.states(),
            Model::Labeled(m) => m.states(),
            Model::Prob(m) => m.states(),
        }
    }

    pub fn len(&self) -> usize {
        self.states().len()
    }

    pub fn is_empty(&self) -> bool {
        self.states().is_empty()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states().iter().position(|s| s == name)
    }

    pub fn is_quantitative(&self) -> bool {
        matches!(self, Model::Prob(_))
    }

    /// Proposition or payout names the model declares.
    pub fn atom_names(&self) -> Vec<String> {
        match self {
            Model::Kripke(m) => m.props().keys().cloned().collect(),
            Model::Labeled(m) => m.props().keys().cloned().collect(),
            Model::Prob(m) => m.payout_labels().to_vec(),
        }
    }

    /// Interpretation of an atomic proposition; undeclared names denote ⊥.
    pub fn atom(&self, name: &str) -> Predicate {
        let n = self.len();
        match self {
            Model::Kripke(m) => m
                .props()
                .get(name)
                .cloned()
                .unwrap_or_else(|| Predicate::empty(n)),
            Model::Labeled(m) => m
                .props()
                .get(name)
                .cloned()
                .unwrap_or_else(|| Predicate::empty(n)),
            Model::Prob(m) => m
                .payout(name)
                .map(|v| Predicate::Value(v.to_vec()))
                .unwrap_or_else(|| Predicate::zeros(n)),
        }
    }

    /// Parses and validates a JSON model document.
    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
        Model::from_document(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("model documents always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }

    pub fn from_document(doc: ModelDocument) -> Result<Model, ModelError> {
        match doc {
            ModelDocument::Kripke(KripkeDocument {
                states,
                props,
                succ,
            }) => {
                let index = check_states(&states)?;
                let props = resolve_props(&index, props)?;
                let mut rows = vec![Vec::new(); states.len()];
                for (src, targets) in succ {
                    let s = lookup(&index, &src, "succ")?;
                    rows[s] = lookup_all(&index, &targets, &format!("succ of `{src}`"))?;
                }
                Ok(Model::Kripke(KripkeModel::new(states, props, rows)?))
            }
            ModelDocument::Labeled(LabeledDocument {
                states,
                props,
                labels,
                succ,
            }) => {
                let index = check_states(&states)?;
                check_labels(&labels)?;
                let props = resolve_props(&index, props)?;
                let mut table = vec![vec![Vec::new(); states.len()]; labels.len()];
                for (label, per_state) in succ {
                    let l = labels.iter().position(|x| *x == label).ok_or_else(|| {
                        ModelError::UnknownLabel {
                            context: "succ".into(),
                            label: label.clone(),
                        }
                    })?;
                    for (src, targets) in per_state {
                        let s = lookup(&index, &src, "succ")?;
                        table[l][s] =
                            lookup_all(&index, &targets, &format!("{label}-succ of `{src}`"))?;
                    }
                }
                Ok(Model::Labeled(LabeledModel::new(
                    states, props, labels, table,
                )?))
            }
            ModelDocument::Prob(ProbDocument {
                states,
                props,
                payout_labels,
                payout,
                step,
            }) => {
                if !props.is_empty() {
                    return Err(ModelError::PropsOnProb);
                }
                let index = check_states(&states)?;
                check_labels(&payout_labels)?;
                let mut table = vec![vec![0.0; states.len()]; payout_labels.len()];
                for (label, per_state) in payout {
                    let l = payout_labels
                        .iter()
                        .position(|x| *x == label)
                        .ok_or_else(|| ModelError::UnknownLabel {
                            context: "payout".into(),
                            label: label.clone(),
                        })?;
                    for (state, value) in per_state {
                        let s = lookup(&index, &state, "payout")?;
                        table[l][s] = value;
                    }
                }
                let mut rows = vec![Vec::new(); states.len()];
                for (src, dist) in step {
                    let s = lookup(&index, &src, "step")?;
                    for (tgt, w) in dist {
                        let t = lookup(&index, &tgt, &format!("step of `{src}`"))?;
                        rows[s].push((t, w));
                    }
                }
                Ok(Model::Prob(ProbModel::new(
                    states,
                    payout_labels,
                    table,
                    rows,
                )?))
            }
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        fn props_doc(
            states: &[String],
            props: &BTreeMap<String, Predicate>,
        ) -> BTreeMap<String, Vec<String>> {
            props
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        p.states().into_iter().map(|i| states[i].clone()).collect(),
                    )
                })
                .collect()
        }
        let names = |states: &[String], idx: &[usize]| -> Vec<String> {
            idx.iter().map(|&i| states[i].clone()).collect()
        };
        match self {
            Model::Kripke(m) => ModelDocument::Kripke(KripkeDocument {
                states: m.states.clone(),
                props: props_doc(&m.states, &m.props),
                succ: (0..m.states.len())
                    .filter(|&s| !m.succ[s].is_empty())
                    .map(|s| (m.states[s].clone(), names(&m.states, &m.succ[s])))
                    .collect(),
            }),
            Model::Labeled(m) => ModelDocument::Labeled(LabeledDocument {
                states: m.states.clone(),
                props: props_doc(&m.states, &m.props),
                labels: m.labels.clone(),
                succ: m
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(l, label)| {
                        let rows = (0..m.states.len())
                            .filter(|&s| !m.succ[l][s].is_empty())
                            .map(|s| (m.states[s].clone(), names(&m.states, &m.succ[l][s])))
                            .collect();
                        (label.clone(), rows)
                    })
                    .collect(),
            }),
            Model::Prob(m) => ModelDocument::Prob(ProbDocument {
                states: m.states.clone(),
                props: BTreeMap::new(),
                payout_labels: m.payout_labels.clone(),
                payout: m
                    .payout_labels
                    .iter()
                    .enumerate()
                    .map(|(l, label)| {
                        let row = (0..m.states.len())
                            .filter(|&s| m.payout[l][s] != 0.0)
                            .map(|s| (m.states[s].clone(), m.payout[l][s]))
                            .collect();
                        (label.clone(), row)
                    })
                    .collect(),
                step: (0..m.states.len())
                    .filter(|&s| !m.step[s].is_empty())
                    .map(|s| {
                        let row = m.step[s]
                            .iter()
                            .map(|&(t, w)| (m.states[t].clone(), w))
                            .collect();
                        (m.states[s].clone(), row)
                    })
                    .collect(),
            }),
        }
    }
}

fn lookup(index: &HashMap<&str, usize>, name: &str, context: &str) -> Result<usize, ModelError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| ModelError::DanglingState {
            context: context.to_string(),
            state: name.to_string(),
        })
}

fn lookup_all(
    index: &HashMap<&str, usize>,
    names: &[String],
    context: &str,
) -> Result<Vec<usize>, ModelError> {
    names.iter().map(|n| lookup(index, n, context)).collect()
}

fn resolve_props(
    index: &HashMap<&str, usize>,
    props: BTreeMap<String, Vec<String>>,
) -> Result<BTreeMap<String, Vec<usize>>, ModelError> {
    props
        .into_iter()
        .map(|(name, states)| {
            let idx = lookup_all(index, &states, &format!("prop `{name}`"))?;
            Ok((name, idx))
        })
        .collect()
}

/// On-disk JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDocument {
    Kripke(KripkeDocument),
    Labeled(LabeledDocument),
    Prob(ProbDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KripkeDocument {
    pub states: Vec<String>,
    #[serde(default)]
    pub props: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub succ: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledDocument {
    pub states: Vec<String>,
    #[serde(default)]
    pub props: BTreeMap<String, Vec<String>>,
    pub labels: Vec<String>,
    #[serde(default)]
    pub succ: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbDocument {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub props: BTreeMap<String, Vec<String>>,
    #[serde(default, rename = "payoutLabels")]
    pub payout_labels: Vec<String>,
    #[serde(default)]
    pub payout: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub step: BTreeMap<String, BTreeMap<String, f64>>,
}

/// A total function between the state sets of two models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMap {
    map: Vec<usize>,
    target_len: usize,
}

impl StateMap {
    pub fn new(source: &Model, target: &Model, map: Vec<usize>) -> Result<Self, ModelError> {
        if source.kind() != target.kind() {
            return Err(ModelError::SignatureMismatch {
                source_kind: source.kind(),
                target_kind: target.kind(),
            });
        }
        if map.len() != source.len() {
            return Err(ModelError::MapNotTotal {
                expected: source.len(),
                found: map.len(),
            });
        }
        if let Some(&index) = map.iter().find(|&&y| y >= target.len()) {
            return Err(ModelError::IndexOutOfRange {
                index,
                width: target.len(),
            });
        }
        Ok(StateMap {
            map,
            target_len: target.len(),
        })
    }

    pub fn identity(model: &Model) -> Self {
        StateMap {
            map: (0..model.len()).collect(),
            target_len: model.len(),
        }
    }

    /// Builds a map from state names, e.g. the `{"map": {...}}` CLI document.
    pub fn from_names(
        source: &Model,
        target: &Model,
        pairs: &BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        let mut map = vec![usize::MAX; source.len()];
        for (src, tgt) in pairs {
            let s = source
                .state_index(src)
                .ok_or_else(|| ModelError::MapState(src.clone()))?;
            let t = target
                .state_index(tgt)
                .ok_or_else(|| ModelError::MapState(tgt.clone()))?;
            map[s] = t;
        }
        let covered = map.iter().filter(|&&t| t != usize::MAX).count();
        if covered != source.len() {
            return Err(ModelError::MapNotTotal {
                expected: source.len(),
                found: covered,
            });
        }
        StateMap::new(source, target, map)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, state: usize) -> usize {
        self.map[state]
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Prop,
    Step,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorphismViolation {
    pub state: usize,
    pub state_name: String,
    pub kind: ViolationKind,
    /// The proposition, payout label or transition label involved.
    pub detail: String,
}

impl fmt::Display for MorphismViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ViolationKind::Prop => "prop",
            ViolationKind::Step => "step",
        };
        write!(f, "({}, {tag}) at `{}`", self.state_name, self.detail)
    }
}

/// Checks that `f` commutes with the coalgebra structures.
///
/// Observations are checked for every state before any transition structure,
/// so a map that breaks both reports the observation failure.
pub fn check_morphism(
    source: &Model,
    target: &Model,
    f: &StateMap,
) -> Result<Option<MorphismViolation>, ModelError> {
    if source.kind() != target.kind() {
        return Err(ModelError::SignatureMismatch {
            source_kind: source.kind(),
            target_kind: target.kind(),
        });
    }
    if f.map.len() != source.len() || f.target_len != target.len() {
        return Err(ModelError::MapNotTotal {
            expected: source.len(),
            found: f.map.len(),
        });
    }
    let violation = |state: usize, kind, detail: &str| MorphismViolation {
        state,
        state_name: source.states()[state].clone(),
        kind,
        detail: detail.to_string(),
    };
    let map = f.as_slice();

    let atoms: BTreeSet<String> = source
        .atom_names()
        .into_iter()
        .chain(target.atom_names())
        .collect();
    for x in 0..source.len() {
        for a in &atoms {
            let here = source.atom(a).at(x);
            let there = target.atom(a).at(map[x]);
            if (here - there).abs() > PROB_TOLERANCE {
                return Ok(Some(violation(x, ViolationKind::Prop, a)));
            }
        }
    }

    match (source, target) {
        (Model::Kripke(s), Model::Kripke(t)) => {
            for x in 0..s.states.len() {
                let image: BTreeSet<usize> = s.succ(x).iter().map(|&y| map[y]).collect();
                if !image.iter().copied().eq(t.succ(map[x]).iter().copied()) {
                    return Ok(Some(violation(x, ViolationKind::Step, "succ")));
                }
            }
        }
        (Model::Labeled(s), Model::Labeled(t)) => {
            let labels: BTreeSet<&String> = s.labels.iter().chain(&t.labels).collect();
            for x in 0..s.states.len() {
                for label in &labels {
                    let image: BTreeSet<usize> = match s.label_index(label) {
                        Some(l) => s.succ(l, x).iter().map(|&y| map[y]).collect(),
                        None => BTreeSet::new(),
                    };
                    let expected: &[usize] = match t.label_index(label) {
                        Some(l) => t.succ(l, map[x]),
                        None => &[],
                    };
                    if !image.iter().copied().eq(expected.iter().copied()) {
                        return Ok(Some(violation(x, ViolationKind::Step, label)));
                    }
                }
            }
        }
        (Model::Prob(s), Model::Prob(t)) => {
            for x in 0..s.states.len() {
                let pushed = s.pushforward(x, map, t.states.len());
                let mut expected = vec![0.0; t.states.len()];
                for &(y, w) in t.step(map[x]) {
                    expected[y] += w;
                }
                if pushed
                    .iter()
                    .zip(&expected)
                    .any(|(a, b)| (a - b).abs() > PROB_TOLERANCE)
                {
                    return Ok(Some(violation(x, ViolationKind::Step, "step")));
                }
            }
        }
        _ => unreachable!("kinds checked above"),
    }
    Ok(None)
}

/// Quotients a model by a partition given as blocks of state names.
///
/// States not mentioned in any block form singleton blocks.
pub fn quotient_by_kernel(
    model: &Model,
    partition: &[Vec<String>],
) -> Result<(Model, StateMap), ModelError> {
    let mut blocks = Vec::with_capacity(partition.len());
    for block in partition {
        let mut idx = Vec::with_capacity(block.len());
        for name in block {
            idx.push(
                model
                    .state_index(name)
                    .ok_or_else(|| ModelError::DanglingState {
                        context: "partition".into(),
                        state: name.clone(),
                    })?,
            );
        }
        blocks.push(idx);
    }
    quotient_by_indices(model, &blocks)
}

/// Index-based form of [`quotient_by_kernel`].
pub fn quotient_by_indices(
    model: &Model,
    partition: &[Vec<usize>],
) -> Result<(Model, StateMap), ModelError> {
    let n = model.len();
    let mut owner = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for block in partition {
        let mut members = Vec::new();
        for &s in block {
            if s >= n {
                return Err(ModelError::IndexOutOfRange { index: s, width: n });
            }
            if owner[s] != usize::MAX {
                return Err(ModelError::PartitionOverlap(model.states()[s].clone()));
            }
            owner[s] = blocks.len();
            members.push(s);
        }
        if !members.is_empty() {
            members.sort_unstable();
            blocks.push(members);
        }
    }
    for s in 0..n {
        if owner[s] == usize::MAX {
            owner[s] = blocks.len();
            blocks.push(vec![s]);
        }
    }
    // order blocks by their least member so that discrete partitions keep state order
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by_key(|&b| blocks[b][0]);
    let mut rank = vec![0; blocks.len()];
    for (r, &b) in order.iter().enumerate() {
        rank[b] = r;
    }
    let blocks: Vec<Vec<usize>> = order.iter().map(|&b| blocks[b].clone()).collect();
    let map: Vec<usize> = owner.iter().map(|&b| rank[b]).collect();
    let k = blocks.len();

    let names: Vec<String> = blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|&s| model.states()[s].as_str())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let not_congruent = |b: usize, reason: String| ModelError::NotCongruent {
        block: names[b].clone(),
        reason,
    };

    for (b, members) in blocks.iter().enumerate() {
        let rep = members[0];
        for name in model.atom_names() {
            let atom = model.atom(&name);
            if members
                .iter()
                .any(|&s| (atom.at(s) - atom.at(rep)).abs() > PROB_TOLERANCE)
            {
                return Err(not_congruent(
                    b,
                    format!("`{name}` distinguishes its members"),
                ));
            }
        }
    }

    let quotient = match model {
        Model::Kripke(m) => {
            let mut succ = Vec::with_capacity(k);
            for (b, members) in blocks.iter().enumerate() {
                let image =
                    |s: usize| -> BTreeSet<usize> { m.succ(s).iter().map(|&y| map[y]).collect() };
                let rep = image(members[0]);
                if members.iter().any(|&s| image(s) != rep) {
                    return Err(not_congruent(b, "successor blocks differ".into()));
                }
                succ.push(rep.into_iter().collect());
            }
            let props = m
                .props()
                .iter()
                .map(|(name, p)| {
                    let idx = (0..k).filter(|&b| p.contains(blocks[b][0])).collect();
                    (name.clone(), idx)
                })
                .collect();
            Model::Kripke(KripkeModel::new(names.clone(), props, succ)?)
        }
        Model::Labeled(m) => {
            let mut succ = vec![Vec::with_capacity(k); m.labels.len()];
            for (b, members) in blocks.iter().enumerate() {
                for (l, label) in m.labels.iter().enumerate() {
                    let image = |s: usize| -> BTreeSet<usize> {
                        m.succ(l, s).iter().map(|&y| map[y]).collect()
                    };
                    let rep = image(members[0]);
                    if members.iter().any(|&s| image(s) != rep) {
                        return Err(not_congruent(
                            b,
                            format!("`{label}`-successor blocks differ"),
                        ));
                    }
                    succ[l].push(rep.into_iter().collect());
                }
            }
            let props = m
                .props()
                .iter()
                .map(|(name, p)| {
                    let idx = (0..k).filter(|&b| p.contains(blocks[b][0])).collect();
                    (name.clone(), idx)
                })
                .collect();
            Model::Labeled(LabeledModel::new(
                names.clone(),
                props,
                m.labels.clone(),
                succ,
            )?)
        }
        Model::Prob(m) => {
            let mut step = Vec::with_capacity(k);
            for (b, members) in blocks.iter().enumerate() {
                let rep = m.pushforward(members[0], &map, k);
                for &s in members {
                    let other = m.pushforward(s, &map, k);
                    if rep
                        .iter()
                        .zip(&other)
                        .any(|(a, c)| (a - c).abs() > PROB_TOLERANCE)
                    {
                        return Err(not_congruent(
                            b,
                            "step distributions differ on blocks".into(),
                        ));
                    }
                }
                step.push(
                    rep.into_iter()
                        .enumerate()
                        .filter(|&(_, w)| w > 0.0)
                        .collect(),
                );
            }
            let payout = m
                .payout
                .iter()
                .map(|row| blocks.iter().map(|b| row[b[0]]).collect())
                .collect();
            Model::Prob(ProbModel::new(
                names.clone(),
                m.payout_labels.clone(),
                payout,
                step,
            )?)
        }
    };
    let f = StateMap::new(model, &quotient, map)?;
    Ok((quotient, f))
}

/// Small models used throughout examples and tests.
pub mod fixtures {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Kripke chain `s0 → s1 → s2 ↺` with `p@{s2}`, `q@{s1}`.
    pub fn m1() -> Model {
        let props = BTreeMap::from([("p".to_string(), vec![2]), ("q".to_string(), vec![1])]);
        Model::Kripke(
            KripkeModel::new(
                names(&["s0", "s1", "s2"]),
                props,
                vec![vec![1], vec![2], vec![2]],
            )
            .expect("fixture is valid"),
        )
    }

    /// Labeled chain `t0 -a→ t1 -b→ t2` with `p@{t2}`.
    pub fn m2() -> Model {
        let props = BTreeMap::from([("p".to_string(), vec![2])]);
        Model::Labeled(
            LabeledModel::new(
                names(&["t0", "t1", "t2"]),
                props,
                names(&["a", "b"]),
                vec![vec![vec![1], vec![], vec![]], vec![vec![], vec![2], vec![]]],
            )
            .expect("fixture is valid"),
        )
    }

    /// `x` moves to `y` with probability 1, `y` halts; payout `p = (0, 1)`.
    pub fn mq() -> Model {
        Model::Prob(
            ProbModel::new(
                names(&["x", "y"]),
                names(&["p"]),
                vec![vec![0.0, 1.0]],
                vec![vec![(1, 1.0)], vec![]],
            )
            .expect("fixture is valid"),
        )
    }

    /// `u` loops with ½ and moves to `w` with ¼; payout `p = (0, 0.8)`.
    pub fn mq2() -> Model {
        Model::Prob(
            ProbModel::new(
                names(&["u", "w"]),
                names(&["p"]),
                vec![vec![0.0, 0.8]],
                vec![vec![(0, 0.5), (1, 0.25)], vec![]],
            )
            .expect("fixture is valid"),
        )
    }

    /// Two self-looping states `a`, `b` satisfying the same propositions.
    pub fn twin_loops() -> Model {
        let props = BTreeMap::from([("p".to_string(), vec![0, 1])]);
        Model::Kripke(
            KripkeModel::new(names(&["a", "b"]), props, vec![vec![0], vec![1]])
                .expect("fixture is valid"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    const M1_JSON: &str = r#"{
        "kind": "kripke",
        "states": ["s0", "s1", "s2"],
        "props": {"p": ["s2"], "q": ["s1"]},
        "succ": {"s0": ["s1"], "s1": ["s2"], "s2": ["s2"]}
    }"#;

    #[test]
    fn load_m1() {
        let m = Model::from_json(M1_JSON).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m, m1());
    }

    #[test]
    fn dangling_edge_rejected() {
        let doc = r#"{"kind":"kripke","states":["a"],"succ":{"a":["b"]}}"#;
        assert!(matches!(
            Model::from_json(doc),
            Err(ModelError::DanglingState { state, .. }) if state == "b"
        ));
    }

    #[test]
    fn unit_mass_accepted_and_excess_rejected() {
        let ok = r#"{"kind":"prob","states":["x","y"],"payoutLabels":["p"],
                     "payout":{"p":{"y":1}},"step":{"x":{"y":1.0}}}"#;
        let m = Model::from_json(ok).unwrap();
        match &m {
            Model::Prob(p) => assert_eq!(p.mass(0), 1.0),
            _ => unreachable!(),
        }
        assert_eq!(m, mq());
        let bad = r#"{"kind":"prob","states":["x","y"],"step":{"x":{"y":0.7,"x":0.4}}}"#;
        assert!(matches!(
            Model::from_json(bad),
            Err(ModelError::MassExceeded { .. })
        ));
        let payout =
            r#"{"kind":"prob","states":["x"],"payoutLabels":["p"],"payout":{"p":{"x":1.5}}}"#;
        assert!(matches!(
            Model::from_json(payout),
            Err(ModelError::PayoutRange { .. })
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let doc = r#"{"kind":"kripke","states":["a"],"edges":{}}"#;
        assert!(matches!(Model::from_json(doc), Err(ModelError::Schema(_))));
    }

    #[test]
    fn json_round_trip() {
        for m in [m1(), m2(), mq(), mq2(), twin_loops()] {
            assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
        }
    }

    #[test]
    fn identity_is_morphism() {
        let m = m1();
        assert_eq!(
            check_morphism(&m, &m, &StateMap::identity(&m)).unwrap(),
            None
        );
    }

    #[test]
    fn collapsing_s1_onto_s2_breaks_props() {
        let m = m1();
        let f = StateMap::new(&m, &m, vec![0, 2, 2]).unwrap();
        let v = check_morphism(&m, &m, &f).unwrap().unwrap();
        assert_eq!((v.state_name.as_str(), v.kind), ("s1", ViolationKind::Prop));
        assert_eq!(v.detail, "p");
    }

    #[test]
    fn twin_loops_fold() {
        let m = twin_loops();
        let f = StateMap::new(&m, &m, vec![0, 0]).unwrap();
        assert_eq!(check_morphism(&m, &m, &f).unwrap(), None);
    }

    #[test]
    fn discrete_quotient_is_isomorphic() {
        let m = m1();
        let parts = vec![vec!["s0".into()], vec!["s1".into()], vec!["s2".into()]];
        let (q, f) = quotient_by_kernel(&m, &parts).unwrap();
        assert_eq!(q, m);
        assert_eq!(f.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn twin_quotient_has_one_state() {
        let m = twin_loops();
        let (q, f) = quotient_by_kernel(&m, &[vec!["a".into(), "b".into()]]).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(check_morphism(&m, &q, &f).unwrap(), None);
    }

    #[test]
    fn non_congruent_partition_named() {
        let err = quotient_by_kernel(&m1(), &[vec!["s1".into(), "s2".into()]]).unwrap_err();
        assert!(matches!(err, ModelError::NotCongruent { ref block, .. } if block == "s1+s2"));
    }

    #[test]
    fn overlapping_partition_rejected() {
        let err = quotient_by_kernel(&m1(), &[vec!["s0".into()], vec!["s0".into()]]).unwrap_err();
        assert_eq!(err, ModelError::PartitionOverlap("s0".into()));
    }

    #[test]
    fn signature_mismatch() {
        let err = StateMap::new(&m1(), &mq(), vec![0, 0, 0]).unwrap_err();
        assert!(matches!(err, ModelError::SignatureMismatch { .. }));
    }
}
