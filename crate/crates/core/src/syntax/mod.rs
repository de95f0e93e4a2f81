//! Formula trees shared by all logic instances, with parsing, printing and
//! per-instance validation.

mod lexer;
pub mod mu;
mod parser;
mod print;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::models::{Model, ModelKind};
use crate::programs::Program;
use crate::schemes::Scheme;

pub use lexer::{ParseError, Span};
pub use mu::MuFormula;
pub use parser::{parse_formula, parse_formula_unchecked, parse_mu, parse_program, FormulaError};
pub use validate::{validate, Diagnostic, DiagnosticKind};

/// A one-step modality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Dia,
    Box,
    /// `dia[a]`: some `a`-successor (labeled models).
    DiaLabel(String),
    /// `box[a]`: every `a`-successor (labeled models).
    BoxLabel(String),
}

impl Modality {
    /// De Morgan dual of the modality.
    pub fn dual(&self) -> Modality {
        match self {
            Modality::Dia => Modality::Box,
            Modality::Box => Modality::Dia,
            Modality::DiaLabel(a) => Modality::BoxLabel(a.clone()),
            Modality::BoxLabel(a) => Modality::DiaLabel(a.clone()),
        }
    }

    pub fn arity(&self) -> usize {
        1
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Dia => f.write_str("dia"),
            Modality::Box => f.write_str("box"),
            Modality::DiaLabel(a) => write!(f, "dia[{a}]"),
            Modality::BoxLabel(a) => write!(f, "box[{a}]"),
        }
    }
}

/// `♯` (least) or `♭` (greatest) solution of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Sharp,
    Flat,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Sharp => Polarity::Flat,
            Polarity::Flat => Polarity::Sharp,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Polarity::Sharp => "lfp",
            Polarity::Flat => "gfp",
        }
    }
}

/// Head of a fixpoint node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FixHead {
    /// `dia* φ`: reachability, or optimal stopping on probabilistic models.
    DiamondStar,
    /// `<α>φ`.
    Program(Program),
    /// `sigma[q] φ`: discounted payout.
    Sigma(OrderedFloat<f64>),
    /// `lfp{γ}(…)` / `gfp{γ}(…)`.
    Scheme(Polarity, Arc<Scheme>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Top,
    Bot,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// Subconvex combination `Σ λᵢ·φᵢ`.
    Sum(Vec<(OrderedFloat<f64>, Formula)>),
    Modal(Modality, Vec<Formula>),
    Fix(FixHead, Vec<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn dia(f: Formula) -> Formula {
        Formula::Modal(Modality::Dia, vec![f])
    }

    pub fn boxed(f: Formula) -> Formula {
        Formula::Modal(Modality::Box, vec![f])
    }

    pub fn dia_star(f: Formula) -> Formula {
        Formula::Fix(FixHead::DiamondStar, vec![f])
    }

    pub fn program(p: Program, f: Formula) -> Formula {
        Formula::Fix(FixHead::Program(p), vec![f])
    }

    pub fn sigma(q: f64, f: Formula) -> Formula {
        Formula::Fix(FixHead::Sigma(OrderedFloat(q)), vec![f])
    }

    pub fn sharp(scheme: Scheme, args: Vec<Formula>) -> Formula {
        Formula::Fix(FixHead::Scheme(Polarity::Sharp, Arc::new(scheme)), args)
    }

    pub fn flat(scheme: Scheme, args: Vec<Formula>) -> Formula {
        Formula::Fix(FixHead::Scheme(Polarity::Flat, Arc::new(scheme)), args)
    }

    /// Children in path order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => vec![],
            Formula::Not(f) => vec![f],
            Formula::And(a, b) | Formula::Or(a, b) => vec![a, b],
            Formula::Sum(ts) => ts.iter().map(|(_, f)| f).collect(),
            Formula::Modal(_, args) | Formula::Fix(_, args) => args.iter().collect(),
        }
    }

    pub fn is_fix(&self) -> bool {
        matches!(self, Formula::Fix(..))
    }

    /// Number of fixpoint nodes, counting nested scheme applications.
    pub fn fix_count(&self) -> usize {
        let own = match self {
            Formula::Fix(FixHead::Scheme(_, s), _) => 1 + s.body.apply_count(),
            Formula::Fix(..) => 1,
            _ => 0,
        };
        own + self
            .children()
            .into_iter()
            .map(Formula::fix_count)
            .sum::<usize>()
    }

    pub fn size(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::size)
            .sum::<usize>()
    }

    pub fn contains_negation(&self) -> bool {
        match self {
            Formula::Not(_) => true,
            Formula::Fix(FixHead::Scheme(_, s), args) => {
                s.body.contains_negation() || args.iter().any(Formula::contains_negation)
            }
            _ => self.children().into_iter().any(Formula::contains_negation),
        }
    }

    /// Atomic propositions mentioned anywhere, including inside schemes.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Fix(FixHead::Scheme(_, s), args) => {
                s.body.collect_atoms(out);
                args.iter().for_each(|a| a.collect_atoms(out));
            }
            _ => self
                .children()
                .into_iter()
                .for_each(|c| c.collect_atoms(out)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_formula(f, self)
    }
}

/// Identifier of a logic instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceId {
    DiamondStar,
    Pdl,
    Quant,
    Cfl,
}

impl InstanceId {
    pub const ALL: [InstanceId; 4] = [
        InstanceId::DiamondStar,
        InstanceId::Pdl,
        InstanceId::Quant,
        InstanceId::Cfl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceId::DiamondStar => "diamondstar",
            InstanceId::Pdl => "pdl",
            InstanceId::Quant => "quant",
            InstanceId::Cfl => "cfl",
        }
    }

    /// Whether formulas of this instance denote sets (rather than `[0,1]` values).
    pub fn is_set_based(self) -> bool {
        self != InstanceId::Quant
    }

    /// Model signatures the instance can be evaluated on.
    pub fn supports(self, kind: ModelKind) -> bool {
        match self {
            InstanceId::DiamondStar => matches!(kind, ModelKind::Kripke | ModelKind::Labeled),
            InstanceId::Pdl => kind == ModelKind::Labeled,
            InstanceId::Quant => kind == ModelKind::Prob,
            InstanceId::Cfl => matches!(kind, ModelKind::Kripke | ModelKind::Labeled),
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InstanceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstanceId::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown logic `{s}` (expected diamondstar, pdl, quant or cfl)"))
    }
}

/// A logic instance: which connectives are legal, and optionally which
/// propositions and atomic programs may be mentioned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicInstance {
    pub id: InstanceId,
    /// Declared propositions; `None` accepts any name.
    pub props: Option<BTreeSet<String>>,
    /// Declared atomic programs / transition labels; `None` accepts any name.
    pub labels: Option<BTreeSet<String>>,
}

impl LogicInstance {
    pub fn new(id: InstanceId) -> Self {
        LogicInstance {
            id,
            props: None,
            labels: None,
        }
    }

    /// Instance whose propositions and labels are those declared by `model`.
    pub fn for_model(id: InstanceId, model: &Model) -> Self {
        let labels = match model {
            Model::Labeled(m) => Some(m.labels().iter().cloned().collect()),
            _ => Some(BTreeSet::new()),
        };
        LogicInstance {
            id,
            props: Some(model.atom_names().into_iter().collect()),
            labels,
        }
    }

    /// The declared dual of a modality, if the instance has one.
    pub fn dual_of(&self, m: &Modality) -> Option<Modality> {
        match self.id {
            InstanceId::Quant | InstanceId::Pdl => None,
            InstanceId::DiamondStar | InstanceId::Cfl => Some(m.dual()),
        }
    }

    pub fn allows_modality(&self, m: &Modality) -> bool {
        match self.id {
            InstanceId::DiamondStar => matches!(m, Modality::Dia | Modality::Box),
            InstanceId::Pdl => false,
            InstanceId::Quant => *m == Modality::Dia,
            InstanceId::Cfl => true,
        }
    }
}
