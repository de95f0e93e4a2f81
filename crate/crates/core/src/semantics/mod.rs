//! Unfolding systems, closures, and the two evaluators.
//!
//! [`eval_least`] computes one simultaneous least fixpoint over the closure
//! of the root. [`eval_initial`] folds the formula bottom-up, solving each
//! group of mutually dependent fixpoint nodes on its own. Negation is
//! stratified in both: `¬ψ` is evaluated by a separate run on `ψ` and then
//! complemented.

mod closure;
mod initial;
mod least;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    eval_lattice_term, ApproxOptions, LatticeContext, LatticeError, LatticeTerm, Predicate,
};
use crate::models::{check_morphism, Model, ModelError, ModelKind, MorphismViolation, StateMap};
use crate::programs::{canonicalize, normal_form};
use crate::schemes::{
    builtin_dual, dualize, negate, substitute, GuardedLeaf, GuardedTerm, SchemeError,
};
use crate::syntax::{FixHead, Formula, Modality, Polarity};

pub use closure::{compute_closure, Closure, DEFAULT_CLOSURE_CAP};
pub use initial::{eval_initial, eval_initial_with};
pub use least::{eval_least, eval_least_with, LeastSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("`{0}` is not headed by a fixpoint modality")]
    NotFixpoint(String),
    #[error("modality `{modality}` has no interpretation on {model} models")]
    UnsupportedModality { modality: String, model: ModelKind },
    #[error("label `{0}` is not declared by the model")]
    UnknownLabel(String),
    #[error("closure exceeded {cap} formulas; the growing family is headed by `{family}`")]
    ClosureCap { cap: usize, family: String },
    #[error("`{0}` depends on itself through a negation")]
    NegationInCycle(String),
    #[error("least and greatest fixpoints are mutually dependent at `{0}`")]
    Alternation(String),
    #[error("the state map is not a morphism: {0}")]
    NotMorphism(MorphismViolation),
}

/// How `gfp{..}` nodes are evaluated by [`eval_initial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatStrategy {
    /// Complement of the least solution of the dual scheme on negated arguments.
    #[default]
    Dual,
    /// Descending iteration from ⊤.
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub approx: ApproxOptions,
    pub closure_cap: usize,
    pub flat: FlatStrategy,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            approx: ApproxOptions::default(),
            closure_cap: DEFAULT_CLOSURE_CAP,
            flat: FlatStrategy::Dual,
        }
    }
}

/// Outcome of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticResult {
    pub root: Formula,
    pub value: Predicate,
    /// Every formula whose value was computed, in a deterministic order.
    pub entries: Vec<(Formula, Predicate)>,
    /// Operator applications over all fixpoint computations.
    pub iterations: usize,
    /// Largest final sup-norm step of any approximate iteration (0 for sets).
    pub residual: f64,
}

impl SemanticResult {
    pub fn get(&self, f: &Formula) -> Option<&Predicate> {
        self.entries.iter().find(|(k, _)| k == f).map(|(_, v)| v)
    }
}

pub fn lattice_for(model: &Model) -> LatticeContext {
    if model.is_quantitative() {
        LatticeContext::quantitative(model.len())
    } else {
        LatticeContext::set(model.len())
    }
}

/// One unfolding step of a fixpoint formula.
pub fn unfold(f: &Formula) -> Result<GuardedTerm, SemanticsError> {
    let leaf = |f: Formula| LatticeTerm::Leaf(GuardedLeaf::Formula(f));
    let next = |m: Modality, f: Formula| LatticeTerm::Leaf(GuardedLeaf::Modal(m, vec![leaf(f)]));
    let Formula::Fix(head, args) = f else {
        return Err(SemanticsError::NotFixpoint(f.to_string()));
    };
    let single = || -> Result<Formula, SemanticsError> {
        match args.as_slice() {
            [a] => Ok(a.clone()),
            _ => Err(SchemeError::Arity {
                expected: 1,
                found: args.len(),
            }
            .into()),
        }
    };
    Ok(match head {
        FixHead::DiamondStar => {
            LatticeTerm::Or(vec![leaf(single()?), next(Modality::Dia, f.clone())])
        }
        FixHead::Program(p) => {
            let a = single()?;
            let nf = normal_form(p);
            let mut parts: Vec<GuardedTerm> = nf
                .summands
                .into_iter()
                .map(|(label, tail)| {
                    next(
                        Modality::DiaLabel(label),
                        Formula::program(canonicalize(&tail), a.clone()),
                    )
                })
                .collect();
            if nf.eps {
                parts.push(leaf(a));
            }
            if parts.is_empty() {
                LatticeTerm::Bot
            } else {
                LatticeTerm::Or(parts)
            }
        }
        FixHead::Sigma(q) => LatticeTerm::Sum(vec![
            (*q, leaf(single()?)),
            (
                (1.0 - q.into_inner()).into(),
                next(Modality::Dia, f.clone()),
            ),
        ]),
        FixHead::Scheme(_, s) => substitute(s, args, f)?,
    })
}

/// Rewrites `gfp{γ}(ā)` to `~lfp{γ∂}(~ā)`; other formulas are returned unchanged.
pub fn flat_to_dual(f: &Formula) -> Result<Formula, SemanticsError> {
    match f {
        Formula::Fix(FixHead::Scheme(Polarity::Flat, s), args) => {
            let dual = dualize(s, &builtin_dual)?;
            Ok(Formula::not(Formula::Fix(
                FixHead::Scheme(Polarity::Sharp, Arc::new(dual)),
                args.iter().map(negate).collect(),
            )))
        }
        other => Ok(other.clone()),
    }
}

/// Canonicalizes every program heading a `<α>` node, so syntactically
/// different but equal programs share one closure slot.
pub fn canonical_programs(f: &Formula) -> Formula {
    match f {
        Formula::Top | Formula::Bot | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(canonical_programs(g)),
        Formula::And(a, b) => Formula::and(canonical_programs(a), canonical_programs(b)),
        Formula::Or(a, b) => Formula::or(canonical_programs(a), canonical_programs(b)),
        Formula::Sum(ts) => Formula::Sum(
            ts.iter()
                .map(|(c, g)| (*c, canonical_programs(g)))
                .collect(),
        ),
        Formula::Modal(m, args) => {
            Formula::Modal(m.clone(), args.iter().map(canonical_programs).collect())
        }
        Formula::Fix(head, args) => {
            let head = match head {
                FixHead::Program(p) => FixHead::Program(canonicalize(p)),
                other => other.clone(),
            };
            Formula::Fix(head, args.iter().map(canonical_programs).collect())
        }
    }
}

/// The one-step semantics of a modality on `model`.
pub fn interpret_modal(
    model: &Model,
    m: &Modality,
    args: &[Predicate],
) -> Result<Predicate, SemanticsError> {
    let n = model.len();
    let ctx = lattice_for(model);
    let [arg] = args else {
        return Err(SchemeError::Arity {
            expected: m.arity(),
            found: args.len(),
        }
        .into());
    };
    ctx.check(arg)?;
    let unsupported = || SemanticsError::UnsupportedModality {
        modality: m.to_string(),
        model: model.kind(),
    };
    let exists = |succ: &dyn Fn(usize) -> Vec<usize>| {
        Predicate::from_states(
            n,
            (0..n).filter(|&x| succ(x).iter().any(|&y| arg.contains(y))),
        )
    };
    let forall = |succ: &dyn Fn(usize) -> Vec<usize>| {
        Predicate::from_states(
            n,
            (0..n).filter(|&x| succ(x).iter().all(|&y| arg.contains(y))),
        )
    };
    Ok(match (model, m) {
        (Model::Kripke(k), Modality::Dia) => exists(&|x| k.succ(x).to_vec()),
        (Model::Kripke(k), Modality::Box) => forall(&|x| k.succ(x).to_vec()),
        (Model::Labeled(l), Modality::Dia) => exists(&|x| l.any_succ(x)),
        (Model::Labeled(l), Modality::Box) => forall(&|x| l.any_succ(x)),
        (Model::Labeled(l), Modality::DiaLabel(a) | Modality::BoxLabel(a)) => {
            let i = l
                .label_index(a)
                .ok_or_else(|| SemanticsError::UnknownLabel(a.clone()))?;
            if matches!(m, Modality::DiaLabel(_)) {
                exists(&|x| l.succ(i, x).to_vec())
            } else {
                forall(&|x| l.succ(i, x).to_vec())
            }
        }
        (Model::Prob(p), Modality::Dia) => Predicate::Value(
            (0..n)
                .map(|x| {
                    p.step(x)
                        .iter()
                        .map(|&(y, w)| w * arg.at(y))
                        .sum::<f64>()
                        .clamp(0.0, 1.0)
                })
                .collect(),
        ),
        _ => return Err(unsupported()),
    })
}

type Lookup<'a> = dyn FnMut(&Formula) -> Result<Predicate, SemanticsError> + 'a;

/// Evaluates a guarded term, resolving formula leaves through `lookup`.
pub(crate) fn eval_guarded(
    model: &Model,
    ctx: &LatticeContext,
    term: &GuardedTerm,
    lookup: &mut Lookup<'_>,
) -> Result<Predicate, SemanticsError> {
    eval_lattice_term(term, ctx, &mut |leaf: &GuardedLeaf| match leaf {
        GuardedLeaf::Formula(f) => lookup(f),
        GuardedLeaf::Modal(m, subs) => {
            let args = subs
                .iter()
                .map(|t| eval_guarded(model, ctx, t, &mut *lookup))
                .collect::<Result<Vec<_>, _>>()?;
            interpret_modal(model, m, &args)
        }
    })
}

/// Formula leaves of a guarded term, left to right without duplicates.
pub(crate) fn guarded_leaves(term: &GuardedTerm, out: &mut Vec<Formula>) {
    term.for_each_leaf(&mut |leaf| match leaf {
        GuardedLeaf::Formula(f) => {
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
        GuardedLeaf::Modal(_, subs) => subs.iter().for_each(|t| guarded_leaves(t, out)),
    });
}

/// Value of a non-fixpoint, non-negated node from the values of its children.
pub(crate) fn step_structural(
    model: &Model,
    ctx: &LatticeContext,
    f: &Formula,
    lookup: &mut Lookup<'_>,
) -> Result<Predicate, SemanticsError> {
    Ok(match f {
        Formula::Top => ctx.top(),
        Formula::Bot => ctx.bottom(),
        Formula::Atom(a) => {
            let p = model.atom(a);
            ctx.check(&p)?;
            p
        }
        Formula::And(a, b) => lookup(a)?.meet(&lookup(b)?)?,
        Formula::Or(a, b) => lookup(a)?.join(&lookup(b)?)?,
        Formula::Sum(ts) => {
            let mut terms = Vec::with_capacity(ts.len());
            for (c, g) in ts {
                terms.push((c.into_inner(), lookup(g)?));
            }
            ctx.subconvex(&terms)?
        }
        Formula::Modal(m, args) => {
            let args = args
                .iter()
                .map(lookup)
                .collect::<Result<Vec<_>, _>>()?;
            interpret_modal(model, m, &args)?
        }
        Formula::Not(_) | Formula::Fix(..) => unreachable!("step_structural called on `{f}`"),
    })
}

/// The fixpoint polarity of a node: `Some(Flat)` for `gfp{..}`, `Some(Sharp)`
/// for every other fixpoint head, `None` otherwise.
pub(crate) fn fix_polarity(f: &Formula) -> Option<Polarity> {
    match f {
        Formula::Fix(FixHead::Scheme(p, _), _) => Some(*p),
        Formula::Fix(..) => Some(Polarity::Sharp),
        _ => None,
    }
}

/// Per-formula agreement between the two sides of a morphism.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceEntry {
    pub formula: String,
    pub agrees: bool,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceViolation {
    pub formula: String,
    pub state: String,
    pub source_value: f64,
    pub target_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub entries: Vec<InvarianceEntry>,
    pub violation: Option<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Tolerance for comparing values across a morphism on probabilistic models.
pub const INVARIANCE_TOLERANCE: f64 = 1e-6;

/// Checks `⟦φ⟧_source = ⟦φ⟧_target ∘ f` for every closure member `φ` of `root`.
pub fn check_invariance(
    source: &Model,
    target: &Model,
    f: &StateMap,
    root: &Formula,
    opts: &EvalOptions,
) -> Result<InvarianceReport, SemanticsError> {
    if let Some(v) = check_morphism(source, target, f)? {
        return Err(SemanticsError::NotMorphism(v));
    }
    let left = eval_least_with(source, root, opts)?;
    let right = eval_least_with(target, root, opts)?;
    let tol = if source.is_quantitative() {
        INVARIANCE_TOLERANCE
    } else {
        0.0
    };
    let mut entries = Vec::new();
    let mut violation = None;
    let mut seen = BTreeSet::new();
    for (formula, lv) in &left.entries {
        if !seen.insert(formula.clone()) {
            continue;
        }
        let Some(rv) = right.get(formula) else {
            continue;
        };
        let pulled = rv.pull_back(f.as_slice());
        let mut gap: f64 = 0.0;
        for x in 0..source.len() {
            let d = (lv.at(x) - pulled.at(x)).abs();
            gap = gap.max(d);
            if d > tol && violation.is_none() {
                violation = Some(InvarianceViolation {
                    formula: formula.to_string(),
                    state: source.states()[x].clone(),
                    source_value: lv.at(x),
                    target_value: pulled.at(x),
                });
            }
        }
        entries.push(InvarianceEntry {
            formula: formula.to_string(),
            agrees: gap <= tol,
            max_gap: gap,
        });
    }
    Ok(InvarianceReport { entries, violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures;
    use crate::syntax::parse_formula_unchecked;

    fn parse(text: &str) -> Formula {
        parse_formula_unchecked(text).unwrap()
    }

    fn leaf(text: &str) -> GuardedTerm {
        LatticeTerm::Leaf(GuardedLeaf::Formula(parse(text)))
    }

    fn next(m: Modality, text: &str) -> GuardedTerm {
        LatticeTerm::Leaf(GuardedLeaf::Modal(m, vec![leaf(text)]))
    }

    #[test]
    fn unfold_examples() {
        assert_eq!(
            unfold(&parse("dia* p")).unwrap(),
            LatticeTerm::Or(vec![leaf("p"), next(Modality::Dia, "dia* p")])
        );
        assert_eq!(
            unfold(&parse("<a*>p")).unwrap(),
            LatticeTerm::Or(vec![
                next(Modality::DiaLabel("a".into()), "<a*>p"),
                leaf("p")
            ])
        );
        assert_eq!(
            unfold(&parse("sigma[0.5] p")).unwrap(),
            LatticeTerm::Sum(vec![
                (0.5.into(), leaf("p")),
                (0.5.into(), next(Modality::Dia, "sigma[0.5] p")),
            ])
        );
        assert!(matches!(
            unfold(&parse("p")),
            Err(SemanticsError::NotFixpoint(_))
        ));
    }

    #[test]
    fn modal_examples() {
        let m1 = fixtures::m1();
        let s2 = Predicate::from_states(3, [2]);
        assert_eq!(
            interpret_modal(&m1, &Modality::Dia, &[s2]).unwrap(),
            Predicate::from_states(3, [1, 2])
        );
        assert_eq!(
            interpret_modal(&m1, &Modality::Dia, &[Predicate::empty(3)]).unwrap(),
            Predicate::empty(3)
        );
        let mq = fixtures::mq();
        let v = Predicate::values(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            interpret_modal(&mq, &Modality::Dia, &[v]).unwrap(),
            Predicate::values(vec![1.0, 0.0]).unwrap()
        );
        assert!(matches!(
            interpret_modal(&mq, &Modality::Box, &[Predicate::zeros(2)]),
            Err(SemanticsError::UnsupportedModality { .. })
        ));
    }

    #[test]
    fn flat_rewrite() {
        let f = parse("gfp{v /\\ box X}(p/v)");
        assert_eq!(flat_to_dual(&f).unwrap(), parse("~lfp{v \\/ dia X}(~p/v)"));
    }
}
