//! Fixpoint schemes `γ(v̄; X)`: guardedness, unfolding into guarded terms,
//! De Morgan duals, and translation from the alternation-free mu-calculus.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::lattice::LatticeTerm;
use crate::syntax::{FixHead, Formula, Modality, MuFormula, Polarity};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("scheme is not guarded at path {0:?}")]
    Unguarded(Vec<usize>),
    #[error("scheme expects {expected} argument(s), got {found}")]
    Arity { expected: usize, found: usize },
    #[error("parameter `{0}` is not declared by the scheme")]
    UnboundParameter(String),
    #[error("modality `{0}` has no declared dual")]
    MissingDual(Modality),
    #[error("variable `{var}` is used across a change of fixpoint type (alternation)")]
    Alternation { var: String },
    #[error("variable `{0}` occurs outside every modality within its binder")]
    UnguardedVariable(String),
    #[error("negation applied to a subformula with free variable `{0}`")]
    NegationOnOpen(String),
    #[error("variable `{0}` is free")]
    FreeVariable(String),
}

/// A scheme body over parameters `v̄` and the fixpoint variable `X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeBody {
    Param(String),
    FixVar,
    Closed(Formula),
    Top,
    Bot,
    And(Box<SchemeBody>, Box<SchemeBody>),
    Or(Box<SchemeBody>, Box<SchemeBody>),
    Modal(Modality, Vec<SchemeBody>),
    /// Nested `♯_δ(ā/w̄)` / `♭_δ(ā/w̄)` whose arguments live in the outer scope.
    Apply {
        polarity: Polarity,
        scheme: Arc<Scheme>,
        args: Vec<SchemeBody>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scheme {
    pub params: Vec<String>,
    pub body: SchemeBody,
}

impl SchemeBody {
    pub fn param(name: &str) -> Self {
        SchemeBody::Param(name.to_string())
    }

    pub fn atom(name: &str) -> Self {
        SchemeBody::Closed(Formula::atom(name))
    }

    pub fn and(a: SchemeBody, b: SchemeBody) -> Self {
        SchemeBody::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SchemeBody, b: SchemeBody) -> Self {
        SchemeBody::Or(Box::new(a), Box::new(b))
    }

    pub fn dia(a: SchemeBody) -> Self {
        SchemeBody::Modal(Modality::Dia, vec![a])
    }

    pub fn boxed(a: SchemeBody) -> Self {
        SchemeBody::Modal(Modality::Box, vec![a])
    }

    /// Nested scheme applications, counted recursively.
    pub fn apply_count(&self) -> usize {
        match self {
            SchemeBody::Param(_) | SchemeBody::FixVar | SchemeBody::Top | SchemeBody::Bot => 0,
            SchemeBody::Closed(f) => f.fix_count(),
            SchemeBody::And(a, b) | SchemeBody::Or(a, b) => a.apply_count() + b.apply_count(),
            SchemeBody::Modal(_, xs) => xs.iter().map(SchemeBody::apply_count).sum(),
            SchemeBody::Apply { scheme, args, .. } => {
                1 + scheme.body.apply_count()
                    + args.iter().map(SchemeBody::apply_count).sum::<usize>()
            }
        }
    }

    pub fn contains_negation(&self) -> bool {
        match self {
            SchemeBody::Param(_) | SchemeBody::FixVar | SchemeBody::Top | SchemeBody::Bot => false,
            SchemeBody::Closed(f) => f.contains_negation(),
            SchemeBody::And(a, b) | SchemeBody::Or(a, b) => {
                a.contains_negation() || b.contains_negation()
            }
            SchemeBody::Modal(_, xs) => xs.iter().any(SchemeBody::contains_negation),
            SchemeBody::Apply { scheme, args, .. } => {
                scheme.body.contains_negation() || args.iter().any(SchemeBody::contains_negation)
            }
        }
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            SchemeBody::Param(_) | SchemeBody::FixVar | SchemeBody::Top | SchemeBody::Bot => {}
            SchemeBody::Closed(f) => f.collect_atoms(out),
            SchemeBody::And(a, b) | SchemeBody::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            SchemeBody::Modal(_, xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            SchemeBody::Apply { scheme, args, .. } => {
                scheme.body.collect_atoms(out);
                args.iter().for_each(|x| x.collect_atoms(out));
            }
        }
    }

    /// Modalities used anywhere in the body, including nested schemes.
    pub fn modalities(&self) -> BTreeSet<Modality> {
        let mut out = BTreeSet::new();
        self.collect_modalities(&mut out);
        out
    }

    fn collect_modalities(&self, out: &mut BTreeSet<Modality>) {
        match self {
            SchemeBody::Modal(m, xs) => {
                out.insert(m.clone());
                xs.iter().for_each(|x| x.collect_modalities(out));
            }
            SchemeBody::And(a, b) | SchemeBody::Or(a, b) => {
                a.collect_modalities(out);
                b.collect_modalities(out);
            }
            SchemeBody::Apply { scheme, args, .. } => {
                scheme.body.collect_modalities(out);
                args.iter().for_each(|x| x.collect_modalities(out));
            }
            _ => {}
        }
    }
}

impl Scheme {
    pub fn new(params: &[&str], body: SchemeBody) -> Self {
        Scheme {
            params: params.iter().map(|s| s.to_string()).collect(),
            body,
        }
    }
}

/// Checks that `X` and every nested application sit below at least one
/// modality; parameters and closed formulas may occur anywhere. Nested schemes
/// are checked too. On failure returns the path to the first offending node.
pub fn check_guarded(s: &Scheme) -> Result<(), Vec<usize>> {
    fn walk(b: &SchemeBody, guarded: bool, path: &mut Vec<usize>) -> Result<(), Vec<usize>> {
        match b {
            SchemeBody::FixVar if !guarded => Err(path.clone()),
            SchemeBody::Param(_)
            | SchemeBody::FixVar
            | SchemeBody::Closed(_)
            | SchemeBody::Top
            | SchemeBody::Bot => Ok(()),
            SchemeBody::And(x, y) | SchemeBody::Or(x, y) => {
                for (i, c) in [x, y].into_iter().enumerate() {
                    path.push(i);
                    walk(c, guarded, path)?;
                    path.pop();
                }
                Ok(())
            }
            SchemeBody::Modal(_, xs) => {
                for (i, c) in xs.iter().enumerate() {
                    path.push(i);
                    walk(c, true, path)?;
                    path.pop();
                }
                Ok(())
            }
            SchemeBody::Apply { scheme, args, .. } => {
                if !guarded {
                    return Err(path.clone());
                }
                for (i, c) in args.iter().enumerate() {
                    path.push(i);
                    walk(c, guarded, path)?;
                    path.pop();
                }
                path.push(args.len());
                walk(&scheme.body, false, path)?;
                path.pop();
                Ok(())
            }
        }
    }
    walk(&s.body, false, &mut Vec::new())
}

/// Leaves of an unfolded term: closed formulas, or a one-step modality over
/// further guarded terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GuardedLeaf {
    Formula(Formula),
    Modal(Modality, Vec<GuardedTerm>),
}

/// An element of `Φ + L₀TΦ`: lattice structure over guarded leaves.
pub type GuardedTerm = LatticeTerm<GuardedLeaf>;

struct Env<'a> {
    scheme: &'a Scheme,
    args: &'a [Formula],
    this: &'a Formula,
}

impl Env<'_> {
    fn param(&self, v: &str) -> Result<Formula, SchemeError> {
        self.scheme
            .params
            .iter()
            .position(|p| p == v)
            .map(|i| self.args[i].clone())
            .ok_or_else(|| SchemeError::UnboundParameter(v.to_string()))
    }
}

fn body_to_formula(b: &SchemeBody, env: &Env<'_>) -> Result<Formula, SchemeError> {
    Ok(match b {
        SchemeBody::Param(v) => env.param(v)?,
        SchemeBody::FixVar => env.this.clone(),
        SchemeBody::Closed(f) => f.clone(),
        SchemeBody::Top => Formula::Top,
        SchemeBody::Bot => Formula::Bot,
        SchemeBody::And(x, y) => Formula::and(body_to_formula(x, env)?, body_to_formula(y, env)?),
        SchemeBody::Or(x, y) => Formula::or(body_to_formula(x, env)?, body_to_formula(y, env)?),
        SchemeBody::Modal(m, xs) => Formula::Modal(
            m.clone(),
            xs.iter()
                .map(|x| body_to_formula(x, env))
                .collect::<Result<_, _>>()?,
        ),
        SchemeBody::Apply {
            polarity,
            scheme,
            args,
        } => Formula::Fix(
            FixHead::Scheme(*polarity, Arc::clone(scheme)),
            args.iter()
                .map(|x| body_to_formula(x, env))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn body_to_term(b: &SchemeBody, env: &Env<'_>) -> Result<GuardedTerm, SchemeError> {
    Ok(match b {
        SchemeBody::Top => LatticeTerm::Top,
        SchemeBody::Bot => LatticeTerm::Bot,
        SchemeBody::And(x, y) => {
            LatticeTerm::And(vec![body_to_term(x, env)?, body_to_term(y, env)?])
        }
        SchemeBody::Or(x, y) => LatticeTerm::Or(vec![body_to_term(x, env)?, body_to_term(y, env)?]),
        SchemeBody::Modal(m, xs) => LatticeTerm::Leaf(GuardedLeaf::Modal(
            m.clone(),
            xs.iter()
                .map(|x| body_to_term(x, env))
                .collect::<Result<_, _>>()?,
        )),
        other => LatticeTerm::Leaf(GuardedLeaf::Formula(body_to_formula(other, env)?)),
    })
}

/// `γ(ā/v̄, self/X)` as a guarded term; nested applications become formula leaves.
pub fn substitute(
    s: &Scheme,
    args: &[Formula],
    this: &Formula,
) -> Result<GuardedTerm, SchemeError> {
    check_guarded(s).map_err(SchemeError::Unguarded)?;
    if args.len() != s.params.len() {
        return Err(SchemeError::Arity {
            expected: s.params.len(),
            found: args.len(),
        });
    }
    body_to_term(
        &s.body,
        &Env {
            scheme: s,
            args,
            this,
        },
    )
}

/// `γ(ā/v̄, φ/X)` as a plain formula, without the guardedness precondition.
pub fn instantiate(s: &Scheme, args: &[Formula], this: &Formula) -> Result<Formula, SchemeError> {
    if args.len() != s.params.len() {
        return Err(SchemeError::Arity {
            expected: s.params.len(),
            found: args.len(),
        });
    }
    body_to_formula(
        &s.body,
        &Env {
            scheme: s,
            args,
            this,
        },
    )
}

/// `¬φ` with double negation removed.
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(g) => (**g).clone(),
        other => Formula::not(other.clone()),
    }
}

/// The De Morgan dual `γ∂(v̄; X) = ¬γ(¬v̄; ¬X)`.
pub fn dualize(
    s: &Scheme,
    dual_of: &impl Fn(&Modality) -> Option<Modality>,
) -> Result<Scheme, SchemeError> {
    fn go(
        b: &SchemeBody,
        dual_of: &impl Fn(&Modality) -> Option<Modality>,
    ) -> Result<SchemeBody, SchemeError> {
        Ok(match b {
            SchemeBody::Param(_) | SchemeBody::FixVar => b.clone(),
            SchemeBody::Closed(f) => SchemeBody::Closed(negate(f)),
            SchemeBody::Top => SchemeBody::Bot,
            SchemeBody::Bot => SchemeBody::Top,
            SchemeBody::And(x, y) => SchemeBody::or(go(x, dual_of)?, go(y, dual_of)?),
            SchemeBody::Or(x, y) => SchemeBody::and(go(x, dual_of)?, go(y, dual_of)?),
            SchemeBody::Modal(m, xs) => SchemeBody::Modal(
                dual_of(m).ok_or_else(|| SchemeError::MissingDual(m.clone()))?,
                xs.iter()
                    .map(|x| go(x, dual_of))
                    .collect::<Result<_, _>>()?,
            ),
            SchemeBody::Apply {
                polarity,
                scheme,
                args,
            } => SchemeBody::Apply {
                polarity: polarity.flip(),
                scheme: Arc::new(dualize(scheme, dual_of)?),
                args: args
                    .iter()
                    .map(|x| go(x, dual_of))
                    .collect::<Result<_, _>>()?,
            },
        })
    }
    Ok(Scheme {
        params: s.params.clone(),
        body: go(&s.body, dual_of)?,
    })
}

/// Built-in duals: `dia ↔ box`, `dia[a] ↔ box[a]`.
pub fn builtin_dual(m: &Modality) -> Option<Modality> {
    Some(m.dual())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    /// The binder of the scheme currently being built.
    Current,
    /// An enclosing binder, passed in as a parameter.
    Outer,
}

struct Binding {
    polarity: Polarity,
    role: Role,
    param: Option<String>,
}

struct Translator {
    avoid: BTreeSet<String>,
}

impl Translator {
    fn param_names(&self, count: usize) -> Vec<String> {
        for base in ["v", "w", "u", "z"] {
            let names: Vec<String> = if count == 1 {
                vec![base.to_string()]
            } else {
                (1..=count).map(|i| format!("{base}{i}")).collect()
            };
            if names.iter().all(|n| !self.avoid.contains(n)) {
                return names;
            }
        }
        (1..=count).map(|i| format!("param_{i}")).collect()
    }

    fn formula(&self, f: &MuFormula) -> Result<Formula, SchemeError> {
        Ok(match f {
            MuFormula::Top => Formula::Top,
            MuFormula::Bot => Formula::Bot,
            MuFormula::Atom(a) => Formula::atom(a.clone()),
            MuFormula::Var(v) => return Err(SchemeError::FreeVariable(v.clone())),
            MuFormula::Not(g) => Formula::not(self.formula(g)?),
            MuFormula::And(a, b) => Formula::and(self.formula(a)?, self.formula(b)?),
            MuFormula::Or(a, b) => Formula::or(self.formula(a)?, self.formula(b)?),
            MuFormula::Modal(m, g) => Formula::Modal(m.clone(), vec![self.formula(g)?]),
            MuFormula::Mu(x, body) | MuFormula::Nu(x, body) => {
                let polarity = polarity_of(f);
                let scheme = self.scheme(x, body, polarity, &[], &BTreeMap::new())?;
                Formula::Fix(FixHead::Scheme(polarity, Arc::new(scheme)), vec![])
            }
        })
    }

    /// Scheme for `σx.body` whose free variables `outer` (outermost first)
    /// become its parameters.
    fn scheme(
        &self,
        x: &str,
        body: &MuFormula,
        polarity: Polarity,
        outer: &[String],
        outer_pol: &BTreeMap<String, Polarity>,
    ) -> Result<Scheme, SchemeError> {
        let params = self.param_names(outer.len());
        let mut env: BTreeMap<String, Binding> = BTreeMap::new();
        for (v, p) in outer.iter().zip(&params) {
            env.insert(
                v.clone(),
                Binding {
                    polarity: outer_pol[v],
                    role: Role::Outer,
                    param: Some(p.clone()),
                },
            );
        }
        env.insert(
            x.to_string(),
            Binding {
                polarity,
                role: Role::Current,
                param: None,
            },
        );
        let order: Vec<String> = outer.to_vec();
        let body = self.body(body, &env, &order, x, false)?;
        Ok(Scheme { params, body })
    }

    fn body(
        &self,
        f: &MuFormula,
        env: &BTreeMap<String, Binding>,
        order: &[String],
        current: &str,
        guarded: bool,
    ) -> Result<SchemeBody, SchemeError> {
        Ok(match f {
            MuFormula::Top => SchemeBody::Top,
            MuFormula::Bot => SchemeBody::Bot,
            MuFormula::Atom(a) => SchemeBody::atom(a),
            MuFormula::Var(v) => match env.get(v) {
                Some(Binding {
                    role: Role::Current,
                    ..
                }) => {
                    if !guarded {
                        return Err(SchemeError::UnguardedVariable(v.clone()));
                    }
                    SchemeBody::FixVar
                }
                Some(Binding { param: Some(p), .. }) => SchemeBody::Param(p.clone()),
                _ => return Err(SchemeError::FreeVariable(v.clone())),
            },
            MuFormula::Not(g) => {
                if let Some(v) = g.free_vars().into_iter().next() {
                    return Err(SchemeError::NegationOnOpen(v));
                }
                SchemeBody::Closed(Formula::not(self.formula(g)?))
            }
            MuFormula::And(a, b) => SchemeBody::and(
                self.body(a, env, order, current, guarded)?,
                self.body(b, env, order, current, guarded)?,
            ),
            MuFormula::Or(a, b) => SchemeBody::or(
                self.body(a, env, order, current, guarded)?,
                self.body(b, env, order, current, guarded)?,
            ),
            MuFormula::Modal(m, g) => {
                SchemeBody::Modal(m.clone(), vec![self.body(g, env, order, current, true)?])
            }
            MuFormula::Mu(y, inner) | MuFormula::Nu(y, inner) => {
                let free = f.free_vars();
                if free.is_empty() {
                    return Ok(SchemeBody::Closed(self.formula(f)?));
                }
                let polarity = polarity_of(f);
                for v in &free {
                    match env.get(v) {
                        Some(b) if b.polarity != polarity => {
                            return Err(SchemeError::Alternation { var: v.clone() })
                        }
                        Some(_) => {}
                        None => return Err(SchemeError::FreeVariable(v.clone())),
                    }
                }
                if !guarded {
                    // hoist: replace σy.ψ by its unfolding ψ[σy.ψ/y], where the copies are guarded
                    check_var_guarded(y, inner)?;
                    let unfolded = inner.substitute(y, f);
                    return self.body(&unfolded, env, order, current, guarded);
                }
                // outermost-first: enclosing parameters in declaration order, then the current binder
                let mut outer: Vec<String> = order
                    .iter()
                    .filter(|v| free.contains(*v))
                    .cloned()
                    .collect();
                if free.contains(current) {
                    outer.push(current.to_string());
                }
                let outer_pol: BTreeMap<String, Polarity> =
                    outer.iter().map(|v| (v.clone(), env[v].polarity)).collect();
                let scheme = self.scheme(y, inner, polarity, &outer, &outer_pol)?;
                let args = outer
                    .iter()
                    .map(|v| match &env[v] {
                        Binding {
                            role: Role::Current,
                            ..
                        } => SchemeBody::FixVar,
                        Binding { param, .. } => {
                            SchemeBody::Param(param.clone().expect("outer binding has a parameter"))
                        }
                    })
                    .collect();
                SchemeBody::Apply {
                    polarity,
                    scheme: Arc::new(scheme),
                    args,
                }
            }
        })
    }
}

fn polarity_of(f: &MuFormula) -> Polarity {
    match f {
        MuFormula::Nu(..) => Polarity::Flat,
        _ => Polarity::Sharp,
    }
}

/// Every free occurrence of `x` in `f` lies under a modality.
fn check_var_guarded(x: &str, f: &MuFormula) -> Result<(), SchemeError> {
    fn go(x: &str, f: &MuFormula, guarded: bool) -> Result<(), SchemeError> {
        match f {
            MuFormula::Var(v) if v == x && !guarded => {
                Err(SchemeError::UnguardedVariable(x.to_string()))
            }
            MuFormula::Top | MuFormula::Bot | MuFormula::Atom(_) | MuFormula::Var(_) => Ok(()),
            MuFormula::Not(g) => go(x, g, guarded),
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                go(x, a, guarded)?;
                go(x, b, guarded)
            }
            MuFormula::Modal(_, g) => go(x, g, true),
            MuFormula::Mu(y, g) | MuFormula::Nu(y, g) => {
                if y == x {
                    Ok(())
                } else {
                    go(x, g, guarded)
                }
            }
        }
    }
    go(x, f, false)
}

/// Checks that every binder's variable is guarded within its scope.
pub fn check_mu_guarded(f: &MuFormula) -> Result<(), SchemeError> {
    let mut result = Ok(());
    f.walk(&mut |g| {
        if result.is_ok() {
            if let MuFormula::Mu(x, body) | MuFormula::Nu(x, body) = g {
                result = check_var_guarded(x, body);
            }
        }
    });
    result
}

/// Translates a closed, guarded, alternation-free mu-calculus formula into
/// scheme form. Each binder becomes one scheme; binders that occur outside
/// every modality of their enclosing binder are first unfolded once so that
/// their occurrences become guarded. Parameter names avoid the atoms of `f`
/// and those in `avoid`.
pub fn translate_mu(f: &MuFormula, avoid: &BTreeSet<String>) -> Result<Formula, SchemeError> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(SchemeError::FreeVariable(v));
    }
    check_mu_guarded(f)?;
    let mut names = f.atoms();
    names.extend(avoid.iter().cloned());
    Translator { avoid: names }.formula(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_mu;

    fn reach() -> Scheme {
        Scheme::new(
            &["v"],
            SchemeBody::or(SchemeBody::param("v"), SchemeBody::dia(SchemeBody::FixVar)),
        )
    }

    fn delta() -> Scheme {
        Scheme::new(
            &["v"],
            SchemeBody::or(
                SchemeBody::and(SchemeBody::atom("q"), SchemeBody::dia(SchemeBody::FixVar)),
                SchemeBody::and(
                    SchemeBody::atom("r"),
                    SchemeBody::boxed(SchemeBody::param("v")),
                ),
            ),
        )
    }

    fn gamma() -> Scheme {
        Scheme::new(
            &[],
            SchemeBody::and(
                SchemeBody::atom("p"),
                SchemeBody::or(
                    SchemeBody::and(
                        SchemeBody::atom("q"),
                        SchemeBody::dia(SchemeBody::Apply {
                            polarity: Polarity::Sharp,
                            scheme: Arc::new(delta()),
                            args: vec![SchemeBody::FixVar],
                        }),
                    ),
                    SchemeBody::and(SchemeBody::atom("r"), SchemeBody::boxed(SchemeBody::FixVar)),
                ),
            ),
        )
    }

    #[test]
    fn guardedness() {
        assert!(check_guarded(&reach()).is_ok());
        assert!(check_guarded(&delta()).is_ok());
        let bad = Scheme::new(
            &[],
            SchemeBody::or(SchemeBody::FixVar, SchemeBody::atom("p")),
        );
        assert_eq!(check_guarded(&bad), Err(vec![0]));
    }

    #[test]
    fn substitute_reachability() {
        let this = Formula::sharp(reach(), vec![Formula::atom("p")]);
        let t = substitute(&reach(), &[Formula::atom("p")], &this).unwrap();
        let expected = LatticeTerm::Or(vec![
            LatticeTerm::Leaf(GuardedLeaf::Formula(Formula::atom("p"))),
            LatticeTerm::Leaf(GuardedLeaf::Modal(
                Modality::Dia,
                vec![LatticeTerm::Leaf(GuardedLeaf::Formula(this.clone()))],
            )),
        ]);
        assert_eq!(t, expected);
    }

    #[test]
    fn substitute_into_bottom() {
        let s = Scheme::new(&[], SchemeBody::dia(SchemeBody::FixVar));
        let t = substitute(&s, &[], &Formula::Bot).unwrap();
        assert_eq!(
            t,
            LatticeTerm::Leaf(GuardedLeaf::Modal(
                Modality::Dia,
                vec![LatticeTerm::Leaf(GuardedLeaf::Formula(Formula::Bot))]
            ))
        );
    }

    #[test]
    fn substitute_nested() {
        let this = Formula::sharp(gamma(), vec![]);
        let t = substitute(&gamma(), &[], &this).unwrap();
        let inner = Formula::sharp(delta(), vec![this.clone()]);
        let leaf = |f: Formula| LatticeTerm::Leaf(GuardedLeaf::Formula(f));
        let expected = LatticeTerm::And(vec![
            leaf(Formula::atom("p")),
            LatticeTerm::Or(vec![
                LatticeTerm::And(vec![
                    leaf(Formula::atom("q")),
                    LatticeTerm::Leaf(GuardedLeaf::Modal(Modality::Dia, vec![leaf(inner)])),
                ]),
                LatticeTerm::And(vec![
                    leaf(Formula::atom("r")),
                    LatticeTerm::Leaf(GuardedLeaf::Modal(Modality::Box, vec![leaf(this)])),
                ]),
            ]),
        ]);
        assert_eq!(t, expected);
    }

    #[test]
    fn unguarded_substitution_rejected() {
        let bad = Scheme::new(
            &[],
            SchemeBody::or(SchemeBody::FixVar, SchemeBody::atom("p")),
        );
        assert!(matches!(
            substitute(&bad, &[], &Formula::Top),
            Err(SchemeError::Unguarded(_))
        ));
    }

    #[test]
    fn duals() {
        let d = dualize(&reach(), &builtin_dual).unwrap();
        assert_eq!(
            d.body,
            SchemeBody::and(
                SchemeBody::param("v"),
                SchemeBody::boxed(SchemeBody::FixVar)
            )
        );
        let top = Scheme::new(&[], SchemeBody::Top);
        assert_eq!(dualize(&top, &builtin_dual).unwrap().body, SchemeBody::Bot);
        let d = dualize(&delta(), &builtin_dual).unwrap();
        let neg = |a: &str| SchemeBody::Closed(Formula::not(Formula::atom(a)));
        assert_eq!(
            d.body,
            SchemeBody::and(
                SchemeBody::or(neg("q"), SchemeBody::boxed(SchemeBody::FixVar)),
                SchemeBody::or(neg("r"), SchemeBody::dia(SchemeBody::param("v"))),
            )
        );
        assert_eq!(dualize(&d, &builtin_dual).unwrap(), delta());
        assert_eq!(
            dualize(&dualize(&gamma(), &builtin_dual).unwrap(), &builtin_dual).unwrap(),
            gamma()
        );
    }

    #[test]
    fn missing_dual() {
        let err = dualize(&reach(), &|_: &Modality| None).unwrap_err();
        assert_eq!(err, SchemeError::MissingDual(Modality::Dia));
    }

    #[test]
    fn translate_reachability() {
        let f = translate_mu(&parse_mu("mu X. p \\/ dia X").unwrap(), &BTreeSet::new()).unwrap();
        let expected = Scheme::new(
            &[],
            SchemeBody::or(SchemeBody::atom("p"), SchemeBody::dia(SchemeBody::FixVar)),
        );
        assert_eq!(f, Formula::sharp(expected, vec![]));
    }

    #[test]
    fn translate_single_binder() {
        let f = translate_mu(&parse_mu("mu X. dia X").unwrap(), &BTreeSet::new()).unwrap();
        assert_eq!(
            f,
            Formula::sharp(
                Scheme::new(&[], SchemeBody::dia(SchemeBody::FixVar)),
                vec![]
            )
        );
    }

    #[test]
    fn translate_nested_example() {
        let mu = parse_mu("mu X. p /\\ mu Y. (q /\\ dia Y) \\/ (r /\\ box X)").unwrap();
        let f = translate_mu(&mu, &BTreeSet::new()).unwrap();
        assert_eq!(f, Formula::sharp(gamma(), vec![]));
    }

    #[test]
    fn translation_errors() {
        let none = BTreeSet::new();
        assert!(matches!(
            translate_mu(&parse_mu("mu X. p \\/ X").unwrap(), &none),
            Err(SchemeError::UnguardedVariable(_))
        ));
        assert!(matches!(
            translate_mu(&parse_mu("mu X. nu Y. dia X /\\ box Y").unwrap(), &none),
            Err(SchemeError::Alternation { .. })
        ));
        assert!(matches!(
            translate_mu(&parse_mu("mu X. ~dia X").unwrap(), &none),
            Err(SchemeError::NegationOnOpen(_))
        ));
        // alternation-free nesting of different types is fine when independent
        assert!(translate_mu(
            &parse_mu("mu X. p \\/ dia X \\/ nu Y. box Y").unwrap(),
            &none
        )
        .is_ok());
    }

    #[test]
    fn parameter_names_avoid_atoms() {
        let mu = parse_mu("mu X. v /\\ mu Y. (q /\\ dia Y) \\/ box X").unwrap();
        let f = translate_mu(&mu, &BTreeSet::new()).unwrap();
        let Formula::Fix(FixHead::Scheme(_, s), _) = f else {
            panic!()
        };
        let mut found = Vec::new();
        fn find(b: &SchemeBody, out: &mut Vec<Vec<String>>) {
            match b {
                SchemeBody::Apply { scheme, .. } => out.push(scheme.params.clone()),
                SchemeBody::And(a, c) | SchemeBody::Or(a, c) => {
                    find(a, out);
                    find(c, out);
                }
                SchemeBody::Modal(_, xs) => xs.iter().for_each(|x| find(x, out)),
                _ => {}
            }
        }
        find(&s.body, &mut found);
        assert_eq!(found, vec![vec!["w".to_string()]]);
    }
}
