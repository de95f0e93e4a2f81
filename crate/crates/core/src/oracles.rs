//! Brute-force reference semantics, written without any of the evaluator
//! machinery: plain boolean vectors, dense matrices, naive recomputation.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::lattice::Predicate;
use crate::models::{Model, ProbModel};
use crate::programs::Program;
use crate::schemes::{Scheme, SchemeBody};
use crate::syntax::{FixHead, Formula, Modality, MuFormula, Polarity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no oracle for {what} on {model} models")]
    Unsupported { what: String, model: String },
    #[error("label `{0}` is not declared by the model")]
    UnknownLabel(String),
    #[error("variable `{0}` is not bound by the valuation")]
    FreeVariable(String),
    #[error("parameter `{0}` is not declared by its scheme")]
    UnboundParameter(String),
    #[error("scheme expects {expected} argument(s), got {found}")]
    Arity { expected: usize, found: usize },
    #[error("value iteration did not settle within {0} rounds")]
    NoConvergence(usize),
}

fn unsupported(what: impl Into<String>, model: &Model) -> OracleError {
    OracleError::Unsupported {
        what: what.into(),
        model: model.kind().to_string(),
    }
}

/// A boolean relation on the states of one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    bits: Vec<Vec<bool>>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            n,
            bits: vec![vec![false; n]; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for i in 0..n {
            r.bits[i][i] = true;
        }
        r
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits[x][y]
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.bits[x][y] = true;
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if self.bits[x][y] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let mut r = self.clone();
        for x in 0..self.n {
            for y in 0..self.n {
                r.bits[x][y] |= other.bits[x][y];
            }
        }
        r
    }

    pub fn compose(&self, other: &Relation) -> Relation {
        let mut r = Relation::empty(self.n);
        for x in 0..self.n {
            for z in 0..self.n {
                if self.bits[x][z] {
                    for y in 0..self.n {
                        if other.bits[z][y] {
                            r.bits[x][y] = true;
                        }
                    }
                }
            }
        }
        r
    }

    /// Reflexive-transitive closure, Warshall style.
    pub fn star(&self) -> Relation {
        let mut r = self.union(&Relation::identity(self.n));
        for k in 0..self.n {
            for i in 0..self.n {
                if r.bits[i][k] {
                    for j in 0..self.n {
                        if r.bits[k][j] {
                            r.bits[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    /// `{x | ∃y. x R y ∧ y ∈ target}`.
    pub fn diamond(&self, target: &[bool]) -> Vec<bool> {
        (0..self.n)
            .map(|x| (0..self.n).any(|y| self.bits[x][y] && target[y]))
            .collect()
    }
}

fn successors(model: &Model, label: Option<&str>, x: usize) -> Result<Vec<usize>, OracleError> {
    match (model, label) {
        (Model::Kripke(k), None) => Ok(k.succ(x).to_vec()),
        (Model::Labeled(l), None) => {
            let mut out = Vec::new();
            for i in 0..l.labels().len() {
                out.extend_from_slice(l.succ(i, x));
            }
            Ok(out)
        }
        (Model::Labeled(l), Some(a)) => {
            let i = l
                .label_index(a)
                .ok_or_else(|| OracleError::UnknownLabel(a.to_string()))?;
            Ok(l.succ(i, x).to_vec())
        }
        _ => Err(unsupported(
            format!(
                "transitions{}",
                label.map(|a| format!(" labeled `{a}`")).unwrap_or_default()
            ),
            model,
        )),
    }
}

/// Edge relation of one label.
fn edge_relation(model: &Model, label: &str) -> Result<Relation, OracleError> {
    let mut r = Relation::empty(model.len());
    for x in 0..model.len() {
        for y in successors(model, Some(label), x)? {
            r.insert(x, y);
        }
    }
    Ok(r)
}

/// The usual relational meaning of a program.
pub fn pdl_relation(model: &Model, program: &Program) -> Result<Relation, OracleError> {
    let n = model.len();
    Ok(match program {
        Program::Atomic(a) => edge_relation(model, a)?,
        Program::Eps => Relation::identity(n),
        Program::Empty => Relation::empty(n),
        Program::Union(xs) => {
            let mut r = Relation::empty(n);
            for x in xs {
                r = r.union(&pdl_relation(model, x)?);
            }
            r
        }
        Program::Seq(xs) => {
            let mut r = Relation::identity(n);
            for x in xs {
                r = r.compose(&pdl_relation(model, x)?);
            }
            r
        }
        Program::Star(x) => pdl_relation(model, x)?.star(),
    })
}

/// States with a (possibly empty) path into `target`, by backward search.
pub fn reach_oracle(model: &Model, target: &Predicate) -> Result<Predicate, OracleError> {
    let n = model.len();
    let mut preds = vec![Vec::new(); n];
    for x in 0..n {
        for y in successors(model, None, x)? {
            preds[y].push(x);
        }
    }
    let mut seen: Vec<bool> = (0..n).map(|x| target.contains(x)).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&x| seen[x]).collect();
    while let Some(y) = queue.pop_front() {
        for &x in &preds[y] {
            if !seen[x] {
                seen[x] = true;
                queue.push_back(x);
            }
        }
    }
    Ok(to_set(&seen))
}

fn to_set(bits: &[bool]) -> Predicate {
    Predicate::from_states(bits.len(), (0..bits.len()).filter(|&i| bits[i]))
}

fn from_set(p: &Predicate, n: usize) -> Vec<bool> {
    (0..n).map(|i| p.contains(i)).collect()
}

fn box_of(model: &Model, label: Option<&str>, arg: &[bool]) -> Result<Vec<bool>, OracleError> {
    (0..model.len())
        .map(|x| Ok(successors(model, label, x)?.iter().all(|&y| arg[y])))
        .collect()
}

fn dia_of(model: &Model, label: Option<&str>, arg: &[bool]) -> Result<Vec<bool>, OracleError> {
    (0..model.len())
        .map(|x| Ok(successors(model, label, x)?.iter().any(|&y| arg[y])))
        .collect()
}

fn modal_set(model: &Model, m: &Modality, arg: &[bool]) -> Result<Vec<bool>, OracleError> {
    match m {
        Modality::Dia => dia_of(model, None, arg),
        Modality::Box => box_of(model, None, arg),
        Modality::DiaLabel(a) => dia_of(model, Some(a), arg),
        Modality::BoxLabel(a) => box_of(model, Some(a), arg),
    }
}

/// Ascending (`greatest = false`) or descending Knaster–Tarski iteration.
fn kt_iterate(
    n: usize,
    greatest: bool,
    mut f: impl FnMut(&[bool]) -> Result<Vec<bool>, OracleError>,
) -> Result<Vec<bool>, OracleError> {
    let mut u = vec![greatest; n];
    for _ in 0..=n + 1 {
        let next = f(&u)?;
        if next == u {
            return Ok(u);
        }
        u = next;
    }
    Err(OracleError::NoConvergence(n + 2))
}

/// Nested Knaster–Tarski evaluation of a mu-calculus formula.
pub fn mu_oracle(
    model: &Model,
    f: &MuFormula,
    valuation: &BTreeMap<String, Predicate>,
) -> Result<Predicate, OracleError> {
    if model.is_quantitative() {
        return Err(unsupported("mu-calculus formulas", model));
    }
    let n = model.len();
    let env: BTreeMap<String, Vec<bool>> = valuation
        .iter()
        .map(|(k, v)| (k.clone(), from_set(v, n)))
        .collect();
    mu_eval(model, f, &env).map(|b| to_set(&b))
}

fn mu_eval(
    model: &Model,
    f: &MuFormula,
    env: &BTreeMap<String, Vec<bool>>,
) -> Result<Vec<bool>, OracleError> {
    let n = model.len();
    Ok(match f {
        MuFormula::Top => vec![true; n],
        MuFormula::Bot => vec![false; n],
        MuFormula::Atom(a) => from_set(&model.atom(a), n),
        MuFormula::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| OracleError::FreeVariable(v.clone()))?,
        MuFormula::Not(g) => mu_eval(model, g, env)?.into_iter().map(|b| !b).collect(),
        MuFormula::And(a, b) => zip_with(
            &mu_eval(model, a, env)?,
            &mu_eval(model, b, env)?,
            |x, y| x && y,
        ),
        MuFormula::Or(a, b) => zip_with(
            &mu_eval(model, a, env)?,
            &mu_eval(model, b, env)?,
            |x, y| x || y,
        ),
        MuFormula::Modal(m, g) => modal_set(model, m, &mu_eval(model, g, env)?)?,
        MuFormula::Mu(x, g) | MuFormula::Nu(x, g) => {
            let greatest = matches!(f, MuFormula::Nu(..));
            kt_iterate(n, greatest, |u| {
                let mut inner = env.clone();
                inner.insert(x.clone(), u.to_vec());
                mu_eval(model, g, &inner)
            })?
        }
    })
}

fn zip_with(a: &[bool], b: &[bool], op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect()
}

/// Direct transcription of the mutually recursive semantics of formulas and
/// schemes: `♯γ(ā)` is the least `U` with `U = ⟦γ⟧(⟦ā⟧; U)`, `♭γ(ā)` the greatest.
pub fn cfl_oracle(model: &Model, root: &Formula) -> Result<Predicate, OracleError> {
    if model.is_quantitative() {
        return Err(unsupported("fixpoint schemes", model));
    }
    formula_oracle(model, root)
}

/// Reference semantics of any formula: structural recursion, with each
/// fixpoint head delegated to its dedicated oracle.
pub fn formula_oracle(model: &Model, f: &Formula) -> Result<Predicate, OracleError> {
    match model {
        Model::Prob(p) => Ok(Predicate::Value(value_formula(model, p, f)?)),
        _ => set_formula(model, f).map(|b| to_set(&b)),
    }
}

fn set_formula(model: &Model, f: &Formula) -> Result<Vec<bool>, OracleError> {
    let n = model.len();
    Ok(match f {
        Formula::Top => vec![true; n],
        Formula::Bot => vec![false; n],
        Formula::Atom(a) => from_set(&model.atom(a), n),
        Formula::Not(g) => set_formula(model, g)?.into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => zip_with(&set_formula(model, a)?, &set_formula(model, b)?, |x, y| {
            x && y
        }),
        Formula::Or(a, b) => zip_with(&set_formula(model, a)?, &set_formula(model, b)?, |x, y| {
            x || y
        }),
        Formula::Sum(_) => return Err(unsupported("subconvex sums", model)),
        Formula::Modal(m, args) => modal_set(model, m, &set_formula(model, single(args)?)?)?,
        Formula::Fix(FixHead::DiamondStar, args) => {
            let target = to_set(&set_formula(model, single(args)?)?);
            from_set(&reach_oracle(model, &target)?, n)
        }
        Formula::Fix(FixHead::Program(p), args) => {
            pdl_relation(model, p)?.diamond(&set_formula(model, single(args)?)?)
        }
        Formula::Fix(FixHead::Sigma(_), _) => return Err(unsupported("`sigma`", model)),
        Formula::Fix(FixHead::Scheme(pol, s), args) => {
            let vals = args
                .iter()
                .map(|a| set_formula(model, a))
                .collect::<Result<Vec<_>, _>>()?;
            scheme_fix(model, *pol, s, &vals)?
        }
    })
}

fn single(args: &[Formula]) -> Result<&Formula, OracleError> {
    match args {
        [a] => Ok(a),
        _ => Err(OracleError::Arity {
            expected: 1,
            found: args.len(),
        }),
    }
}

fn scheme_fix(
    model: &Model,
    pol: Polarity,
    s: &Scheme,
    params: &[Vec<bool>],
) -> Result<Vec<bool>, OracleError> {
    if params.len() != s.params.len() {
        return Err(OracleError::Arity {
            expected: s.params.len(),
            found: params.len(),
        });
    }
    kt_iterate(model.len(), pol == Polarity::Flat, |u| {
        scheme_body(model, s, &s.body, params, u)
    })
}

fn scheme_body(
    model: &Model,
    s: &Scheme,
    b: &SchemeBody,
    params: &[Vec<bool>],
    x: &[bool],
) -> Result<Vec<bool>, OracleError> {
    let n = model.len();
    Ok(match b {
        SchemeBody::Param(v) => {
            let i = s
                .params
                .iter()
                .position(|p| p == v)
                .ok_or_else(|| OracleError::UnboundParameter(v.clone()))?;
            params[i].clone()
        }
        SchemeBody::FixVar => x.to_vec(),
        SchemeBody::Closed(f) => set_formula(model, f)?,
        SchemeBody::Top => vec![true; n],
        SchemeBody::Bot => vec![false; n],
        SchemeBody::And(a, c) => zip_with(
            &scheme_body(model, s, a, params, x)?,
            &scheme_body(model, s, c, params, x)?,
            |p, q| p && q,
        ),
        SchemeBody::Or(a, c) => zip_with(
            &scheme_body(model, s, a, params, x)?,
            &scheme_body(model, s, c, params, x)?,
            |p, q| p || q,
        ),
        SchemeBody::Modal(m, args) => {
            let [a] = args.as_slice() else {
                return Err(OracleError::Arity {
                    expected: 1,
                    found: args.len(),
                });
            };
            modal_set(model, m, &scheme_body(model, s, a, params, x)?)?
        }
        SchemeBody::Apply {
            polarity,
            scheme,
            args,
        } => {
            let vals = args
                .iter()
                .map(|a| scheme_body(model, s, a, params, x))
                .collect::<Result<Vec<_>, _>>()?;
            scheme_fix(model, *polarity, scheme, &vals)?
        }
    })
}

fn value_formula(model: &Model, p: &ProbModel, f: &Formula) -> Result<Vec<f64>, OracleError> {
    let n = p.states().len();
    Ok(match f {
        Formula::Top => vec![1.0; n],
        Formula::Bot => vec![0.0; n],
        Formula::Atom(a) => p
            .payout(a)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; n]),
        Formula::And(a, b) => zip_f(
            &value_formula(model, p, a)?,
            &value_formula(model, p, b)?,
            f64::min,
        ),
        Formula::Or(a, b) => zip_f(
            &value_formula(model, p, a)?,
            &value_formula(model, p, b)?,
            f64::max,
        ),
        Formula::Sum(ts) => {
            let mut out = vec![0.0; n];
            for (c, g) in ts {
                for (o, v) in out.iter_mut().zip(value_formula(model, p, g)?) {
                    *o += c.into_inner() * v;
                }
            }
            out.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
        }
        Formula::Modal(Modality::Dia, args) => {
            expectation(p, &value_formula(model, p, single(args)?)?)
        }
        Formula::Fix(FixHead::DiamondStar, args) => {
            opt_stop_oracle(p, &value_formula(model, p, single(args)?)?)
        }
        Formula::Fix(FixHead::Sigma(q), args) => {
            sigma_linear_oracle(p, q.into_inner(), &value_formula(model, p, single(args)?)?)?
        }
        other => return Err(unsupported(format!("`{other}`"), model)),
    })
}

fn zip_f(a: &[f64], b: &[f64], op: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect()
}

fn expectation(p: &ProbModel, v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|x| p.step(x).iter().map(|&(y, w)| w * v[y]).sum())
        .collect()
}

fn step_matrix(p: &ProbModel) -> Vec<Vec<f64>> {
    let n = p.states().len();
    let mut m = vec![vec![0.0; n]; n];
    for (x, row) in m.iter_mut().enumerate() {
        for &(y, w) in p.step(x) {
            row[y] += w;
        }
    }
    m
}

/// Solves `a·v = b` by Gaussian elimination with partial pivoting; `None`
/// if the matrix is (numerically) singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Least solution of `v = q·a + (1−q)·M v`, exactly for `q > 0`.
pub fn sigma_linear_oracle(p: &ProbModel, q: f64, payout: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = payout.len();
    let m = step_matrix(p);
    if q > 0.0 {
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f64::from(u8::from(i == j)) - (1.0 - q) * m[i][j])
                    .collect()
            })
            .collect();
        let b: Vec<f64> = payout.iter().map(|x| q * x).collect();
        if let Some(v) = solve_linear(a, b) {
            return Ok(v);
        }
    }
    // q = 0: the least solution of v = M v is 0; iterate anyway for uniformity
    let mut v = vec![0.0; n];
    for _ in 0..1_000_000 {
        let mv = expectation(p, &v);
        let next: Vec<f64> = (0..n).map(|i| q * payout[i] + (1.0 - q) * mv[i]).collect();
        let d = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if d < 1e-15 {
            return Ok(v);
        }
    }
    Err(OracleError::NoConvergence(1_000_000))
}

/// Least solution of `v = max(a, M v)` by policy iteration from "stop everywhere".
pub fn opt_stop_oracle(p: &ProbModel, payout: &[f64]) -> Vec<f64> {
    let n = payout.len();
    let m = step_matrix(p);
    let mut go_on = vec![false; n];
    let mut v = payout.to_vec();
    loop {
        let mv: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m[i][j] * v[j]).sum())
            .collect();
        let mut changed = false;
        for i in 0..n {
            let better = mv[i] > payout[i] + 1e-12;
            if better != go_on[i] && (better || mv[i] < payout[i] - 1e-12) {
                go_on[i] = better;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
        // evaluate the policy: v_i = a_i if stopping, v_i = (M v)_i if continuing
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = f64::from(u8::from(i == j));
                        if go_on[i] {
                            id - m[i][j]
                        } else {
                            id
                        }
                    })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|i| if go_on[i] { 0.0 } else { payout[i] })
            .collect();
        v = match solve_linear(a, b) {
            Some(v) => v,
            None => evaluate_by_iteration(&m, &go_on, payout),
        };
    }
}

/// Least solution of a fixed policy's equations by ascending iteration,
/// for policies whose continuing states contain a closed class.
fn evaluate_by_iteration(m: &[Vec<f64>], go_on: &[bool], payout: &[f64]) -> Vec<f64> {
    let n = payout.len();
    let mut v = vec![0.0; n];
    for _ in 0..1_000_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                if go_on[i] {
                    (0..n).map(|j| m[i][j] * v[j]).sum()
                } else {
                    payout[i]
                }
            })
            .collect();
        let d = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if d < 1e-15 {
            break;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures;
    use crate::syntax::{parse_formula_unchecked, parse_mu, parse_program};

    fn prob(m: &Model) -> &ProbModel {
        match m {
            Model::Prob(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn reachability() {
        let m1 = fixtures::m1();
        assert_eq!(
            reach_oracle(&m1, &Predicate::from_states(3, [2])).unwrap(),
            Predicate::full(3)
        );
        assert_eq!(
            reach_oracle(&m1, &Predicate::empty(3)).unwrap(),
            Predicate::empty(3)
        );
        assert_eq!(
            reach_oracle(&m1, &Predicate::full(3)).unwrap(),
            Predicate::full(3)
        );
        assert_eq!(
            reach_oracle(&m1, &Predicate::from_states(3, [0])).unwrap(),
            Predicate::from_states(3, [0])
        );
    }

    #[test]
    fn relations() {
        let m2 = fixtures::m2();
        let ab = pdl_relation(&m2, &parse_program("a;b").unwrap()).unwrap();
        assert_eq!(ab.pairs(), vec![(0, 2)]);
        assert_eq!(
            pdl_relation(&m2, &Program::Eps).unwrap(),
            Relation::identity(3)
        );
        let all = pdl_relation(&m2, &parse_program("(a+b)*").unwrap()).unwrap();
        assert_eq!(
            all.pairs(),
            vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
        );
        assert!(matches!(
            pdl_relation(&m2, &parse_program("c").unwrap()),
            Err(OracleError::UnknownLabel(_))
        ));
    }

    #[test]
    fn mu_examples() {
        let m1 = fixtures::m1();
        let none = BTreeMap::new();
        let eval = |t: &str| mu_oracle(&m1, &parse_mu(t).unwrap(), &none).unwrap();
        assert_eq!(eval("mu X. p \\/ dia X"), Predicate::full(3));
        assert_eq!(eval("mu X. dia X"), Predicate::empty(3));
        assert_eq!(eval("nu X. dia X"), Predicate::full(3));
        assert!(matches!(
            mu_oracle(&m1, &parse_mu("dia Y").unwrap(), &none),
            Err(OracleError::FreeVariable(_))
        ));
    }

    #[test]
    fn cfl_examples() {
        let m1 = fixtures::m1();
        let f = parse_formula_unchecked("lfp{p \\/ dia X}()").unwrap();
        assert_eq!(cfl_oracle(&m1, &f).unwrap(), Predicate::full(3));
        let f = parse_formula_unchecked("lfp{dia X}()").unwrap();
        assert_eq!(cfl_oracle(&m1, &f).unwrap(), Predicate::empty(3));
    }

    #[test]
    fn sigma_examples() {
        let mq = fixtures::mq();
        let v = sigma_linear_oracle(prob(&mq), 0.5, &[0.0, 1.0]).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
        let v = sigma_linear_oracle(prob(&mq), 1.0, &[0.0, 1.0]).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
        let single = Model::from_json(
            r#"{"kind":"prob","states":["z"],"payoutLabels":["p"],"payout":{"p":{"z":0.5}},"step":{"z":{"z":1.0}}}"#,
        )
        .unwrap();
        let v = sigma_linear_oracle(prob(&single), 0.3, &[0.5]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stopping_examples() {
        let v = opt_stop_oracle(prob(&fixtures::mq2()), &[0.0, 0.8]);
        assert!(
            (v[0] - 0.4).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12,
            "{v:?}"
        );
        let v = opt_stop_oracle(prob(&fixtures::mq()), &[0.0, 1.0]);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        assert_eq!(
            opt_stop_oracle(prob(&fixtures::mq2()), &[0.0, 0.0]),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn singular_policy_falls_back() {
        let two = Model::from_json(
            r#"{"kind":"prob","states":["u","w"],"payoutLabels":["p"],"payout":{"p":{"u":0.2,"w":0.6}},
                "step":{"u":{"w":1.0},"w":{"u":1.0}}}"#,
        )
        .unwrap();
        let v = opt_stop_oracle(prob(&two), &[0.2, 0.6]);
        assert!(
            (v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.6).abs() < 1e-12,
            "{v:?}"
        );
    }
}
