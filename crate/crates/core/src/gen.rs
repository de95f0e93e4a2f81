//! Seeded random models, formulas, programs and schemes for tests, the CLI
//! and the demo page.

use std::collections::BTreeMap;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::models::{KripkeModel, LabeledModel, Model, ModelKind, ProbModel};
use crate::programs::Program;
use crate::schemes::{Scheme, SchemeBody};
use crate::syntax::{FixHead, Formula, InstanceId, Modality, MuFormula, Polarity};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_props(rng: &mut GenRng, n: usize, props: &[String]) -> BTreeMap<String, Vec<usize>> {
    props
        .iter()
        .map(|p| (p.clone(), (0..n).filter(|_| rng.gen_bool(0.4)).collect()))
        .collect()
}

fn random_succ(rng: &mut GenRng, n: usize, density: f64) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| (0..n).filter(|_| rng.gen_bool(density)).collect())
        .collect()
}

/// Random Kripke model; roughly `density·n` successors per state, some
/// states may be dead ends.
pub fn kripke(rng: &mut GenRng, n: usize, props: &[String], density: f64) -> Model {
    let p = random_props(rng, n, props);
    let succ = random_succ(rng, n, density);
    Model::Kripke(KripkeModel::new(names("s", n), p, succ).expect("generated model is valid"))
}

pub fn labeled(
    rng: &mut GenRng,
    n: usize,
    props: &[String],
    labels: &[String],
    density: f64,
) -> Model {
    let p = random_props(rng, n, props);
    let succ = labels
        .iter()
        .map(|_| random_succ(rng, n, density))
        .collect();
    Model::Labeled(
        LabeledModel::new(names("s", n), p, labels.to_vec(), succ)
            .expect("generated model is valid"),
    )
}

/// Random probabilistic model. About a third of the states lose mass
/// (halt with positive probability); the rest are full distributions.
pub fn prob(rng: &mut GenRng, n: usize, payout_labels: &[String]) -> Model {
    let payout = payout_labels
        .iter()
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        round3(rng.gen_range(0.0..=1.0))
                    }
                })
                .collect()
        })
        .collect();
    let step = (0..n)
        .map(|_| {
            let k = rng.gen_range(0..=n.min(3));
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(k);
            let mass = if rng.gen_bool(0.35) {
                rng.gen_range(0.3..1.0)
            } else {
                1.0
            };
            let raw: Vec<f64> = targets.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            targets
                .into_iter()
                .zip(raw)
                .map(|(t, w)| (t, w / total * mass * (1.0 - 1e-13)))
                .collect()
        })
        .collect();
    Model::Prob(
        ProbModel::new(names("s", n), payout_labels.to_vec(), payout, step)
            .expect("generated model is valid"),
    )
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Random model of the given kind with props/payouts `p`, `q` and labels `a`, `b`.
pub fn model(rng: &mut GenRng, kind: ModelKind, n: usize) -> Model {
    let props = vec!["p".to_string(), "q".to_string()];
    match kind {
        ModelKind::Kripke => kripke(rng, n, &props, 0.3),
        ModelKind::Labeled => labeled(rng, n, &props, &["a".to_string(), "b".to_string()], 0.25),
        ModelKind::Prob => prob(rng, n, &props),
    }
}

/// A model whose states are copies of `base`'s states, together with the
/// partition into copies. Quotienting by that partition recovers `base`.
pub fn blow_up(rng: &mut GenRng, base: &Model, max_copies: usize) -> (Model, Vec<Vec<usize>>) {
    let n = base.len();
    let counts: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(1..=max_copies.max(1)))
        .collect();
    let mut copies: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut origin = Vec::new();
    for (x, &c) in counts.iter().enumerate() {
        copies.push((origin.len()..origin.len() + c).collect());
        origin.extend(std::iter::repeat_n(x, c));
    }
    let total = origin.len();
    let state_names: Vec<String> = (0..total)
        .map(|i| {
            format!(
                "{}.{}",
                base.states()[origin[i]],
                copies[origin[i]].iter().position(|&j| j == i).unwrap()
            )
        })
        .collect();
    // each base successor is hit by a nonempty subset of its copies
    let lift = |rng: &mut GenRng, succ: &[usize]| -> Vec<usize> {
        let mut out = Vec::new();
        for &y in succ {
            let cs = &copies[y];
            let mut chosen: Vec<usize> = cs.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if chosen.is_empty() {
                chosen.push(*cs.choose(rng).unwrap());
            }
            out.extend(chosen);
        }
        out
    };
    let lifted_props =
        |props: &BTreeMap<String, crate::lattice::Predicate>| -> BTreeMap<String, Vec<usize>> {
            props
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        (0..total).filter(|&i| p.contains(origin[i])).collect(),
                    )
                })
                .collect()
        };
    let model = match base {
        Model::Kripke(k) => {
            let succ = (0..total).map(|i| lift(rng, k.succ(origin[i]))).collect();
            Model::Kripke(
                KripkeModel::new(state_names, lifted_props(k.props()), succ)
                    .expect("blow-up is valid"),
            )
        }
        Model::Labeled(l) => {
            let succ = (0..l.labels().len())
                .map(|a| {
                    (0..total)
                        .map(|i| lift(rng, l.succ(a, origin[i])))
                        .collect()
                })
                .collect();
            Model::Labeled(
                LabeledModel::new(
                    state_names,
                    lifted_props(l.props()),
                    l.labels().to_vec(),
                    succ,
                )
                .expect("blow-up is valid"),
            )
        }
        Model::Prob(p) => {
            let payout = p
                .payout_labels()
                .iter()
                .map(|a| {
                    let v = p.payout(a).expect("declared label");
                    (0..total).map(|i| v[origin[i]]).collect()
                })
                .collect();
            let step = (0..total)
                .map(|i| {
                    let mut row = Vec::new();
                    for &(y, w) in p.step(origin[i]) {
                        let cs = &copies[y];
                        let cuts: Vec<f64> = cs.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
                        let sum: f64 = cuts.iter().sum();
                        for (&c, cut) in cs.iter().zip(cuts) {
                            row.push((c, w * cut / sum));
                        }
                    }
                    row
                })
                .collect();
            Model::Prob(
                ProbModel::new(state_names, p.payout_labels().to_vec(), payout, step)
                    .expect("blow-up is valid"),
            )
        }
    };
    (model, copies)
}

/// Random program over `labels` with at most `max_ops` operators and no `0`.
pub fn program(rng: &mut GenRng, labels: &[String], max_ops: usize) -> Program {
    fn go(rng: &mut GenRng, labels: &[String], budget: &mut usize) -> Program {
        if *budget == 0 || rng.gen_bool(0.3) {
            return if rng.gen_bool(0.1) {
                Program::Eps
            } else {
                Program::Atomic(labels.choose(rng).unwrap().clone())
            };
        }
        *budget -= 1;
        match rng.gen_range(0..3) {
            0 => Program::Union(vec![go(rng, labels, budget), go(rng, labels, budget)]),
            1 => Program::Seq(vec![go(rng, labels, budget), go(rng, labels, budget)]),
            _ => Program::Star(Box::new(go(rng, labels, budget))),
        }
    }
    let mut budget = max_ops;
    go(rng, labels, &mut budget)
}

/// What a random formula may contain.
#[derive(Debug, Clone)]
pub struct FormulaShape {
    pub instance: InstanceId,
    pub props: Vec<String>,
    pub labels: Vec<String>,
    /// Upper bound on fixpoint nodes, counting nested scheme applications.
    pub max_fix: usize,
    pub max_depth: usize,
    /// Allow `~` on closed subformulas (set instances only).
    pub negation: bool,
    /// Allow `gfp{..}` schemes (cfl only).
    pub flat: bool,
}

impl FormulaShape {
    pub fn new(instance: InstanceId) -> Self {
        FormulaShape {
            instance,
            props: vec!["p".to_string(), "q".to_string()],
            labels: vec!["a".to_string(), "b".to_string()],
            max_fix: 4,
            max_depth: 4,
            negation: false,
            flat: false,
        }
    }

    /// Shape matching the propositions and labels of `model`.
    pub fn for_model(instance: InstanceId, model: &Model) -> Self {
        let mut s = FormulaShape::new(instance);
        s.props = model.atom_names();
        if s.props.is_empty() {
            s.props = vec!["p".to_string()];
        }
        s.labels = match model {
            Model::Labeled(l) => l.labels().to_vec(),
            _ => Vec::new(),
        };
        s
    }

    fn modalities(&self) -> Vec<Modality> {
        match self.instance {
            InstanceId::Quant => vec![Modality::Dia],
            InstanceId::Pdl => Vec::new(),
            InstanceId::DiamondStar => vec![Modality::Dia, Modality::Box],
            InstanceId::Cfl => {
                let mut ms = vec![Modality::Dia, Modality::Box];
                for l in &self.labels {
                    ms.push(Modality::DiaLabel(l.clone()));
                    ms.push(Modality::BoxLabel(l.clone()));
                }
                ms
            }
        }
    }
}

/// Random formula of the given shape; legal for its instance.
pub fn formula(rng: &mut GenRng, shape: &FormulaShape) -> Formula {
    let mut budget = shape.max_fix;
    gen_formula(rng, shape, shape.max_depth, &mut budget)
}

fn leaf(rng: &mut GenRng, shape: &FormulaShape) -> Formula {
    match rng.gen_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bot,
        _ => Formula::atom(shape.props.choose(rng).unwrap().clone()),
    }
}

fn gen_formula(
    rng: &mut GenRng,
    shape: &FormulaShape,
    depth: usize,
    budget: &mut usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, shape);
    }
    let modalities = shape.modalities();
    let mut choices = vec![0, 1];
    if !modalities.is_empty() {
        choices.push(2);
    }
    if *budget > 0 {
        choices.extend([3, 3]);
    }
    if shape.negation && shape.instance.is_set_based() {
        choices.push(4);
    }
    if shape.instance == InstanceId::Quant {
        choices.push(5);
    }
    let sub = |rng: &mut GenRng, budget: &mut usize| gen_formula(rng, shape, depth - 1, budget);
    match *choices.choose(rng).unwrap() {
        0 => Formula::and(sub(rng, budget), sub(rng, budget)),
        1 => Formula::or(sub(rng, budget), sub(rng, budget)),
        2 => Formula::Modal(
            modalities.choose(rng).unwrap().clone(),
            vec![sub(rng, budget)],
        ),
        3 => fix_node(rng, shape, depth, budget),
        4 => Formula::not(sub(rng, budget)),
        _ => {
            let a: f64 = round3(rng.gen_range(0.0..=1.0));
            let b: f64 = round3(rng.gen_range(0.0..=(1.0 - a)));
            Formula::Sum(vec![
                (OrderedFloat(a), sub(rng, budget)),
                (OrderedFloat(b), sub(rng, budget)),
            ])
        }
    }
}

fn fix_node(rng: &mut GenRng, shape: &FormulaShape, depth: usize, budget: &mut usize) -> Formula {
    *budget -= 1;
    match shape.instance {
        InstanceId::DiamondStar => Formula::dia_star(gen_formula(rng, shape, depth - 1, budget)),
        InstanceId::Pdl => {
            let p = program(rng, &shape.labels, 4);
            Formula::program(p, gen_formula(rng, shape, depth - 1, budget))
        }
        InstanceId::Quant => {
            let arg = gen_formula(rng, shape, depth - 1, budget);
            if rng.gen_bool(0.5) {
                Formula::dia_star(arg)
            } else {
                let q = *[0.1, 0.25, 0.5, 0.75, 0.9, 1.0].choose(rng).unwrap();
                Formula::sigma(q, arg)
            }
        }
        InstanceId::Cfl => {
            let polarity = if shape.flat && rng.gen_bool(0.5) {
                Polarity::Flat
            } else {
                Polarity::Sharp
            };
            let params = rng.gen_range(0..=2);
            let scheme = scheme(rng, shape, polarity, params, budget);
            let args = (0..params)
                .map(|_| gen_formula(rng, shape, depth - 1, budget))
                .collect();
            Formula::Fix(FixHead::Scheme(polarity, Arc::new(scheme)), args)
        }
    }
}

/// Random guarded scheme with `params` parameters `v1..vk`. Nested
/// applications share `polarity` and draw on `budget`.
pub fn scheme(
    rng: &mut GenRng,
    shape: &FormulaShape,
    polarity: Polarity,
    params: usize,
    budget: &mut usize,
) -> Scheme {
    let names: Vec<String> = (1..=params).map(|i| format!("v{i}")).collect();
    let modalities = shape.modalities();
    let body = scheme_body(rng, shape, &modalities, polarity, &names, 3, false, budget);
    Scheme {
        params: names,
        body,
    }
}

#[allow(clippy::too_many_arguments)]
fn scheme_body(
    rng: &mut GenRng,
    shape: &FormulaShape,
    modalities: &[Modality],
    polarity: Polarity,
    params: &[String],
    depth: usize,
    guarded: bool,
    budget: &mut usize,
) -> SchemeBody {
    let sub = |rng: &mut GenRng, guarded: bool, budget: &mut usize| {
        scheme_body(
            rng,
            shape,
            modalities,
            polarity,
            params,
            depth - 1,
            guarded,
            budget,
        )
    };
    if depth == 0 || rng.gen_bool(0.15) {
        let mut options = vec![0, 1];
        if !params.is_empty() {
            options.push(2);
        }
        if guarded {
            options.extend([3, 3]);
        }
        return match *options.choose(rng).unwrap() {
            0 => SchemeBody::Closed(Formula::atom(shape.props.choose(rng).unwrap().clone())),
            1 => {
                if rng.gen_bool(0.5) {
                    SchemeBody::Top
                } else {
                    SchemeBody::Bot
                }
            }
            2 => SchemeBody::Param(params.choose(rng).unwrap().clone()),
            _ => SchemeBody::FixVar,
        };
    }
    let mut options = vec![0, 1, 2, 2];
    if guarded && *budget > 0 {
        options.push(3);
    }
    match *options.choose(rng).unwrap() {
        0 => SchemeBody::And(
            Box::new(sub(rng, guarded, budget)),
            Box::new(sub(rng, guarded, budget)),
        ),
        1 => SchemeBody::Or(
            Box::new(sub(rng, guarded, budget)),
            Box::new(sub(rng, guarded, budget)),
        ),
        2 => SchemeBody::Modal(
            modalities.choose(rng).unwrap().clone(),
            vec![sub(rng, true, budget)],
        ),
        _ => {
            *budget -= 1;
            let k = rng.gen_range(0..=2);
            let inner = scheme(rng, shape, polarity, k, budget);
            let args = (0..k).map(|_| sub(rng, true, budget)).collect();
            SchemeBody::Apply {
                polarity,
                scheme: Arc::new(inner),
                args,
            }
        }
    }
}

/// Random closed, guarded, alternation-free mu-calculus formula over
/// `dia`/`box`. Binders of the other polarity start a closed subformula.
pub fn mu_formula(rng: &mut GenRng, props: &[String], depth: usize) -> MuFormula {
    let mut counter = 0;
    gen_mu(rng, props, depth, &mut Vec::new(), None, &mut counter)
}

/// `scope`: bound variables with a flag telling whether the current
/// position is guarded for them.
fn gen_mu(
    rng: &mut GenRng,
    props: &[String],
    depth: usize,
    scope: &mut Vec<(String, bool)>,
    polarity: Option<bool>,
    counter: &mut usize,
) -> MuFormula {
    let usable: Vec<String> = scope
        .iter()
        .filter(|(_, g)| *g)
        .map(|(v, _)| v.clone())
        .collect();
    if depth == 0 || rng.gen_bool(0.15) {
        if !usable.is_empty() && rng.gen_bool(0.5) {
            return MuFormula::Var(usable.choose(rng).unwrap().clone());
        }
        let p = MuFormula::Atom(props.choose(rng).unwrap().clone());
        return if rng.gen_bool(0.15) {
            MuFormula::Not(Box::new(p))
        } else {
            p
        };
    }
    match rng.gen_range(0..6) {
        0 => MuFormula::And(
            Box::new(gen_mu(rng, props, depth - 1, scope, polarity, counter)),
            Box::new(gen_mu(rng, props, depth - 1, scope, polarity, counter)),
        ),
        1 => MuFormula::Or(
            Box::new(gen_mu(rng, props, depth - 1, scope, polarity, counter)),
            Box::new(gen_mu(rng, props, depth - 1, scope, polarity, counter)),
        ),
        2 | 3 => {
            let m = if rng.gen_bool(0.5) {
                Modality::Dia
            } else {
                Modality::Box
            };
            let saved: Vec<bool> = scope.iter().map(|(_, g)| *g).collect();
            scope.iter_mut().for_each(|(_, g)| *g = true);
            let body = gen_mu(rng, props, depth - 1, scope, polarity, counter);
            scope.iter_mut().zip(saved).for_each(|((_, g), s)| *g = s);
            MuFormula::Modal(m, Box::new(body))
        }
        _ => {
            *counter += 1;
            let var = format!("X{counter}");
            let least = rng.gen_bool(0.6);
            let body = if polarity.is_none() || polarity == Some(least) {
                scope.push((var.clone(), false));
                let b = gen_mu(rng, props, depth - 1, scope, Some(least), counter);
                scope.pop();
                b
            } else {
                let mut fresh = vec![(var.clone(), false)];
                gen_mu(rng, props, depth - 1, &mut fresh, Some(least), counter)
            };
            if least {
                MuFormula::Mu(var, Box::new(body))
            } else {
                MuFormula::Nu(var, Box::new(body))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{check_morphism, quotient_by_indices};
    use crate::syntax::{validate, LogicInstance};

    #[test]
    fn generated_formulas_validate() {
        let mut r = rng(7);
        for id in InstanceId::ALL {
            let mut shape = FormulaShape::new(id);
            shape.flat = id == InstanceId::Cfl;
            shape.negation = id.is_set_based();
            for _ in 0..200 {
                let f = formula(&mut r, &shape);
                assert!(f.fix_count() <= shape.max_fix, "{f}");
                let d = validate(&f, &LogicInstance::new(id));
                assert!(d.is_empty(), "{id}: {f}: {d:?}");
            }
        }
    }

    #[test]
    fn blow_up_quotients_to_base() {
        let mut r = rng(3);
        for kind in [ModelKind::Kripke, ModelKind::Labeled, ModelKind::Prob] {
            for _ in 0..20 {
                let base = model(&mut r, kind, 4);
                let (big, blocks) = blow_up(&mut r, &base, 3);
                let (q, f) = quotient_by_indices(&big, &blocks).unwrap();
                assert_eq!(check_morphism(&big, &q, &f).unwrap(), None);
                assert_eq!(q.len(), base.len());
            }
        }
    }

    #[test]
    fn mu_formulas_are_closed() {
        let mut r = rng(11);
        let props = vec!["p".to_string(), "q".to_string()];
        for _ in 0..200 {
            assert!(mu_formula(&mut r, &props, 5).is_closed());
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = formula(&mut rng(5), &FormulaShape::new(InstanceId::Cfl));
        let b = formula(&mut rng(5), &FormulaShape::new(InstanceId::Cfl));
        assert_eq!(a, b);
    }
}
