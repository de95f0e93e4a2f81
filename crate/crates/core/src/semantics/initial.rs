use std::collections::HashMap;

use indexmap::IndexMap;

use super::closure::{dependencies, explore};
use super::{
    canonical_programs, eval_guarded, fix_polarity, flat_to_dual, lattice_for, step_structural,
    EvalOptions, FlatStrategy, SemanticResult, SemanticsError,
};
use crate::lattice::{
    gfp_finite, lfp_approx, lfp_finite, LatticeContext, LatticeError, LatticeKind, Predicate, Table,
};
use crate::models::Model;
use crate::syntax::{FixHead, Formula, Polarity};

const MAX_NESTING: usize = 256;

struct Folder<'m> {
    model: &'m Model,
    ctx: LatticeContext,
    opts: EvalOptions,
    memo: IndexMap<Formula, Predicate>,
    active: Vec<Formula>,
    iterations: usize,
    residual: f64,
}

impl Folder<'_> {
    fn dual_flat(&self, f: &Formula) -> bool {
        self.opts.flat == FlatStrategy::Dual
            && matches!(f, Formula::Fix(FixHead::Scheme(Polarity::Flat, _), _))
    }

    fn eval(&mut self, f: &Formula) -> Result<Predicate, SemanticsError> {
        if let Some(v) = self.memo.get(f) {
            return Ok(v.clone());
        }
        let v = match f {
            Formula::Not(g) => self.eval(g)?.complement()?,
            _ if self.dual_flat(f) => {
                let rewritten = flat_to_dual(f)?;
                self.enter(f)?;
                let v = self.eval(&rewritten);
                self.active.pop();
                v?
            }
            Formula::Fix(..) => {
                self.solve_component(f)?;
                return Ok(self.memo[f].clone());
            }
            _ => {
                for c in f.children() {
                    self.eval(c)?;
                }
                let memo = &self.memo;
                step_structural(self.model, &self.ctx, f, &mut |g| {
                    memo.get(g)
                        .cloned()
                        .ok_or_else(|| LatticeError::UnboundLeaf(g.to_string()).into())
                })?
            }
        };
        self.memo.insert(f.clone(), v.clone());
        Ok(v)
    }

    fn enter(&mut self, f: &Formula) -> Result<(), SemanticsError> {
        if self.active.contains(f) || self.active.len() >= MAX_NESTING {
            return Err(SemanticsError::NegationInCycle(f.to_string()));
        }
        self.active.push(f.clone());
        Ok(())
    }

    /// Solves the group of formulas mutually dependent with the fixpoint `root`,
    /// after folding everything that group depends on.
    fn solve_component(&mut self, root: &Formula) -> Result<(), SemanticsError> {
        self.enter(root)?;
        let opaque = |f: &Formula| {
            self.memo.contains_key(f) || matches!(f, Formula::Not(_)) || self.dual_flat(f)
        };
        let closure = explore(root, self.opts.closure_cap, &opaque, &|_| false)?;
        let n = closure.len();
        let deps: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                dependencies(&closure, i, &opaque)
                    .iter()
                    .map(|d| closure.index_of(d).expect("explored dependency"))
                    .collect()
            })
            .collect();
        // members of the component: nodes from which the root is reachable
        let mut reverse = vec![Vec::new(); n];
        for (i, ds) in deps.iter().enumerate() {
            for &d in ds {
                reverse[d].push(i);
            }
        }
        let mut member = vec![false; n];
        member[0] = true;
        let mut stack = vec![0];
        while let Some(j) = stack.pop() {
            for &i in &reverse[j] {
                if !member[i] {
                    member[i] = true;
                    stack.push(i);
                }
            }
        }
        for i in (0..n).filter(|&i| member[i]) {
            for &d in &deps[i] {
                if !member[d] {
                    let f = closure.keys()[d].clone();
                    self.eval(&f)?;
                }
            }
        }
        let members: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
        let polarities: Vec<Polarity> = members
            .iter()
            .filter_map(|&i| fix_polarity(&closure.keys()[i]))
            .collect();
        let greatest = polarities.contains(&Polarity::Flat);
        if greatest && polarities.contains(&Polarity::Sharp) {
            return Err(SemanticsError::Alternation(root.to_string()));
        }
        let slot: HashMap<&Formula, usize> = members
            .iter()
            .enumerate()
            .map(|(slot, &i)| (&closure.keys()[i], slot))
            .collect();
        let keys: std::sync::Arc<[Formula]> =
            members.iter().map(|&i| closure.keys()[i].clone()).collect();
        let model = self.model;
        let ctx = &self.ctx;
        let memo = &self.memo;
        let op = |t: &Table<Formula>| -> Result<Table<Formula>, SemanticsError> {
            let mut lookup = |f: &Formula| -> Result<Predicate, SemanticsError> {
                match slot.get(f) {
                    Some(&s) => Ok(t.value(s).clone()),
                    None => memo
                        .get(f)
                        .cloned()
                        .ok_or_else(|| LatticeError::UnboundLeaf(f.to_string()).into()),
                }
            };
            let mut values = Vec::with_capacity(members.len());
            for &i in &members {
                let v = match closure.unfolding(i) {
                    Some(u) => eval_guarded(model, ctx, u, &mut lookup)?,
                    None => step_structural(model, ctx, &closure.keys()[i], &mut lookup)?,
                };
                values.push(v);
            }
            Ok(t.with_values(values))
        };
        let fix = match (ctx.kind, greatest) {
            (LatticeKind::Set, false) => lfp_finite(ctx, keys, op)?,
            (LatticeKind::Set, true) => gfp_finite(ctx, keys, op)?,
            (LatticeKind::Quantitative, false) => lfp_approx(ctx, keys, op, self.opts.approx)?,
            (LatticeKind::Quantitative, true) => {
                return Err(LatticeError::WrongEngine {
                    engine: "finite",
                    needs: LatticeKind::Set,
                }
                .into())
            }
        };
        self.iterations += fix.iterations;
        self.residual = self.residual.max(fix.residual);
        for (k, v) in fix.table.iter() {
            self.memo.insert(k.clone(), v.clone());
        }
        self.active.pop();
        Ok(())
    }
}

pub fn eval_initial(model: &Model, root: &Formula) -> Result<SemanticResult, SemanticsError> {
    eval_initial_with(model, root, &EvalOptions::default())
}

/// Compositional evaluation: each fixpoint node is solved on its own, with
/// the values of everything it depends on already folded.
pub fn eval_initial_with(
    model: &Model,
    root: &Formula,
    opts: &EvalOptions,
) -> Result<SemanticResult, SemanticsError> {
    let mut folder = Folder {
        model,
        ctx: lattice_for(model),
        opts: *opts,
        memo: IndexMap::new(),
        active: Vec::new(),
        iterations: 0,
        residual: 0.0,
    };
    let value = folder.eval(&canonical_programs(root))?;
    Ok(SemanticResult {
        root: root.clone(),
        value,
        entries: folder.memo.into_iter().collect(),
        iterations: folder.iterations,
        residual: folder.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures;
    use crate::syntax::parse_formula_unchecked;

    fn eval(model: &Model, text: &str, flat: FlatStrategy) -> Predicate {
        let opts = EvalOptions {
            flat,
            ..EvalOptions::default()
        };
        eval_initial_with(model, &parse_formula_unchecked(text).unwrap(), &opts)
            .unwrap()
            .value
    }

    #[test]
    fn fixture_values() {
        let d = FlatStrategy::Dual;
        assert_eq!(eval(&fixtures::m1(), "dia* p", d), Predicate::full(3));
        assert_eq!(eval(&fixtures::m1(), "~dia* p", d), Predicate::empty(3));
        assert_eq!(
            eval(&fixtures::m2(), "<a;b>p", d),
            Predicate::from_states(3, [0])
        );
        let v = eval(&fixtures::mq2(), "dia* p", d);
        assert!((v.at(0) - 0.4).abs() < 1e-6 && (v.at(1) - 0.8).abs() < 1e-6);
    }

    #[test]
    fn flat_strategies_agree() {
        for text in [
            "gfp{dia X}()",
            "gfp{q /\\ dia X}()",
            "gfp{v /\\ box X}(dia* p/v)",
            "dia gfp{p /\\ box X}()",
        ] {
            let a = eval(&fixtures::m1(), text, FlatStrategy::Dual);
            let b = eval(&fixtures::m1(), text, FlatStrategy::Descending);
            assert_eq!(a, b, "{text}");
        }
        assert_eq!(
            eval(&fixtures::m1(), "gfp{dia X}()", FlatStrategy::Descending),
            Predicate::full(3)
        );
    }

    #[test]
    fn nested_schemes() {
        let text = "lfp{p /\\ (q /\\ dia lfp{q /\\ dia X \\/ r /\\ box v}(X/v) \\/ r /\\ box X)}()";
        let f = parse_formula_unchecked(text).unwrap();
        let m = fixtures::m1();
        assert_eq!(
            eval_initial(&m, &f).unwrap().value,
            super::super::eval_least(&m, &f).unwrap().value
        );
    }
}
