use std::collections::HashMap;

use super::closure::{compute_closure, is_stratified, Closure};
use super::{
    eval_guarded, flat_to_dual, lattice_for, step_structural, EvalOptions, SemanticResult,
    SemanticsError,
};
use crate::lattice::{
    lfp_approx_observed, lfp_finite_observed, Fixpoint, LatticeContext, LatticeError, LatticeKind,
    Predicate, Table,
};
use crate::models::Model;
use crate::syntax::Formula;

/// Nesting limit for strata; deeper chains indicate a negation cycle.
const MAX_STRATA_DEPTH: usize = 256;

/// The evaluation operator over the closure of a root formula.
///
/// Stratified members (negations, `gfp{..}`) are solved once up front and
/// enter the operator as constants.
#[derive(Debug, Clone)]
pub struct LeastSystem<'m> {
    model: &'m Model,
    ctx: LatticeContext,
    closure: Closure,
    strata: HashMap<Formula, Predicate>,
    opts: EvalOptions,
    strata_iterations: usize,
    strata_residual: f64,
}

impl<'m> LeastSystem<'m> {
    pub fn new(
        model: &'m Model,
        root: &Formula,
        opts: &EvalOptions,
    ) -> Result<Self, SemanticsError> {
        Self::build(model, root, opts, &mut Vec::new(), &mut HashMap::new())
    }

    fn build(
        model: &'m Model,
        root: &Formula,
        opts: &EvalOptions,
        active: &mut Vec<Formula>,
        memo: &mut HashMap<Formula, (Predicate, usize, f64)>,
    ) -> Result<Self, SemanticsError> {
        let closure = compute_closure(root, opts.closure_cap)?;
        let mut strata = HashMap::new();
        let mut strata_iterations = 0;
        let mut strata_residual: f64 = 0.0;
        for key in closure.keys().iter().filter(|k| is_stratified(k)) {
            let (value, iterations, residual) = stratum(model, key, opts, active, memo)?;
            strata.insert(key.clone(), value);
            strata_iterations += iterations;
            strata_residual = strata_residual.max(residual);
        }
        Ok(LeastSystem {
            model,
            ctx: lattice_for(model),
            closure,
            strata,
            opts: *opts,
            strata_iterations,
            strata_residual,
        })
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn context(&self) -> &LatticeContext {
        &self.ctx
    }

    /// One simultaneous application of the operator to every closure member.
    pub fn apply(&self, table: &Table<Formula>) -> Result<Table<Formula>, SemanticsError> {
        let mut lookup = |f: &Formula| -> Result<Predicate, SemanticsError> {
            match self.closure.index_of(f) {
                Some(j) => Ok(table.value(j).clone()),
                None => Err(LatticeError::UnboundLeaf(f.to_string()).into()),
            }
        };
        let mut values = Vec::with_capacity(self.closure.len());
        for (i, key) in self.closure.keys().iter().enumerate() {
            let v = if let Some(v) = self.strata.get(key) {
                v.clone()
            } else if let Some(t) = self.closure.unfolding(i) {
                eval_guarded(self.model, &self.ctx, t, &mut lookup)?
            } else {
                step_structural(self.model, &self.ctx, key, &mut lookup)?
            };
            values.push(v);
        }
        Ok(table.with_values(values))
    }

    pub fn solve(&self) -> Result<Fixpoint<Formula>, SemanticsError> {
        self.solve_observed(|_, _| {})
    }

    /// Kleene iteration from ⊥; `observe` sees every iterate.
    pub fn solve_observed(
        &self,
        observe: impl FnMut(usize, &Table<Formula>),
    ) -> Result<Fixpoint<Formula>, SemanticsError> {
        let keys = self.closure.shared_keys();
        match self.ctx.kind {
            LatticeKind::Set => lfp_finite_observed(&self.ctx, keys, |t| self.apply(t), observe),
            LatticeKind::Quantitative => lfp_approx_observed(
                &self.ctx,
                keys,
                |t| self.apply(t),
                self.opts.approx,
                observe,
            ),
        }
    }
}

/// Value of a stratified node: the complement of a separate run on its body.
fn stratum(
    model: &Model,
    key: &Formula,
    opts: &EvalOptions,
    active: &mut Vec<Formula>,
    memo: &mut HashMap<Formula, (Predicate, usize, f64)>,
) -> Result<(Predicate, usize, f64), SemanticsError> {
    if let Some(hit) = memo.get(key) {
        return Ok(hit.clone());
    }
    let inner = match flat_to_dual(key)? {
        Formula::Not(g) => *g,
        other => unreachable!("stratified node `{other}` is a negation after rewriting"),
    };
    if active.contains(&inner) || active.len() >= MAX_STRATA_DEPTH {
        return Err(SemanticsError::NegationInCycle(key.to_string()));
    }
    active.push(inner.clone());
    let sys = LeastSystem::build(model, &inner, opts, active, memo)?;
    let fix = sys.solve()?;
    active.pop();
    let entry = (
        fix.table.value(0).complement()?,
        fix.iterations + sys.strata_iterations,
        fix.residual.max(sys.strata_residual),
    );
    memo.insert(key.clone(), entry.clone());
    Ok(entry)
}

pub fn eval_least(model: &Model, root: &Formula) -> Result<SemanticResult, SemanticsError> {
    eval_least_with(model, root, &EvalOptions::default())
}

/// The least solution of the closure system, read at the root.
pub fn eval_least_with(
    model: &Model,
    root: &Formula,
    opts: &EvalOptions,
) -> Result<SemanticResult, SemanticsError> {
    let sys = LeastSystem::new(model, root, opts)?;
    let fix = sys.solve()?;
    let entries: Vec<(Formula, Predicate)> = fix
        .table
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(SemanticResult {
        root: root.clone(),
        value: entries[0].1.clone(),
        entries,
        iterations: fix.iterations + sys.strata_iterations,
        residual: fix.residual.max(sys.strata_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures;
    use crate::syntax::parse_formula_unchecked;

    fn eval(model: &Model, text: &str) -> Predicate {
        eval_least(model, &parse_formula_unchecked(text).unwrap())
            .unwrap()
            .value
    }

    #[test]
    fn reachability_on_m1() {
        assert_eq!(eval(&fixtures::m1(), "dia* p"), Predicate::full(3));
        assert_eq!(eval(&fixtures::m1(), "dia* F"), Predicate::empty(3));
        assert_eq!(eval(&fixtures::m1(), "~dia* p"), Predicate::empty(3));
        assert_eq!(
            eval(&fixtures::m1(), "dia* q"),
            Predicate::from_states(3, [0, 1])
        );
    }

    #[test]
    fn optimal_stopping_on_mq2() {
        let v = eval(&fixtures::mq2(), "dia* p");
        assert!(
            (v.at(0) - 0.4).abs() < 1e-6 && (v.at(1) - 0.8).abs() < 1e-6,
            "{v}"
        );
    }

    #[test]
    fn sigma_on_mq() {
        let v = eval(&fixtures::mq(), "sigma[0.5] p");
        assert!(
            (v.at(0) - 0.25).abs() < 1e-9 && (v.at(1) - 0.5).abs() < 1e-9,
            "{v}"
        );
    }

    #[test]
    fn pdl_on_m2() {
        assert_eq!(
            eval(&fixtures::m2(), "<a;b>p"),
            Predicate::from_states(3, [0])
        );
        assert_eq!(eval(&fixtures::m2(), "<(a+b)*>p"), Predicate::full(3));
    }

    #[test]
    fn greatest_fixpoint_via_dual() {
        assert_eq!(eval(&fixtures::m1(), "gfp{dia X}()"), Predicate::full(3));
        assert_eq!(
            eval(&fixtures::m1(), "gfp{q /\\ dia X}()"),
            Predicate::empty(3)
        );
    }

    #[test]
    fn operator_is_identity_on_result() {
        let m = fixtures::m1();
        let sys = LeastSystem::new(
            &m,
            &parse_formula_unchecked("dia* (p \\/ q)").unwrap(),
            &EvalOptions::default(),
        )
        .unwrap();
        let fix = sys.solve().unwrap();
        assert_eq!(sys.apply(&fix.table).unwrap(), fix.table);
    }
}
