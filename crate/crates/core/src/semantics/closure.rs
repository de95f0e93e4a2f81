use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::{canonical_programs, guarded_leaves, unfold, SemanticsError};
use crate::schemes::GuardedTerm;
use crate::syntax::{FixHead, Formula, Polarity};

pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// The finite set of formulas whose values one least-fixpoint run computes.
#[derive(Debug, Clone)]
pub struct Closure {
    root: Formula,
    keys: Arc<[Formula]>,
    index: HashMap<Formula, usize>,
    unfoldings: Vec<Option<GuardedTerm>>,
}

impl Closure {
    pub fn root(&self) -> &Formula {
        &self.root
    }

    pub fn keys(&self) -> &[Formula] {
        &self.keys
    }

    pub fn shared_keys(&self) -> Arc<[Formula]> {
        Arc::clone(&self.keys)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Cached unfolding of the `i`-th key, if it is an unfolded fixpoint.
    pub fn unfolding(&self, i: usize) -> Option<&GuardedTerm> {
        self.unfoldings[i].as_ref()
    }
}

/// Negations and `gfp{..}` nodes are evaluated in their own stratum, so the
/// closure does not descend into them.
pub(crate) fn is_stratified(f: &Formula) -> bool {
    matches!(
        f,
        Formula::Not(_) | Formula::Fix(FixHead::Scheme(Polarity::Flat, _), _)
    )
}

/// Smallest set containing `root` that is closed under subformulas and under
/// formula leaves of unfoldings, not descending below stratified nodes.
/// Keys appear in breadth-first discovery order, root first.
pub fn compute_closure(root: &Formula, cap: usize) -> Result<Closure, SemanticsError> {
    explore(&canonical_programs(root), cap, &is_stratified, &|_| false)
}

/// Breadth-first exploration from `root`. Nodes satisfying `opaque` are
/// kept without their dependencies; `skip` nodes are not entered at all
/// (except the root).
pub(crate) fn explore(
    root: &Formula,
    cap: usize,
    opaque: &dyn Fn(&Formula) -> bool,
    skip: &dyn Fn(&Formula) -> bool,
) -> Result<Closure, SemanticsError> {
    let mut keys = vec![root.clone()];
    let mut index = HashMap::from([(root.clone(), 0)]);
    let mut unfoldings = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let f = keys[i].clone();
        let (deps, unfolding) = if opaque(&f) {
            (Vec::new(), None)
        } else if f.is_fix() {
            let t = unfold(&f)?;
            let mut deps = Vec::new();
            guarded_leaves(&t, &mut deps);
            (deps, Some(t))
        } else {
            (f.children().into_iter().cloned().collect(), None)
        };
        if unfoldings.len() <= i {
            unfoldings.resize(i + 1, None);
        }
        unfoldings[i] = unfolding;
        for d in deps {
            if index.contains_key(&d) || skip(&d) {
                continue;
            }
            if keys.len() >= cap {
                let mut family = d.to_string();
                if family.len() > 80 {
                    let cut = (0..=80)
                        .rev()
                        .find(|&c| family.is_char_boundary(c))
                        .unwrap_or(0);
                    family.truncate(cut);
                    family.push_str("...");
                }
                return Err(SemanticsError::ClosureCap { cap, family });
            }
            index.insert(d.clone(), keys.len());
            queue.push_back(keys.len());
            keys.push(d);
        }
    }
    unfoldings.resize(keys.len(), None);
    Ok(Closure {
        root: root.clone(),
        keys: keys.into(),
        index,
        unfoldings,
    })
}

/// Direct dependencies of key `i` as recorded during exploration.
pub(crate) fn dependencies(
    c: &Closure,
    i: usize,
    opaque: &dyn Fn(&Formula) -> bool,
) -> Vec<Formula> {
    let f = &c.keys[i];
    if opaque(f) {
        Vec::new()
    } else if let Some(t) = c.unfolding(i) {
        let mut deps = Vec::new();
        guarded_leaves(t, &mut deps);
        deps
    } else {
        f.children().into_iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula_unchecked;

    fn keys(text: &str) -> Vec<String> {
        compute_closure(&parse_formula_unchecked(text).unwrap(), DEFAULT_CLOSURE_CAP)
            .unwrap()
            .keys()
            .iter()
            .map(Formula::to_string)
            .collect()
    }

    #[test]
    fn closure_examples() {
        assert_eq!(keys("dia* p"), ["dia* p", "p"]);
        assert_eq!(keys("<(a;b)*>p"), ["<(a;b)*>p", "<b;(a;b)*>p", "p"]);
        assert_eq!(keys("p"), ["p"]);
    }

    #[test]
    fn equal_programs_share_a_slot() {
        assert_eq!(
            keys("<a* + a*>p \\/ <a*>p"),
            ["<a*>p \\/ <a*>p", "<a*>p", "p"]
        );
    }

    #[test]
    fn negation_is_opaque() {
        assert_eq!(keys("~dia* p"), ["~dia* p"]);
    }

    #[test]
    fn cap_is_enforced() {
        let err =
            compute_closure(&parse_formula_unchecked("dia* (p /\\ q)").unwrap(), 2).unwrap_err();
        assert!(matches!(err, SemanticsError::ClosureCap { cap: 2, .. }));
    }
}
