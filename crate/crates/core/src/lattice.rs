//! Predicate lattices over finite state spaces and the Kleene fixpoint engines.
//!
//! Two lattices are supported: the powerset of a finite state range, stored as
//! a fixed-width bit vector, and `[0,1]^n`, stored as a dense vector of reals.
//! States are identified by position, so predicates over the same model can be
//! compared and combined pointwise without any lookup.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

/// Slack allowed when checking that subconvex coefficients sum to at most one.
pub const COEFFICIENT_SLACK: f64 = 1e-12;

/// Default sup-norm residual at which quantitative iteration stops.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Default iteration cap for quantitative iteration.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Set,
    Quantitative,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Set => f.write_str("set"),
            LatticeKind::Quantitative => f.write_str("quantitative"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LatticeError {
    #[error("predicate shape mismatch: expected {expected} of width {expected_width}, found {found} of width {found_width}")]
    ShapeMismatch {
        expected: LatticeKind,
        expected_width: usize,
        found: LatticeKind,
        found_width: usize,
    },
    #[error("unbound leaf `{0}`")]
    UnboundLeaf(String),
    #[error("negation is not available on quantitative predicates")]
    NegationOnValues,
    #[error("subconvex combination is not available on set predicates")]
    SubconvexOnSet,
    #[error("subconvex coefficients sum to {0}, which exceeds 1")]
    CoefficientSum(f64),
    #[error("subconvex coefficient {0} lies outside [0,1]")]
    CoefficientRange(f64),
    #[error("value {value} at state {index} lies outside [0,1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("operator is not monotone: iterate {iteration} decreased at key {key}")]
    NotMonotone { key: usize, iteration: usize },
    #[error("Kleene iteration exceeded its bound of {bound} steps")]
    IterationBound { bound: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<Predicate>,
    },
    #[error("the {engine} engine needs a {needs} lattice")]
    WrongEngine {
        engine: &'static str,
        needs: LatticeKind,
    },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// An element of `PX` for a finite state space `X`.
#[derive(Debug, Clone)]
pub enum Predicate {
    Set(FixedBitSet),
    Value(Vec<f64>),
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => a == b,
            (Predicate::Value(a), Predicate::Value(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Predicate {}

impl Hash for Predicate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Predicate::Set(bits) => {
                0u8.hash(state);
                bits.hash(state);
            }
            Predicate::Value(values) => {
                1u8.hash(state);
                values.len().hash(state);
                for v in values {
                    // folds -0.0 onto 0.0 so that Hash agrees with ==
                    (v + 0.0).to_bits().hash(state);
                }
            }
        }
    }
}

impl Predicate {
    pub fn empty(width: usize) -> Self {
        Predicate::Set(FixedBitSet::with_capacity(width))
    }

    pub fn full(width: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(width);
        bits.insert_range(..);
        Predicate::Set(bits)
    }

    /// Set predicate containing exactly the given state indices.
    ///
    /// Indices at or above `width` are ignored.
    pub fn from_states(width: usize, states: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = FixedBitSet::with_capacity(width);
        for s in states {
            if s < width {
                bits.insert(s);
            }
        }
        Predicate::Set(bits)
    }

    pub fn zeros(width: usize) -> Self {
        Predicate::Value(vec![0.0; width])
    }

    pub fn ones(width: usize) -> Self {
        Predicate::Value(vec![1.0; width])
    }

    /// Quantitative predicate; every entry must lie in `[0,1]`.
    pub fn values(values: Vec<f64>) -> Result<Self, LatticeError> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(LatticeError::OutOfRange { index, value });
            }
        }
        Ok(Predicate::Value(values))
    }

    pub fn kind(&self) -> LatticeKind {
        match self {
            Predicate::Set(_) => LatticeKind::Set,
            Predicate::Value(_) => LatticeKind::Quantitative,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Predicate::Set(bits) => bits.len(),
            Predicate::Value(values) => values.len(),
        }
    }

    /// Truth value at a state: membership for sets, the entry for values.
    pub fn at(&self, state: usize) -> f64 {
        match self {
            Predicate::Set(bits) => {
                if bits.contains(state) {
                    1.0
                } else {
                    0.0
                }
            }
            Predicate::Value(values) => values[state],
        }
    }

    pub fn contains(&self, state: usize) -> bool {
        match self {
            Predicate::Set(bits) => bits.contains(state),
            Predicate::Value(values) => values[state] > 0.0,
        }
    }

    /// Member states of a set predicate in increasing order.
    pub fn states(&self) -> Vec<usize> {
        match self {
            Predicate::Set(bits) => bits.ones().collect(),
            Predicate::Value(values) => (0..values.len()).filter(|&i| values[i] > 0.0).collect(),
        }
    }

    pub fn as_set(&self) -> Option<&FixedBitSet> {
        match self {
            Predicate::Set(bits) => Some(bits),
            Predicate::Value(_) => None,
        }
    }

    pub fn as_values(&self) -> Option<&[f64]> {
        match self {
            Predicate::Set(_) => None,
            Predicate::Value(values) => Some(values),
        }
    }

    fn same_shape(&self, other: &Predicate) -> Result<(), LatticeError> {
        if self.kind() == other.kind() && self.width() == other.width() {
            Ok(())
        } else {
            Err(LatticeError::ShapeMismatch {
                expected: self.kind(),
                expected_width: self.width(),
                found: other.kind(),
                found_width: other.width(),
            })
        }
    }

    pub fn join(&self, other: &Predicate) -> Result<Predicate, LatticeError> {
        self.same_shape(other)?;
        Ok(match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => {
                let mut out = a.clone();
                out.union_with(b);
                Predicate::Set(out)
            }
            (Predicate::Value(a), Predicate::Value(b)) => {
                Predicate::Value(a.iter().zip(b).map(|(x, y)| x.max(*y)).collect())
            }
            _ => unreachable!(),
        })
    }

    pub fn meet(&self, other: &Predicate) -> Result<Predicate, LatticeError> {
        self.same_shape(other)?;
        Ok(match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => {
                let mut out = a.clone();
                out.intersect_with(b);
                Predicate::Set(out)
            }
            (Predicate::Value(a), Predicate::Value(b)) => {
                Predicate::Value(a.iter().zip(b).map(|(x, y)| x.min(*y)).collect())
            }
            _ => unreachable!(),
        })
    }

    pub fn complement(&self) -> Result<Predicate, LatticeError> {
        match self {
            Predicate::Set(bits) => {
                let mut out = bits.clone();
                out.toggle_range(..);
                Ok(Predicate::Set(out))
            }
            Predicate::Value(_) => Err(LatticeError::NegationOnValues),
        }
    }

    /// Pointwise order.
    pub fn le(&self, other: &Predicate) -> Result<bool, LatticeError> {
        self.same_shape(other)?;
        Ok(match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => a.is_subset(b),
            (Predicate::Value(a), Predicate::Value(b)) => a.iter().zip(b).all(|(x, y)| x <= y),
            _ => unreachable!(),
        })
    }

    /// Sup-norm distance; for sets this is 1 when they differ and 0 otherwise.
    pub fn distance(&self, other: &Predicate) -> Result<f64, LatticeError> {
        self.same_shape(other)?;
        Ok(match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (Predicate::Value(a), Predicate::Value(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            _ => unreachable!(),
        })
    }

    /// First state at which `self` lies strictly above `other`, if any.
    fn first_excess(&self, other: &Predicate) -> Option<usize> {
        match (self, other) {
            (Predicate::Set(a), Predicate::Set(b)) => a.difference(b).next(),
            (Predicate::Value(a), Predicate::Value(b)) => a.iter().zip(b).position(|(x, y)| x > y),
            _ => Some(0),
        }
    }

    /// Reindexes along a state map `f: source -> target`, giving `self ∘ f`.
    ///
    /// For set predicates this is the preimage `f⁻¹(self)`.
    pub fn pull_back(&self, map: &[usize]) -> Predicate {
        match self {
            Predicate::Set(bits) => {
                Predicate::from_states(map.len(), (0..map.len()).filter(|&x| bits.contains(map[x])))
            }
            Predicate::Value(values) => Predicate::Value(map.iter().map(|&y| values[y]).collect()),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Set(bits) => {
                f.write_str("{")?;
                for (i, s) in bits.ones().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("}")
            }
            Predicate::Value(values) => {
                f.write_str("(")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Shape of the predicates a computation works with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeContext {
    pub kind: LatticeKind,
    pub width: usize,
    /// Slack used by [`LatticeContext::approx_le`]; ordering itself is exact.
    pub cmp_tolerance: f64,
}

impl LatticeContext {
    pub fn set(width: usize) -> Self {
        LatticeContext {
            kind: LatticeKind::Set,
            width,
            cmp_tolerance: 0.0,
        }
    }

    pub fn quantitative(width: usize) -> Self {
        LatticeContext {
            kind: LatticeKind::Quantitative,
            width,
            cmp_tolerance: 0.0,
        }
    }

    pub fn bottom(&self) -> Predicate {
        match self.kind {
            LatticeKind::Set => Predicate::empty(self.width),
            LatticeKind::Quantitative => Predicate::zeros(self.width),
        }
    }

    pub fn top(&self) -> Predicate {
        match self.kind {
            LatticeKind::Set => Predicate::full(self.width),
            LatticeKind::Quantitative => Predicate::ones(self.width),
        }
    }

    pub fn check(&self, p: &Predicate) -> Result<(), LatticeError> {
        if p.kind() == self.kind && p.width() == self.width {
            Ok(())
        } else {
            Err(LatticeError::ShapeMismatch {
                expected: self.kind,
                expected_width: self.width,
                found: p.kind(),
                found_width: p.width(),
            })
        }
    }

    /// `a ≤ b` up to `cmp_tolerance` at every state.
    pub fn approx_le(&self, a: &Predicate, b: &Predicate) -> Result<bool, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok((0..self.width).all(|i| a.at(i) <= b.at(i) + self.cmp_tolerance))
    }

    /// Subconvex combination `Σ λᵢ·aᵢ`, clamped to `[0,1]`.
    pub fn subconvex(&self, terms: &[(f64, Predicate)]) -> Result<Predicate, LatticeError> {
        if self.kind == LatticeKind::Set {
            return Err(LatticeError::SubconvexOnSet);
        }
        let mut total = 0.0;
        for (lambda, p) in terms {
            if !(0.0..=1.0).contains(lambda) {
                return Err(LatticeError::CoefficientRange(*lambda));
            }
            self.check(p)?;
            total += lambda;
        }
        if total > 1.0 + COEFFICIENT_SLACK {
            return Err(LatticeError::CoefficientSum(total));
        }
        let mut out = vec![0.0; self.width];
        for (lambda, p) in terms {
            if let Predicate::Value(values) = p {
                for (o, v) in out.iter_mut().zip(values) {
                    *o += lambda * v;
                }
            }
        }
        for o in &mut out {
            *o = o.clamp(0.0, 1.0);
        }
        Ok(Predicate::Value(out))
    }
}

/// Propositional expression over leaves of type `L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatticeTerm<L> {
    Top,
    Bot,
    Leaf(L),
    And(Vec<LatticeTerm<L>>),
    Or(Vec<LatticeTerm<L>>),
    Not(Box<LatticeTerm<L>>),
    Sum(Vec<(ordered_float::OrderedFloat<f64>, LatticeTerm<L>)>),
}

impl<L> LatticeTerm<L> {
    /// Visits every leaf, left to right.
    pub fn for_each_leaf<'a>(&'a self, f: &mut impl FnMut(&'a L)) {
        match self {
            LatticeTerm::Top | LatticeTerm::Bot => {}
            LatticeTerm::Leaf(l) => f(l),
            LatticeTerm::And(ts) | LatticeTerm::Or(ts) => {
                ts.iter().for_each(|t| t.for_each_leaf(f))
            }
            LatticeTerm::Not(t) => t.for_each_leaf(f),
            LatticeTerm::Sum(ts) => ts.iter().for_each(|(_, t)| t.for_each_leaf(f)),
        }
    }

    pub fn map_leaves<M, E>(
        &self,
        f: &mut impl FnMut(&L) -> Result<LatticeTerm<M>, E>,
    ) -> Result<LatticeTerm<M>, E> {
        Ok(match self {
            LatticeTerm::Top => LatticeTerm::Top,
            LatticeTerm::Bot => LatticeTerm::Bot,
            LatticeTerm::Leaf(l) => f(l)?,
            LatticeTerm::And(ts) => LatticeTerm::And(
                ts.iter()
                    .map(|t| t.map_leaves(f))
                    .collect::<Result<_, _>>()?,
            ),
            LatticeTerm::Or(ts) => LatticeTerm::Or(
                ts.iter()
                    .map(|t| t.map_leaves(f))
                    .collect::<Result<_, _>>()?,
            ),
            LatticeTerm::Not(t) => LatticeTerm::Not(Box::new(t.map_leaves(f)?)),
            LatticeTerm::Sum(ts) => LatticeTerm::Sum(
                ts.iter()
                    .map(|(c, t)| Ok((*c, t.map_leaves(f)?)))
                    .collect::<Result<_, E>>()?,
            ),
        })
    }
}

/// Evaluates a lattice expression pointwise, resolving leaves through `leaf`.
pub fn eval_lattice_term<L, E>(
    term: &LatticeTerm<L>,
    ctx: &LatticeContext,
    leaf: &mut impl FnMut(&L) -> Result<Predicate, E>,
) -> Result<Predicate, E>
where
    E: From<LatticeError>,
{
    Ok(match term {
        LatticeTerm::Top => ctx.top(),
        LatticeTerm::Bot => ctx.bottom(),
        LatticeTerm::Leaf(l) => {
            let p = leaf(l)?;
            ctx.check(&p)?;
            p
        }
        LatticeTerm::And(ts) => {
            let mut acc = ctx.top();
            for t in ts {
                acc = acc.meet(&eval_lattice_term(t, ctx, leaf)?)?;
            }
            acc
        }
        LatticeTerm::Or(ts) => {
            let mut acc = ctx.bottom();
            for t in ts {
                acc = acc.join(&eval_lattice_term(t, ctx, leaf)?)?;
            }
            acc
        }
        LatticeTerm::Not(t) => {
            if ctx.kind == LatticeKind::Quantitative {
                return Err(LatticeError::NegationOnValues.into());
            }
            eval_lattice_term(t, ctx, leaf)?.complement()?
        }
        LatticeTerm::Sum(ts) => {
            if ctx.kind == LatticeKind::Set {
                return Err(LatticeError::SubconvexOnSet.into());
            }
            let mut terms = Vec::with_capacity(ts.len());
            for (c, t) in ts {
                terms.push((c.into_inner(), eval_lattice_term(t, ctx, leaf)?));
            }
            ctx.subconvex(&terms)?
        }
    })
}

/// A map from a fixed, ordered key list to predicates of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<K> {
    keys: Arc<[K]>,
    values: Vec<Predicate>,
}

impl<K> Table<K> {
    /// Panics if `keys` and `values` differ in length.
    pub fn new(keys: Arc<[K]>, values: Vec<Predicate>) -> Self {
        assert_eq!(keys.len(), values.len(), "table keys and values must align");
        Table { keys, values }
    }

    pub fn bottom(ctx: &LatticeContext, keys: Arc<[K]>) -> Self {
        let values = vec![ctx.bottom(); keys.len()];
        Table { keys, values }
    }

    pub fn top(ctx: &LatticeContext, keys: Arc<[K]>) -> Self {
        let values = vec![ctx.top(); keys.len()];
        Table { keys, values }
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn shared_keys(&self) -> Arc<[K]> {
        Arc::clone(&self.keys)
    }

    pub fn values(&self) -> &[Predicate] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Predicate> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn value(&self, index: usize) -> &Predicate {
        &self.values[index]
    }

    pub fn with_values(&self, values: Vec<Predicate>) -> Self {
        Table::new(Arc::clone(&self.keys), values)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Predicate)> {
        self.keys.iter().zip(&self.values)
    }

    /// Pointwise order; tables must share their key list.
    pub fn le(&self, other: &Table<K>) -> Result<bool, LatticeError> {
        for (a, b) in self.values.iter().zip(&other.values) {
            if !a.le(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn distance(&self, other: &Table<K>) -> Result<f64, LatticeError> {
        let mut d: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            d = d.max(a.distance(b)?);
        }
        Ok(d)
    }

    pub fn join(&self, other: &Table<K>) -> Result<Table<K>, LatticeError> {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.join(b))
            .collect::<Result<_, _>>()?;
        Ok(self.with_values(values))
    }

    pub fn meet(&self, other: &Table<K>) -> Result<Table<K>, LatticeError> {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.meet(b))
            .collect::<Result<_, _>>()?;
        Ok(self.with_values(values))
    }

    /// First `(key index, state)` where `self` is strictly above `other`.
    fn first_excess(&self, other: &Table<K>) -> Option<usize> {
        self.values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a.first_excess(b).is_some())
    }

    fn check(&self, ctx: &LatticeContext, expected_len: usize) -> Result<(), LatticeError> {
        if self.values.len() != expected_len {
            return Err(LatticeError::ShapeMismatch {
                expected: ctx.kind,
                expected_width: expected_len,
                found: ctx.kind,
                found_width: self.values.len(),
            });
        }
        self.values.iter().try_for_each(|p| ctx.check(p))
    }
}

impl<K: PartialEq> Table<K> {
    pub fn get(&self, key: &K) -> Option<&Predicate> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| &self.values[i])
    }
}

/// Outcome of a Kleene iteration.
#[derive(Debug, Clone)]
pub struct Fixpoint<K> {
    pub table: Table<K>,
    /// Number of operator applications, including the one that confirmed stability.
    pub iterations: usize,
    /// Sup-norm distance between the last two iterates (0 in the set case).
    pub residual: f64,
}

/// Iteration limits for [`lfp_approx`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Least fixpoint of a monotone operator on set-valued tables.
///
/// Iterates `⊥, op(⊥), op(op(⊥)), …` until two iterates agree. Fails if an
/// iterate drops below its predecessor or if more than `width·keys + 1`
/// applications are needed, both of which mean the operator is not monotone.
pub fn lfp_finite<K, E, F>(ctx: &LatticeContext, keys: Arc<[K]>, op: F) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    E: From<LatticeError>,
{
    lfp_finite_observed(ctx, keys, op, |_, _| {})
}

/// [`lfp_finite`] with a callback receiving every iterate, starting at ⊥ (step 0).
pub fn lfp_finite_observed<K, E, F, O>(
    ctx: &LatticeContext,
    keys: Arc<[K]>,
    op: F,
    observe: O,
) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    O: FnMut(usize, &Table<K>),
    E: From<LatticeError>,
{
    finite_chain(ctx, keys, op, observe, false)
}

/// Greatest fixpoint of a monotone operator on set-valued tables, by
/// descending iteration from ⊤ with the same bound as [`lfp_finite`].
pub fn gfp_finite<K, E, F>(ctx: &LatticeContext, keys: Arc<[K]>, op: F) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    E: From<LatticeError>,
{
    finite_chain(ctx, keys, op, |_, _| {}, true)
}

fn finite_chain<K, E, F, O>(
    ctx: &LatticeContext,
    keys: Arc<[K]>,
    mut op: F,
    mut observe: O,
    descending: bool,
) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    O: FnMut(usize, &Table<K>),
    E: From<LatticeError>,
{
    if ctx.kind != LatticeKind::Set {
        return Err(LatticeError::WrongEngine {
            engine: "finite",
            needs: LatticeKind::Set,
        }
        .into());
    }
    let expected = keys.len();
    let bound = ctx.width * expected + 1;
    let mut current = if descending {
        Table::top(ctx, keys)
    } else {
        Table::bottom(ctx, keys)
    };
    observe(0, &current);
    for iteration in 1..=bound {
        let next = op(&current)?;
        next.check(ctx, expected)?;
        let bad = if descending {
            next.first_excess(&current)
        } else {
            current.first_excess(&next)
        };
        if let Some(key) = bad {
            return Err(LatticeError::NotMonotone { key, iteration }.into());
        }
        observe(iteration, &next);
        if next.values() == current.values() {
            return Ok(Fixpoint {
                table: next,
                iterations: iteration,
                residual: 0.0,
            });
        }
        current = next;
    }
    Err(LatticeError::IterationBound { bound }.into())
}

/// Approximate least fixpoint of a monotone operator on `[0,1]`-valued tables.
///
/// Ascends from the all-zeros table and returns the first iterate whose
/// sup-norm distance to its predecessor is below `opts.tolerance`.
pub fn lfp_approx<K, E, F>(
    ctx: &LatticeContext,
    keys: Arc<[K]>,
    op: F,
    opts: ApproxOptions,
) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    E: From<LatticeError>,
{
    lfp_approx_observed(ctx, keys, op, opts, |_, _| {})
}

pub fn lfp_approx_observed<K, E, F, O>(
    ctx: &LatticeContext,
    keys: Arc<[K]>,
    mut op: F,
    opts: ApproxOptions,
    mut observe: O,
) -> Result<Fixpoint<K>, E>
where
    F: FnMut(&Table<K>) -> Result<Table<K>, E>,
    O: FnMut(usize, &Table<K>),
    E: From<LatticeError>,
{
    if ctx.kind != LatticeKind::Quantitative {
        return Err(LatticeError::WrongEngine {
            engine: "approximate",
            needs: LatticeKind::Quantitative,
        }
        .into());
    }
    if !(opts.tolerance > 0.0) {
        return Err(LatticeError::InvalidTolerance(opts.tolerance).into());
    }
    let expected = keys.len();
    let mut current = Table::bottom(ctx, keys);
    observe(0, &current);
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let next = op(&current)?;
        next.check(ctx, expected)?;
        if let Some(key) = current.first_excess(&next) {
            return Err(LatticeError::NotMonotone { key, iteration }.into());
        }
        residual = current.distance(&next)?;
        observe(iteration, &next);
        current = next;
        if residual < opts.tolerance {
            return Ok(Fixpoint {
                table: current,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(LatticeError::NotConverged {
        iterations: opts.max_iter,
        residual,
        last: current.into_values(),
    }
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize) -> Arc<[usize]> {
        (0..n).collect::<Vec<_>>().into()
    }

    #[test]
    fn join_of_singletons() {
        let a = Predicate::from_states(3, [0]);
        let b = Predicate::from_states(3, [1]);
        let term = LatticeTerm::Or(vec![LatticeTerm::Leaf("a"), LatticeTerm::Leaf("b")]);
        let out = eval_lattice_term(&term, &LatticeContext::set(3), &mut |l: &&str| {
            Ok::<_, LatticeError>(if *l == "a" { a.clone() } else { b.clone() })
        })
        .unwrap();
        assert_eq!(out, Predicate::from_states(3, [0, 1]));
    }

    #[test]
    fn subconvex_combination() {
        let a = Predicate::values(vec![1.0, 0.0]).unwrap();
        let b = Predicate::values(vec![0.8, 0.8]).unwrap();
        let term = LatticeTerm::Sum(vec![
            (0.5.into(), LatticeTerm::Leaf(0)),
            (0.25.into(), LatticeTerm::Leaf(1)),
        ]);
        let out = eval_lattice_term(&term, &LatticeContext::quantitative(2), &mut |l: &usize| {
            Ok::<_, LatticeError>(if *l == 0 { a.clone() } else { b.clone() })
        })
        .unwrap();
        let v = out.as_values().unwrap();
        assert!((v[0] - 0.7).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn complement_of_singleton() {
        let a = Predicate::from_states(3, [2]);
        let term = LatticeTerm::Not(Box::new(LatticeTerm::Leaf(())));
        let out = eval_lattice_term(&term, &LatticeContext::set(3), &mut |_: &()| {
            Ok::<_, LatticeError>(a.clone())
        })
        .unwrap();
        assert_eq!(out, Predicate::from_states(3, [0, 1]));
    }

    #[test]
    fn lattice_term_errors() {
        let ctx_q = LatticeContext::quantitative(2);
        let ctx_s = LatticeContext::set(2);
        let unbound = eval_lattice_term(&LatticeTerm::Leaf("z"), &ctx_s, &mut |l: &&str| {
            Err(LatticeError::UnboundLeaf(l.to_string()))
        });
        assert_eq!(unbound, Err(LatticeError::UnboundLeaf("z".into())));

        let zero = Predicate::zeros(2);
        let neg = LatticeTerm::Not(Box::new(LatticeTerm::Leaf(())));
        let err = eval_lattice_term(&neg, &ctx_q, &mut |_: &()| {
            Ok::<_, LatticeError>(zero.clone())
        });
        assert_eq!(err, Err(LatticeError::NegationOnValues));

        let sum = LatticeTerm::Sum(vec![(0.5.into(), LatticeTerm::Leaf(()))]);
        let empty = Predicate::empty(2);
        let err = eval_lattice_term(&sum, &ctx_s, &mut |_: &()| {
            Ok::<_, LatticeError>(empty.clone())
        });
        assert_eq!(err, Err(LatticeError::SubconvexOnSet));

        let heavy = LatticeTerm::Sum(vec![
            (0.75.into(), LatticeTerm::Leaf(())),
            (0.5.into(), LatticeTerm::Leaf(())),
        ]);
        let err = eval_lattice_term(&heavy, &ctx_q, &mut |_: &()| {
            Ok::<_, LatticeError>(zero.clone())
        });
        assert_eq!(err, Err(LatticeError::CoefficientSum(1.25)));
    }

    #[test]
    fn exact_unit_sum_is_accepted() {
        let ctx = LatticeContext::quantitative(1);
        let p = Predicate::ones(1);
        let out = ctx.subconvex(&[(0.3, p.clone()), (0.7, p)]).unwrap();
        assert!((out.at(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn values_out_of_range_rejected() {
        assert!(matches!(
            Predicate::values(vec![0.5, 1.5]),
            Err(LatticeError::OutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn identity_yields_bottom() {
        let ctx = LatticeContext::set(4);
        let fp = lfp_finite::<_, LatticeError, _>(&ctx, keys(2), |t| Ok(t.clone())).unwrap();
        assert_eq!(fp.table, Table::bottom(&ctx, keys(2)));
        assert_eq!(fp.iterations, 1);
    }

    #[test]
    fn constant_top_reached_after_one_step() {
        let ctx = LatticeContext::set(3);
        let mut seen = Vec::new();
        let fp = lfp_finite_observed::<_, LatticeError, _, _>(
            &ctx,
            keys(2),
            |t| Ok(Table::top(&ctx, t.shared_keys())),
            |i, t| seen.push((i, t.clone())),
        )
        .unwrap();
        assert_eq!(fp.table, Table::top(&ctx, keys(2)));
        assert_eq!(seen[1].1, Table::top(&ctx, keys(2)));
        assert_eq!(fp.iterations, 2);
    }

    #[test]
    fn decreasing_operator_is_flagged() {
        let ctx = LatticeContext::set(2);
        let mut calls = 0;
        let err = lfp_finite::<_, LatticeError, _>(&ctx, keys(1), |t| {
            calls += 1;
            if calls == 1 {
                Ok(Table::top(&ctx, t.shared_keys()))
            } else {
                Ok(Table::bottom(&ctx, t.shared_keys()))
            }
        })
        .unwrap_err();
        assert_eq!(
            err,
            LatticeError::NotMonotone {
                key: 0,
                iteration: 2
            }
        );
    }

    #[test]
    fn wrong_engine_rejected() {
        let ctx = LatticeContext::quantitative(1);
        let err = lfp_finite::<_, LatticeError, _>(&ctx, keys(1), |t| Ok(t.clone())).unwrap_err();
        assert!(matches!(err, LatticeError::WrongEngine { .. }));
    }

    #[test]
    fn constant_zero_converges_immediately() {
        let ctx = LatticeContext::quantitative(3);
        let fp = lfp_approx::<_, LatticeError, _>(
            &ctx,
            keys(1),
            |t| Ok(t.clone()),
            ApproxOptions::default(),
        )
        .unwrap();
        assert_eq!(fp.iterations, 1);
        assert_eq!(fp.table.value(0), &Predicate::zeros(3));
    }

    #[test]
    fn approx_reports_last_iterate_on_timeout() {
        let ctx = LatticeContext::quantitative(1);
        // v ↦ 0.5 + 0.5 v converges geometrically; three steps are not enough
        let opts = ApproxOptions {
            tolerance: 1e-12,
            max_iter: 3,
        };
        let err = lfp_approx::<_, LatticeError, _>(
            &ctx,
            keys(1),
            |t| {
                let v = t.value(0).at(0);
                Ok(t.with_values(vec![Predicate::Value(vec![0.5 + 0.5 * v])]))
            },
            opts,
        )
        .unwrap_err();
        match err {
            LatticeError::NotConverged {
                iterations,
                residual,
                last,
            } => {
                assert_eq!(iterations, 3);
                assert!((residual - 0.125).abs() < 1e-15);
                assert!((last[0].at(0) - 0.875).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pull_back_is_preimage() {
        let p = Predicate::from_states(2, [1]);
        assert_eq!(p.pull_back(&[0, 1, 1]), Predicate::from_states(3, [1, 2]));
    }
}
