//! Model checking for alternation-free coalgebraic fixpoint logics.
//!
//! Formulas are evaluated on finite Kripke, labeled-transition and
//! probabilistic models, either through a single least fixpoint over the
//! closure of unfoldings ([`semantics::eval_least`]) or by a structural fold
//! that solves each fixpoint in place ([`semantics::eval_initial`]).
//! Independent brute-force [`oracles`] cross-check both.

pub mod gen;
pub mod lattice;
pub mod models;
pub mod oracles;
pub mod programs;
pub mod schemes;
pub mod semantics;
pub mod syntax;
