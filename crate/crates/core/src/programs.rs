//! Test-free PDL programs: canonical forms, Brzozowski derivatives and the
//! one-step normal form `Σ πᵢ;αᵢ (+ eps)`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

/// A regular program over atomic actions.
///
/// `Empty` denotes the empty relation; it never comes out of the parser and
/// only shows up in derivatives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Atomic(String),
    Eps,
    Empty,
    Union(Vec<Program>),
    Seq(Vec<Program>),
    Star(Box<Program>),
}

impl Program {
    pub fn atomic(name: impl Into<String>) -> Self {
        Program::Atomic(name.into())
    }

    pub fn star(p: Program) -> Self {
        Program::Star(Box::new(p))
    }

    /// Number of operator nodes (union/seq count once per binary step, star once).
    pub fn operator_count(&self) -> usize {
        match self {
            Program::Atomic(_) | Program::Eps | Program::Empty => 0,
            Program::Union(xs) | Program::Seq(xs) => {
                xs.len().saturating_sub(1) + xs.iter().map(Program::operator_count).sum::<usize>()
            }
            Program::Star(x) => 1 + x.operator_count(),
        }
    }

    /// Atomic actions occurring in the program, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Program::Atomic(a) => {
                out.insert(a.clone());
            }
            Program::Eps | Program::Empty => {}
            Program::Union(xs) | Program::Seq(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            Program::Star(x) => x.collect_atoms(out),
        }
    }

    pub fn contains_empty(&self) -> bool {
        match self {
            Program::Empty => true,
            Program::Atomic(_) | Program::Eps => false,
            Program::Union(xs) | Program::Seq(xs) => xs.iter().any(Program::contains_empty),
            Program::Star(x) => x.contains_empty(),
        }
    }
}

fn mk_union(items: Vec<Program>) -> Program {
    let mut flat = Vec::with_capacity(items.len());
    for p in items {
        match p {
            Program::Union(xs) => flat.extend(xs),
            Program::Empty => {}
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();
    match flat.len() {
        0 => Program::Empty,
        1 => flat.pop().expect("one element"),
        _ => Program::Union(flat),
    }
}

fn mk_seq(items: Vec<Program>) -> Program {
    let mut flat = Vec::with_capacity(items.len());
    for p in items {
        match p {
            Program::Seq(xs) => flat.extend(xs),
            Program::Eps => {}
            Program::Empty => return Program::Empty,
            other => flat.push(other),
        }
    }
    match flat.len() {
        0 => Program::Eps,
        1 => flat.pop().expect("one element"),
        _ => Program::Seq(flat),
    }
}

fn mk_star(p: Program) -> Program {
    match p {
        Program::Empty | Program::Eps => Program::Eps,
        Program::Star(_) => p,
        Program::Union(xs) if xs.contains(&Program::Eps) => mk_star(mk_union(
            xs.into_iter().filter(|x| *x != Program::Eps).collect(),
        )),
        other => Program::Star(Box::new(other)),
    }
}

/// Normalizes modulo associativity, commutativity and idempotence of `+`,
/// associativity of `;`, the unit and annihilator laws, and `0* = eps* = eps`,
/// `(α*)* = α*`, `(α + eps)* = α*`.
pub fn canonicalize(p: &Program) -> Program {
    match p {
        Program::Atomic(_) | Program::Eps | Program::Empty => p.clone(),
        Program::Union(xs) => mk_union(xs.iter().map(canonicalize).collect()),
        Program::Seq(xs) => mk_seq(xs.iter().map(canonicalize).collect()),
        Program::Star(x) => mk_star(canonicalize(x)),
    }
}

/// Whether the empty word belongs to the program's language.
pub fn nullable(p: &Program) -> bool {
    match p {
        Program::Atomic(_) | Program::Empty => false,
        Program::Eps | Program::Star(_) => true,
        Program::Union(xs) => xs.iter().any(nullable),
        Program::Seq(xs) => xs.iter().all(nullable),
    }
}

fn raw_derivative(action: &str, p: &Program) -> Program {
    match p {
        Program::Atomic(a) => {
            if a == action {
                Program::Eps
            } else {
                Program::Empty
            }
        }
        Program::Eps | Program::Empty => Program::Empty,
        Program::Union(xs) => mk_union(xs.iter().map(|x| raw_derivative(action, x)).collect()),
        Program::Seq(xs) => {
            let Some((head, rest)) = xs.split_first() else {
                return Program::Empty;
            };
            let rest_prog = mk_seq(rest.to_vec());
            let mut first = vec![raw_derivative(action, head)];
            first.extend(rest.iter().cloned());
            let through = mk_seq(first);
            if nullable(head) {
                mk_union(vec![through, raw_derivative(action, &rest_prog)])
            } else {
                through
            }
        }
        Program::Star(x) => mk_seq(vec![raw_derivative(action, x), p.clone()]),
    }
}

/// Brzozowski derivative `d_π(α)`, canonicalized.
pub fn derivative(action: &str, p: &Program) -> Program {
    canonicalize(&raw_derivative(action, &canonicalize(p)))
}

/// `g(α) = Σ πᵢ;αᵢ`, plus `eps` when `α` is nullable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalForm {
    pub summands: Vec<(String, Program)>,
    pub eps: bool,
}

impl NormalForm {
    /// The normal form read back as a program.
    pub fn to_program(&self) -> Program {
        let mut parts: Vec<Program> = self
            .summands
            .iter()
            .map(|(a, tail)| mk_seq(vec![Program::Atomic(a.clone()), tail.clone()]))
            .collect();
        if self.eps {
            parts.push(Program::Eps);
        }
        mk_union(parts)
    }
}

pub fn normal_form(p: &Program) -> NormalForm {
    let summands = p
        .atoms()
        .into_iter()
        .filter_map(|a| {
            let d = derivative(&a, p);
            (d != Program::Empty).then_some((a, d))
        })
        .collect();
    NormalForm {
        summands,
        eps: nullable(p),
    }
}

/// All programs reachable from `p` by repeated derivatives, `p` first.
///
/// Returns `None` if more than `cap` distinct programs appear.
pub fn derivative_closure(p: &Program, cap: usize) -> Option<Vec<Program>> {
    let start = canonicalize(p);
    let atoms = start.atoms();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        for a in &atoms {
            let d = derivative(a, &q);
            if seen.insert(d.clone()) {
                if seen.len() > cap {
                    return None;
                }
                order.push(d.clone());
                queue.push_back(d);
            }
        }
    }
    Some(order)
}

fn write_prog(f: &mut fmt::Formatter<'_>, p: &Program, ctx: u8) -> fmt::Result {
    // ctx: 0 top/union member, 1 seq member, 2 star operand
    match p {
        Program::Atomic(a) => f.write_str(a),
        Program::Eps => f.write_str("eps"),
        Program::Empty => f.write_str("0"),
        Program::Union(xs) => {
            if xs.is_empty() {
                return f.write_str("0");
            }
            let paren = ctx > 0;
            if paren {
                f.write_str("(")?;
            }
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                let nested = matches!(x, Program::Union(_));
                if nested {
                    f.write_str("(")?;
                }
                write_prog(f, x, 0)?;
                if nested {
                    f.write_str(")")?;
                }
            }
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Program::Seq(xs) => {
            if xs.is_empty() {
                return f.write_str("eps");
            }
            let paren = ctx > 1;
            if paren {
                f.write_str("(")?;
            }
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                if matches!(x, Program::Seq(_)) {
                    f.write_str("(")?;
                    write_prog(f, x, 0)?;
                    f.write_str(")")?;
                } else {
                    write_prog(f, x, 1)?;
                }
            }
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Program::Star(x) => {
            write_prog(f, x, 2)?;
            f.write_str("*")
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prog(f, self, 0)
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            return f.write_str(if self.eps { "eps" } else { "0" });
        }
        for (i, (a, tail)) in self.summands.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match tail {
                Program::Eps => write!(f, "{a}")?,
                Program::Union(_) | Program::Seq(_) => write!(f, "{a};({tail})")?,
                _ => write!(f, "{a};{tail}")?,
            }
        }
        if self.eps {
            f.write_str(" + eps")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Program {
        Program::atomic("a")
    }
    fn b() -> Program {
        Program::atomic("b")
    }

    #[test]
    fn canonical_laws() {
        assert_eq!(canonicalize(&Program::Union(vec![a(), a()])), a());
        assert_eq!(
            canonicalize(&Program::Union(vec![Program::Union(vec![a(), b()]), a()])),
            Program::Union(vec![a(), b()])
        );
        assert_eq!(
            canonicalize(&Program::Union(vec![b(), a()])),
            Program::Union(vec![a(), b()])
        );
        assert_eq!(canonicalize(&Program::Seq(vec![Program::Eps, a()])), a());
        assert_eq!(
            canonicalize(&Program::Seq(vec![a(), Program::Empty])),
            Program::Empty
        );
        assert_eq!(canonicalize(&Program::star(Program::Empty)), Program::Eps);
        assert_eq!(
            canonicalize(&Program::star(Program::star(a()))),
            Program::star(a())
        );
    }

    #[test]
    fn nullability() {
        assert!(nullable(&Program::Eps));
        assert!(!nullable(&a()));
        assert!(nullable(&Program::star(Program::Seq(vec![
            a(),
            Program::star(b())
        ]))));
    }

    #[test]
    fn derivatives() {
        assert_eq!(derivative("a", &Program::Seq(vec![a(), b()])), b());
        assert_eq!(derivative("a", &Program::star(a())), Program::star(a()));
        assert_eq!(derivative("b", &a()), Program::Empty);
    }

    #[test]
    fn normal_forms() {
        let g = normal_form(&Program::star(a()));
        assert_eq!(g.summands, vec![("a".to_string(), Program::star(a()))]);
        assert!(g.eps);
        assert_eq!(g.to_string(), "a;a* + eps");

        let g = normal_form(&Program::Union(vec![a(), b()]));
        assert_eq!(
            g.summands,
            vec![
                ("a".to_string(), Program::Eps),
                ("b".to_string(), Program::Eps)
            ]
        );
        assert!(!g.eps);

        let g = normal_form(&Program::Eps);
        assert!(g.summands.is_empty() && g.eps);
        assert_eq!(g.to_string(), "eps");

        let ab_star = Program::star(Program::Seq(vec![a(), b()]));
        assert_eq!(normal_form(&ab_star).to_string(), "a;(b;(a;b)*) + eps");
    }

    #[test]
    fn closure_of_ab_star() {
        let ab_star = Program::star(Program::Seq(vec![a(), b()]));
        let closure = derivative_closure(&ab_star, 100).unwrap();
        assert_eq!(closure.len(), 3);
        assert!(closure.contains(&Program::Empty));
    }

    #[test]
    fn printing_keeps_structure() {
        let p = Program::Seq(vec![a(), Program::Seq(vec![b(), a()])]);
        assert_eq!(p.to_string(), "a;(b;a)");
        let p = Program::star(Program::Union(vec![a(), b()]));
        assert_eq!(p.to_string(), "(a + b)*");
        let p = Program::Seq(vec![Program::Union(vec![a(), b()]), a()]);
        assert_eq!(p.to_string(), "(a + b);a");
    }
}
