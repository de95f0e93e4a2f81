use std::fmt;

use serde::Serialize;

use super::{FixHead, Formula, InstanceId, LogicInstance, Modality, Polarity};
use crate::lattice::COEFFICIENT_SLACK;
use crate::schemes::{check_guarded, Scheme, SchemeBody};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    IllegalConnective,
    UnknownProp,
    UnknownLabel,
    NegationInScheme,
    UnguardedScheme,
    ArityMismatch,
    UnboundParameter,
    CoefficientRange,
    CoefficientSum,
    EmptyProgram,
    MissingDual,
}

/// A validation finding, located by child indices from the root.
///
/// Children are numbered as in [`Formula::children`]; for a scheme
/// application the body is child `args.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: Vec<usize>,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
        write!(f, "[{}] {}", path.join("."), self.message)
    }
}

struct Validator<'a> {
    instance: &'a LogicInstance,
    out: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn report(&mut self, path: &[usize], kind: DiagnosticKind, message: String) {
        self.out.push(Diagnostic {
            path: path.to_vec(),
            kind,
            message,
        });
    }

    fn illegal(&mut self, path: &[usize], what: &str) {
        let id = self.instance.id;
        self.report(
            path,
            DiagnosticKind::IllegalConnective,
            format!("{what} is not part of the {id} logic"),
        );
    }

    fn check_label(&mut self, path: &[usize], label: &str) {
        if let Some(labels) = &self.instance.labels {
            if !labels.contains(label) {
                self.report(
                    path,
                    DiagnosticKind::UnknownLabel,
                    format!("unknown label `{label}`"),
                );
            }
        }
    }

    fn check_modality(&mut self, path: &[usize], m: &Modality, arity: usize) {
        if !self.instance.allows_modality(m) {
            self.illegal(path, &format!("modality `{m}`"));
        }
        if let Modality::DiaLabel(a) | Modality::BoxLabel(a) = m {
            self.check_label(path, a);
        }
        if arity != m.arity() {
            self.report(
                path,
                DiagnosticKind::ArityMismatch,
                format!("`{m}` takes {} argument(s), got {arity}", m.arity()),
            );
        }
    }

    fn formula(&mut self, f: &Formula, path: &mut Vec<usize>) {
        let id = self.instance.id;
        match f {
            Formula::Top | Formula::Bot => {}
            Formula::Atom(a) => {
                if let Some(props) = &self.instance.props {
                    if !a.starts_with('#') && !props.contains(a) {
                        self.report(
                            path,
                            DiagnosticKind::UnknownProp,
                            format!("unknown proposition `{a}`"),
                        );
                    }
                }
            }
            Formula::Not(_) => {
                if !id.is_set_based() {
                    self.illegal(path, "negation");
                }
            }
            Formula::And(..) | Formula::Or(..) => {}
            Formula::Sum(ts) => {
                if id != InstanceId::Quant {
                    self.illegal(path, "a subconvex sum");
                }
                let mut total = 0.0;
                for (c, _) in ts {
                    let c = c.into_inner();
                    if !(0.0..=1.0).contains(&c) {
                        self.report(
                            path,
                            DiagnosticKind::CoefficientRange,
                            format!("coefficient {c} outside [0,1]"),
                        );
                    }
                    total += c;
                }
                if total > 1.0 + COEFFICIENT_SLACK {
                    self.report(
                        path,
                        DiagnosticKind::CoefficientSum,
                        format!("coefficients sum to {total} > 1"),
                    );
                }
            }
            Formula::Modal(m, args) => self.check_modality(path, m, args.len()),
            Formula::Fix(head, args) => match head {
                FixHead::DiamondStar => {
                    if !matches!(id, InstanceId::DiamondStar | InstanceId::Quant) {
                        self.illegal(path, "`dia*`");
                    }
                    self.arity(path, "dia*", 1, args.len());
                }
                FixHead::Program(p) => {
                    if id != InstanceId::Pdl {
                        self.illegal(path, "a program modality");
                    }
                    if p.contains_empty() {
                        self.report(
                            path,
                            DiagnosticKind::EmptyProgram,
                            "programs may not contain the empty program".into(),
                        );
                    }
                    for a in p.atoms() {
                        self.check_label(path, &a);
                    }
                    self.arity(path, "<α>", 1, args.len());
                }
                FixHead::Sigma(q) => {
                    if id != InstanceId::Quant {
                        self.illegal(path, "`sigma`");
                    }
                    let q = q.into_inner();
                    if !(0.0..=1.0).contains(&q) {
                        self.report(
                            path,
                            DiagnosticKind::CoefficientRange,
                            format!("sigma parameter {q} outside [0,1]"),
                        );
                    }
                    self.arity(path, "sigma", 1, args.len());
                }
                FixHead::Scheme(pol, s) => {
                    if id != InstanceId::Cfl {
                        self.illegal(path, "a fixpoint scheme");
                    }
                    self.arity(path, "scheme", s.params.len(), args.len());
                    path.push(args.len());
                    self.scheme(s, *pol, path, true);
                    path.pop();
                }
            },
        }
        for (i, c) in f.children().into_iter().enumerate() {
            path.push(i);
            self.formula(c, path);
            path.pop();
        }
    }

    fn arity(&mut self, path: &[usize], what: &str, expected: usize, found: usize) {
        if expected != found {
            self.report(
                path,
                DiagnosticKind::ArityMismatch,
                format!("{what} expects {expected} argument(s), got {found}"),
            );
        }
    }

    /// Checks a scheme; `path` points at its body. Guardedness is checked
    /// once per outermost scheme since it already covers nested ones.
    fn scheme(&mut self, s: &Scheme, pol: Polarity, path: &mut Vec<usize>, outermost: bool) {
        if outermost {
            if let Err(bad) = check_guarded(s) {
                let mut full = path.clone();
                full.extend(bad);
                self.report(
                    &full,
                    DiagnosticKind::UnguardedScheme,
                    "the fixpoint variable or a nested scheme occurs outside every modality".into(),
                );
            }
        }
        self.body(&s.body, s, pol, path);
    }

    fn body(&mut self, b: &SchemeBody, s: &Scheme, pol: Polarity, path: &mut Vec<usize>) {
        match b {
            SchemeBody::Param(v) => {
                if !s.params.contains(v) {
                    self.report(
                        path,
                        DiagnosticKind::UnboundParameter,
                        format!("parameter `{v}` is not declared"),
                    );
                }
            }
            SchemeBody::FixVar | SchemeBody::Top | SchemeBody::Bot => {}
            SchemeBody::Closed(f) => {
                if f.contains_negation() {
                    self.report(
                        path,
                        DiagnosticKind::NegationInScheme,
                        "negation inside a fixpoint scheme".into(),
                    );
                }
                self.formula(f, path);
            }
            SchemeBody::And(x, y) | SchemeBody::Or(x, y) => {
                for (i, c) in [x, y].into_iter().enumerate() {
                    path.push(i);
                    self.body(c, s, pol, path);
                    path.pop();
                }
            }
            SchemeBody::Modal(m, args) => {
                self.check_modality(path, m, args.len());
                if pol == Polarity::Flat && self.instance.dual_of(m).is_none() {
                    self.report(
                        path,
                        DiagnosticKind::MissingDual,
                        format!("`{m}` has no declared dual"),
                    );
                }
                for (i, c) in args.iter().enumerate() {
                    path.push(i);
                    self.body(c, s, pol, path);
                    path.pop();
                }
            }
            SchemeBody::Apply {
                polarity,
                scheme,
                args,
            } => {
                self.arity(path, "scheme", scheme.params.len(), args.len());
                for (i, c) in args.iter().enumerate() {
                    path.push(i);
                    self.body(c, s, pol, path);
                    path.pop();
                }
                path.push(args.len());
                self.scheme(scheme, *polarity, path, false);
                path.pop();
            }
        }
    }
}

/// All violations of the instance's grammar; empty means valid.
pub fn validate(f: &Formula, instance: &LogicInstance) -> Vec<Diagnostic> {
    let mut v = Validator {
        instance,
        out: Vec::new(),
    };
    v.formula(f, &mut Vec::new());
    v.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula_unchecked;

    fn diags(text: &str, id: InstanceId) -> Vec<Diagnostic> {
        validate(
            &parse_formula_unchecked(text).unwrap(),
            &LogicInstance::new(id),
        )
    }

    #[test]
    fn negated_reachability_is_fine() {
        assert!(diags("~dia* p", InstanceId::DiamondStar).is_empty());
    }

    #[test]
    fn negation_inside_scheme_flagged() {
        use crate::schemes::{Scheme, SchemeBody};
        let s = Scheme {
            params: vec![],
            body: SchemeBody::Or(
                Box::new(SchemeBody::Closed(Formula::not(Formula::atom("p")))),
                Box::new(SchemeBody::Modal(Modality::Dia, vec![SchemeBody::FixVar])),
            ),
        };
        let d = validate(
            &Formula::sharp(s, vec![]),
            &LogicInstance::new(InstanceId::Cfl),
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::NegationInScheme);
        assert_eq!(d[0].path, vec![0, 0]);
    }

    #[test]
    fn unguarded_scheme_flagged() {
        let d = diags("lfp{X \\/ p}()", InstanceId::Cfl);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UnguardedScheme);
        assert_eq!(d[0].path, vec![0, 0]);
    }

    #[test]
    fn instance_legality() {
        assert!(!diags("0.5*p", InstanceId::DiamondStar).is_empty());
        assert!(!diags("~p", InstanceId::Quant).is_empty());
        assert!(!diags("box p", InstanceId::Quant).is_empty());
        assert!(!diags("dia p", InstanceId::Pdl).is_empty());
        assert!(diags("0.5*p + 0.5*dia p", InstanceId::Quant).is_empty());
        assert!(!diags("0.75*p + 0.5*q", InstanceId::Quant).is_empty());
        assert!(!diags("sigma[1.5] p", InstanceId::Quant).is_empty());
        assert!(diags("<a;b*>p", InstanceId::Pdl).is_empty());
    }
}
