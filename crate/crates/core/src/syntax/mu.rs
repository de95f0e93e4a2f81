//! Plain modal mu-calculus formulas, the input of the scheme translation and
//! of the nested-iteration oracle.

use std::collections::BTreeSet;
use std::fmt;

use super::Modality;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MuFormula {
    Top,
    Bot,
    Atom(String),
    Var(String),
    Not(Box<MuFormula>),
    And(Box<MuFormula>, Box<MuFormula>),
    Or(Box<MuFormula>, Box<MuFormula>),
    Modal(Modality, Box<MuFormula>),
    Mu(String, Box<MuFormula>),
    Nu(String, Box<MuFormula>),
}

impl MuFormula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            MuFormula::Top | MuFormula::Bot | MuFormula::Atom(_) => {}
            MuFormula::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            MuFormula::Not(f) | MuFormula::Modal(_, f) => f.collect_free(bound, out),
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            MuFormula::Mu(v, f) | MuFormula::Nu(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let MuFormula::Atom(a) = f {
                out.insert(a.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk(&self, visit: &mut impl FnMut(&MuFormula)) {
        visit(self);
        match self {
            MuFormula::Top | MuFormula::Bot | MuFormula::Atom(_) | MuFormula::Var(_) => {}
            MuFormula::Not(f)
            | MuFormula::Modal(_, f)
            | MuFormula::Mu(_, f)
            | MuFormula::Nu(_, f) => f.walk(visit),
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }

    /// Capture-naive substitution of `value` for free occurrences of `var`.
    ///
    /// Callers only substitute closed-over-outer-variables formulas whose
    /// binders use distinct names, so capture cannot occur.
    pub fn substitute(&self, var: &str, value: &MuFormula) -> MuFormula {
        match self {
            MuFormula::Var(v) if v == var => value.clone(),
            MuFormula::Top | MuFormula::Bot | MuFormula::Atom(_) | MuFormula::Var(_) => {
                self.clone()
            }
            MuFormula::Not(f) => MuFormula::Not(Box::new(f.substitute(var, value))),
            MuFormula::Modal(m, f) => {
                MuFormula::Modal(m.clone(), Box::new(f.substitute(var, value)))
            }
            MuFormula::And(a, b) => MuFormula::And(
                Box::new(a.substitute(var, value)),
                Box::new(b.substitute(var, value)),
            ),
            MuFormula::Or(a, b) => MuFormula::Or(
                Box::new(a.substitute(var, value)),
                Box::new(b.substitute(var, value)),
            ),
            MuFormula::Mu(v, f) | MuFormula::Nu(v, f) if v == var => self.clone(),
            MuFormula::Mu(v, f) => MuFormula::Mu(v.clone(), Box::new(f.substitute(var, value))),
            MuFormula::Nu(v, f) => MuFormula::Nu(v.clone(), Box::new(f.substitute(var, value))),
        }
    }
}

fn prec(f: &MuFormula) -> u8 {
    match f {
        MuFormula::Mu(..) | MuFormula::Nu(..) => 0,
        MuFormula::Or(..) => 1,
        MuFormula::And(..) => 2,
        MuFormula::Not(_) | MuFormula::Modal(..) => 3,
        _ => 4,
    }
}

fn write_mu(f: &mut fmt::Formatter<'_>, x: &MuFormula, min: u8) -> fmt::Result {
    let paren = prec(x) < min;
    if paren {
        f.write_str("(")?;
    }
    match x {
        MuFormula::Top => f.write_str("T")?,
        MuFormula::Bot => f.write_str("F")?,
        MuFormula::Atom(a) | MuFormula::Var(a) => f.write_str(a)?,
        MuFormula::Not(g) => {
            f.write_str("~")?;
            write_mu(f, g, 3)?;
        }
        MuFormula::Modal(m, g) => {
            write!(f, "{m} ")?;
            write_mu(f, g, 3)?;
        }
        MuFormula::And(a, b) => {
            write_mu(f, a, 2)?;
            f.write_str(" /\\ ")?;
            write_mu(f, b, 3)?;
        }
        MuFormula::Or(a, b) => {
            write_mu(f, a, 1)?;
            f.write_str(" \\/ ")?;
            write_mu(f, b, 2)?;
        }
        MuFormula::Mu(v, g) | MuFormula::Nu(v, g) => {
            let kw = if matches!(x, MuFormula::Mu(..)) {
                "mu"
            } else {
                "nu"
            };
            write!(f, "{kw} {v}. ")?;
            write_mu(f, g, 0)?;
        }
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_mu(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_mu;

    #[test]
    fn print_round_trip() {
        for text in [
            "mu X. p \\/ dia X",
            "mu X. p /\\ (mu Y. q /\\ dia Y \\/ r /\\ box X)",
            "nu X. dia X",
            "(mu X. dia X) /\\ ~p",
        ] {
            let f = parse_mu(text).unwrap();
            assert_eq!(parse_mu(&f.to_string()).unwrap(), f, "{text}");
        }
    }

    #[test]
    fn free_variables() {
        let f = parse_mu("mu Y. q /\\ dia Y \\/ box X").unwrap();
        assert_eq!(f.free_vars(), BTreeSet::from(["X".to_string()]));
    }
}
