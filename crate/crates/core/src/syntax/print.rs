//! Minimal-parenthesis printer; output re-parses to the same tree.

use std::fmt::{self, Write};

use super::{FixHead, Formula, Polarity};
use crate::schemes::{Scheme, SchemeBody};

const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;
const PRIMARY: u8 = 4;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Sum(_) => 0,
        Formula::Or(..) => OR,
        Formula::And(..) => AND,
        Formula::Not(_) | Formula::Modal(..) => UNARY,
        Formula::Fix(FixHead::Scheme(..), _) => PRIMARY,
        Formula::Fix(..) => UNARY,
        Formula::Top | Formula::Bot | Formula::Atom(_) => PRIMARY,
    }
}

pub(crate) fn write_formula(out: &mut impl Write, f: &Formula) -> fmt::Result {
    write_prec(out, f, 0)
}

fn write_modal_args<W: Write, T>(
    out: &mut W,
    args: &[T],
    mut item: impl FnMut(&mut W, &T, u8) -> fmt::Result,
) -> fmt::Result {
    if args.len() == 1 {
        out.write_char(' ')?;
        item(out, &args[0], UNARY)
    } else {
        out.write_char('(')?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.write_str(", ")?;
            }
            item(out, a, 0)?;
        }
        out.write_char(')')
    }
}

fn write_prec(out: &mut impl Write, f: &Formula, min: u8) -> fmt::Result {
    let paren = formula_prec(f) < min;
    if paren {
        out.write_char('(')?;
    }
    match f {
        Formula::Top => out.write_char('T')?,
        Formula::Bot => out.write_char('F')?,
        Formula::Atom(a) => out.write_str(a)?,
        Formula::Not(g) => {
            out.write_char('~')?;
            write_prec(out, g, UNARY)?;
        }
        Formula::And(a, b) => {
            write_prec(out, a, AND)?;
            out.write_str(" /\\ ")?;
            write_prec(out, b, UNARY)?;
        }
        Formula::Or(a, b) => {
            write_prec(out, a, OR)?;
            out.write_str(" \\/ ")?;
            write_prec(out, b, AND)?;
        }
        Formula::Sum(ts) => {
            for (i, (c, g)) in ts.iter().enumerate() {
                if i > 0 {
                    out.write_str(" + ")?;
                }
                write!(out, "{}*", c.into_inner())?;
                write_prec(out, g, UNARY)?;
            }
        }
        Formula::Modal(m, args) => {
            write!(out, "{m}")?;
            write_modal_args(out, args, |o, a, p| write_prec(o, a, p))?;
        }
        Formula::Fix(head, args) => match head {
            FixHead::DiamondStar => {
                out.write_str("dia*")?;
                write_modal_args(out, args, |o, a, p| write_prec(o, a, p))?;
            }
            FixHead::Sigma(q) => {
                write!(out, "sigma[{}]", q.into_inner())?;
                write_modal_args(out, args, |o, a, p| write_prec(o, a, p))?;
            }
            FixHead::Program(p) => {
                write!(out, "<{p}>")?;
                if args.len() == 1 {
                    write_prec(out, &args[0], UNARY)?;
                } else {
                    write_modal_args(out, args, |o, a, p| write_prec(o, a, p))?;
                }
            }
            FixHead::Scheme(pol, scheme) => {
                write_scheme_head(out, *pol, scheme)?;
                write_args(out, &scheme.params, args, |o, a| write_prec(o, a, 0))?;
            }
        },
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

fn write_scheme_head(out: &mut impl Write, pol: Polarity, scheme: &Scheme) -> fmt::Result {
    write!(out, "{}{{", pol.keyword())?;
    write_body(out, &scheme.body, 0)?;
    out.write_char('}')
}

fn write_args<W: Write, T>(
    out: &mut W,
    params: &[String],
    args: &[T],
    mut item: impl FnMut(&mut W, &T) -> fmt::Result,
) -> fmt::Result {
    out.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        item(out, a)?;
        out.write_char('/')?;
        out.write_str(params.get(i).map(String::as_str).unwrap_or("?"))?;
    }
    out.write_char(')')
}

fn body_prec(b: &SchemeBody) -> u8 {
    match b {
        SchemeBody::Or(..) => OR,
        SchemeBody::And(..) => AND,
        SchemeBody::Modal(..) => UNARY,
        SchemeBody::Closed(f) => formula_prec(f),
        _ => PRIMARY,
    }
}

pub(crate) fn write_body(out: &mut impl Write, b: &SchemeBody, min: u8) -> fmt::Result {
    if let SchemeBody::Closed(f) = b {
        return write_prec(out, f, min);
    }
    let paren = body_prec(b) < min;
    if paren {
        out.write_char('(')?;
    }
    match b {
        SchemeBody::Param(v) => out.write_str(v)?,
        SchemeBody::FixVar => out.write_char('X')?,
        SchemeBody::Top => out.write_char('T')?,
        SchemeBody::Bot => out.write_char('F')?,
        SchemeBody::Closed(_) => unreachable!(),
        SchemeBody::And(x, y) => {
            write_body(out, x, AND)?;
            out.write_str(" /\\ ")?;
            write_body(out, y, UNARY)?;
        }
        SchemeBody::Or(x, y) => {
            write_body(out, x, OR)?;
            out.write_str(" \\/ ")?;
            write_body(out, y, AND)?;
        }
        SchemeBody::Modal(m, args) => {
            write!(out, "{m}")?;
            write_modal_args(out, args, |o, a, p| write_body(o, a, p))?;
        }
        SchemeBody::Apply {
            polarity,
            scheme,
            args,
        } => {
            write_scheme_head(out, *polarity, scheme)?;
            write_args(out, &scheme.params, args, |o, a| write_body(o, a, 0))?;
        }
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for SchemeBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_body(f, self, 0)
    }
}

impl fmt::Display for Scheme {
    /// `(v1, v2; X) := body`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; X) := ", self.params.join(", "))?;
        write_body(f, &self.body, 0)
    }
}

#[cfg(test)]
mod tests {
    use crate::syntax::parse_formula_unchecked;

    fn round(text: &str) -> String {
        parse_formula_unchecked(text).unwrap().to_string()
    }

    #[test]
    fn canonical_texts() {
        assert_eq!(round("dia* p"), "dia* p");
        assert_eq!(round("sigma[0.5] p"), "sigma[0.5] p");
        assert_eq!(round("<a;b*>p"), "<a;b*>p");
        assert_eq!(round("(p /\\ q) \\/ r"), "p /\\ q \\/ r");
        assert_eq!(round("p /\\ (q \\/ r)"), "p /\\ (q \\/ r)");
        assert_eq!(round("p /\\ (q /\\ r)"), "p /\\ (q /\\ r)");
        assert_eq!(round("~(p \\/ q)"), "~(p \\/ q)");
        assert_eq!(round("dia (0.5*p + 0.5*q)"), "dia (0.5*p + 0.5*q)");
        assert_eq!(round("lfp{v \\/ dia X}(p/v)"), "lfp{v \\/ dia X}(p/v)");
    }

    #[test]
    fn nested_scheme_round_trip() {
        let text = "lfp{p /\\ (q /\\ dia lfp{q /\\ dia X \\/ r /\\ box v}(X/v) \\/ r /\\ box X)}()";
        let f = parse_formula_unchecked(text).unwrap();
        assert_eq!(parse_formula_unchecked(&f.to_string()).unwrap(), f);
    }
}
