use std::collections::BTreeSet;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use thiserror::Error;

use super::lexer::{tokenize, ParseError, Span, Tok, Token};
use super::mu::MuFormula;
use super::validate::{validate, Diagnostic};
use super::{FixHead, Formula, LogicInstance, Modality, Polarity};
use crate::programs::Program;
use crate::schemes::{Scheme, SchemeBody};

/// Name of the fixpoint variable inside scheme bodies.
pub const FIX_VAR: &str = "X";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error {0}")]
    Parse(#[from] ParseError),
    #[error("invalid formula: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Surface syntax before scoping: variables, scheme parameters and atoms are
/// told apart only once the whole expression is known.
#[derive(Debug, Clone)]
enum Expr {
    Top,
    Bot,
    Ident(String, Span),
    Var(String, Span),
    Not(Box<Expr>, Span),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Sum(Vec<(f64, Expr)>, Span),
    Modal(Modality, Box<Expr>),
    DiaStar(Box<Expr>, Span),
    Sigma(f64, Box<Expr>, Span),
    Prog(Program, Box<Expr>, Span),
    Scheme {
        polarity: Polarity,
        body: Box<Expr>,
        args: Vec<(Expr, String, Span)>,
        span: Span,
    },
    Binder {
        greatest: bool,
        var: String,
        body: Box<Expr>,
        span: Span,
    },
}

impl Expr {
    fn span_hint(&self) -> Span {
        match self {
            Expr::Ident(_, s)
            | Expr::Var(_, s)
            | Expr::Not(_, s)
            | Expr::Sum(_, s)
            | Expr::DiaStar(_, s)
            | Expr::Sigma(_, _, s)
            | Expr::Prog(_, _, s)
            | Expr::Scheme { span: s, .. }
            | Expr::Binder { span: s, .. } => *s,
            Expr::And(a, _) | Expr::Or(a, _) => a.span_hint(),
            Expr::Modal(_, e) => e.span_hint(),
            Expr::Top | Expr::Bot => Span::default(),
        }
    }

    /// Whether the expression mentions the fixpoint variable or any of `params`.
    fn mentions(&self, params: &[String]) -> bool {
        match self {
            Expr::Top | Expr::Bot => false,
            Expr::Ident(n, _) => params.contains(n),
            Expr::Var(..) => true,
            Expr::Not(e, _)
            | Expr::Modal(_, e)
            | Expr::DiaStar(e, _)
            | Expr::Sigma(_, e, _)
            | Expr::Prog(_, e, _) => e.mentions(params),
            Expr::And(a, b) | Expr::Or(a, b) => a.mentions(params) || b.mentions(params),
            Expr::Sum(ts, _) => ts.iter().any(|(_, e)| e.mentions(params)),
            // a nested scheme body is closed; only its arguments see the outer scope
            Expr::Scheme { args, .. } => args.iter().any(|(e, _, _)| e.mentions(params)),
            Expr::Binder { body, .. } => body.mentions(params),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "T", "F", "dia", "box", "sigma", "lfp", "gfp", "mu", "nu", "eps",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::expecting(
            self.span(),
            format!("unexpected {}", self.peek().describe()),
            expected,
        )
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.conj()?;
        while self.eat(&Tok::Or) {
            let right = self.conj()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        while self.eat(&Tok::And) {
            let right = self.unary()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn label(&mut self) -> Result<String, ParseError> {
        self.expect(Tok::LBracket)?;
        let name = match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                s
            }
            _ => return Err(self.unexpected(&["label"])),
        };
        self.expect(Tok::RBracket)?;
        Ok(name)
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match *self.peek() {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?), span))
            }
            Tok::Dia => {
                self.bump();
                if self.eat(&Tok::Star) {
                    return Ok(Expr::DiaStar(Box::new(self.unary()?), span));
                }
                Ok(Expr::Modal(Modality::Dia, Box::new(self.unary()?)))
            }
            Tok::Box => {
                self.bump();
                Ok(Expr::Modal(Modality::Box, Box::new(self.unary()?)))
            }
            Tok::Lt => {
                self.bump();
                let prog = self.program()?;
                self.expect(Tok::Gt)?;
                Ok(Expr::Prog(prog, Box::new(self.unary()?), span))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "dia" => {
                    self.bump();
                    if self.eat(&Tok::Star) {
                        return Ok(Expr::DiaStar(Box::new(self.unary()?), span));
                    }
                    let m = if *self.peek() == Tok::LBracket {
                        Modality::DiaLabel(self.label()?)
                    } else {
                        Modality::Dia
                    };
                    Ok(Expr::Modal(m, Box::new(self.unary()?)))
                }
                "box" => {
                    self.bump();
                    let m = if *self.peek() == Tok::LBracket {
                        Modality::BoxLabel(self.label()?)
                    } else {
                        Modality::Box
                    };
                    Ok(Expr::Modal(m, Box::new(self.unary()?)))
                }
                "sigma" => {
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let q = self.number()?;
                    self.expect(Tok::RBracket)?;
                    Ok(Expr::Sigma(q, Box::new(self.unary()?), span))
                }
                "mu" | "nu" => {
                    self.bump();
                    let var = match self.peek().clone() {
                        Tok::Ident(v) if is_variable(&v) => {
                            self.bump();
                            v
                        }
                        _ => return Err(self.unexpected(&["capitalized variable"])),
                    };
                    self.expect(Tok::Dot)?;
                    let body = self.expr()?;
                    Ok(Expr::Binder {
                        greatest: kw == "nu",
                        var,
                        body: Box::new(body),
                        span,
                    })
                }
                _ => self.primary(),
            },
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Number(_) => self.sum(),
            Tok::Ident(name) => match name.as_str() {
                "T" => {
                    self.bump();
                    Ok(Expr::Top)
                }
                "F" => {
                    self.bump();
                    Ok(Expr::Bot)
                }
                "lfp" | "gfp" => self.scheme(),
                kw if KEYWORDS.contains(&kw) => Err(ParseError::new(
                    span,
                    format!("keyword `{kw}` cannot start an operand"),
                )),
                _ => {
                    self.bump();
                    if is_variable(&name) {
                        Ok(Expr::Var(name, span))
                    } else {
                        Ok(Expr::Ident(name, span))
                    }
                }
            },
            _ => Err(self.unexpected(&["formula"])),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let mut terms = Vec::new();
        loop {
            let c = self.number()?;
            self.expect(Tok::Star)?;
            terms.push((c, self.unary()?));
            if !(self.peek() == &Tok::Plus && matches!(self.peek_at(1), Tok::Number(_))) {
                break;
            }
            self.bump();
        }
        Ok(Expr::Sum(terms, span))
    }

    fn scheme(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let polarity = if self.is_kw("lfp") {
            Polarity::Sharp
        } else {
            Polarity::Flat
        };
        self.bump();
        self.expect(Tok::LBrace)?;
        let body = self.expr()?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let arg = self.expr()?;
                self.expect(Tok::Slash)?;
                let pspan = self.span();
                let param = match self.peek().clone() {
                    Tok::Ident(p) if !KEYWORDS.contains(&p.as_str()) && !is_variable(&p) => {
                        self.bump();
                        p
                    }
                    _ => return Err(self.unexpected(&["parameter name"])),
                };
                args.push((arg, param, pspan));
                if self.eat(&Tok::RParen) {
                    break;
                }
                if !self.eat(&Tok::Comma) {
                    return Err(self.unexpected(&["`,`", "`)`"]));
                }
            }
        }
        Ok(Expr::Scheme {
            polarity,
            body: Box::new(body),
            args,
            span,
        })
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut parts = vec![self.prog_seq()?];
        while self.eat(&Tok::Plus) {
            parts.push(self.prog_seq()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Program::Union(parts)
        })
    }

    fn prog_seq(&mut self) -> Result<Program, ParseError> {
        let mut parts = vec![self.prog_postfix()?];
        while self.eat(&Tok::Semi) {
            parts.push(self.prog_postfix()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Program::Seq(parts)
        })
    }

    fn prog_postfix(&mut self) -> Result<Program, ParseError> {
        let mut p = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RParen)?;
                p
            }
            Tok::Ident(s) if s == "eps" => {
                self.bump();
                Program::Eps
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Program::Atomic(s)
            }
            _ => return Err(self.unexpected(&["atomic program", "`eps`", "`(`"])),
        };
        while self.eat(&Tok::Star) {
            p = Program::Star(Box::new(p));
        }
        Ok(p)
    }
}

fn is_variable(name: &str) -> bool {
    name != "T" && name != "F" && name.starts_with(|c: char| c.is_uppercase())
}

fn lower_formula(e: &Expr) -> Result<Formula, ParseError> {
    Ok(match e {
        Expr::Top => Formula::Top,
        Expr::Bot => Formula::Bot,
        Expr::Ident(n, _) => Formula::Atom(n.clone()),
        Expr::Var(v, span) => {
            return Err(ParseError::new(
                *span,
                format!("variable `{v}` is not bound here"),
            ))
        }
        Expr::Not(x, _) => Formula::not(lower_formula(x)?),
        Expr::And(a, b) => Formula::and(lower_formula(a)?, lower_formula(b)?),
        Expr::Or(a, b) => Formula::or(lower_formula(a)?, lower_formula(b)?),
        Expr::Sum(ts, _) => Formula::Sum(
            ts.iter()
                .map(|(c, x)| Ok((OrderedFloat(*c), lower_formula(x)?)))
                .collect::<Result<_, ParseError>>()?,
        ),
        Expr::Modal(m, x) => Formula::Modal(m.clone(), vec![lower_formula(x)?]),
        Expr::DiaStar(x, _) => Formula::dia_star(lower_formula(x)?),
        Expr::Sigma(q, x, _) => {
            Formula::Fix(FixHead::Sigma(OrderedFloat(*q)), vec![lower_formula(x)?])
        }
        Expr::Prog(p, x, _) => Formula::program(p.clone(), lower_formula(x)?),
        Expr::Scheme {
            polarity,
            body,
            args,
            span: _,
        } => {
            let scheme = lower_scheme(body, args)?;
            let args = args
                .iter()
                .map(|(a, _, _)| lower_formula(a))
                .collect::<Result<_, _>>()?;
            Formula::Fix(FixHead::Scheme(*polarity, Arc::new(scheme)), args)
        }
        Expr::Binder { span, .. } => {
            return Err(ParseError::new(
                *span,
                "`mu`/`nu` binders belong to the mu-calculus syntax; use lfp{..}/gfp{..} schemes",
            ))
        }
    })
}

fn lower_scheme(body: &Expr, args: &[(Expr, String, Span)]) -> Result<Scheme, ParseError> {
    let mut params = Vec::with_capacity(args.len());
    let mut seen = BTreeSet::new();
    for (_, p, pspan) in args {
        if !seen.insert(p.clone()) {
            return Err(ParseError::new(
                *pspan,
                format!("parameter `{p}` bound twice"),
            ));
        }
        params.push(p.clone());
    }
    let body = lower_body(body, &params)?;
    Ok(Scheme { params, body })
}

fn lower_body(e: &Expr, params: &[String]) -> Result<SchemeBody, ParseError> {
    Ok(match e {
        Expr::Top => SchemeBody::Top,
        Expr::Bot => SchemeBody::Bot,
        Expr::Ident(n, _) => {
            if params.contains(n) {
                SchemeBody::Param(n.clone())
            } else {
                SchemeBody::Closed(Formula::Atom(n.clone()))
            }
        }
        Expr::Var(v, span) => {
            if v == FIX_VAR {
                SchemeBody::FixVar
            } else {
                return Err(ParseError::new(
                    *span,
                    format!("scheme bodies refer to their fixpoint variable as `{FIX_VAR}`, found `{v}`"),
                ));
            }
        }
        Expr::Not(_, span) => {
            return Err(ParseError::new(
                *span,
                "negation is not allowed inside a fixpoint scheme",
            ))
        }
        Expr::And(a, b) => SchemeBody::And(
            Box::new(lower_body(a, params)?),
            Box::new(lower_body(b, params)?),
        ),
        Expr::Or(a, b) => SchemeBody::Or(
            Box::new(lower_body(a, params)?),
            Box::new(lower_body(b, params)?),
        ),
        Expr::Modal(m, x) => SchemeBody::Modal(m.clone(), vec![lower_body(x, params)?]),
        Expr::Scheme {
            polarity,
            body,
            args,
            span: _,
        } => {
            let inner = lower_scheme(body, args)?;
            let args = args
                .iter()
                .map(|(a, _, _)| lower_body(a, params))
                .collect::<Result<_, _>>()?;
            SchemeBody::Apply {
                polarity: *polarity,
                scheme: Arc::new(inner),
                args,
            }
        }
        other => {
            if other.mentions(params) {
                return Err(ParseError::new(
                    other.span_hint(),
                    "inside a scheme, parameters and `X` may only occur under /\\, \\/, modalities and nested schemes",
                ));
            }
            SchemeBody::Closed(lower_formula(other)?)
        }
    })
}

fn lower_mu(e: &Expr) -> Result<MuFormula, ParseError> {
    Ok(match e {
        Expr::Top => MuFormula::Top,
        Expr::Bot => MuFormula::Bot,
        Expr::Ident(n, _) => MuFormula::Atom(n.clone()),
        Expr::Var(v, _) => MuFormula::Var(v.clone()),
        Expr::Not(x, _) => MuFormula::Not(Box::new(lower_mu(x)?)),
        Expr::And(a, b) => MuFormula::And(Box::new(lower_mu(a)?), Box::new(lower_mu(b)?)),
        Expr::Or(a, b) => MuFormula::Or(Box::new(lower_mu(a)?), Box::new(lower_mu(b)?)),
        Expr::Modal(m, x) => MuFormula::Modal(m.clone(), Box::new(lower_mu(x)?)),
        Expr::Binder {
            greatest,
            var,
            body,
            ..
        } => {
            let body = Box::new(lower_mu(body)?);
            if *greatest {
                MuFormula::Nu(var.clone(), body)
            } else {
                MuFormula::Mu(var.clone(), body)
            }
        }
        other => return Err(ParseError::new(
            other.span_hint(),
            "only T, F, atoms, ~, /\\, \\/, modalities and mu/nu binders are mu-calculus syntax",
        )),
    })
}

fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses without instance checks.
pub fn parse_formula_unchecked(text: &str) -> Result<Formula, ParseError> {
    lower_formula(&parse_expr(text)?)
}

/// Parses and validates a formula against a logic instance.
pub fn parse_formula(text: &str, instance: &LogicInstance) -> Result<Formula, FormulaError> {
    let f = parse_formula_unchecked(text)?;
    let diags = validate(&f, instance);
    if diags.is_empty() {
        Ok(f)
    } else {
        Err(FormulaError::Invalid(diags))
    }
}

/// Parses a mu-calculus formula (`mu X. φ`, `nu X. φ`).
pub fn parse_mu(text: &str) -> Result<MuFormula, ParseError> {
    lower_mu(&parse_expr(text)?)
}

/// Parses a program in the `<…>` syntax: `+` for choice, `;` for sequence, postfix `*`.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let prog = p.program()?;
    p.finish()?;
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::InstanceId;

    #[test]
    fn diamond_star() {
        assert_eq!(
            parse_formula_unchecked("dia* p").unwrap(),
            Formula::dia_star(Formula::atom("p"))
        );
        assert_eq!(
            parse_formula_unchecked("◇*p").unwrap(),
            Formula::dia_star(Formula::atom("p"))
        );
    }

    #[test]
    fn program_precedence() {
        let f = parse_formula_unchecked("<a;b*>p").unwrap();
        let prog = Program::Seq(vec![
            Program::atomic("a"),
            Program::star(Program::atomic("b")),
        ]);
        assert_eq!(f, Formula::program(prog, Formula::atom("p")));
        let p = parse_program("a + b;c*").unwrap();
        assert_eq!(
            p,
            Program::Union(vec![
                Program::atomic("a"),
                Program::Seq(vec![
                    Program::atomic("b"),
                    Program::star(Program::atomic("c"))
                ])
            ])
        );
    }

    #[test]
    fn reachability_scheme() {
        let f = parse_formula_unchecked("lfp{v \\/ dia X}(p/v)").unwrap();
        let scheme = Scheme {
            params: vec!["v".into()],
            body: SchemeBody::Or(
                Box::new(SchemeBody::Param("v".into())),
                Box::new(SchemeBody::Modal(Modality::Dia, vec![SchemeBody::FixVar])),
            ),
        };
        assert_eq!(f, Formula::sharp(scheme, vec![Formula::atom("p")]));
    }

    #[test]
    fn conjunction_binds_tighter() {
        let f = parse_formula_unchecked("p \\/ q /\\ r").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::atom("p"),
                Formula::and(Formula::atom("q"), Formula::atom("r"))
            )
        );
    }

    #[test]
    fn sums() {
        let f = parse_formula_unchecked("0.5*p + 0.25*dia q").unwrap();
        assert_eq!(
            f,
            Formula::Sum(vec![
                (OrderedFloat(0.5), Formula::atom("p")),
                (OrderedFloat(0.25), Formula::dia(Formula::atom("q")))
            ])
        );
    }

    #[test]
    fn negation_in_scheme_rejected() {
        let err = parse_formula_unchecked("lfp{~v \\/ dia X}(p/v)").unwrap_err();
        assert!(err.message.contains("negation"));
        assert_eq!(err.span.start, 4);
    }

    #[test]
    fn position_reported() {
        let err = parse_formula_unchecked("p /\\ ").unwrap_err();
        assert_eq!(err.span.start, 5);
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn binders_only_in_mu_syntax() {
        assert!(parse_formula_unchecked("mu X. p \\/ dia X").is_err());
        let mu = parse_mu("mu X. p \\/ dia X").unwrap();
        assert_eq!(
            mu,
            MuFormula::Mu(
                "X".into(),
                Box::new(MuFormula::Or(
                    Box::new(MuFormula::Atom("p".into())),
                    Box::new(MuFormula::Modal(
                        Modality::Dia,
                        Box::new(MuFormula::Var("X".into()))
                    ))
                ))
            )
        );
    }

    #[test]
    fn unknown_prop_rejected_by_instance() {
        let mut inst = LogicInstance::new(InstanceId::DiamondStar);
        inst.props = Some(BTreeSet::from(["p".to_string()]));
        assert!(matches!(
            parse_formula("dia* z", &inst),
            Err(FormulaError::Invalid(_))
        ));
        assert!(parse_formula("dia* p", &inst).is_ok());
    }
}
