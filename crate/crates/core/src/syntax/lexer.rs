use std::fmt;

use thiserror::Error;

/// Byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    /// Tokens that would have been accepted at `span.start`, if known.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn expecting(span: Span, message: impl Into<String>, expected: &[&str]) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.span.start, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    And,
    Or,
    Not,
    Dia,
    Box,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Slash,
    Semi,
    Plus,
    Star,
    Dot,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::And => "`/\\`".into(),
            Tok::Or => "`\\/`".into(),
            Tok::Not => "`~`".into(),
            Tok::Dia => "`◇`".into(),
            Tok::Box => "`□`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Star => "`*`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = |tok| Some(tok);
        let simple = match c {
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '{' => single(Tok::LBrace),
            '}' => single(Tok::RBrace),
            '[' => single(Tok::LBracket),
            ']' => single(Tok::RBracket),
            '<' => single(Tok::Lt),
            '>' => single(Tok::Gt),
            ',' => single(Tok::Comma),
            ';' => single(Tok::Semi),
            '+' => single(Tok::Plus),
            '*' => single(Tok::Star),
            '.' => single(Tok::Dot),
            '~' | '¬' => single(Tok::Not),
            '∧' => single(Tok::And),
            '∨' => single(Tok::Or),
            '◇' => single(Tok::Dia),
            '□' => single(Tok::Box),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            out.push(Token {
                tok,
                span: Span {
                    start,
                    end: start + c.len_utf8(),
                },
            });
            continue;
        }
        match c {
            '/' => {
                chars.next();
                if matches!(chars.peek(), Some(&(_, '\\'))) {
                    chars.next();
                    out.push(Token {
                        tok: Tok::And,
                        span: Span {
                            start,
                            end: start + 2,
                        },
                    });
                } else {
                    out.push(Token {
                        tok: Tok::Slash,
                        span: Span {
                            start,
                            end: start + 1,
                        },
                    });
                }
            }
            '\\' => {
                chars.next();
                if matches!(chars.peek(), Some(&(_, '/'))) {
                    chars.next();
                    out.push(Token {
                        tok: Tok::Or,
                        span: Span {
                            start,
                            end: start + 2,
                        },
                    });
                } else {
                    return Err(ParseError::expecting(
                        Span {
                            start,
                            end: start + 1,
                        },
                        "stray `\\`",
                        &["`\\/`"],
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                let mut end = start;
                let mut seen_dot = false;
                while let Some(&(i, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        end = i + 1;
                        chars.next();
                    } else if d == '.' && !seen_dot {
                        // a dot only continues a number when a digit follows it
                        let rest = &text[i + 1..];
                        if rest.starts_with(|x: char| x.is_ascii_digit()) {
                            seen_dot = true;
                            end = i + 1;
                            chars.next();
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                let lexeme = &text[start..end];
                let value: f64 = lexeme.parse().map_err(|_| {
                    ParseError::new(Span { start, end }, format!("bad number `{lexeme}`"))
                })?;
                out.push(Token {
                    tok: Tok::Number(value),
                    span: Span { start, end },
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = start;
                while let Some(&(i, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        end = i + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..end].to_string()),
                    span: Span { start, end },
                });
            }
            other => {
                return Err(ParseError::new(
                    Span {
                        start,
                        end: start + other.len_utf8(),
                    },
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            start: text.len(),
            end: text.len(),
        },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn connectives() {
        assert_eq!(
            toks("p /\\ q \\/ ~r"),
            vec![
                Tok::Ident("p".into()),
                Tok::And,
                Tok::Ident("q".into()),
                Tok::Or,
                Tok::Not,
                Tok::Ident("r".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_binders() {
        assert_eq!(
            toks("mu X. 0.25*p"),
            vec![
                Tok::Ident("mu".into()),
                Tok::Ident("X".into()),
                Tok::Dot,
                Tok::Number(0.25),
                Tok::Star,
                Tok::Ident("p".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("1."), vec![Tok::Number(1.0), Tok::Dot, Tok::Eof]);
    }

    #[test]
    fn slash_forms() {
        assert_eq!(
            toks("(p/v)"),
            vec![
                Tok::LParen,
                Tok::Ident("p".into()),
                Tok::Slash,
                Tok::Ident("v".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character_has_position() {
        let err = tokenize("p & q").unwrap_err();
        assert_eq!(err.span.start, 2);
    }
}
