//! Failure-logic expressions: `IRDU OR In1.DU`, `(In1.DU AND In3.DU) OR …`,
//! `KOON(2, In1.DU, In2.DU, In3.DU)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// A basic event local to the component.
    Event(String),
    /// A deviation arriving at an in-port, e.g. `In1.DU`.
    Port { port: String, class: String },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Koon { k: usize, args: Vec<Expr> },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("expression `{text}`: {message} at offset {offset}")]
pub struct ExprError {
    pub text: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(usize),
    And,
    Or,
    Koon,
    LParen,
    RParen,
    Comma,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | ':')
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let err = |offset, message: &str| ExprError {
        text: text.to_string(),
        offset,
        message: message.to_string(),
    };
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | ',' => {
                chars.next();
                out.push((
                    i,
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Comma,
                    },
                ));
            }
            c if is_ident_char(c) => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let tok = match word.as_str() {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    "KOON" => Tok::Koon,
                    w if w.chars().all(|c| c.is_ascii_digit()) => {
                        Tok::Num(w.parse().map_err(|_| err(i, "number too large"))?)
                    }
                    _ => Tok::Ident(word),
                };
                out.push((i, tok));
            }
            _ => return Err(err(i, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            text: self.text.to_string(),
            offset: self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.text.len()),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut parts = vec![self.atom()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Koon) => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after KOON")?;
                let k = match self.peek() {
                    Some(Tok::Num(k)) => *k,
                    _ => return Err(self.err("expected vote count k")),
                };
                self.pos += 1;
                let mut args = Vec::new();
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    args.push(self.or()?);
                }
                self.expect(Tok::RParen, "`)` closing KOON")?;
                if k < 1 || k > args.len() {
                    return Err(self.err(format!("KOON needs 1 <= k <= n, got k={k}, n={}", args.len())));
                }
                Ok(Expr::Koon { k, args })
            }
            Some(Tok::Ident(word)) => {
                self.pos += 1;
                Ok(match word.split_once('.') {
                    Some((port, class)) => Expr::Port {
                        port: port.to_string(),
                        class: class.to_string(),
                    },
                    None => Expr::Event(word),
                })
            }
            _ => Err(self.err("expected an event, port deviation, KOON or `(`")),
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser {
            text,
            toks: lex(text)?,
            pos: 0,
        };
        let e = p.or()?;
        if p.pos != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Visits every leaf.
    pub fn leaves(&self) -> Vec<&Expr> {
        match self {
            Expr::Event(_) | Expr::Port { .. } => vec![self],
            Expr::And(xs) | Expr::Or(xs) | Expr::Koon { args: xs, .. } => {
                xs.iter().flat_map(Expr::leaves).collect()
            }
        }
    }

    /// Evaluates with a truth value for each leaf.
    pub fn eval(&self, leaf: &mut impl FnMut(&Expr) -> bool) -> bool {
        match self {
            Expr::Event(_) | Expr::Port { .. } => leaf(self),
            Expr::And(xs) => xs.iter().all(|x| x.eval(leaf)),
            Expr::Or(xs) => xs.iter().any(|x| x.eval(leaf)),
            Expr::Koon { k, args } => args.iter().filter(|x| x.eval(leaf)).count() >= *k,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[Expr], sep: &str| -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match x {
                    Expr::And(_) | Expr::Or(_) => write!(f, "({x})")?,
                    _ => write!(f, "{x}")?,
                }
            }
            Ok(())
        };
        match self {
            Expr::Event(e) => f.write_str(e),
            Expr::Port { port, class } => write!(f, "{port}.{class}"),
            Expr::And(xs) => join(f, xs, " AND "),
            Expr::Or(xs) => join(f, xs, " OR "),
            Expr::Koon { k, args } => {
                write!(f, "KOON({k}, ")?;
                join(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}
