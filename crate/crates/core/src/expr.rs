//! Guard expressions: atoms, the boolean/comparison AST, its parser,
//! printer and evaluator.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := andExpr { "or" andExpr }
//! andExpr := notExpr { "and" notExpr }
//! notExpr := [ "not" ] cmp
//! cmp     := term [ ("=" | "<>" | "<" | "<=" | ">" | ">=") term ]
//! term    := IDENT | INT | STRING | "true" | "false" | "(" expr ")"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A ground value carried by tokens, message arguments and guard literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Atom {
    Symbol(String),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Atom {
    /// Parses the textual form of a single atom: an integer, a double-quoted
    /// string, `true`/`false`, or a bare identifier (a symbol).
    pub fn parse(text: &str) -> Result<Atom, ExprError> {
        let tokens = lex(text)?;
        match tokens.as_slice() {
            [(_, Tok::Int(n))] => Ok(Atom::Int(*n)),
            [(_, Tok::Str(s))] => Ok(Atom::Text(s.clone())),
            [(_, Tok::True)] => Ok(Atom::Bool(true)),
            [(_, Tok::False)] => Ok(Atom::Bool(false)),
            [(_, Tok::Ident(s))] => Ok(Atom::Symbol(s.clone())),
            [] => Err(ExprError::Parse {
                offset: 0,
                message: "expected an atom".into(),
            }),
            [(off, _), ..] => Err(ExprError::Parse {
                offset: *off,
                message: "expected a single atom".into(),
            }),
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Atom::Symbol(_) => "symbol",
            Atom::Int(_) => "int",
            Atom::Text(_) => "text",
            Atom::Bool(_) => "bool",
        }
    }

    /// Textual content used for symbol/text equality.
    fn as_str(&self) -> Option<&str> {
        match self {
            Atom::Symbol(s) | Atom::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) => f.write_str(s),
            Atom::Int(n) => write!(f, "{n}"),
            Atom::Text(s) => write_quoted(f, s),
            Atom::Bool(b) => write!(f, "{b}"),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            _ => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// Variable assignment produced by unifying arc inscriptions with tokens.
pub type Binding = BTreeMap<String, Atom>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Var(String),
    Lit(Atom),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Lit(Atom::Int(n))
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Or(Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Expr {
        Expr::Not(Box::new(inner))
    }

    /// Free variables in name order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Lit(_) => {}
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Not(a) => a.collect_vars(out),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Cmp(..) => 4,
            Expr::Var(_) | Expr::Lit(_) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Prints with the minimum parentheses needed for the printed text to parse
/// back into the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Lit(a) => write!(f, "{a}"),
            Expr::Cmp(op, a, b) => {
                a.fmt_child(f, 5)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_child(f, 5)
            }
            Expr::And(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str(" and ")?;
                b.fmt_child(f, 3)
            }
            Expr::Or(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" or ")?;
                b.fmt_child(f, 2)
            }
            Expr::Not(a) => {
                f.write_str("not ")?;
                a.fmt_child(f, 4)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("lexical error at offset {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    True,
    False,
    And,
    Or,
    Not,
    LParen,
    RParen,
    Op(CmpOp),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => {
                out.push((start, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((start, Tok::RParen));
                i += 1;
            }
            b'=' => {
                out.push((start, Tok::Op(CmpOp::Eq)));
                i += 1;
            }
            b'<' => {
                let (op, len) = match bytes.get(i + 1) {
                    Some(b'>') => (CmpOp::Ne, 2),
                    Some(b'=') => (CmpOp::Le, 2),
                    _ => (CmpOp::Lt, 1),
                };
                out.push((start, Tok::Op(op)));
                i += len;
            }
            b'>' => {
                let (op, len) = match bytes.get(i + 1) {
                    Some(b'=') => (CmpOp::Ge, 2),
                    _ => (CmpOp::Gt, 1),
                };
                out.push((start, Tok::Op(op)));
                i += len;
            }
            b'"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(ch) = src[i..].chars().next() else {
                        return Err(ExprError::Lex {
                            offset: start,
                            message: "unterminated string".into(),
                        });
                    };
                    i += ch.len_utf8();
                    match ch {
                        '"' => break,
                        '\\' => {
                            let Some(esc) = src[i..].chars().next() else {
                                return Err(ExprError::Lex {
                                    offset: start,
                                    message: "unterminated string".into(),
                                });
                            };
                            i += esc.len_utf8();
                            match esc {
                                '"' | '\\' => s.push(esc),
                                _ => {
                                    return Err(ExprError::Lex {
                                        offset: i - esc.len_utf8() - 1,
                                        message: format!("unknown escape `\\{esc}`"),
                                    })
                                }
                            }
                        }
                        _ => s.push(ch),
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            b'-' | b'0'..=b'9' => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                if text == "-" {
                    return Err(ExprError::Lex {
                        offset: start,
                        message: "expected digits after `-`".into(),
                    });
                }
                let n = text.parse::<i64>().map_err(|_| ExprError::Lex {
                    offset: start,
                    message: format!("integer literal `{text}` out of range"),
                })?;
                out.push((start, Tok::Int(n)));
            }
            c if c == b'_' || c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                let tok = match &src[start..i] {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    word => Tok::Ident(word.to_string()),
                };
                out.push((start, tok));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ExprError::Lex {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

/// Words that can never be identifiers.
pub const KEYWORDS: [&str; 5] = ["and", "or", "not", "true", "false"];

/// True if `s` is a valid identifier (and not a keyword).
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_ascii_alphanumeric()) && !KEYWORDS.contains(&s)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.not_expr()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.not_expr()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            Ok(Expr::not(self.cmp()?))
        } else {
            self.cmp()
        }
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.term()?;
        if let Some(Tok::Op(op)) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            if let Some(Tok::Op(_)) = self.peek() {
                return Err(self.error("comparison operators do not chain"));
            }
            return Ok(Expr::cmp(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let expr = match self.peek() {
            Some(Tok::Ident(s)) => Expr::Var(s.clone()),
            Some(Tok::Int(n)) => Expr::Lit(Atom::Int(*n)),
            Some(Tok::Str(s)) => Expr::Lit(Atom::Text(s.clone())),
            Some(Tok::True) => Expr::Lit(Atom::Bool(true)),
            Some(Tok::False) => Expr::Lit(Atom::Bool(false)),
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                return Ok(inner);
            }
            Some(_) => return Err(self.error("expected a term")),
            None => return Err(self.error("unexpected end of input")),
        };
        self.pos += 1;
        Ok(expr)
    }
}

/// Parses guard text into an [`Expr`]. Error offsets are byte offsets of the
/// offending token (or the input length at end of input).
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.or_expr()?;
    if p.pos != p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

fn value_of(e: &Expr, b: &Binding) -> Result<Atom, ExprError> {
    match e {
        Expr::Var(v) => b.get(v).cloned().ok_or_else(|| ExprError::Unbound(v.clone())),
        Expr::Lit(a) => Ok(a.clone()),
        _ => Ok(Atom::Bool(eval_expr(e, b)?)),
    }
}

fn atoms_equal(a: &Atom, b: &Atom) -> bool {
    match (a.as_str(), b.as_str()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Evaluates a guard under a binding.
///
/// Integers order numerically. Symbols and text compare by content and only
/// for (in)equality; ordering them is a type mismatch.
pub fn eval_expr(e: &Expr, b: &Binding) -> Result<bool, ExprError> {
    match e {
        Expr::Var(_) | Expr::Lit(_) => match value_of(e, b)? {
            Atom::Bool(v) => Ok(v),
            other => Err(ExprError::TypeMismatch(format!(
                "expected bool, found {} `{other}`",
                other.type_name()
            ))),
        },
        Expr::Cmp(op, l, r) => {
            let (l, r) = (value_of(l, b)?, value_of(r, b)?);
            match op {
                CmpOp::Eq => Ok(atoms_equal(&l, &r)),
                CmpOp::Ne => Ok(!atoms_equal(&l, &r)),
                _ => {
                    let (Atom::Int(x), Atom::Int(y)) = (&l, &r) else {
                        return Err(ExprError::TypeMismatch(format!(
                            "`{}` needs int operands, found {} and {}",
                            op.symbol(),
                            l.type_name(),
                            r.type_name()
                        )));
                    };
                    Ok(match op {
                        CmpOp::Lt => x < y,
                        CmpOp::Le => x <= y,
                        CmpOp::Gt => x > y,
                        CmpOp::Ge => x >= y,
                        CmpOp::Eq | CmpOp::Ne => unreachable!(),
                    })
                }
            }
        }
        Expr::And(l, r) => Ok(eval_expr(l, b)? && eval_expr(r, b)?),
        Expr::Or(l, r) => Ok(eval_expr(l, b)? || eval_expr(r, b)?),
        Expr::Not(inner) => Ok(!eval_expr(inner, b)?),
    }
}
