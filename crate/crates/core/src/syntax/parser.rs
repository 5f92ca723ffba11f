//! Recursive-descent parser for formulas and conditions.
//!
//! ```text
//! formula   := sum
//! sum       := prod { ("+" | "-") prod }
//! prod      := rational "*" prim | rational | "-" prim | prim
//! prim      := "1" | "d(" term "," term ")" | ident "(" term {"," term} ")"
//!            | ("sup" | "inf") ident "." formula
//!            | ("min" | "max") "(" formula "," formula ")" | "(" formula ")"
//! term      := ident | ident "(" term {"," term} ")"
//! rational  := ["-"] digits ["/" digits]
//! condition := formula ("<=" | ">=" | "=") formula
//! ```
//!
//! A bare rational `r` denotes `r*1`; the literal `1` is the atomic formula.

use num_bigint::BigInt;

use super::formula::{Condition, Formula, Term};
use super::signature::{Signature, SymbolKind};
use super::SyntaxError;
use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Dot,
    Le,
    Ge,
    Eq,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(s) => format!("number `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Le => "`<=`".into(),
        Tok::Ge => "`>=`".into(),
        Tok::Eq => "`=`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && {
                let c = bytes[i] as char;
                c.is_ascii_alphanumeric() || c == '_' || c == '\''
            } {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
                return Err(SyntaxError::Parse { pos: start, msg: "decimal literals are not accepted; write p/q".into() });
            }
            Tok::Num(text[start..i].to_string())
        } else {
            i += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '=' => Tok::Eq,
                '<' | '>' if i < bytes.len() && bytes[i] == b'=' => {
                    i += 1;
                    if c == '<' {
                        Tok::Le
                    } else {
                        Tok::Ge
                    }
                }
                _ => {
                    return Err(SyntaxError::Parse { pos: start, msg: format!("unexpected character `{c}`") });
                }
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse { pos: self.offset(), msg: msg.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", describe(&want), describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let mut acc = self.prod()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.prod()?;
                    acc = Formula::sum(acc, rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.prod()?;
                    acc = Formula::sum(acc, Formula::neg(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    /// Returns the rational and whether it was written as the bare literal `1`.
    fn rational(&mut self) -> Result<(Rational, bool), SyntaxError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let num = match self.bump() {
            Tok::Num(n) => n,
            other => return self.error(format!("expected digits, found {}", describe(&other))),
        };
        let mut literal_one = !negative && num == "1";
        let mut value = Rational::from_integer(num.parse::<BigInt>().expect("lexer yields digits"));
        if *self.peek() == Tok::Slash {
            self.bump();
            literal_one = false;
            let den = match self.bump() {
                Tok::Num(n) => n.parse::<BigInt>().expect("lexer yields digits"),
                other => return self.error(format!("expected denominator, found {}", describe(&other))),
            };
            if den == BigInt::from(0) {
                return self.error("zero denominator");
            }
            value /= Rational::from_integer(den);
        }
        if negative {
            value = -value;
        }
        Ok((value, literal_one))
    }

    fn prod(&mut self) -> Result<Formula, SyntaxError> {
        let starts_number = matches!(self.peek(), Tok::Num(_))
            || (*self.peek() == Tok::Minus && matches!(self.peek_at(1), Tok::Num(_)));
        if starts_number {
            let (r, literal_one) = self.rational()?;
            if *self.peek() == Tok::Star {
                self.bump();
                let inner = self.prim()?;
                return Ok(Formula::scale(r, inner));
            }
            return Ok(if literal_one { Formula::One } else { Formula::real(r) });
        }
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.prim()?;
            return Ok(Formula::neg(inner));
        }
        self.prim()
    }

    fn prim(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) if n == "1" && *self.peek_at(1) != Tok::Slash => {
                self.bump();
                Ok(Formula::One)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) => match name.as_str() {
                "sup" | "inf" => {
                    self.bump();
                    let var = self.ident()?;
                    if self.sig.get(&var).is_some() {
                        return self.error(format!("`{var}` is a declared symbol and cannot be bound"));
                    }
                    self.expect(Tok::Dot)?;
                    let body = self.formula()?;
                    Ok(if name == "sup" { Formula::sup(&var, body) } else { Formula::inf(&var, body) })
                }
                "min" | "max" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let a = self.formula()?;
                    self.expect(Tok::Comma)?;
                    let b = self.formula()?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "min" { Formula::min(a, b) } else { Formula::max(a, b) })
                }
                "d" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let a = self.term()?;
                    self.expect(Tok::Comma)?;
                    let b = self.term()?;
                    self.expect(Tok::RParen)?;
                    Ok(Formula::Dist(a, b))
                }
                _ => {
                    let at = self.offset();
                    self.bump();
                    let sym = self.sig.get(&name).ok_or_else(|| SyntaxError::UnknownSymbol(name.clone()))?;
                    if sym.kind != SymbolKind::Relation {
                        return Err(SyntaxError::KindMismatch { symbol: name, kind: sym.kind, expected: "relation" });
                    }
                    let arity = sym.arity;
                    if *self.peek() != Tok::LParen {
                        return Err(SyntaxError::Parse { pos: at, msg: format!("relation `{name}` needs arguments") });
                    }
                    let args = self.args()?;
                    if args.len() != arity {
                        return Err(SyntaxError::Arity { symbol: name, expected: arity, found: args.len() });
                    }
                    Ok(Formula::Rel(name, args))
                }
            },
            other => self.error(format!("expected a formula, found {}", describe(&other))),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, SyntaxError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let name = self.ident()?;
        if matches!(name.as_str(), "sup" | "inf" | "min" | "max" | "d") {
            return self.error(format!("`{name}` cannot be used as a term"));
        }
        match self.sig.get(&name) {
            Some(sym) => match sym.kind {
                SymbolKind::Constant => {
                    if *self.peek() == Tok::LParen {
                        return Err(SyntaxError::Arity { symbol: name, expected: 0, found: self.args()?.len() });
                    }
                    Ok(Term::Const(name))
                }
                SymbolKind::Function => {
                    let arity = sym.arity;
                    if *self.peek() != Tok::LParen {
                        return Err(SyntaxError::Arity { symbol: name, expected: arity, found: 0 });
                    }
                    let args = self.args()?;
                    if args.len() != arity {
                        return Err(SyntaxError::Arity { symbol: name, expected: arity, found: args.len() });
                    }
                    Ok(Term::Apply(name, args))
                }
                SymbolKind::Relation => {
                    Err(SyntaxError::KindMismatch { symbol: name, kind: SymbolKind::Relation, expected: "term" })
                }
            },
            None => {
                if *self.peek() == Tok::LParen {
                    return Err(SyntaxError::UnknownSymbol(name));
                }
                Ok(Term::Var(name))
            }
        }
    }

    fn finish(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.error(format!("unexpected {}", describe(self.peek())))
        }
    }
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, sig };
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, sig };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses `a <= b`, `a >= b` or `a = b`; equalities yield both directions.
pub fn parse_conditions(text: &str, sig: &Signature) -> Result<Vec<Condition>, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, sig };
    let lhs = p.formula()?;
    let op = p.bump();
    let rhs = p.formula()?;
    p.finish()?;
    match op {
        Tok::Le => Ok(vec![Condition::new(lhs, rhs)]),
        Tok::Ge => Ok(vec![Condition::new(rhs, lhs)]),
        Tok::Eq => Ok(Condition::equality(lhs, rhs).to_vec()),
        other => Err(SyntaxError::Parse {
            pos: 0,
            msg: format!("expected `<=`, `>=` or `=` between formulas, found {}", describe(&other)),
        }),
    }
}

/// Parses a single `<=`/`>=` condition.
pub fn parse_condition(text: &str, sig: &Signature) -> Result<Condition, SyntaxError> {
    let mut conds = parse_conditions(text, sig)?;
    if conds.len() != 1 {
        return Err(SyntaxError::Parse { pos: 0, msg: "expected a single inequality, found an equality".into() });
    }
    Ok(conds.pop().expect("one condition"))
}
