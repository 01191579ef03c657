use std::fmt;

use thiserror::Error;

use super::ast::{Cond, ElemKind, Pred, SetExpr, Strategy};
use crate::portgraph::Value;

/// A parse error at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    LParen,
    RParen,
    Semi,
    Comma,
    Cup,
    Minus,
    EqEq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Cup => f.write_str("`[cup]`"),
            Tok::Minus => f.write_str("`\\`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| SyntaxError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => advance(1, &mut i),
            '(' => {
                out.push(Spanned { tok: Tok::LParen, line: l0, col: c0 });
                advance(1, &mut i);
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, line: l0, col: c0 });
                advance(1, &mut i);
            }
            ';' => {
                out.push(Spanned { tok: Tok::Semi, line: l0, col: c0 });
                advance(1, &mut i);
            }
            ',' => {
                out.push(Spanned { tok: Tok::Comma, line: l0, col: c0 });
                advance(1, &mut i);
            }
            '\\' => {
                out.push(Spanned { tok: Tok::Minus, line: l0, col: c0 });
                advance(1, &mut i);
            }
            '∪' => {
                out.push(Spanned { tok: Tok::Cup, line: l0, col: c0 });
                advance(1, &mut i);
            }
            '[' => {
                let word: String = chars[i..].iter().take(5).collect();
                if word != "[cup]" {
                    return Err(err(l0, c0, "expected `[cup]`".into()));
                }
                out.push(Spanned { tok: Tok::Cup, line: l0, col: c0 });
                advance(5, &mut i);
            }
            '=' => {
                if chars.get(i + 1) != Some(&'=') {
                    return Err(err(l0, c0, "expected `==`".into()));
                }
                out.push(Spanned { tok: Tok::EqEq, line: l0, col: c0 });
                advance(2, &mut i);
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => return Err(err(l0, c0, "unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some(e @ ('"' | '\\')) => s.push(*e),
                                _ => return Err(err(l0, c0 + (j - i), "invalid escape".into())),
                            }
                            j += 2;
                        }
                        Some(ch) => {
                            s.push(*ch);
                            j += 1;
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line: l0, col: c0 });
                advance(j + 1 - i, &mut i);
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                let mut j = i + 1;
                while chars.get(j).is_some_and(char::is_ascii_digit) {
                    j += 1;
                }
                let lit: String = chars[i..j].iter().collect();
                let n = lit.parse().map_err(|_| err(l0, c0, format!("integer `{lit}` out of range")))?;
                out.push(Spanned { tok: Tok::Int(n), line: l0, col: c0 });
                advance(j - i, &mut i);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while chars.get(j).is_some_and(|c| c.is_alphanumeric() || *c == '_' || *c == '-') {
                    j += 1;
                }
                out.push(Spanned { tok: Tok::Ident(chars[i..j].iter().collect()), line: l0, col: c0 });
                advance(j - i, &mut i);
            }
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

const RESERVED: &[&str] = &[
    "id", "fail", "one", "all", "repeat", "while", "do", "not", "isEmpty", "setPos", "setBan", "crtGraph",
    "crtPos", "crtBan", "property", "ngb", "node", "edge", "true", "false",
];

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        let t = &self.toks[self.at];
        SyntaxError { line: t.line, col: t.col, message: message.into() }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn keyword(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn strategy(&mut self) -> Result<Strategy, SyntaxError> {
        let mut steps = vec![self.step()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            steps.push(self.step()?);
        }
        Ok(Strategy::seq(steps))
    }

    fn parens<T>(&mut self, inner: impl FnOnce(&mut Self) -> Result<T, SyntaxError>) -> Result<T, SyntaxError> {
        self.expect(Tok::LParen)?;
        let v = inner(self)?;
        self.expect(Tok::RParen)?;
        Ok(v)
    }

    fn step(&mut self) -> Result<Strategy, SyntaxError> {
        if *self.peek() == Tok::LParen {
            return self.parens(Self::strategy);
        }
        let Some(word) = self.keyword().map(str::to_owned) else {
            return Err(self.unexpected("a strategy"));
        };
        match word.as_str() {
            "id" => {
                self.bump();
                Ok(Strategy::Id)
            }
            "fail" => {
                self.bump();
                Ok(Strategy::Fail)
            }
            "one" => {
                self.bump();
                let rule = self.parens(|p| p.rule_name())?;
                Ok(Strategy::One { rule })
            }
            "all" => Err(self.error("`all` denotes a set and cannot be used as a strategy")),
            "repeat" => {
                self.bump();
                let body = self.parens(Self::strategy)?;
                Ok(Strategy::Repeat { body: Box::new(body) })
            }
            "while" => {
                self.bump();
                let cond = self.parens(Self::cond)?;
                match self.keyword() {
                    Some("do") => {
                        self.bump();
                    }
                    _ => return Err(self.unexpected("`do`")),
                }
                let body = self.parens(Self::strategy)?;
                Ok(Strategy::While { cond, body: Box::new(body) })
            }
            "setPos" => {
                self.bump();
                let set = self.parens(Self::set)?;
                Ok(Strategy::SetPos { set })
            }
            "setBan" => {
                self.bump();
                let set = self.parens(Self::set)?;
                Ok(Strategy::SetBan { set })
            }
            w if RESERVED.contains(&w) => Err(self.error(format!("`{w}` cannot be used as a strategy"))),
            _ => {
                if *self.peek2() == Tok::LParen {
                    return Err(self.error(format!("unknown construct `{word}`")));
                }
                Ok(Strategy::One { rule: self.rule_name()? })
            }
        }
    }

    fn rule_name(&mut self) -> Result<String, SyntaxError> {
        match self.keyword() {
            Some(w) if !RESERVED.contains(&w) => {
                let w = w.to_owned();
                self.bump();
                Ok(w)
            }
            _ => Err(self.unexpected("a rule name")),
        }
    }

    fn cond(&mut self) -> Result<Cond, SyntaxError> {
        match self.keyword() {
            Some("not") => {
                self.bump();
                let c = self.parens(Self::cond)?;
                Ok(Cond::Not { cond: Box::new(c) })
            }
            Some("isEmpty") => {
                self.bump();
                let set = self.parens(Self::set)?;
                Ok(Cond::IsEmpty { set })
            }
            _ => Ok(Cond::Strat { strategy: Box::new(self.strategy()?) }),
        }
    }

    fn set(&mut self) -> Result<SetExpr, SyntaxError> {
        let mut left = self.set_atom()?;
        loop {
            let union = match self.peek() {
                Tok::Cup => true,
                Tok::Minus => false,
                _ => return Ok(left),
            };
            self.bump();
            let right = Box::new(self.set_atom()?);
            let l = Box::new(left);
            left = if union { SetExpr::Union { left: l, right } } else { SetExpr::Diff { left: l, right } };
        }
    }

    fn set_atom(&mut self) -> Result<SetExpr, SyntaxError> {
        if *self.peek() == Tok::LParen {
            return self.parens(Self::set);
        }
        let Some(word) = self.keyword().map(str::to_owned) else {
            return Err(self.unexpected("a set expression"));
        };
        let simple = match word.as_str() {
            "crtGraph" => Some(SetExpr::CrtGraph),
            "crtPos" => Some(SetExpr::CrtPos),
            "crtBan" => Some(SetExpr::CrtBan),
            _ => None,
        };
        if let Some(s) = simple {
            self.bump();
            return Ok(s);
        }
        match word.as_str() {
            "all" | "one" => {
                self.bump();
                let set = Box::new(self.parens(Self::set)?);
                Ok(if word == "all" { SetExpr::All { set } } else { SetExpr::One { set } })
            }
            "property" | "ngb" => {
                self.bump();
                let (src, kind, pred) = self.parens(|p| {
                    let src = Box::new(p.set()?);
                    p.expect(Tok::Comma)?;
                    let kind = p.kind()?;
                    p.expect(Tok::Comma)?;
                    Ok((src, kind, p.pred()?))
                })?;
                Ok(if word == "property" {
                    SetExpr::Property { src, kind, pred }
                } else {
                    SetExpr::Ngb { src, kind, pred }
                })
            }
            _ => Err(self.error(format!("unknown set construct `{word}`"))),
        }
    }

    fn kind(&mut self) -> Result<ElemKind, SyntaxError> {
        let k = match self.keyword() {
            Some("node") => ElemKind::Node,
            Some("edge") => ElemKind::Edge,
            _ => return Err(self.unexpected("`node` or `edge`")),
        };
        self.bump();
        Ok(k)
    }

    fn pred(&mut self) -> Result<Pred, SyntaxError> {
        let attr = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("an attribute name")),
        };
        self.bump();
        self.expect(Tok::EqEq)?;
        let value = match self.peek() {
            Tok::Str(s) => Value::Str(s.clone()),
            Tok::Int(i) => Value::Int(*i),
            Tok::Ident(b) if b == "true" || b == "false" => Value::Bool(b == "true"),
            _ => return Err(self.unexpected("a literal")),
        };
        self.bump();
        Ok(Pred { attr, value })
    }
}

/// Parse strategy text. Whitespace and newlines are insignificant.
pub fn parse_strategy(text: &str) -> Result<Strategy, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let s = p.strategy()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("`;` or end of input"));
    }
    Ok(s)
}

impl std::str::FromStr for Strategy {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_strategy(s)
    }
}
