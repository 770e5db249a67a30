//! Lexer and recursive-descent parser for scalar and metric expressions.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`, `* /`, `+ -`.
//! So `-x^2` is `-(x^2)` and `x^-1` is `x^(-1)`.

use super::ast::{BinOp, Func, ScalarExpr};
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, Pos)>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col: col0 + i };
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| DslError::syntax(pos, format!("malformed number `{s}`")))?;
            out.push((Tok::Num(v), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "+-*/^(),=:[]".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
        } else {
            return Err(DslError::syntax(pos, format!("unexpected character `{c}`")));
        }
    }
    out.push((Tok::End, Pos { line, col: col0 + chars.len() }));
    Ok(out)
}

/// Parse tree that may still contain differentials `dx1..dx3`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    Coord(usize),
    Diff(usize, Pos),
    Param(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub(crate) fn into_scalar(self) -> Result<ScalarExpr, DslError> {
        Ok(match self {
            Node::Num(v) => ScalarExpr::Num(v),
            Node::Coord(k) => ScalarExpr::Coord(k),
            Node::Param(p) => ScalarExpr::Param(p),
            Node::Diff(k, pos) => return Err(DslError::syntax(pos, format!("differential dx{k} is only allowed in a metric"))),
            Node::Neg(a) => ScalarExpr::Neg(Box::new(a.into_scalar()?)),
            Node::Binary(op, a, b) => ScalarExpr::Binary(op, Box::new(a.into_scalar()?), Box::new(b.into_scalar()?)),
            Node::Call(f, a) => ScalarExpr::Call(f, Box::new(a.into_scalar()?)),
        })
    }
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Pos)>) -> Self {
        Self { toks, at: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(DslError::syntax(self.pos(), format!("expected `{c}`, found {}", describe(self.peek()))))
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            t => Err(DslError::syntax(self.pos(), format!("expected `{kw}`, found {}", describe(t)))),
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, DslError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            t => {
                self.at -= 1;
                Err(DslError::syntax(self.pos(), format!("expected a name, found {}", describe(&t))))
            }
        }
    }

    pub(crate) fn finish(&self) -> Result<(), DslError> {
        match self.peek() {
            Tok::End => Ok(()),
            t => Err(DslError::syntax(self.pos(), format!("unexpected {}", describe(t)))),
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, DslError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, DslError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, DslError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    let func =
                        Func::from_name(&name).ok_or(DslError::UnknownIdentifier { line: pos.line, col: pos.col, name: name.clone() })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                classify_ident(&name, pos)
            }
            t => {
                self.at = self.at.saturating_sub(1);
                Err(DslError::syntax(pos, format!("expected an expression, found {}", describe(&t))))
            }
        }
    }
}

fn classify_ident(name: &str, pos: Pos) -> Result<Node, DslError> {
    let unknown = || DslError::UnknownIdentifier { line: pos.line, col: pos.col, name: name.to_string() };
    if let Some(rest) = name.strip_prefix("dx") {
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            return match rest {
                "1" | "2" | "3" => Ok(Node::Diff(rest.parse().unwrap(), pos)),
                _ => Err(unknown()),
            };
        }
    }
    if let Some(rest) = name.strip_prefix('x') {
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            return match rest {
                "1" | "2" | "3" => Ok(Node::Coord(rest.parse().unwrap())),
                _ => Err(unknown()),
            };
        }
    }
    if Func::from_name(name).is_some() {
        return Err(DslError::syntax(pos, format!("function `{name}` needs an argument in parentheses")));
    }
    Ok(Node::Param(name.to_string()))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}
