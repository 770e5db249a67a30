//! Text format for scalar expressions, metrics and vector fields.
//!
//! A metric is written as a quadratic form in the differentials, for
//! example `x3^a * (-2*dx1*dx3 + dx2^2)`. Mixed terms are symmetrized, so
//! `c*dx1*dx2` puts `c/2` in both `g12` and `g21`. The file grammar is in
//! `docs/metric-format.md`.

mod ast;
mod eval;
mod metric;
mod parser;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::jet::JetError;

pub use ast::{BinOp, Func, ScalarExpr};
pub use eval::{eval_f64, eval_jet, eval_metric_jets, eval_metric_values, MetricJets, Params};
pub use metric::{MetricSpec, Piece, PiecewiseMetricSpec};
pub use parser::Pos;

use parser::{lex, Parser, Tok};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown identifier `{name}` at line {line}, column {col}")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("line {line}: {msg}")]
    Metric { line: usize, msg: String },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("x3 = {0} lies outside every piece of the metric")]
    OutsideDomain(f64),
    #[error("metric at {point:?} is degenerate (eigenvalues {eigenvalues:?})")]
    Degenerate { point: [f64; 3], eigenvalues: [f64; 3] },
    #[error("metric at {point:?} is not Lorentzian (eigenvalues {eigenvalues:?})")]
    Signature { point: [f64; 3], eigenvalues: [f64; 3] },
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl DslError {
    pub(crate) fn syntax(pos: Pos, msg: String) -> Self {
        DslError::Syntax { line: pos.line, col: pos.col, msg }
    }
}

/// Parse a scalar expression in `x1, x2, x3` and parameters.
pub fn parse_scalar(text: &str) -> Result<ScalarExpr, DslError> {
    let mut p = Parser::new(lex(text, 1, 1)?);
    let node = p.expr()?;
    p.finish()?;
    node.into_scalar()
}

/// Parse a single quadratic-form expression such as `-2*dx1*dx3 + dx2^2`.
pub fn parse_metric(text: &str) -> Result<MetricSpec, DslError> {
    parse_metric_at(text, 1, 1)
}

fn parse_metric_at(text: &str, line: usize, col: usize) -> Result<MetricSpec, DslError> {
    let mut p = Parser::new(lex(text, line, col)?);
    let node = p.expr()?;
    p.finish()?;
    MetricSpec::from_node(node, line)
}

/// Either a single metric or an `x3`-stratified family of metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricBody {
    Single(MetricSpec),
    Piecewise(PiecewiseMetricSpec),
}

impl MetricBody {
    /// The metric that applies at `x3`.
    pub fn spec_at(&self, x3: f64) -> Result<&MetricSpec, DslError> {
        match self {
            MetricBody::Single(m) => Ok(m),
            MetricBody::Piecewise(p) => p.spec_at(x3),
        }
    }

    pub fn params(&self) -> std::collections::BTreeSet<String> {
        match self {
            MetricBody::Single(m) => m.params(),
            MetricBody::Piecewise(p) => p.pieces().iter().flat_map(|pc| pc.metric.params()).collect(),
        }
    }
}

/// Contents of a metric file: parameter defaults and the metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFile {
    pub params: Params,
    pub body: MetricBody,
}

/// A named vector field `(c1, c2, c3)` in coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub name: String,
    pub components: [ScalarExpr; 3],
}

/// Contents of a vector-field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub params: Params,
    pub fields: Vec<VectorField>,
}

enum Stmt {
    Param(String, f64),
    Metric(String, usize, usize),
    Piece(f64, f64, String, usize, usize),
    Field(VectorField),
}

fn statements(text: &str) -> Result<Vec<(usize, Stmt)>, DslError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let toks = lex(body, line, 1)?;
        let mut p = Parser::new(toks);
        let head_pos = p.pos();
        let head = p.ident()?;
        let stmt = match head.as_str() {
            "param" => {
                let name = p.ident()?;
                p.expect('=')?;
                let value_node = p.expr()?;
                p.finish()?;
                let value = eval_f64(&value_node.into_scalar()?, [0.0; 3], &Params::new())?;
                Stmt::Param(name, value)
            }
            "metric" => {
                p.expect('=')?;
                let col = p.pos().col;
                Stmt::Metric(tail(body, col), line, col)
            }
            "piece" => {
                p.expect_keyword("on")?;
                p.expect('(')?;
                let a = signed_number(&mut p)?;
                p.expect(',')?;
                let b = signed_number(&mut p)?;
                p.expect(']')?;
                p.expect(':')?;
                let col = p.pos().col;
                Stmt::Piece(a, b, tail(body, col), line, col)
            }
            "field" => {
                let name = p.ident()?;
                p.expect('=')?;
                p.expect('(')?;
                let c1 = p.expr()?.into_scalar()?;
                p.expect(',')?;
                let c2 = p.expr()?.into_scalar()?;
                p.expect(',')?;
                let c3 = p.expr()?.into_scalar()?;
                p.expect(')')?;
                p.finish()?;
                Stmt::Field(VectorField { name, components: [c1, c2, c3] })
            }
            _ => return Err(DslError::syntax(head_pos, format!("expected `param`, `metric`, `piece` or `field`, found `{head}`"))),
        };
        out.push((line, stmt));
    }
    Ok(out)
}

fn tail(body: &str, col: usize) -> String {
    body.chars().skip(col - 1).collect()
}

fn signed_number(p: &mut Parser) -> Result<f64, DslError> {
    let neg = p.eat('-');
    let pos = p.pos();
    let v = match p.bump() {
        Tok::Num(v) => v,
        Tok::Ident(s) if s == "inf" => f64::INFINITY,
        _ => return Err(DslError::syntax(pos, "expected a number".to_string())),
    };
    Ok(if neg { -v } else { v })
}

/// Parse a metric file: `param` lines plus either one `metric =` line or
/// one or more `piece on (a, b]:` lines.
pub fn parse_metric_file(text: &str) -> Result<MetricFile, DslError> {
    let mut params = Params::new();
    let mut single = None;
    let mut pieces = Vec::new();
    let mut last_line = 0;
    for (line, stmt) in statements(text)? {
        last_line = line;
        match stmt {
            Stmt::Param(name, v) => {
                params.insert(name, v);
            }
            Stmt::Metric(src, l, c) => {
                if single.is_some() {
                    return Err(DslError::Metric { line, msg: "more than one `metric` line".into() });
                }
                single = Some(parse_metric_at(&src, l, c)?);
            }
            Stmt::Piece(a, b, src, l, c) => pieces.push(Piece { lower: a, upper: b, metric: parse_metric_at(&src, l, c)? }),
            Stmt::Field(_) => return Err(DslError::Metric { line, msg: "`field` lines belong in a vector-field file".into() }),
        }
    }
    let body = match (single, pieces.is_empty()) {
        (Some(m), true) => MetricBody::Single(m),
        (None, false) => MetricBody::Piecewise(PiecewiseMetricSpec::new(pieces).map_err(|msg| DslError::Metric { line: last_line, msg })?),
        (Some(_), false) => {
            return Err(DslError::Metric { line: last_line, msg: "a file has either a `metric` line or `piece` lines, not both".into() })
        }
        (None, true) => return Err(DslError::Metric { line: last_line.max(1), msg: "no metric given".into() }),
    };
    Ok(MetricFile { params, body })
}

/// Parse a vector-field file: `param` lines and `field NAME = (c1, c2, c3)` lines.
pub fn parse_field_file(text: &str) -> Result<FieldFile, DslError> {
    let mut params = Params::new();
    let mut fields = Vec::new();
    for (line, stmt) in statements(text)? {
        match stmt {
            Stmt::Param(name, v) => {
                params.insert(name, v);
            }
            Stmt::Field(f) => fields.push(f),
            _ => return Err(DslError::Metric { line, msg: "only `param` and `field` lines are allowed here".into() }),
        }
    }
    if fields.is_empty() {
        return Err(DslError::Metric { line: 1, msg: "no field given".into() });
    }
    Ok(FieldFile { params, fields })
}

/// Merge parameter maps, later maps winning.
pub fn merge_params(base: &Params, overrides: &BTreeMap<String, f64>) -> Params {
    let mut out = base.clone();
    for (k, v) in overrides {
        out.insert(k.clone(), *v);
    }
    out
}
