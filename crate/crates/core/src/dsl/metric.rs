use std::collections::BTreeSet;
use std::fmt;

use super::ast::{BinOp, ScalarExpr};
use super::parser::Node;
use super::DslError;

/// Symmetric metric `g_ij dx_i dx_j` with each component stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    /// Upper triangle in the order `g11, g12, g13, g22, g23, g33`.
    upper: [ScalarExpr; 6],
}

fn slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (1, 1) => 0,
        (1, 2) => 1,
        (1, 3) => 2,
        (2, 2) => 3,
        (2, 3) => 4,
        (3, 3) => 5,
        _ => panic!("metric index ({i}, {j}) out of range"),
    }
}

impl MetricSpec {
    /// Build from components `g[i][j]` (0-based); only the upper triangle is read.
    pub fn from_upper(g: [[ScalarExpr; 3]; 3]) -> Self {
        let [r0, r1, r2] = g;
        let [g11, g12, g13] = r0;
        let [_, g22, g23] = r1;
        let [_, _, g33] = r2;
        Self { upper: [g11, g12, g13, g22, g23, g33] }
    }

    /// Component `g_ij` with 1-based indices.
    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.upper[slot(i, j)]
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.upper {
            c.collect_params(&mut out);
        }
        out
    }

    /// The same metric multiplied by a scalar function.
    pub fn scaled(&self, factor: &ScalarExpr) -> Self {
        Self {
            upper: self.upper.clone().map(|c| match c {
                ScalarExpr::Num(v) if v == 0.0 => c,
                c => ScalarExpr::mul(factor.clone(), c),
            }),
        }
    }

    pub(crate) fn from_node(node: Node, line: usize) -> Result<Self, DslError> {
        let q = QForm::from_node(node, line)?;
        let err = |msg: &str| DslError::Metric { line, msg: msg.to_string() };
        if q.c0.is_some() || q.c1.iter().any(Option::is_some) {
            return Err(err("every term of a metric must contain exactly two differentials"));
        }
        let mut upper: [ScalarExpr; 6] = std::array::from_fn(|_| ScalarExpr::Num(0.0));
        let mut any = false;
        for i in 1..=3 {
            for j in i..=3 {
                if let Some(c) = q.c2[i - 1][j - 1].clone() {
                    any = true;
                    upper[slot(i, j)] = if i == j { c } else { half(c) };
                }
            }
        }
        if !any {
            return Err(err("metric has no components"));
        }
        Ok(Self { upper })
    }
}

fn half(c: ScalarExpr) -> ScalarExpr {
    match c {
        ScalarExpr::Num(v) => ScalarExpr::Num(v / 2.0),
        c => ScalarExpr::mul(ScalarExpr::Num(0.5), c),
    }
}

/// Prints as a sum of `g_ij*dxi*dxj` terms that parses back to the same metric.
impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 1..=3 {
            for j in i..=3 {
                let c = self.component(i, j);
                if matches!(c, ScalarExpr::Num(v) if *v == 0.0) {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                if i == j {
                    write!(f, "{c}*dx{i}*dx{j}")?;
                } else {
                    write!(f, "{c}*dx{i}*dx{j} + {c}*dx{j}*dx{i}")?;
                }
            }
        }
        if first {
            write!(f, "0*dx1*dx1")?;
        }
        Ok(())
    }
}

/// One stratum `lower < x3 <= upper` of a piecewise metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lower: f64,
    pub upper: f64,
    pub metric: MetricSpec,
}

/// Metrics on consecutive half-open `x3`-intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMetricSpec {
    pieces: Vec<Piece>,
}

impl PiecewiseMetricSpec {
    /// Pieces must be given in increasing order with each upper bound equal
    /// to the next lower bound.
    pub fn new(pieces: Vec<Piece>) -> Result<Self, String> {
        if pieces.is_empty() {
            return Err("a piecewise metric needs at least one piece".into());
        }
        for p in &pieces {
            if !(p.lower < p.upper) {
                return Err(format!("empty interval ({}, {}]", p.lower, p.upper));
            }
        }
        for w in pieces.windows(2) {
            if w[0].upper != w[1].lower {
                return Err(format!(
                    "pieces ({}, {}] and ({}, {}] do not share a boundary point",
                    w[0].lower, w[0].upper, w[1].lower, w[1].upper
                ));
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn boundaries(&self) -> Vec<f64> {
        self.pieces.windows(2).map(|w| w[0].upper).collect()
    }

    pub fn spec_at(&self, x3: f64) -> Result<&MetricSpec, DslError> {
        self.pieces.iter().find(|p| p.lower < x3 && x3 <= p.upper).map(|p| &p.metric).ok_or(DslError::OutsideDomain(x3))
    }
}

impl fmt::Display for PiecewiseMetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pieces {
            writeln!(f, "piece on ({}, {}]: {}", p.lower, p.upper, p.metric)?;
        }
        Ok(())
    }
}

/// Polynomial of degree at most 2 in the differentials with scalar coefficients.
#[derive(Debug, Clone, Default)]
struct QForm {
    c0: Option<ScalarExpr>,
    c1: [Option<ScalarExpr>; 3],
    /// Upper triangle, `c2[i][j]` with `i <= j`.
    c2: [[Option<ScalarExpr>; 3]; 3],
}

fn add(a: Option<ScalarExpr>, b: Option<ScalarExpr>) -> Option<ScalarExpr> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(ScalarExpr::Num(x)), Some(ScalarExpr::Num(y))) => Some(ScalarExpr::Num(x + y)),
        (Some(x), Some(y)) => Some(ScalarExpr::add(x, y)),
    }
}

fn mul(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    match (a, b) {
        (ScalarExpr::Num(x), ScalarExpr::Num(y)) => ScalarExpr::Num(x * y),
        (ScalarExpr::Num(x), e) | (e, ScalarExpr::Num(x)) if *x == 1.0 => e.clone(),
        _ => ScalarExpr::mul(a.clone(), b.clone()),
    }
}

fn neg(a: ScalarExpr) -> ScalarExpr {
    match a {
        ScalarExpr::Num(v) => ScalarExpr::Num(-v),
        a => ScalarExpr::Neg(Box::new(a)),
    }
}

impl QForm {
    fn scalar(e: ScalarExpr) -> Self {
        Self { c0: Some(e), ..Default::default() }
    }

    fn degree(&self) -> usize {
        if self.c2.iter().flatten().any(Option::is_some) {
            2
        } else if self.c1.iter().any(Option::is_some) {
            1
        } else {
            0
        }
    }

    fn as_scalar(&self) -> Option<ScalarExpr> {
        if self.degree() == 0 {
            Some(self.c0.clone().unwrap_or(ScalarExpr::Num(0.0)))
        } else {
            None
        }
    }

    fn map(self, f: &impl Fn(ScalarExpr) -> ScalarExpr) -> Self {
        Self { c0: self.c0.map(f), c1: self.c1.map(|c| c.map(f)), c2: self.c2.map(|row| row.map(|c| c.map(f))) }
    }

    fn plus(self, other: Self) -> Self {
        let mut out = Self { c0: add(self.c0, other.c0), ..Default::default() };
        for (k, (a, b)) in self.c1.into_iter().zip(other.c1).enumerate() {
            out.c1[k] = add(a, b);
        }
        for (i, (ra, rb)) in self.c2.into_iter().zip(other.c2).enumerate() {
            for (j, (a, b)) in ra.into_iter().zip(rb).enumerate() {
                out.c2[i][j] = add(a, b);
            }
        }
        out
    }

    fn times(&self, other: &Self, line: usize) -> Result<Self, DslError> {
        if self.degree() + other.degree() > 2 {
            return Err(DslError::Metric { line, msg: "a term has more than two differentials".into() });
        }
        let mut out = Self::default();
        let terms = |q: &Self| {
            let mut v: Vec<(Vec<usize>, ScalarExpr)> = Vec::new();
            if let Some(c) = &q.c0 {
                v.push((vec![], c.clone()));
            }
            for (k, c) in q.c1.iter().enumerate() {
                if let Some(c) = c {
                    v.push((vec![k], c.clone()));
                }
            }
            for i in 0..3 {
                for j in i..3 {
                    if let Some(c) = &q.c2[i][j] {
                        v.push((vec![i, j], c.clone()));
                    }
                }
            }
            v
        };
        for (da, ca) in terms(self) {
            for (db, cb) in terms(other) {
                let c = Some(mul(&ca, &cb));
                let mut d = da.clone();
                d.extend(&db);
                d.sort_unstable();
                match d.as_slice() {
                    [] => out.c0 = add(out.c0.take(), c),
                    [k] => out.c1[*k] = add(out.c1[*k].take(), c),
                    [i, j] => out.c2[*i][*j] = add(out.c2[*i][*j].take(), c),
                    _ => unreachable!("degree checked above"),
                }
            }
        }
        Ok(out)
    }

    fn from_node(node: Node, line: usize) -> Result<Self, DslError> {
        let scalar_only = |q: Self, what: &str| {
            q.as_scalar().ok_or_else(|| DslError::Metric { line, msg: format!("differentials cannot appear {what}") })
        };
        Ok(match node {
            Node::Num(v) => Self::scalar(ScalarExpr::Num(v)),
            Node::Coord(k) => Self::scalar(ScalarExpr::Coord(k)),
            Node::Param(p) => Self::scalar(ScalarExpr::Param(p)),
            Node::Diff(k, _) => {
                let mut q = Self::default();
                q.c1[k - 1] = Some(ScalarExpr::Num(1.0));
                q
            }
            Node::Neg(a) => Self::from_node(*a, line)?.map(&neg),
            Node::Call(f, a) => {
                let arg = scalar_only(Self::from_node(*a, line)?, "inside a function")?;
                Self::scalar(ScalarExpr::Call(f, Box::new(arg)))
            }
            Node::Binary(op, a, b) => {
                let qa = Self::from_node(*a, line)?;
                let qb = Self::from_node(*b, line)?;
                match op {
                    BinOp::Add => qa.plus(qb),
                    BinOp::Sub => qa.plus(qb.map(&neg)),
                    BinOp::Mul => qa.times(&qb, line)?,
                    BinOp::Div => {
                        let d = scalar_only(qb, "in a denominator")?;
                        qa.map(&|c| ScalarExpr::binary(BinOp::Div, c, d.clone()))
                    }
                    BinOp::Pow => {
                        let e = scalar_only(qb, "in an exponent")?;
                        if qa.degree() == 0 {
                            let base = qa.as_scalar().expect("degree 0");
                            Self::scalar(ScalarExpr::binary(BinOp::Pow, base, e))
                        } else {
                            match e.literal_integer() {
                                Some(0) => Self::scalar(ScalarExpr::Num(1.0)),
                                Some(1) => qa,
                                Some(2) => qa.times(&qa, line)?,
                                _ => {
                                    return Err(DslError::Metric {
                                        line,
                                        msg: "an expression with differentials can only be raised to the power 0, 1 or 2".into(),
                                    })
                                }
                            }
                        }
                    }
                }
            }
        })
    }
}
