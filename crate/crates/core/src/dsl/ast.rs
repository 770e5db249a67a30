use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Scalar expression in the chart coordinates `x1, x2, x3` and named parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Num(f64),
    /// Coordinate `x_k`, `k` in `1..=3`.
    Coord(usize),
    Param(String),
    Neg(Box<ScalarExpr>),
    Binary(BinOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Call(Func, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn num(v: f64) -> Self {
        ScalarExpr::Num(v)
    }

    pub fn coord(k: usize) -> Self {
        assert!((1..=3).contains(&k), "coordinate index out of range");
        ScalarExpr::Coord(k)
    }

    pub fn binary(op: BinOp, a: ScalarExpr, b: ScalarExpr) -> Self {
        ScalarExpr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: ScalarExpr, b: ScalarExpr) -> Self {
        Self::binary(BinOp::Add, a, b)
    }

    pub fn mul(a: ScalarExpr, b: ScalarExpr) -> Self {
        Self::binary(BinOp::Mul, a, b)
    }

    /// Parameter names referenced anywhere in the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    pub(crate) fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            ScalarExpr::Param(p) => {
                out.insert(p.clone());
            }
            ScalarExpr::Neg(a) | ScalarExpr::Call(_, a) => a.collect_params(out),
            ScalarExpr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            ScalarExpr::Num(_) | ScalarExpr::Coord(_) => {}
        }
    }

    /// True when no coordinate appears.
    pub fn is_coordinate_free(&self) -> bool {
        match self {
            ScalarExpr::Coord(_) => false,
            ScalarExpr::Num(_) | ScalarExpr::Param(_) => true,
            ScalarExpr::Neg(a) | ScalarExpr::Call(_, a) => a.is_coordinate_free(),
            ScalarExpr::Binary(_, a, b) => a.is_coordinate_free() && b.is_coordinate_free(),
        }
    }

    /// Integer value if the expression is a literal integer, possibly negated.
    pub(crate) fn literal_integer(&self) -> Option<i32> {
        match self {
            ScalarExpr::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Some(*v as i32),
            ScalarExpr::Neg(a) => a.literal_integer().map(|n| -n),
            _ => None,
        }
    }
}

/// Fully parenthesised output that parses back to the same tree.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Num(v) if *v < 0.0 => write!(f, "(0 - {})", -v),
            ScalarExpr::Num(v) => write!(f, "{v}"),
            ScalarExpr::Coord(k) => write!(f, "x{k}"),
            ScalarExpr::Param(p) => write!(f, "{p}"),
            ScalarExpr::Neg(a) => write!(f, "(-{a})"),
            ScalarExpr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ScalarExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
