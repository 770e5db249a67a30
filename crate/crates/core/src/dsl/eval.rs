use std::collections::BTreeMap;

use nalgebra::{Matrix3, SymmetricEigen};

use super::ast::{BinOp, Func, ScalarExpr};
use super::metric::MetricSpec;
use super::DslError;
use crate::jet::{Jet, MAX_ORDER};
use crate::JetError;

/// Parameter bindings.
pub type Params = BTreeMap<String, f64>;

/// Metric components as jets, `g[i][j]` with 0-based indices.
pub type MetricJets = [[Jet; 3]; 3];

fn param(name: &str, params: &Params) -> Result<f64, DslError> {
    params.get(name).copied().ok_or_else(|| DslError::UnboundParameter(name.to_string()))
}

/// Plain floating-point evaluation at a point.
pub fn eval_f64(expr: &ScalarExpr, point: [f64; 3], params: &Params) -> Result<f64, DslError> {
    Ok(match expr {
        ScalarExpr::Num(v) => *v,
        ScalarExpr::Coord(k) => point[k - 1],
        ScalarExpr::Param(p) => param(p, params)?,
        ScalarExpr::Neg(a) => -eval_f64(a, point, params)?,
        ScalarExpr::Call(f, a) => {
            let x = eval_f64(a, point, params)?;
            match f {
                Func::Exp => x.exp(),
                Func::Ln if x > 0.0 => x.ln(),
                Func::Ln => return Err(DslError::Domain { func: "ln", value: x }),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
            }
        }
        ScalarExpr::Binary(op, a, b) => {
            let x = eval_f64(a, point, params)?;
            match op {
                BinOp::Add => x + eval_f64(b, point, params)?,
                BinOp::Sub => x - eval_f64(b, point, params)?,
                BinOp::Mul => x * eval_f64(b, point, params)?,
                BinOp::Div => {
                    let y = eval_f64(b, point, params)?;
                    if y == 0.0 {
                        return Err(DslError::Domain { func: "division", value: y });
                    }
                    x / y
                }
                BinOp::Pow => match b.literal_integer() {
                    Some(n) if x == 0.0 && n < 0 => return Err(DslError::Domain { func: "power", value: x }),
                    Some(n) => x.powi(n),
                    None if x > 0.0 => x.powf(eval_f64(b, point, params)?),
                    None => return Err(DslError::Domain { func: "real power", value: x }),
                },
            }
        }
    })
}

struct JetCtx<'a> {
    seeds: [Jet; 3],
    params: &'a Params,
    order: usize,
}

impl JetCtx<'_> {
    fn eval(&self, expr: &ScalarExpr) -> Result<Jet, DslError> {
        Ok(match expr {
            ScalarExpr::Num(v) => Jet::constant(*v, self.order)?,
            ScalarExpr::Coord(k) => self.seeds[k - 1].clone(),
            ScalarExpr::Param(p) => Jet::constant(param(p, self.params)?, self.order)?,
            ScalarExpr::Neg(a) => -&self.eval(a)?,
            ScalarExpr::Call(f, a) => {
                let x = self.eval(a)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln().map_err(domain)?,
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
            ScalarExpr::Binary(op, a, b) => {
                let x = self.eval(a)?;
                match op {
                    BinOp::Add => x.try_add(&self.eval(b)?)?,
                    BinOp::Sub => x.try_sub(&self.eval(b)?)?,
                    BinOp::Mul => x.try_mul(&self.eval(b)?)?,
                    BinOp::Div => x.try_div(&self.eval(b)?).map_err(domain)?,
                    BinOp::Pow => self.pow(x, b)?,
                }
            }
        })
    }

    fn pow(&self, base: Jet, exponent: &ScalarExpr) -> Result<Jet, DslError> {
        if let Some(n) = exponent.literal_integer() {
            return base.powi(n).map_err(domain);
        }
        if exponent.is_coordinate_free() {
            let r = eval_f64(exponent, [0.0; 3], self.params)?;
            return base.pow_real(r).map_err(domain);
        }
        let ln = base.ln().map_err(|_| DslError::Domain { func: "real power", value: base.value() })?;
        Ok(ln.try_mul(&self.eval(exponent)?)?.exp())
    }
}

fn domain(e: JetError) -> DslError {
    match e {
        JetError::Domain { func, value } => DslError::Domain { func, value },
        JetError::DivisionByZero => DslError::Domain { func: "division", value: 0.0 },
        e => DslError::Jet(e),
    }
}

/// Jet of an expression at `point`, truncated at `order`.
pub fn eval_jet(expr: &ScalarExpr, point: [f64; 3], order: usize, params: &Params) -> Result<Jet, DslError> {
    ctx(point, order, params)?.eval(expr)
}

fn ctx(point: [f64; 3], order: usize, params: &Params) -> Result<JetCtx<'_>, DslError> {
    if order > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(order).into());
    }
    let seeds = [Jet::seed_coordinate(1, point, order)?, Jet::seed_coordinate(2, point, order)?, Jet::seed_coordinate(3, point, order)?];
    Ok(JetCtx { seeds, params, order })
}

/// Constant terms of the metric at `point`, without the signature check.
pub fn eval_metric_values(spec: &MetricSpec, point: [f64; 3], params: &Params) -> Result<Matrix3<f64>, DslError> {
    let mut g = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = eval_f64(spec.component(i + 1, j + 1), point, params)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Metric component jets at `point`. The constant-term matrix must be
/// nondegenerate with one negative and two positive eigenvalues.
pub fn eval_metric_jets(spec: &MetricSpec, point: [f64; 3], order: usize, params: &Params) -> Result<MetricJets, DslError> {
    for p in spec.params() {
        param(&p, params)?;
    }
    let c = ctx(point, order, params)?;
    let mut upper: Vec<Jet> = Vec::with_capacity(6);
    for i in 1..=3 {
        for j in i..=3 {
            upper.push(c.eval(spec.component(i, j))?);
        }
    }
    let at = |i: usize, j: usize| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = [[0, 1, 2], [1, 3, 4], [2, 4, 5]][i][j];
        upper[k].clone()
    };
    let g: MetricJets = std::array::from_fn(|i| std::array::from_fn(|j| at(i, j)));
    check_signature(&Matrix3::from_fn(|i, j| g[i][j].value()), point)?;
    Ok(g)
}

pub(crate) fn check_signature(g: &Matrix3<f64>, point: [f64; 3]) -> Result<(), DslError> {
    let eig = SymmetricEigen::new(*g).eigenvalues;
    let eigenvalues = [eig[0], eig[1], eig[2]];
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() || eigenvalues.iter().any(|v| v.abs() <= 1e-12 * scale) || scale == 0.0 {
        return Err(DslError::Degenerate { point, eigenvalues });
    }
    let negatives = eigenvalues.iter().filter(|v| **v < 0.0).count();
    if negatives != 1 {
        return Err(DslError::Signature { point, eigenvalues });
    }
    Ok(())
}
