//! Explicit metric families, their Killing fields, the glued metric and the
//! torus strip, plus the per-point analysis pipeline.

mod analyze;

use serde::Serialize;
use thiserror::Error;

use crate::curvature::CurvatureError;
use crate::dsl::{
    eval_jet, eval_metric_jets, parse_metric, parse_scalar, DslError, MetricSpec, Params, Piece, PiecewiseMetricSpec, VectorField,
};
use crate::jet::Jet;
use crate::killing::KillingError;

pub use analyze::{
    analyze, analyze_point, box_grid, parse_points, AnalysisOptions, AnalysisReport, EtaSample, PointReport, RankConstancy, Residuals,
    SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("alpha = 0 gives the flat metric g0; use it directly")]
    AlphaZero,
    #[error("nu(alpha) has a pole at alpha = -1")]
    AlphaPole,
    #[error("{0}")]
    Precondition(String),
    #[error("no gluing point z > 1 for alpha1 = {alpha1}, alpha2 = {alpha2}")]
    NoAdmissibleZ { alpha1: f64, alpha2: f64 },
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Killing(#[from] KillingError),
}

const G0: &str = "-2*dx1*dx3 + dx2^2";

pub fn g0_metric() -> MetricSpec {
    parse_metric(G0).expect("fixed text parses")
}

/// `x3^α g0`.
pub fn galpha_metric(alpha: f64) -> Result<MetricSpec, ScenarioError> {
    if alpha == 0.0 {
        return Err(ScenarioError::AlphaZero);
    }
    Ok(parse_metric(&format!("x3^({alpha:?}) * ({G0})"))?)
}

fn field(name: &str, c: [&str; 3]) -> VectorField {
    VectorField { name: name.to_string(), components: c.map(|s| parse_scalar(s).expect("fixed text parses")) }
}

/// `X = x2∂1 + x3∂2`, `Y = ∂2`, `Z = ∂1`,
/// `T = 2(α+1)/α x1∂1 + x2∂2 − (2/α) x3∂3`.
pub fn galpha_killing_fields(alpha: f64) -> Result<[VectorField; 4], ScenarioError> {
    if alpha == 0.0 {
        return Err(ScenarioError::AlphaZero);
    }
    let c1 = 2.0 * (alpha + 1.0) / alpha;
    let c3 = -2.0 / alpha;
    Ok([
        field("X", ["x2", "x3", "0"]),
        field("Y", ["0", "1", "0"]),
        field("Z", ["1", "0", "0"]),
        field("T", [&format!("({c1:?})*x1"), "x2", &format!("({c3:?})*x3")]),
    ])
}

/// `(1/4)(1 − 1/(α+1)²)`.
pub fn nu_of_alpha(alpha: f64) -> Result<f64, ScenarioError> {
    if alpha == -1.0 {
        return Err(ScenarioError::AlphaPole);
    }
    Ok(0.25 * (1.0 - 1.0 / ((alpha + 1.0) * (alpha + 1.0))))
}

pub fn field_jets(field: &VectorField, point: [f64; 3], order: usize, params: &Params) -> Result<[Jet; 3], ScenarioError> {
    let [a, b, c] = &field.components;
    Ok([eval_jet(a, point, order, params)?, eval_jet(b, point, order, params)?, eval_jet(c, point, order, params)?])
}

fn d1(j: &Jet, axis: usize) -> f64 {
    let mut idx = [0; 3];
    idx[axis] = 1;
    j.extract_derivative(idx).unwrap_or(0.0)
}

/// Largest `|(L_X g)_ij| = |X^k ∂_k g_ij + g_kj ∂_i X^k + g_ik ∂_j X^k|`
/// over the points.
pub fn verify_killing_field(metric: &MetricSpec, params: &Params, field: &VectorField, points: &[[f64; 3]]) -> Result<f64, ScenarioError> {
    let mut worst = 0.0f64;
    for &p in points {
        let g = eval_metric_jets(metric, p, 1, params)?;
        let x = field_jets(field, p, 1, params)?;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += x[k].value() * d1(&g[i][j], k);
                    s += g[k][j].value() * d1(&x[k], i);
                    s += g[i][k].value() * d1(&x[k], j);
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Coordinate bracket `[X,Y]^k = X^j ∂_j Y^k − Y^j ∂_j X^k` at a point.
pub fn vector_field_bracket(x: &VectorField, y: &VectorField, point: [f64; 3], params: &Params) -> Result<[f64; 3], ScenarioError> {
    let xj = field_jets(x, point, 1, params)?;
    let yj = field_jets(y, point, 1, params)?;
    Ok(std::array::from_fn(|k| (0..3).map(|j| xj[j].value() * d1(&yj[k], j) - yj[j].value() * d1(&xj[k], j)).sum()))
}

/// Value, first and second `x3`-derivative differences of two metrics at a
/// point, maxima over components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceCheck {
    pub x3: f64,
    pub value_residual: f64,
    pub derivative_residual: f64,
    pub second_derivative_jump: f64,
}

pub fn interface_check(below: &MetricSpec, above: &MetricSpec, point: [f64; 3], params: &Params) -> Result<InterfaceCheck, ScenarioError> {
    let a = eval_metric_jets(below, point, 2, params)?;
    let b = eval_metric_jets(above, point, 2, params)?;
    let mut out = InterfaceCheck { x3: point[2], value_residual: 0.0, derivative_residual: 0.0, second_derivative_jump: 0.0 };
    for i in 0..3 {
        for j in 0..3 {
            let (p, q) = (&a[i][j], &b[i][j]);
            out.value_residual = out.value_residual.max((p.value() - q.value()).abs());
            for axis in 0..3 {
                let mut idx = [0; 3];
                idx[axis] = 1;
                out.derivative_residual = out.derivative_residual.max((p.extract_derivative(idx)? - q.extract_derivative(idx)?).abs());
            }
            let d2 = [0, 0, 2];
            out.second_derivative_jump = out.second_derivative_jump.max((p.extract_derivative(d2)? - q.extract_derivative(d2)?).abs());
        }
    }
    Ok(out)
}

impl From<crate::jet::JetError> for ScenarioError {
    fn from(e: crate::jet::JetError) -> Self {
        ScenarioError::Dsl(DslError::Jet(e))
    }
}

/// `x3^{α1} g0` on `(1, z]` and `z^{α1}(z−1)^{−α2}(x3−1)^{α2} g0` on `(z, ∞)`.
#[derive(Debug, Clone, Serialize)]
pub struct GlueSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Exponents of the inner and outer pieces, after ordering for `z > 1`.
    pub inner_alpha: f64,
    pub outer_alpha: f64,
    pub z: f64,
    /// `z` from the relation `α2 = α1 z/(z−1)`, kept for comparison.
    pub z_alternative: f64,
    /// `C¹` check of the alternative, when it lies in `(1, ∞)`.
    pub alternative_check: Option<InterfaceCheck>,
    pub check: InterfaceCheck,
    #[serde(serialize_with = "display")]
    pub metric: PiecewiseMetricSpec,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn glue_pieces(inner: f64, outer: f64, z: f64) -> Result<(MetricSpec, MetricSpec), ScenarioError> {
    let a = parse_metric(&format!("x3^({inner:?}) * ({G0})"))?;
    let scale = z.powf(inner) * (z - 1.0).powf(-outer);
    let b = parse_metric(&format!("({scale:?}) * (x3 - 1)^({outer:?}) * ({G0})"))?;
    Ok((a, b))
}

pub fn glue_metrics(alpha1: f64, alpha2: f64) -> Result<GlueSpec, ScenarioError> {
    if alpha1 == alpha2 {
        return Err(ScenarioError::Precondition("alpha1 and alpha2 must differ".into()));
    }
    if !(alpha1 < -1.0 && alpha2 < -1.0) {
        return Err(ScenarioError::Precondition("alpha1 and alpha2 must lie in (-inf, -1)".into()));
    }
    // matching x3^a and c (x3−1)^b with their first derivatives at z: z = a/(a−b)
    let z_of = |a: f64, b: f64| a / (a - b);
    let (inner, outer) = if z_of(alpha1, alpha2) > 1.0 { (alpha1, alpha2) } else { (alpha2, alpha1) };
    let z = z_of(inner, outer);
    if !(z > 1.0 && z.is_finite()) {
        return Err(ScenarioError::NoAdmissibleZ { alpha1, alpha2 });
    }
    let (a, b) = glue_pieces(inner, outer, z)?;
    let params = Params::new();
    let check = interface_check(&a, &b, [0.0, 0.0, z], &params)?;
    let z_alternative = outer / (outer - inner);
    let alternative_check = if z_alternative > 1.0 && z_alternative.is_finite() {
        let (a2, b2) = glue_pieces(inner, outer, z_alternative)?;
        Some(interface_check(&a2, &b2, [0.0, 0.0, z_alternative], &params)?)
    } else {
        None
    };
    let metric =
        PiecewiseMetricSpec::new(vec![Piece { lower: 1.0, upper: z, metric: a }, Piece { lower: z, upper: f64::INFINITY, metric: b }])
            .map_err(ScenarioError::Precondition)?;
    Ok(GlueSpec { alpha1, alpha2, inner_alpha: inner, outer_alpha: outer, z, z_alternative, alternative_check, check, metric })
}

/// Sample points on each side of the gluing hypersurface.
pub fn glue_side_points(spec: &GlueSpec) -> ([[f64; 3]; 2], [[f64; 3]; 2]) {
    let z = spec.z;
    let inner = [[0.0, 0.0, 0.5 * (1.0 + z)], [0.3, -0.2, 1.0 + 0.75 * (z - 1.0)]];
    let outer = [[0.0, 0.0, z + 1.0], [0.3, -0.2, z + 2.5]];
    (inner, outer)
}

/// `g_{α1}` on `[1/2, 1]`, `g_{α2}` on `[1, 2^{α2−α1}]`.
#[derive(Debug, Clone, Serialize)]
pub struct TorusReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lower: f64,
    pub upper: f64,
    /// `|1^{α1} − 1^{α2}|`.
    pub continuity_residual: f64,
    /// Conformal factor at `x3 = 1/2` and at the upper boundary.
    pub lower_factor: f64,
    pub upper_factor: f64,
    /// `upper_factor / lower_factor`: the scale an isometric identification must absorb.
    pub factor_ratio: f64,
    /// Length of the `e3` translation identifying the boundaries.
    pub translation: f64,
    /// Largest Killing residual of `∂1` and `∂2` over sample points on both pieces.
    pub translation_killing_residual: f64,
    #[serde(serialize_with = "display")]
    pub metric: PiecewiseMetricSpec,
}

pub fn torus_strip_check(alpha1: f64, alpha2: f64) -> Result<TorusReport, ScenarioError> {
    if !(alpha1 < -1.0 && alpha2 > 1.0) {
        return Err(ScenarioError::Precondition("need alpha1 < -1 and alpha2 > 1".into()));
    }
    let upper = 2f64.powf(alpha2 - alpha1);
    let a = galpha_metric(alpha1)?;
    let b = galpha_metric(alpha2)?;
    let params = Params::new();
    let continuity_residual = (1f64.powf(alpha1) - 1f64.powf(alpha2)).abs();
    let lower_factor = 0.5f64.powf(alpha1);
    let upper_factor = upper.powf(alpha2);
    let d1 = field("d1", ["1", "0", "0"]);
    let d2 = field("d2", ["0", "1", "0"]);
    let mut worst = 0.0f64;
    for (spec, lo, hi) in [(&a, 0.5, 1.0), (&b, 1.0, upper)] {
        let pts: Vec<[f64; 3]> = (0..5).map(|i| [0.3 * i as f64, -0.2 * i as f64, lo + (hi - lo) * (i as f64 + 0.5) / 5.0]).collect();
        worst = worst.max(verify_killing_field(spec, &params, &d1, &pts)?);
        worst = worst.max(verify_killing_field(spec, &params, &d2, &pts)?);
    }
    let metric = PiecewiseMetricSpec::new(vec![Piece { lower: 0.5, upper: 1.0, metric: a }, Piece { lower: 1.0, upper, metric: b }])
        .map_err(ScenarioError::Precondition)?;
    Ok(TorusReport {
        alpha1,
        alpha2,
        lower: 0.5,
        upper,
        continuity_residual,
        lower_factor,
        upper_factor,
        factor_ratio: upper_factor / lower_factor,
        translation: upper - 0.5,
        translation_killing_residual: worst,
        metric,
    })
}

#[cfg(test)]
mod tests;
