use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{interface_check, InterfaceCheck, ScenarioError};
use crate::curvature::{curvature_matrix, decompose_curvature, extract_sigma_b, tower_at, TAU_SYM};
use crate::dsl::{MetricBody, Params};
use crate::killing::{
    dimension_identity_check, eta_set, f_t, kill_spaces, space_isotropy_type, structure_constants, GeneratorSpace, IsotropyKind,
    IsotropyType, Stabilization, GENERALIZED_ORDER,
};
use crate::lie::{classify4, ClassLabel};
use crate::rank::TAU_RANK;

pub const SCHEMA_VERSION: &str = "1.0";

/// Below this, `ℓ²|σ|` counts as zero.
const FLAT_SIGMA: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Highest `r` of `Kill^r`.
    pub order: usize,
    /// Parameters `t` of the null directions `f_t`.
    pub eta_grid: Vec<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { order: GENERALIZED_ORDER, eta_grid: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaSample {
    pub t: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub curvature_symmetry: f64,
    pub killing_system: f64,
    pub closure: Option<f64>,
    pub jacobi: Option<f64>,
    pub sigma_b_fit: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub point: [f64; 3],
    /// Set when a stage failed; the fields below are then partial.
    pub error: Option<String>,
    pub dims: Vec<usize>,
    pub stabilization_order: Option<usize>,
    pub isotropy_dim: usize,
    pub isotropy: Option<IsotropyType>,
    pub sigma: Option<f64>,
    pub b: Option<f64>,
    pub label: String,
    pub class: Option<ClassLabel>,
    /// `η(e)` and `η(f_t)` in the frame adapted to the isotropy when it is parabolic.
    pub eta_e: Option<f64>,
    pub eta_samples: Vec<EtaSample>,
    /// `sqrt(|b|/|ν|)` when both are defined and `ν ≠ 0`.
    pub eta_bound: Option<f64>,
    pub dimension_identity: bool,
    pub residuals: Residuals,
    pub length_scale: f64,
    pub trusted: bool,
    pub failed_checks: Vec<String>,
}

impl PointReport {
    fn empty(point: [f64; 3]) -> Self {
        Self {
            point,
            error: None,
            dims: Vec::new(),
            stabilization_order: None,
            isotropy_dim: 0,
            isotropy: None,
            sigma: None,
            b: None,
            label: String::new(),
            class: None,
            eta_e: None,
            eta_samples: Vec::new(),
            eta_bound: None,
            dimension_identity: false,
            residuals: Residuals::default(),
            length_scale: 1.0,
            trusted: false,
            failed_checks: Vec::new(),
        }
    }

    pub fn nu(&self) -> Option<f64> {
        self.class.as_ref().and_then(ClassLabel::nu)
    }

    pub fn stabilized_dim(&self) -> Option<usize> {
        self.dims.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankConstancy {
    /// Distinct `(dim Kill^r, dim isotropy)` pairs over the successful points.
    pub distinct: Vec<(usize, usize)>,
    pub constant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub metric: String,
    pub params: Params,
    pub order: usize,
    pub points: Vec<PointReport>,
    pub rank_constancy: RankConstancy,
    /// `C¹` checks at the boundaries of a piecewise metric.
    pub interfaces: Vec<InterfaceCheck>,
    pub trusted: bool,
}

/// Full pipeline at one point; stage failures land in `error`.
pub fn analyze_point(body: &MetricBody, point: [f64; 3], params: &Params, opts: &AnalysisOptions) -> PointReport {
    let mut rep = PointReport::empty(point);
    if let Err(e) = fill(&mut rep, body, point, params, opts) {
        rep.error = Some(e.to_string());
        rep.trusted = false;
        rep.failed_checks.push("pipeline".into());
    }
    rep
}

fn fill(rep: &mut PointReport, body: &MetricBody, point: [f64; 3], params: &Params, opts: &AnalysisOptions) -> Result<(), ScenarioError> {
    let spec = body.spec_at(point[2])?;
    let tower = tower_at(spec, point, params, opts.order)?;
    let ell = tower.length_scale();
    rep.length_scale = ell;
    rep.residuals.curvature_symmetry = tower.symmetry_residuals().max();
    if rep.residuals.curvature_symmetry > TAU_SYM {
        rep.failed_checks.push("curvature symmetries".into());
    }
    let spaces = kill_spaces(&tower, opts.order)?;
    let st = Stabilization::from_spaces(&spaces);
    rep.dims = st.dims.clone();
    rep.stabilization_order = st.r_star;
    if !st.trusted {
        rep.failed_checks.push("Killing rank gap".into());
    }
    if !st.non_increasing() {
        rep.failed_checks.push("dims increase".into());
    }
    let sp: &GeneratorSpace = spaces.last().expect("order >= 1");
    rep.residuals.killing_system = sp.residual;
    rep.isotropy_dim = sp.isotropy_dim();
    // rank of Dκ is 6 − dim, orbit dimension 3 − dim(isotropy)
    rep.dimension_identity = dimension_identity_check(sp, 6 - sp.dim(), 3usize.saturating_sub(sp.isotropy_dim()));
    if !rep.dimension_identity {
        rep.failed_checks.push("dimension identity".into());
    }
    let iso = space_isotropy_type(sp);
    let k = curvature_matrix(&tower);
    let mut frame_space = sp.clone();
    if iso.kind == IsotropyKind::Parabolic {
        let a = iso.witness.expect("parabolic has a witness").a;
        let sb = extract_sigma_b(&tower, &a)?;
        rep.sigma = Some(sb.sigma);
        rep.b = Some(sb.b);
        rep.residuals.sigma_b_fit = Some(sb.residual);
        frame_space = sp.in_frame(&sb.change);
    } else {
        rep.sigma = Some(decompose_curvature(&k).sigma);
    }
    rep.isotropy = Some(iso);

    match sp.dim() {
        6 => {
            let s = rep.sigma.unwrap_or(0.0);
            rep.label = if (s * ell * ell).abs() < FLAT_SIGMA {
                "constant curvature (flat)".into()
            } else {
                format!("constant curvature (sigma = {s:.9})")
            };
        }
        4 => {
            let sc = structure_constants(sp, &k)?;
            rep.residuals.closure = Some(sc.closure_residual);
            rep.residuals.jacobi = Some(sc.jacobi_residual);
            if sc.jacobi_residual > TAU_RANK {
                rep.failed_checks.push("Jacobi".into());
            }
            let c = classify4(&sc.algebra);
            if !c.trusted {
                rep.failed_checks.push("classifier rank gap".into());
            }
            rep.label = c.label.to_string();
            rep.class = Some(c.label);
        }
        d => rep.label = format!("{d}-dimensional Killing algebra, not classified"),
    }

    let e = nalgebra::Vector3::new(1.0, 0.0, 0.0);
    rep.eta_e = Some(eta_set(&frame_space, &e)?.eta);
    for &t in &opts.eta_grid {
        rep.eta_samples.push(EtaSample { t, eta: eta_set(&frame_space, &f_t(t))?.eta });
    }
    if let (Some(b), Some(nu)) = (rep.b, rep.nu()) {
        if nu != 0.0 {
            rep.eta_bound = Some((b.abs() / nu.abs()).sqrt());
        }
    }
    rep.trusted = rep.failed_checks.is_empty();
    Ok(())
}

/// Analyze every point in parallel; output order follows `points`.
pub fn analyze(
    metric_id: &str,
    body: &MetricBody,
    params: &Params,
    points: &[[f64; 3]],
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, ScenarioError> {
    if opts.order == 0 || opts.order > GENERALIZED_ORDER {
        return Err(ScenarioError::Precondition(format!("order must lie in 1..={GENERALIZED_ORDER}")));
    }
    let reports: Vec<PointReport> = points.par_iter().map(|p| analyze_point(body, *p, params, opts)).collect();
    let distinct: BTreeSet<(usize, usize)> =
        reports.iter().filter(|r| r.error.is_none()).filter_map(|r| r.stabilized_dim().map(|d| (d, r.isotropy_dim))).collect();
    let rank_constancy = RankConstancy { constant: distinct.len() <= 1, distinct: distinct.into_iter().collect() };
    let mut interfaces = Vec::new();
    if let MetricBody::Piecewise(pw) = body {
        for w in pw.pieces().windows(2) {
            let x3 = w[0].upper;
            interfaces.push(interface_check(&w[0].metric, &w[1].metric, [0.0, 0.0, x3], params)?);
        }
    }
    let trusted = reports.iter().all(|r| r.trusted);
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        metric: metric_id.to_string(),
        params: params.clone(),
        order: opts.order,
        points: reports,
        rank_constancy,
        interfaces,
        trusted,
    })
}

/// `n×n×n` grid spanning the box `lo..hi` (inclusive).
pub fn box_grid(lo: [f64; 3], hi: [f64; 3], n: usize) -> Vec<[f64; 3]> {
    let at = |k: usize, i: usize| if n <= 1 { 0.5 * (lo[k] + hi[k]) } else { lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out.push([at(0, i), at(1, j), at(2, l)]);
            }
        }
    }
    out
}

/// Points from text: one point per line, three numbers separated by
/// whitespace or commas; `#` starts a comment.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 3]>, ScenarioError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ScenarioError::Precondition(format!("line {}: {e}", n + 1)))?;
        if vals.len() != 3 {
            return Err(ScenarioError::Precondition(format!("line {}: expected 3 coordinates, found {}", n + 1, vals.len())));
        }
        out.push([vals[0], vals[1], vals[2]]);
    }
    if out.is_empty() {
        return Err(ScenarioError::Precondition("no points given".into()));
    }
    Ok(out)
}
