//! Levi-Civita connection, Riemann tensor, the tower `∇^j R` in a Witt frame,
//! and the curvature matrix with its invariants `σ` and `b`.
//!
//! Sign convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and
//! `R_abcd = g(R(a,b)c, d)`. With it a space of constant sectional curvature
//! `c` has curvature matrix `c·Id`.

mod frame;
mod matrix;
mod tensor;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::dsl::{DslError, MetricJets};

pub use frame::{build_witt_frame, WittFrame};
pub use matrix::{
    curvature_matrix, decompose_curvature, extract_sigma_b, from_ehf, parabolic_adapted_change, skew_residual, to_ehf, CurvatureMatrix,
    Decomposition, SigmaB,
};
pub use tensor::{christoffel, covariant_derivative, inverse_metric, riemann, ConnectionData, TensorJets};

/// Tolerance for identity residuals (symmetries, Bianchi, module membership).
pub const TAU_SYM: f64 = 1e-9;

/// Default depth of the covariant-derivative tower.
pub const DEFAULT_R_MAX: usize = 7;

/// Gram matrix of a Witt frame.
pub const J: Matrix3<f64> = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);

/// Basis of `o(1,2)`: `[H,E] = E`, `[H,F] = −F`, `[E,F] = H`.
pub const E: Matrix3<f64> = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0);
pub const H: Matrix3<f64> = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0);
pub const F: Matrix3<f64> = Matrix3::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0);

/// `κ₀`: `e∧h ↦ E`, `e∧f ↦ H`, `h∧f ↦ F`.
pub const KAPPA0: Matrix3<f64> = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
/// `κ₁`: `h∧f ↦ E`, everything else to 0.
pub const KAPPA1: Matrix3<f64> = Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

/// Spanning matrices of the 5-dimensional irreducible part of the curvature module.
pub const MODULE_BASIS: [Matrix3<f64>; 5] = [
    Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
    Matrix3::new(1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 1.0),
    Matrix3::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
    Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("metric is degenerate (determinant {0})")]
    Degenerate(f64),
    #[error("metric is not Lorentzian (eigenvalues {0:?})")]
    Signature([f64; 3]),
    #[error("metric jets of order {needed} needed, got {got}")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("generator is not parabolic (q = {q}, |A|^2 = {norm2})")]
    NotParabolic { q: f64, norm2: f64 },
    #[error("{what} residual {value:e} above tolerance")]
    Residual { what: &'static str, value: f64 },
    #[error(transparent)]
    Dsl(#[from] DslError),
}

fn pow3(p: usize) -> usize {
    3usize.pow(p as u32)
}

/// `out[i] (+)= Σ_c w[c] src[c·place + i]`.
fn slot_combine(out: &mut [f64], src: &[f64], place: usize, w: [f64; 3], accumulate: bool) {
    let (x0, rest) = src.split_at(place);
    let (x1, x2) = rest.split_at(place);
    for i in 0..place {
        let v = w[0] * x0[i] + w[1] * x1[i] + w[2] * x2[i];
        out[i] = if accumulate { out[i] + v } else { v };
    }
}

/// Covariant tensor components at a point, first index most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct CovTensor {
    rank: usize,
    data: Vec<f64>,
}

impl CovTensor {
    pub fn new(rank: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), pow3(rank), "component count");
        Self { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.rank);
        self.data[index.iter().fold(0, |acc, b| 3 * acc + b)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Components in the frame whose vectors are the columns of `q`:
    /// `T'_{b..} = Σ T_{c..} q_{c b} ..`.
    pub fn transform(&self, q: &Matrix3<f64>) -> Self {
        let mut cur = self.data.clone();
        let mut next = vec![0.0; cur.len()];
        for s in 0..self.rank {
            let place = pow3(self.rank - 1 - s);
            if place == 1 {
                let m: [[f64; 3]; 3] = std::array::from_fn(|d| [q[(0, d)], q[(1, d)], q[(2, d)]]);
                for (out, src) in next.chunks_exact_mut(3).zip(cur.chunks_exact(3)) {
                    for d in 0..3 {
                        out[d] = m[d][0] * src[0] + m[d][1] * src[1] + m[d][2] * src[2];
                    }
                }
            } else {
                for b0 in (0..cur.len()).step_by(3 * place) {
                    let src = &cur[b0..][..3 * place];
                    for d in 0..3 {
                        let out = &mut next[b0 + d * place..][..place];
                        slot_combine(out, src, place, [q[(0, d)], q[(1, d)], q[(2, d)]], false);
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Self { rank: self.rank, data: cur }
    }

    /// Action of a matrix `a` as a derivation:
    /// `(a·T)_{b1..bp} = Σ_s Σ_c a_{c b_s} T_{b1..c..bp}`.
    pub fn derivation(&self, a: &Matrix3<f64>) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for s in 0..self.rank {
            let place = pow3(self.rank - 1 - s);
            if place == 1 {
                let m: [[f64; 3]; 3] = std::array::from_fn(|d| [a[(0, d)], a[(1, d)], a[(2, d)]]);
                for (o, src) in out.chunks_exact_mut(3).zip(self.data.chunks_exact(3)) {
                    for d in 0..3 {
                        o[d] += m[d][0] * src[0] + m[d][1] * src[1] + m[d][2] * src[2];
                    }
                }
                continue;
            }
            for b0 in (0..out.len()).step_by(3 * place) {
                let src = &self.data[b0..][..3 * place];
                for d in 0..3 {
                    let w = [a[(0, d)], a[(1, d)], a[(2, d)]];
                    if w != [0.0; 3] {
                        slot_combine(&mut out[b0 + d * place..][..place], src, place, w, true);
                    }
                }
            }
        }
        Self { rank: self.rank, data: out }
    }

    /// Contraction `T(v, ·, .., ·)` on the first slot.
    pub fn contract_first(&self, v: &[f64; 3]) -> Self {
        let n = pow3(self.rank - 1);
        let data = (0..n).map(|i| (0..3).map(|c| v[c] * self.data[c * n + i]).sum()).collect();
        Self { rank: self.rank - 1, data }
    }
}

/// `∇^j R` for `j = 0..=r_max`, as frame components at one point.
#[derive(Debug, Clone)]
pub struct CurvatureTower {
    point: [f64; 3],
    metric: Matrix3<f64>,
    frame: WittFrame,
    tensors: Vec<CovTensor>,
    length_scale: f64,
}

impl CurvatureTower {
    pub fn point(&self) -> [f64; 3] {
        self.point
    }

    /// Metric value in chart coordinates.
    pub fn metric(&self) -> &Matrix3<f64> {
        &self.metric
    }

    pub fn frame(&self) -> &WittFrame {
        &self.frame
    }

    /// `tensors()[j]` holds the `4 + j` index components of `∇^j R`, the
    /// newest derivative index first.
    pub fn tensors(&self) -> &[CovTensor] {
        &self.tensors
    }

    /// Length over which the metric varies, in frame units: `ℓ^{2+j} ∇^jR`
    /// is dimensionless. Derived from the metric jets alone, so it stays
    /// meaningful when the curvature vanishes.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Largest entry of `ℓ^{2+j} ∇^jR`.
    pub fn scaled_max_abs(&self, j: usize) -> f64 {
        self.tensors[j].max_abs() * self.length_scale.powi(2 + j as i32)
    }

    pub fn r_max(&self) -> usize {
        self.tensors.len() - 1
    }

    /// The same tower re-expressed in the frame with components `q` (columns)
    /// relative to the current one. `q` must preserve `J`.
    pub fn in_frame(&self, q: &Matrix3<f64>) -> Self {
        Self {
            point: self.point,
            metric: self.metric,
            frame: self.frame.compose(q),
            tensors: self.tensors.iter().map(|t| t.transform(q)).collect(),
            length_scale: self.length_scale,
        }
    }

    /// Identity residuals, each relative to `max(1, |T|)` of the tensor involved.
    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let r = &self.tensors[0];
        let scale = r.max_abs().max(1.0);
        let mut out = SymmetryResiduals::default();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let v = r.get(&[a, b, c, d]);
                        out.antisym_first = out.antisym_first.max((v + r.get(&[b, a, c, d])).abs() / scale);
                        out.antisym_last = out.antisym_last.max((v + r.get(&[a, b, d, c])).abs() / scale);
                        out.pair_exchange = out.pair_exchange.max((v - r.get(&[c, d, a, b])).abs() / scale);
                        let cyc = v + r.get(&[b, c, a, d]) + r.get(&[c, a, b, d]);
                        out.first_bianchi = out.first_bianchi.max(cyc.abs() / scale);
                    }
                }
            }
        }
        if let Some(dr) = self.tensors.get(1) {
            let scale = dr.max_abs().max(1.0);
            for e in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            for d in 0..3 {
                                let cyc = dr.get(&[e, a, b, c, d]) + dr.get(&[a, b, e, c, d]) + dr.get(&[b, e, a, c, d]);
                                out.second_bianchi = out.second_bianchi.max(cyc.abs() / scale);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct SymmetryResiduals {
    pub antisym_first: f64,
    pub antisym_last: f64,
    pub pair_exchange: f64,
    pub first_bianchi: f64,
    pub second_bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        [self.antisym_first, self.antisym_last, self.pair_exchange, self.first_bianchi, self.second_bianchi].into_iter().fold(0.0, f64::max)
    }
}

/// Curvature tower from metric jets of order at least `r_max + 2`.
pub fn covariant_tower(g: &MetricJets, point: [f64; 3], r_max: usize) -> Result<CurvatureTower, CurvatureError> {
    let order = g[0][0].order();
    if order < r_max + 2 {
        return Err(CurvatureError::InsufficientOrder { needed: r_max + 2, got: order });
    }
    let metric = Matrix3::from_fn(|i, j| g[i][j].value());
    let frame = build_witt_frame(&metric)?;
    let conn = christoffel(g)?;
    let mut t = riemann(&conn, g)?;
    let mut tensors = Vec::with_capacity(r_max + 1);
    for j in 0..=r_max {
        if j > 0 {
            t = covariant_derivative(&t, &conn)?;
        }
        tensors.push(CovTensor::new(t.rank(), t.values()).transform(frame.matrix()));
    }
    let length_scale = metric_length_scale(g, frame.matrix());
    Ok(CurvatureTower { point, metric, frame, tensors, length_scale })
}

/// `1 / (|P| · max_n (|c_n| / |g|)^{1/n})` where `c_n` runs over the degree-`n`
/// Taylor coefficients of the metric and `|P|` is the longest frame vector.
fn metric_length_scale(g: &MetricJets, frame: &Matrix3<f64>) -> f64 {
    let g0 = g.iter().flatten().fold(0.0f64, |m, j| m.max(j.value().abs()));
    let order = g[0][0].order();
    let mut inv = 0.0f64;
    for n in 1..=order {
        let lo = crate::jet::num_coeffs(n - 1);
        let hi = crate::jet::num_coeffs(n);
        let cn = g.iter().flatten().flat_map(|j| &j.coeffs()[lo..hi]).fold(0.0f64, |m, c| m.max(c.abs()));
        if cn > 0.0 {
            inv = inv.max((cn / g0).powf(1.0 / n as f64));
        }
    }
    let p = (0..3).map(|k| frame.column(k).norm()).fold(0.0, f64::max);
    if inv == 0.0 {
        1.0
    } else {
        1.0 / (p * inv)
    }
}

/// Convenience: parse-free path from a metric spec to its tower.
pub fn tower_at(
    spec: &crate::dsl::MetricSpec,
    point: [f64; 3],
    params: &crate::dsl::Params,
    r_max: usize,
) -> Result<CurvatureTower, CurvatureError> {
    let g = crate::dsl::eval_metric_jets(spec, point, r_max + 2, params)?;
    covariant_tower(&g, point, r_max)
}

#[cfg(test)]
mod tests;
