//! The curvature as a 3×3 matrix in `Hom(Λ²R³, o(1,2))`.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::{frame::WittFrame, CovTensor, CurvatureError, CurvatureTower, E, F, H, J, KAPPA1, MODULE_BASIS, TAU_SYM};

/// Columns are `R(e,h), R(e,f), R(h,f)` written in the basis `(E, H, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureMatrix(pub [[f64; 3]; 3]);

impl CurvatureMatrix {
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.0[i][j])
    }

    /// The `o(1,2)` element `κ(u ∧ v)` for frame vectors `u, v`.
    pub fn apply(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> Matrix3<f64> {
        // u ∧ v in the basis (e∧h, e∧f, h∧f)
        let w = Vector3::new(u[0] * v[1] - u[1] * v[0], u[0] * v[2] - u[2] * v[0], u[1] * v[2] - u[2] * v[1]);
        from_ehf(&(self.matrix() * w))
    }
}

/// Coordinates `(a_E, a_H, a_F)` of an `o(1,2)` matrix.
pub fn to_ehf(a: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(a[(0, 1)], a[(0, 0)], a[(1, 0)])
}

pub fn from_ehf(c: &Vector3<f64>) -> Matrix3<f64> {
    E * c[0] + H * c[1] + F * c[2]
}

/// Largest entry of `AᵀJ + JA`.
pub fn skew_residual(a: &Matrix3<f64>) -> f64 {
    (a.transpose() * J + J * a).abs().max()
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Curvature matrix of a frame Riemann tensor `R_abcd = g(R(a,b)c, d)`.
pub(crate) fn matrix_of_riemann(r: &CovTensor) -> CurvatureMatrix {
    let mut k = Matrix3::zeros();
    for (col, &(a, b)) in PAIRS.iter().enumerate() {
        // operator R(a,b): component [l][c] = J^{ld} R_{abcd}, and J^{-1} = J
        let op = Matrix3::from_fn(|l, c| (0..3).map(|d| J[(l, d)] * r.get(&[a, b, c, d])).sum());
        k.set_column(col, &to_ehf(&op));
    }
    CurvatureMatrix::from_matrix(&k)
}

pub fn curvature_matrix(tower: &CurvatureTower) -> CurvatureMatrix {
    matrix_of_riemann(&tower.tensors()[0])
}

/// Scalar part and trace-free part of a curvature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub sigma: f64,
    pub tracefree: CurvatureMatrix,
    /// Distance of the trace-free part from the span of the five module matrices.
    pub module_residual: f64,
}

pub fn decompose_curvature(k: &CurvatureMatrix) -> Decomposition {
    let m = k.matrix();
    let sigma = m.trace() / 3.0;
    let tf = m - Matrix3::identity() * sigma;
    // the five basis matrices are mutually orthogonal in the Frobenius product
    let mut proj = Matrix3::zeros();
    for b in MODULE_BASIS.iter() {
        proj += b * (tf.dot(b) / b.dot(b));
    }
    Decomposition { sigma, tracefree: CurvatureMatrix::from_matrix(&tf), module_residual: (tf - proj).abs().max() }
}

/// Curvature read in a frame where a parabolic isotropy generator is `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaB {
    pub sigma: f64,
    pub b: f64,
    pub adapted_frame: WittFrame,
    /// Frame change from the tower frame to the adapted frame (columns).
    #[serde(skip)]
    pub change: Matrix3<f64>,
    pub residual: f64,
}

/// Frame `(e', h', f')`, in components of the current frame, in which the
/// nilpotent `a` becomes exactly `E`.
pub fn parabolic_adapted_change(a: &Matrix3<f64>) -> Result<Matrix3<f64>, CurvatureError> {
    let c = to_ehf(a);
    let norm2 = c.norm_squared();
    let q = c[1] * c[1] + 2.0 * c[0] * c[2];
    if norm2 == 0.0 || q.abs() > 1e-6 * norm2 {
        return Err(CurvatureError::NotParabolic { q, norm2 });
    }
    let a2 = a * a;
    let mut best = 0;
    for k in 1..3 {
        if a2.column(k).norm() > a2.column(best).norm() {
            best = k;
        }
    }
    let w = Vector3::from_fn(|i, _| if i == best { 1.0 } else { 0.0 });
    let g = |u: &Vector3<f64>, v: &Vector3<f64>| (u.transpose() * J * v)[0];
    let aw = a * w;
    let cc = g(&aw, &aw);
    if !(cc > 0.0) {
        return Err(CurvatureError::NotParabolic { q, norm2 });
    }
    let fs = w / cc.sqrt();
    let e = -(a2 * fs);
    let h = -(a * fs);
    let f = fs - e * (0.5 * g(&fs, &fs));
    Ok(Matrix3::from_columns(&[e, h, f]))
}

/// `σ` and `b` with `K = σκ₀ + bκ₁` in the frame adapted to the parabolic
/// generator `a` (given in the tower's frame).
pub fn extract_sigma_b(tower: &CurvatureTower, a: &Matrix3<f64>) -> Result<SigmaB, CurvatureError> {
    let change = parabolic_adapted_change(a)?;
    let r = tower.tensors()[0].transform(&change);
    let k = matrix_of_riemann(&r).matrix();
    let sigma = k.trace() / 3.0;
    let b = k[(0, 2)];
    let fit = Matrix3::identity() * sigma + KAPPA1 * b;
    let residual = (k - fit).abs().max() / k.abs().max().max(1.0);
    if residual > TAU_SYM.sqrt() {
        return Err(CurvatureError::Residual { what: "sigma/b fit", value: residual });
    }
    Ok(SigmaB { sigma, b, adapted_frame: tower.frame().compose(&change), change, residual })
}
