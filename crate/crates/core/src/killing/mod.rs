//! Killing generators of finite order at a point.
//!
//! A generator is a pair `(A, v)` with `A ∈ o(1,2)` and `v ∈ R³`, frame
//! components of `(∇X, X)` at the point for a would-be Killing field `X`. The
//! order-`r` conditions are
//!
//! ```text
//! A·∇^jR + ∇^{j+1}R(v; ·) = 0,   j = 0..r-1,
//! ```
//!
//! with `A` acting on tensors as a derivation. Rows of block `j` are scaled by
//! `ℓ^{2+j}` (with `v` measured in units of `ℓ`) so that every block is
//! dimensionless, then shrunk to unit size if larger.

mod generator;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::curvature::{CovTensor, CurvatureMatrix, CurvatureTower, E, F, H};
use crate::lie::LieAlgebra4;
use crate::rank::{canonical_basis, lstsq, nullspace, rank_decision, RankDecision, TAU_RANK};

pub use generator::{q_invariant, KillingGenerator};

/// Relative tolerance on `q(A)` when separating hyperbolic, elliptic and parabolic.
pub const EPS_TYPE: f64 = 1e-9;

/// Dimension of `o(1,2) ⋉ R³`.
pub const M_DIM: usize = 6;

/// Order at which the generator space equals the local Killing algebra.
pub const GENERALIZED_ORDER: usize = M_DIM + 1;

/// Relative residual allowed for consistency of the small least-squares
/// problems (closure, `η`).
const TAU_CONSISTENT: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KillingError {
    #[error("order {r} outside 1..={r_max}")]
    OrderOutOfRange { r: usize, r_max: usize },
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("structure constants need a 4-dimensional space, got {0}")]
    NotFourDimensional(usize),
    #[error("generator space does not close under the bracket (residual {0:e})")]
    NotClosed(f64),
}

/// Basis of `Kill^r` at a point, in the frame of the tower it came from.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorSpace {
    pub order: usize,
    pub basis: Vec<KillingGenerator>,
    pub isotropy_basis: Vec<KillingGenerator>,
    pub rank: RankDecision,
    pub isotropy_rank: RankDecision,
    /// Largest `|M x| / (|x| max(s₁, 1))` over the basis, `M` the scaled system.
    pub residual: f64,
    #[serde(skip)]
    length_scale: f64,
}

impl GeneratorSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn isotropy_dim(&self) -> usize {
        self.isotropy_basis.len()
    }

    pub fn trusted(&self) -> bool {
        self.rank.trusted && self.isotropy_rank.trusted && self.residual < TAU_RANK
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Same space with generators written in the frame with components `q`.
    pub fn in_frame(&self, q: &Matrix3<f64>) -> Self {
        Self {
            basis: self.basis.iter().map(|g| g.in_frame(q)).collect(),
            isotropy_basis: self.isotropy_basis.iter().map(|g| g.in_frame(q)).collect(),
            ..self.clone()
        }
    }

    /// Columns are basis coordinates with `v` divided by `ℓ`.
    fn scaled_matrix(&self, gens: &[KillingGenerator]) -> DMatrix<f64> {
        let cols: Vec<_> = gens.iter().map(|g| DVector::from_row_slice(&g.scaled_coords(self.length_scale))).collect();
        if cols.is_empty() {
            DMatrix::zeros(6, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}

/// Rows of the order-`j` block, already scaled.
fn system_block(tower: &CurvatureTower, j: usize) -> DMatrix<f64> {
    let ell = tower.length_scale();
    let t = &tower.tensors()[j];
    let dt = &tower.tensors()[j + 1];
    let s0 = ell.powi(2 + j as i32);
    let s1 = ell.powi(3 + j as i32);
    let mut cols: Vec<CovTensor> = [E, H, F].iter().map(|x| t.derivation(x)).collect();
    for c in 0..3 {
        let mut unit = [0.0; 3];
        unit[c] = 1.0;
        cols.push(dt.contract_first(&unit));
    }
    let rows = t.data().len();
    let mut m = DMatrix::from_fn(rows, 6, |i, k| cols[k].data()[i] * if k < 3 { s0 } else { s1 });
    let big = m.amax();
    if big > 1.0 {
        m /= big;
    }
    m
}

/// Generator spaces for `r = 1..=r_max`, sharing one incremental factorization.
pub fn kill_spaces(tower: &CurvatureTower, r_max: usize) -> Result<Vec<GeneratorSpace>, KillingError> {
    if r_max == 0 || r_max > tower.r_max() {
        return Err(KillingError::OrderOutOfRange { r: r_max, r_max: tower.r_max() });
    }
    let mut r_factor = DMatrix::<f64>::zeros(0, 6);
    let mut out = Vec::with_capacity(r_max);
    for j in 0..r_max {
        let block = system_block(tower, j);
        let stacked = DMatrix::from_fn(r_factor.nrows() + block.nrows(), 6, |i, k| {
            if i < r_factor.nrows() {
                r_factor[(i, k)]
            } else {
                block[(i - r_factor.nrows(), k)]
            }
        });
        r_factor = stacked.qr().r();
        out.push(space_from_factor(&r_factor, j + 1, tower.length_scale()));
    }
    Ok(out)
}

/// `Kill^r` at the tower's point.
pub fn kill_space(tower: &CurvatureTower, r: usize) -> Result<GeneratorSpace, KillingError> {
    Ok(kill_spaces(tower, r)?.pop().expect("r >= 1"))
}

fn unscale(col: &[f64], ell: f64) -> KillingGenerator {
    let mut c: [f64; 6] = std::array::from_fn(|i| col[i]);
    for x in &mut c[3..] {
        *x *= ell;
    }
    KillingGenerator::from_coords(&c)
}

fn space_from_factor(r_factor: &DMatrix<f64>, order: usize, ell: f64) -> GeneratorSpace {
    let (rank, null) = nullspace(r_factor);
    let null = canonical_basis(&null);
    let s1 = rank.singular_values.first().copied().unwrap_or(0.0).max(1.0);
    let residual = (0..null.ncols())
        .map(|k| {
            let x = null.column(k);
            (r_factor * x).norm() / (x.norm() * s1)
        })
        .fold(0.0, f64::max);
    let basis: Vec<_> = (0..null.ncols()).map(|k| unscale(null.column(k).as_slice(), ell)).collect();

    // isotropy: combinations with vanishing translation part
    let nv = null.rows(3, 3).into_owned();
    let (isotropy_rank, coeffs) = if null.ncols() == 0 { (rank_decision(Vec::new()), DMatrix::zeros(0, 0)) } else { nullspace(&nv) };
    let isotropy_basis = if coeffs.ncols() == 0 {
        Vec::new()
    } else {
        let iso = canonical_basis(&(&null * coeffs));
        (0..iso.ncols())
            .map(|k| {
                let g = unscale(iso.column(k).as_slice(), ell);
                KillingGenerator::new(g.a, Vector3::zeros())
            })
            .collect()
    };
    GeneratorSpace { order, basis, isotropy_basis, rank, isotropy_rank, residual, length_scale: ell }
}

/// Dimensions of `Kill^r` and the first order where they stop changing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stabilization {
    /// `dims[r - 1]` is `dim Kill^r`.
    pub dims: Vec<usize>,
    pub r_star: Option<usize>,
    pub trusted: bool,
}

impl Stabilization {
    pub fn from_spaces(spaces: &[GeneratorSpace]) -> Self {
        let dims: Vec<usize> = spaces.iter().map(GeneratorSpace::dim).collect();
        let r_star = dims.windows(2).position(|w| w[0] == w[1]).map(|i| i + 1);
        Self { dims, r_star, trusted: spaces.iter().all(GeneratorSpace::trusted) }
    }

    pub fn stabilized_dim(&self) -> Option<usize> {
        self.r_star.map(|r| self.dims[r - 1])
    }

    pub fn non_increasing(&self) -> bool {
        self.dims.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `dims[r]` for `r = 1..=r_max` of the tower.
pub fn stabilization_order(tower: &CurvatureTower) -> Result<Stabilization, KillingError> {
    Ok(Stabilization::from_spaces(&kill_spaces(tower, tower.r_max())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IsotropyKind {
    Trivial,
    Hyperbolic,
    Elliptic,
    Parabolic,
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotropyType {
    pub kind: IsotropyKind,
    pub witness: Option<KillingGenerator>,
    /// `q(A) / |A|²` of the witness, `|A|` the norm of its `(E,H,F)` coordinates.
    pub q_relative: f64,
}

/// Type of the flow of `a`: sign of `q(A) = a_H² + 2 a_E a_F`.
pub fn isotropy_type(a: &Matrix3<f64>) -> IsotropyType {
    let g = KillingGenerator::new(*a, Vector3::zeros());
    let c = g.ehf();
    let n2 = c.norm_squared();
    if n2 == 0.0 {
        return IsotropyType { kind: IsotropyKind::Trivial, witness: None, q_relative: 0.0 };
    }
    let q = q_invariant(a) / n2;
    let kind = if q > EPS_TYPE {
        IsotropyKind::Hyperbolic
    } else if q < -EPS_TYPE {
        IsotropyKind::Elliptic
    } else {
        IsotropyKind::Parabolic
    };
    IsotropyType { kind, witness: Some(g), q_relative: q }
}

/// Type of the isotropy of a generator space.
pub fn space_isotropy_type(space: &GeneratorSpace) -> IsotropyType {
    match space.isotropy_basis.as_slice() {
        [] => IsotropyType { kind: IsotropyKind::Trivial, witness: None, q_relative: 0.0 },
        [g] => isotropy_type(&g.a),
        [g, ..] => IsotropyType { kind: IsotropyKind::Higher, witness: Some(*g), q_relative: f64::NAN },
    }
}

/// `κ(v₁∧v₂) − [ξ₁, ξ₂]` with the bracket of `o(1,2) ⋉ R³`.
pub fn generator_bracket(x1: &KillingGenerator, x2: &KillingGenerator, k: &CurvatureMatrix) -> KillingGenerator {
    let semi = x1.semidirect_bracket(x2);
    KillingGenerator::new(k.apply(&x1.v, &x2.v) - semi.a, -semi.v)
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureConstants {
    pub algebra: LieAlgebra4,
    pub closure_residual: f64,
    pub jacobi_residual: f64,
}

/// Structure constants of a 4-dimensional generator space in its own basis.
pub fn structure_constants(space: &GeneratorSpace, k: &CurvatureMatrix) -> Result<StructureConstants, KillingError> {
    if space.dim() != 4 {
        return Err(KillingError::NotFourDimensional(space.dim()));
    }
    let b = space.scaled_matrix(&space.basis);
    let ell = space.length_scale;
    let mut c = [[[0.0; 4]; 4]; 4];
    let mut closure = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let w = generator_bracket(&space.basis[i], &space.basis[j], k);
            let wv = DVector::from_row_slice(&w.scaled_coords(ell));
            let x = lstsq(&b, &wv, 1e-14);
            let res = (&b * &x - &wv).norm() / wv.norm().max(b.amax());
            closure = closure.max(res);
            for m in 0..4 {
                c[i][j][m] = x[m];
                c[j][i][m] = -x[m];
            }
        }
    }
    if closure > TAU_CONSISTENT {
        return Err(KillingError::NotClosed(closure));
    }
    let algebra = LieAlgebra4::new(c);
    let jacobi_residual = algebra.jacobi_residual();
    Ok(StructureConstants { algebra, closure_residual: closure, jacobi_residual })
}

/// Values of `λ` with `X(x) = u` and `∇_u X = λ u` over the generator space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum LambdaSet {
    Empty,
    Point(f64),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaSet {
    pub lambdas: LambdaSet,
    /// `inf |λ|`, infinite when no generator fits.
    pub eta: f64,
}

/// `A(u)` and `η(u)` for a frame vector `u`.
pub fn eta_set(space: &GeneratorSpace, u: &Vector3<f64>) -> Result<EtaSet, KillingError> {
    if u.norm() == 0.0 {
        return Err(KillingError::ZeroDirection);
    }
    let empty = EtaSet { lambdas: LambdaSet::Empty, eta: f64::INFINITY };
    if space.dim() == 0 {
        return Ok(empty);
    }
    let nv = DMatrix::from_fn(3, space.dim(), |i, k| space.basis[k].v[i]);
    let c0 = lstsq(&nv, &DVector::from_column_slice(u.as_slice()), 1e-12 * nv.amax());
    let fit = (&nv * &c0).norm();
    if ((&nv * &c0) - DVector::from_column_slice(u.as_slice())).norm() > TAU_CONSISTENT * u.norm().max(fit) {
        return Ok(empty);
    }
    let combo = |c: &DVector<f64>| -> Matrix3<f64> { (0..space.dim()).map(|k| space.basis[k].a * c[k]).sum() };
    let (_, z) = nullspace(&nv);
    // unknowns (t, λ): Σ t_i A(z_i) u − λ u = −A(c0) u
    let w0 = combo(&c0) * u;
    let mut cols: Vec<DVector<f64>> =
        (0..z.ncols()).map(|i| DVector::from_column_slice((combo(&z.column(i).into_owned()) * u).as_slice())).collect();
    cols.push(DVector::from_column_slice((-u).as_slice()));
    let m = DMatrix::from_columns(&cols);
    let rhs = DVector::from_column_slice((-w0).as_slice());
    let sol = lstsq(&m, &rhs, 1e-12 * m.amax().max(1.0));
    let scale = w0.norm() + u.norm() * space.basis.iter().map(|g| g.a.amax()).fold(0.0, f64::max).max(1.0);
    if (&m * &sol - &rhs).norm() > TAU_CONSISTENT * scale {
        return Ok(empty);
    }
    let (_, free) = nullspace(&m);
    let lam_free = (0..free.ncols()).any(|k| free[(free.nrows() - 1, k)].abs() > 1e-6 * free.column(k).norm());
    if lam_free {
        return Ok(EtaSet { lambdas: LambdaSet::All, eta: 0.0 });
    }
    let lambda = sol[sol.len() - 1];
    Ok(EtaSet { lambdas: LambdaSet::Point(lambda), eta: lambda.abs() })
}

/// `e^{tE} f = f − t h − (t²/2) e` in Witt frame components.
pub fn f_t(t: f64) -> Vector3<f64> {
    Vector3::new(-0.5 * t * t, -t, 1.0)
}

/// Half-length `τ = min(δ, 1/η)` of the homogeneous geodesic segment through
/// `u`; `0` when `η` is infinite.
pub fn homogeneous_segment_bound(u: &Vector3<f64>, delta: f64, eta: f64) -> Result<f64, KillingError> {
    if u.norm() == 0.0 {
        return Err(KillingError::ZeroDirection);
    }
    Ok(if eta.is_infinite() {
        0.0
    } else if eta == 0.0 {
        delta
    } else {
        delta.min(1.0 / eta)
    })
}

/// `dim − dim(isotropy) = 3 + orbit_dim − rank_dk`.
pub fn dimension_identity_check(space: &GeneratorSpace, rank_dk: usize, orbit_dim: usize) -> bool {
    (space.dim() - space.isotropy_dim()) as i64 == 3 + orbit_dim as i64 - rank_dk as i64
}
