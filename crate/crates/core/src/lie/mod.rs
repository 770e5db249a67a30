//! Four-dimensional real Lie algebras: structure constants, classification
//! among the extensions `R ⋉ heis` and `sl(2,R) ⊕ R`, the parabolic normal
//! forms, and the affine group `O(1,2) ⋉ R³`.

mod classify;
mod group;

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;
use thiserror::Error;

pub use classify::{classify4, ClassLabel, Classification};
pub use group::{group_exp, group_mul, repar_check, transport_generator, GroupElement, ReparCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("constraint {what} violated by {value:e}")]
    Constraint { what: &'static str, value: f64 },
    #[error("v is not an eigenvector of A (residual {0:e})")]
    NotEigen(f64),
    #[error("basis change is singular")]
    SingularBasis,
    #[error("at least one step required")]
    NoSteps,
}

/// Structure constants `c[i][j][k] = c^k_ij`, `[e_i, e_j] = Σ_k c^k_ij e_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LieAlgebra4 {
    c: [[[f64; 4]; 4]; 4],
}

impl LieAlgebra4 {
    /// Takes the constants as given; antisymmetry is restored from the upper triangle.
    pub fn new(mut c: [[[f64; 4]; 4]; 4]) -> Self {
        for i in 0..4 {
            c[i][i] = [0.0; 4];
            for j in (i + 1)..4 {
                c[j][i] = c[i][j].map(|x| -x);
            }
        }
        Self { c }
    }

    /// From brackets `[e_i, e_j] = w` listed for `i < j` or `i > j`; unlisted pairs commute.
    pub fn from_brackets(brackets: &[(usize, usize, [f64; 4])]) -> Self {
        let mut c = [[[0.0; 4]; 4]; 4];
        for &(i, j, w) in brackets {
            c[i][j] = w;
            c[j][i] = w.map(|x| -x);
        }
        Self { c }
    }

    pub fn constants(&self) -> &[[[f64; 4]; 4]; 4] {
        &self.c
    }

    pub fn bracket(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Vector4<f64> {
        let mut out = Vector4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let w = x[i] * y[j];
                if w != 0.0 {
                    for k in 0..4 {
                        out[k] += w * self.c[i][j][k];
                    }
                }
            }
        }
        out
    }

    pub fn basis_bracket(&self, i: usize, j: usize) -> Vector4<f64> {
        Vector4::from(self.c[i][j])
    }

    /// Matrix of `ad(x)`.
    pub fn ad(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        Matrix4::from_fn(|k, j| (0..4).map(|i| x[i] * self.c[i][j][k]).sum())
    }

    /// Largest structure constant.
    pub fn scale(&self) -> f64 {
        self.c.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest Jacobi sum over basis triples, relative to the squared scale.
    pub fn jacobi_residual(&self) -> f64 {
        let e = |i: usize| Vector4::from_fn(|k, _| if k == i { 1.0 } else { 0.0 });
        let mut r = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let s = self.bracket(&e(i), &self.basis_bracket(j, k))
                        + self.bracket(&e(j), &self.basis_bracket(k, i))
                        + self.bracket(&e(k), &self.basis_bracket(i, j));
                    r = r.max(s.amax());
                }
            }
        }
        r / self.scale().powi(2).max(f64::MIN_POSITIVE)
    }

    /// Constants in the basis whose vectors are the columns of `p`.
    pub fn change_basis(&self, p: &Matrix4<f64>) -> Result<Self, LieError> {
        let pinv = p.try_inverse().ok_or(LieError::SingularBasis)?;
        let mut c = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let w = pinv * self.bracket(&p.column(i).into(), &p.column(j).into());
                c[i][j] = [w[0], w[1], w[2], w[3]];
            }
        }
        Ok(Self { c })
    }
}

impl fmt::Display for LieAlgebra4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let w = &self.c[i][j];
                if w.iter().all(|v| *v == 0.0) {
                    continue;
                }
                if !first {
                    write!(f, ", ")?;
                }
                first = false;
                write!(f, "[e{},e{}] = ({:.6}, {:.6}, {:.6}, {:.6})", i + 1, j + 1, w[0], w[1], w[2], w[3])?;
            }
        }
        if first {
            write!(f, "abelian")?;
        }
        Ok(())
    }
}

/// Normal form with basis `(T, X, Y, Z)`:
/// `[T,Y] = −X − βY`, `[X,Y] = Z − αY`, `[Y,Z] = 0`,
/// `[X,Z] = −αZ − σY`, `[T,X] = −2αT − bY`, `[T,Z] = αX − βZ`,
/// subject to `αβ = 0` and `α² = −σ`.
pub fn parabolic_model_algebra(alpha: f64, beta: f64, sigma: f64, b: f64) -> Result<LieAlgebra4, LieError> {
    let tol = 1e-12 * (1.0 + alpha.abs() + beta.abs() + sigma.abs()).powi(2);
    if (alpha * beta).abs() > tol {
        return Err(LieError::Constraint { what: "alpha*beta = 0", value: alpha * beta });
    }
    if (alpha * alpha + sigma).abs() > tol {
        return Err(LieError::Constraint { what: "alpha^2 = -sigma", value: alpha * alpha + sigma });
    }
    const T: usize = 0;
    const X: usize = 1;
    const Y: usize = 2;
    const Z: usize = 3;
    let v = |t: f64, x: f64, y: f64, z: f64| [t, x, y, z];
    Ok(LieAlgebra4::from_brackets(&[
        (T, Y, v(0.0, -1.0, -beta, 0.0)),
        (X, Y, v(0.0, 0.0, -alpha, 1.0)),
        (X, Z, v(0.0, 0.0, -sigma, -alpha)),
        (T, X, v(-2.0 * alpha, 0.0, -b, 0.0)),
        (T, Z, v(0.0, alpha, 0.0, -beta)),
    ]))
}

#[cfg(test)]
mod tests;
