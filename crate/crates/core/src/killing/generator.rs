use nalgebra::{Matrix3, Vector3};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::curvature::{christoffel, from_ehf, skew_residual, to_ehf, CurvatureError, WittFrame};
use crate::dsl::MetricJets;
use crate::jet::Jet;

/// `ξ = A + v ∈ o(1,2) ⋉ R³` in Witt frame components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingGenerator {
    pub a: Matrix3<f64>,
    pub v: Vector3<f64>,
}

impl Serialize for KillingGenerator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = self.ehf();
        let mut st = s.serialize_struct("KillingGenerator", 2)?;
        st.serialize_field("a_ehf", &[c[0], c[1], c[2]])?;
        st.serialize_field("v", &[self.v[0], self.v[1], self.v[2]])?;
        st.end()
    }
}

/// `q(A) = a_H² + 2 a_E a_F`: minus the linear coefficient of the
/// characteristic polynomial, so conjugation invariant.
pub fn q_invariant(a: &Matrix3<f64>) -> f64 {
    let c = to_ehf(a);
    c[1] * c[1] + 2.0 * c[0] * c[2]
}

impl KillingGenerator {
    pub fn new(a: Matrix3<f64>, v: Vector3<f64>) -> Self {
        Self { a, v }
    }

    /// `(∇X, X)` at the base point of the jets, in the given frame. The field
    /// jets need order at least 1.
    pub fn from_field(g: &MetricJets, field: &[Jet; 3], frame: &WittFrame) -> Result<Self, CurvatureError> {
        let conn = christoffel(g)?;
        let x = Vector3::from_fn(|k, _| field[k].value());
        // m[(k, j)] = (∇_j X)^k
        let m = Matrix3::from_fn(|k, j| {
            let mut idx = [0; 3];
            idx[j] = 1;
            let d = field[k].extract_derivative(idx).unwrap_or(0.0);
            d + (0..3).map(|l| conn.gamma(k, j, l).value() * x[l]).sum::<f64>()
        });
        let p = frame.matrix();
        let pi = p.try_inverse().ok_or(CurvatureError::Degenerate(0.0))?;
        Ok(Self { a: pi * m * p, v: pi * x })
    }

    /// From `(a_E, a_H, a_F, v₁, v₂, v₃)`.
    pub fn from_coords(c: &[f64; 6]) -> Self {
        Self { a: from_ehf(&Vector3::new(c[0], c[1], c[2])), v: Vector3::new(c[3], c[4], c[5]) }
    }

    pub fn coords(&self) -> [f64; 6] {
        let c = self.ehf();
        [c[0], c[1], c[2], self.v[0], self.v[1], self.v[2]]
    }

    pub(crate) fn scaled_coords(&self, ell: f64) -> [f64; 6] {
        let mut c = self.coords();
        for x in &mut c[3..] {
            *x /= ell;
        }
        c
    }

    pub fn ehf(&self) -> Vector3<f64> {
        to_ehf(&self.a)
    }

    /// Largest entry of `AᵀJ + JA`.
    pub fn skew_residual(&self) -> f64 {
        skew_residual(&self.a)
    }

    /// Components in the frame whose vectors have components `q` (columns)
    /// in the current frame.
    pub fn in_frame(&self, q: &Matrix3<f64>) -> Self {
        let qi = q.try_inverse().expect("frame change is invertible");
        Self { a: qi * self.a * q, v: qi * self.v }
    }

    /// `([A₁,A₂], A₁v₂ − A₂v₁)`.
    pub fn semidirect_bracket(&self, other: &Self) -> Self {
        Self { a: self.a * other.a - other.a * self.a, v: self.a * other.v - other.a * self.v }
    }

    pub fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().fold(Self::new(Matrix3::zeros(), Vector3::zeros()), |acc, (c, g)| Self { a: acc.a + g.a * *c, v: acc.v + g.v * *c })
    }
}
