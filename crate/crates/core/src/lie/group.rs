use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::Serialize;

use super::LieError;
use crate::curvature::{CurvatureMatrix, J};
use crate::killing::KillingGenerator;

/// Element of `O(1,2) ⋉ R³` as the affine matrix `[[L, w], [0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement(pub Matrix4<f64>);

impl GroupElement {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn new(linear: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(linear);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
        Self(m)
    }

    pub fn linear(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Largest entry of `LᵀJL − J`.
    pub fn j_residual(&self) -> f64 {
        let l = self.linear();
        (l.transpose() * J * l - J).abs().max()
    }

    pub fn inverse(&self) -> Self {
        let li = self.linear().try_inverse().expect("group elements are invertible");
        Self::new(&li, &(-(li * self.translation())))
    }

    /// `g ξ g⁻¹` on the Lie algebra.
    pub fn adjoint(&self, xi: &KillingGenerator) -> KillingGenerator {
        let m = self.0 * block(xi, 1.0) * self.inverse().0;
        KillingGenerator::new(m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned())
    }
}

fn block(xi: &KillingGenerator, t: f64) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(xi.a * t));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(xi.v * t));
    m
}

/// `e^{tξ}` for the affine block `[[tA, tv], [0, 0]]`.
pub fn group_exp(xi: &KillingGenerator, t: f64) -> GroupElement {
    GroupElement(block(xi, t).exp())
}

pub fn group_mul(a: &GroupElement, b: &GroupElement) -> GroupElement {
    GroupElement(a.0 * b.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReparCheck {
    pub eta: f64,
    pub max_residual: f64,
}

/// Compares `e^{tξ}` with `e^{s(t) v} e^{tA}`, `s(t) = (e^{ηt} − 1)/η`
/// (`s = t` for `η = 0`), where `Av = ηv`.
pub fn repar_check(a: &Matrix3<f64>, v: &Vector3<f64>, t_grid: &[f64]) -> Result<ReparCheck, LieError> {
    let av = a * v;
    let eta = v.dot(&av) / v.norm_squared();
    let miss = (av - v * eta).norm();
    if !(miss <= 1e-10 * (a.amax() * v.norm()).max(f64::MIN_POSITIVE)) {
        return Err(LieError::NotEigen(miss));
    }
    let xi = KillingGenerator::new(*a, *v);
    let rot = KillingGenerator::new(*a, Vector3::zeros());
    let trans = KillingGenerator::new(Matrix3::zeros(), *v);
    let mut worst = 0.0f64;
    for &t in t_grid {
        let s = if eta == 0.0 { t } else { (eta * t).exp_m1() / eta };
        let lhs = group_exp(&xi, t);
        let rhs = group_mul(&group_exp(&trans, s), &group_exp(&rot, t));
        worst = worst.max((lhs.0 - rhs.0).norm());
    }
    Ok(ReparCheck { eta, max_residual: worst })
}

/// Fourth-order Runge–Kutta for `ξ' = [ξ, v] − κ(t)(ξ, v)`, where `v` is a
/// translation: `A' = −κ(t)(w ∧ v)`, `w' = A v`.
pub fn transport_generator(
    xi0: &KillingGenerator,
    v: &Vector3<f64>,
    kappa_along: impl Fn(f64) -> CurvatureMatrix,
    t_end: f64,
    steps: usize,
) -> Result<KillingGenerator, LieError> {
    if steps == 0 {
        return Err(LieError::NoSteps);
    }
    let rhs = |t: f64, x: &KillingGenerator| KillingGenerator::new(-kappa_along(t).apply(&x.v, v), x.a * v);
    let h = t_end / steps as f64;
    let mut x = *xi0;
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rhs(t, &x);
        let k2 = rhs(t + h / 2.0, &KillingGenerator::combine(&[(1.0, &x), (h / 2.0, &k1)]));
        let k3 = rhs(t + h / 2.0, &KillingGenerator::combine(&[(1.0, &x), (h / 2.0, &k2)]));
        let k4 = rhs(t + h, &KillingGenerator::combine(&[(1.0, &x), (h, &k3)]));
        x = KillingGenerator::combine(&[(1.0, &x), (h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]);
    }
    Ok(x)
}
