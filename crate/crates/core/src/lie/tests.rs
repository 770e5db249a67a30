use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::curvature::{CurvatureMatrix, E, F, H, KAPPA0, KAPPA1};
use crate::killing::KillingGenerator;

const T: usize = 0;
const X: usize = 1;
const Y: usize = 2;
const Z: usize = 3;

/// `heis = span(X, Y, Z)`, `[X,Y] = Z`, `ad T` acting by `a` on `(X, Y)`.
fn extension(a: &Matrix2<f64>) -> LieAlgebra4 {
    LieAlgebra4::from_brackets(&[
        (X, Y, [0.0, 0.0, 0.0, 1.0]),
        (T, X, [0.0, a[(0, 0)], a[(1, 0)], 0.0]),
        (T, Y, [0.0, a[(0, 1)], a[(1, 1)], 0.0]),
        (T, Z, [0.0, 0.0, 0.0, a.trace()]),
    ])
}

fn random_invertible(rng: &mut ChaCha8Rng) -> Matrix4<f64> {
    loop {
        let p = Matrix4::from_fn(|_, _| rng.gen_range(-1.0f64..1.0));
        if p.determinant().abs() > 0.05 {
            return p;
        }
    }
}

#[test]
fn hyperbolic_block() {
    let c = classify4(&extension(&Matrix2::new(1.0, 0.0, 0.0, -1.0)));
    assert_eq!(c.label, ClassLabel::RhHeis);
    assert!(c.trusted);
    assert!(c.unimodular);
    assert_eq!(c.derived_dim, 3);
}

#[test]
fn remaining_unimodular_labels() {
    assert_eq!(classify4(&extension(&Matrix2::new(0.0, 1.0, -1.0, 0.0))).label, ClassLabel::ReHeis);
    assert_eq!(classify4(&extension(&Matrix2::new(0.0, 1.0, 0.0, 0.0))).label, ClassLabel::RpHeis);
    assert_eq!(classify4(&extension(&Matrix2::zeros())).label, ClassLabel::RTimesHeis);
    assert_eq!(classify4(&extension(&(Matrix2::identity() * 0.7))).label, ClassLabel::RsHeis);
}

#[test]
fn abelian_and_simple() {
    let ab = classify4(&LieAlgebra4::new([[[0.0; 4]; 4]; 4]));
    assert!(matches!(ab.label, ClassLabel::Other { .. }));
    let so3 = LieAlgebra4::from_brackets(&[(1, 2, [0.0, 0.0, 0.0, 1.0]), (2, 3, [0.0, 1.0, 0.0, 0.0]), (3, 1, [0.0, 0.0, 1.0, 0.0])]);
    assert!(matches!(classify4(&so3).label, ClassLabel::Other { .. }));
    // [h,e] = e, [h,f] = −f, [e,f] = h in basis (·, h, e, f)
    let sl2 = LieAlgebra4::from_brackets(&[(1, 2, [0.0, 0.0, 1.0, 0.0]), (1, 3, [0.0, 0.0, 0.0, -1.0]), (2, 3, [0.0, 1.0, 0.0, 0.0])]);
    assert_eq!(classify4(&sl2).label, ClassLabel::Sl2PlusR);
}

#[test]
fn parabolic_models() {
    let m = parabolic_model_algebra(0.0, 1.0, 0.0, -3.0).unwrap();
    assert!(m.jacobi_residual() < 1e-15);
    assert!((classify4(&m).label.nu().unwrap() - 3.0).abs() < 1e-12);

    let m = parabolic_model_algebra(1.0, 0.0, -1.0, 0.4).unwrap();
    assert!(m.jacobi_residual() < 1e-15);
    assert_eq!(classify4(&m).label, ClassLabel::Sl2PlusR);

    // β = 0: ad T on (X, Y) has determinant −b
    assert_eq!(classify4(&parabolic_model_algebra(0.0, 0.0, 0.0, 1.0).unwrap()).label, ClassLabel::RhHeis);
    assert_eq!(classify4(&parabolic_model_algebra(0.0, 0.0, 0.0, -1.0).unwrap()).label, ClassLabel::ReHeis);
    assert_eq!(classify4(&parabolic_model_algebra(0.0, 0.0, 0.0, 0.0).unwrap()).label, ClassLabel::RpHeis);
}

#[test]
fn parabolic_constraints_are_enforced() {
    assert!(matches!(parabolic_model_algebra(1.0, 1.0, -1.0, 0.0), Err(LieError::Constraint { .. })));
    assert!(matches!(parabolic_model_algebra(1.0, 0.0, 0.0, 0.0), Err(LieError::Constraint { .. })));
}

#[test]
fn jacobi_detects_non_algebras() {
    let bad = LieAlgebra4::from_brackets(&[(X, Y, [0.0, 1.0, 0.0, 0.0]), (X, Z, [0.0, 1.0, 0.0, 0.0]), (Y, Z, [0.0, 0.0, 1.0, 0.0])]);
    assert!(bad.jacobi_residual() > 0.1);
}

#[test]
fn labels_survive_basis_changes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let algebras = [
        extension(&Matrix2::new(1.0, 0.0, 0.0, -1.0)),
        extension(&Matrix2::new(0.0, 1.0, -1.0, 0.0)),
        extension(&Matrix2::new(0.0, 1.0, 0.0, 0.0)),
        extension(&Matrix2::new(2.0, 1.0, 0.3, 0.5)),
        parabolic_model_algebra(1.0, 0.0, -1.0, 0.4).unwrap(),
    ];
    for alg in &algebras {
        let want = classify4(alg).label;
        for _ in 0..50 {
            let q = alg.change_basis(&random_invertible(&mut rng)).unwrap();
            let got = classify4(&q);
            match (&want, &got.label) {
                (ClassLabel::RnuHeis { nu: a }, ClassLabel::RnuHeis { nu: b }) => assert!((a - b).abs() < 1e-8),
                _ => assert_eq!(want, got.label, "{alg}"),
            }
        }
    }
}

#[test]
fn adapted_basis_is_adapted() {
    let alg = extension(&Matrix2::new(2.0, 1.0, 0.3, 0.5));
    let q = alg.change_basis(&random_invertible(&mut ChaCha8Rng::seed_from_u64(3))).unwrap();
    let c = classify4(&q);
    let p = c.adapted_basis.unwrap();
    let (x, y, z) = (p.column(1).into_owned(), p.column(2).into_owned(), p.column(3).into_owned());
    assert!((q.bracket(&x, &y) - z).amax() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nu_is_det_over_trace_squared(a in prop::array::uniform4(-2.0f64..2.0)) {
        let m = Matrix2::new(a[0], a[1], a[2], a[3]);
        let tr = m.trace();
        let off = m - Matrix2::identity() * (tr / 2.0);
        prop_assume!(tr.abs() > 0.1 && off.norm() > 0.1);
        let c = classify4(&extension(&m));
        prop_assert!(!c.unimodular);
        let nu = c.label.nu().unwrap();
        prop_assert!((nu - m.determinant() / (tr * tr)).abs() < 1e-9);
    }

    #[test]
    fn group_exp_is_a_homomorphism(c in prop::array::uniform6(-1.0f64..1.0), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let xi = KillingGenerator::from_coords(&c);
        let a = group_mul(&group_exp(&xi, s), &group_exp(&xi, t));
        let b = group_exp(&xi, s + t);
        prop_assert!((a.0 - b.0).amax() < 1e-10);
        prop_assert!(b.j_residual() < 1e-10);
        let id = group_mul(&b, &b.inverse());
        prop_assert!((id.0 - Matrix4::identity()).amax() < 1e-10);
    }
}

#[test]
fn exp_at_zero_is_identity() {
    let xi = KillingGenerator::from_coords(&[0.3, -1.0, 2.0, 1.0, 0.0, -4.0]);
    assert_eq!(group_exp(&xi, 0.0), GroupElement::identity());
}

#[test]
fn reparametrization() {
    let grid: Vec<f64> = (0..=20).map(|i| -2.0 + 0.2 * i as f64).collect();
    let e = Vector3::new(1.0, 0.0, 0.0);
    let f = Vector3::new(0.0, 0.0, 1.0);
    for (a, v, eta) in [(E, e, 0.0), (H, e, 1.0), (H, f, -1.0)] {
        let r = repar_check(&a, &v, &grid).unwrap();
        assert_eq!(r.eta, eta);
        assert!(r.max_residual < 1e-10 * (1.0f64).max((2.0 * eta.abs()).exp()), "{r:?}");
    }
    assert!(repar_check(&H, &e, &[0.0]).unwrap().max_residual < 1e-15);
    assert!(matches!(repar_check(&E, &f, &grid), Err(LieError::NotEigen(_))));
}

#[test]
fn transport_with_constant_zero_curvature() {
    let xi0 = KillingGenerator::new(E * 0.3 - H * 0.5 + F, Vector3::new(0.2, 1.0, -0.4));
    let v = Vector3::new(0.5, -0.3, 1.1);
    let zero = CurvatureMatrix::from_matrix(&Matrix3::zeros());
    let got = transport_generator(&xi0, &v, |_| zero, 1.5, 10).unwrap();
    let want = group_exp(&KillingGenerator::new(Matrix3::zeros(), -v), 1.5).adjoint(&xi0);
    assert!((got.a - want.a).amax() < 1e-13);
    assert!((got.v - want.v).amax() < 1e-13);
    assert!(matches!(transport_generator(&xi0, &v, |_| zero, 1.0, 0), Err(LieError::NoSteps)));
}

#[test]
fn transport_converges_at_fourth_order() {
    let xi0 = KillingGenerator::new(E * 0.3 - H * 0.5 + F, Vector3::new(0.2, 1.0, -0.4));
    let v = Vector3::new(0.5, -0.3, 1.1);
    let kappa = |t: f64| CurvatureMatrix::from_matrix(&(KAPPA0 * (1.0 + t) + KAPPA1 * t.sin()));
    let reference = transport_generator(&xi0, &v, kappa, 1.0, 1280).unwrap();
    let err = |n| {
        let x = transport_generator(&xi0, &v, kappa, 1.0, n).unwrap();
        (x.a - reference.a).amax().max((x.v - reference.v).amax())
    };
    let (e1, e2) = (err(10), err(20));
    let ratio = e1 / e2;
    assert!(ratio > 12.0 && ratio < 20.0, "{e1} {e2} {ratio}");
}

#[test]
fn adjoint_of_rotation_conjugates() {
    let g = GroupElement::new(&(H * 0.4).exp(), &Vector3::new(1.0, 2.0, 3.0));
    let xi = KillingGenerator::new(E, Vector3::zeros());
    let ad = g.adjoint(&xi);
    assert!((ad.a - E * 0.4f64.exp()).amax() < 1e-12);
}
