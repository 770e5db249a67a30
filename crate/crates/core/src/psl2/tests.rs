use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;

#[test]
fn k1_matrices() {
    let s = build_irrep(1).unwrap();
    assert_eq!(s.h, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, -2.0])));
    let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -2.0, 0.0, 2.0, 0.0, -1.0, 0.0]);
    assert_eq!(&s.e - &s.f, want);
}

#[test]
fn tridiagonal_pattern() {
    let s = build_irrep(4).unwrap();
    let d = &s.e - &s.f;
    for j in 0..8 {
        assert_eq!(d[(j, j + 1)], (j + 1) as f64);
        assert_eq!(d[(j + 1, j)], -((8 - j) as f64));
    }
}

#[test]
fn k_range() {
    assert_eq!(build_irrep(0), Err(Psl2Error::KOutOfRange(0)));
    assert_eq!(build_irrep(K_MAX + 1), Err(Psl2Error::KOutOfRange(K_MAX + 1)));
    assert!(build_irrep(K_MAX).is_ok());
    assert_eq!(invariant_form(1, 0.0), Err(Psl2Error::BadScale));
}

#[test]
fn relations_and_spectrum() {
    for k in 1..=6 {
        let s = build_irrep(k).unwrap();
        assert!(s.sl2_residual() < 1e-12);
        let want: Vec<i64> = (0..=2 * k as i64).map(|j| 2 * k as i64 - 2 * j).collect();
        assert_eq!(s.weights(), want);
    }
}

#[test]
fn k1_form() {
    let g = invariant_form(1, 1.0).unwrap();
    assert_eq!(g.coefficients, vec![1.0, -0.5]);
    let x = DVector::from_vec(vec![0.3, -1.2, 2.0]);
    assert!((g.eval(&x, &x) - (2.0 * 0.3 * 2.0 - 0.5 * 1.44)).abs() < 1e-14);
    assert_eq!(g.dual_weights(), vec![1.0, 2.0]);
}

#[test]
fn printed_weights_are_not_invariant() {
    let s = build_irrep(1).unwrap();
    let g = invariant_form(1, 1.0).unwrap();
    let dual = InvariantForm { k: 1, coefficients: g.dual_weights() };
    assert!(dual.invariance_residual(&s) > 1.0);
    assert!(g.invariance_residual(&s) < 1e-15);
}

#[test]
fn forms_are_invariant_with_split_signature() {
    for k in 1..=K_MAX {
        let s = build_irrep(k).unwrap();
        let g = invariant_form(k, 1.0).unwrap();
        assert!(g.invariance_residual(&s) < 1e-10, "{k}");
        let (p, n) = g.signature();
        assert_eq!(p.min(n), k);
        assert_eq!(p.max(n), k + 1);
    }
}

#[test]
fn group_elements_preserve_the_gram_matrix() {
    let s = build_irrep(3).unwrap();
    let g = invariant_form(3, 2.0).unwrap().gram();
    for (letter, t) in [(0, 0.3), (1, -0.7), (2, 1.1)] {
        let r = exp_letter(&s, letter, t);
        assert!((r.transpose() * &g * &r - &g).amax() < 1e-12);
    }
}

#[test]
fn fixed_vectors() {
    let s = build_irrep(1).unwrap();
    let (v, d) = elliptic_fixed_vector(&s).unwrap();
    assert!(d.trusted);
    let want = DVector::from_vec(vec![1.0, 0.0, 1.0]).normalize();
    assert!((v - want).amax() < 1e-14);
    for k in 1..=6 {
        let s = build_irrep(k).unwrap();
        let (v, _) = elliptic_fixed_vector(&s).unwrap();
        assert!(((&s.e - &s.f) * &v).amax() < 1e-12);
        let g = invariant_form(k, 1.0).unwrap();
        assert!(g.eval(&v, &v).abs() > 1e-3, "{k}");
    }
}

#[test]
fn certificate_k1() {
    let s = build_irrep(1).unwrap();
    let g = invariant_form(1, 1.5).unwrap();
    let v = DVector::from_vec(vec![1.0, 0.0, 1.0]);
    let c = orbit_closedness_certificate(&s, &g, &v, 100, 8, 11).unwrap();
    assert_eq!(c.level, 3.0);
    assert!(c.max_relative_residual < 1e-9);
    assert!(c.excludes_zero);
    let zero = DVector::zeros(3);
    assert_eq!(orbit_closedness_certificate(&s, &g, &zero, 10, 8, 11), Err(Psl2Error::NullVector));
    let null = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    assert_eq!(orbit_closedness_certificate(&s, &g, &null, 10, 8, 11), Err(Psl2Error::NullVector));
}

#[test]
fn certificate_for_hyperbolic_stabilizer() {
    for k in 1..=6 {
        let s = build_irrep(k).unwrap();
        let g = invariant_form(k, 1.0).unwrap();
        let v = DVector::from_fn(2 * k + 1, |i, _| if i == k { 1.0 } else { 0.0 });
        assert!((s.h.clone() * &v).amax() == 0.0);
        let c = orbit_closedness_certificate(&s, &g, &v, 100, 8, 5).unwrap();
        assert_eq!(c.level, g.coefficients[k]);
    }
}

#[test]
fn level_scales_with_a1() {
    let s = build_irrep(2).unwrap();
    let (v, _) = elliptic_fixed_vector(&s).unwrap();
    let c1 = orbit_closedness_certificate(&s, &invariant_form(2, 1.0).unwrap(), &v, 20, 6, 3).unwrap();
    let c3 = orbit_closedness_certificate(&s, &invariant_form(2, -3.0).unwrap(), &v, 20, 6, 3).unwrap();
    assert!((c3.level + 3.0 * c1.level).abs() < 1e-14);
    assert!((c3.max_relative_residual - c1.max_relative_residual).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariance_is_scale_free(k in 1usize..=8, a1 in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let s = build_irrep(k).unwrap();
        let g = invariant_form(k, a1).unwrap();
        prop_assert!(g.invariance_residual(&s) <= 1e-12 * a1.abs());
    }
}

#[test]
fn certificates_up_to_k6() {
    for k in 1..=6 {
        let s = build_irrep(k).unwrap();
        let g = invariant_form(k, 1.0).unwrap();
        let (v, _) = elliptic_fixed_vector(&s).unwrap();
        let c = orbit_closedness_certificate(&s, &g, &v, 100, 8, k as u64).unwrap();
        assert!(c.max_relative_residual < CERTIFICATE_TOL);
    }
}
