use nalgebra::{Matrix3, Vector3};

use super::*;
use crate::dsl::{eval_f64, eval_metric_jets, parse_metric, parse_scalar, MetricSpec, Params};

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn g0() -> MetricSpec {
    parse_metric("-2*dx1*dx3 + dx2^2").unwrap()
}

fn galpha() -> MetricSpec {
    parse_metric("x3^a * (-2*dx1*dx3 + dx2^2)").unwrap()
}

/// Constant sectional curvature `c` in conformally flat form.
fn space_form() -> MetricSpec {
    parse_metric("(1 + c/4*(-2*x1*x3 + x2^2))^(-2) * (-2*dx1*dx3 + dx2^2)").unwrap()
}

fn wobbly() -> MetricSpec {
    parse_metric(
        "(-2 + 0.3*x1*x2 - 0.1*x3^2)*dx1*dx3 + (1 + 0.2*x1^2 + 0.05*x2*x3)*dx2^2 \
         + 0.1*x3*x2*dx1^2 + 0.07*x1^3*dx3^2 + 0.04*x1*x2*x3*dx1*dx2",
    )
    .unwrap()
}

#[test]
fn flat_metric_has_no_curvature() {
    let t = tower_at(&g0(), [0.3, -0.7, 1.1], &Params::new(), 7).unwrap();
    for ten in t.tensors() {
        assert_eq!(ten.max_abs(), 0.0);
    }
    let g = eval_metric_jets(&g0(), [0.0; 3], 3, &Params::new()).unwrap();
    let c = christoffel(&g).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert!(c.gamma(k, i, j).coeffs().iter().all(|v| *v == 0.0));
            }
        }
    }
}

/// Central-difference Christoffels of a closed-form metric.
fn fd_christoffel(spec: &MetricSpec, p: [f64; 3], params: &Params) -> [[[f64; 3]; 3]; 3] {
    let g_at = |x: [f64; 3]| Matrix3::from_fn(|i, j| eval_f64(spec.component(i + 1, j + 1), x, params).unwrap());
    let h = 1e-5;
    let dg: Vec<Matrix3<f64>> = (0..3)
        .map(|a| {
            let mut xp = p;
            let mut xm = p;
            xp[a] += h;
            xm[a] -= h;
            (g_at(xp) - g_at(xm)) / (2.0 * h)
        })
        .collect();
    let ginv = g_at(p).try_inverse().unwrap();
    let mut out = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                out[k][i][j] = (0..3).map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])).sum();
            }
        }
    }
    out
}

#[test]
fn christoffel_matches_finite_differences() {
    let p = params(&[("a", -2.0)]);
    let pt = [0.0, 0.0, 2.0];
    let g = eval_metric_jets(&galpha(), pt, 2, &p).unwrap();
    let conn = christoffel(&g).unwrap();
    let fd = fd_christoffel(&galpha(), pt, &p);
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert!((conn.gamma(k, i, j).value() - fd[k][i][j]).abs() < 1e-7);
            }
        }
    }
    assert_eq!(conn.torsion_residual(), 0.0);
}

#[test]
fn christoffel_of_conformal_metric() {
    // g = e^{2φ} g0 with φ = x3: Γ^k_ij = δ^k_i φ_j + δ^k_j φ_i − g0_ij g0^{kl} φ_l
    let spec = parse_metric("exp(2*x3) * (-2*dx1*dx3 + dx2^2)").unwrap();
    let g = eval_metric_jets(&spec, [0.4, -0.3, 0.2], 3, &Params::new()).unwrap();
    let conn = christoffel(&g).unwrap();
    let g0m = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
    let g0inv = g0m.try_inverse().unwrap();
    let dphi = [0.0, 0.0, 1.0];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                let grad_k: f64 = (0..3).map(|l| g0inv[(k, l)] * dphi[l]).sum();
                let expect = d(k, i) * dphi[j] + d(k, j) * dphi[i] - g0m[(i, j)] * grad_k;
                assert!((conn.gamma(k, i, j).value() - expect).abs() < 1e-13, "{k}{i}{j}");
            }
        }
    }
}

#[test]
fn family_is_curved_and_satisfies_identities() {
    for a in [-5.0, -3.0, -1.5, -0.5, 2.0] {
        let t = tower_at(&galpha(), [0.3, 0.2, 1.7], &params(&[("a", a)]), 7).unwrap();
        assert!(t.tensors()[0].max_abs() > 1e-3, "{a}");
        let r = t.symmetry_residuals();
        assert!(r.max() < 1e-9, "{r:?}");
    }
}

#[test]
fn family_is_flat_at_minus_two() {
    // Ric_33 of x3^a g0 is a(a+2)/(4 x3^2); it vanishes at a = -2
    let t = tower_at(&galpha(), [0.3, 0.2, 1.7], &params(&[("a", -2.0)]), 7).unwrap();
    for j in 0..=t.r_max() {
        assert!(t.scaled_max_abs(j) < 1e-9, "{j}: {}", t.scaled_max_abs(j));
    }
    for a in [-5.0, -3.0, -0.5] {
        let x3 = 1.7;
        let t = tower_at(&galpha(), [0.0, 0.0, x3], &params(&[("a", a)]), 0).unwrap();
        // Ricci(f, f) = R(e, f, f, e) + R(h, f, f, h) in a Witt frame
        let r = &t.tensors()[0];
        let ric_ff = r.get(&[0, 2, 2, 2]) + r.get(&[1, 2, 2, 1]) + r.get(&[2, 2, 2, 0]);
        let f3 = t.frame().f()[2];
        let expect = a * (a + 2.0) / (4.0 * x3 * x3) * f3 * f3;
        assert!((ric_ff - expect).abs() < 1e-12 * expect.abs().max(1.0), "{a}: {ric_ff} vs {expect}");
    }
}

#[test]
fn identities_hold_for_polynomial_perturbation() {
    let t = tower_at(&wobbly(), [0.2, -0.1, 0.3], &Params::new(), 4).unwrap();
    assert!(t.tensors()[0].max_abs() > 1e-3);
    let r = t.symmetry_residuals();
    assert!(r.max() < 1e-9, "{r:?}");
    let d = decompose_curvature(&curvature_matrix(&t));
    assert!(d.module_residual < 1e-9, "{d:?}");
}

#[test]
fn space_form_tower() {
    for c in [-0.8, 0.5] {
        let t = tower_at(&space_form(), [0.1, 0.2, -0.15], &params(&[("c", c)]), 5).unwrap();
        let k = curvature_matrix(&t).matrix();
        assert!((k - Matrix3::identity() * c).abs().max() < 1e-12, "{k}");
        for j in 1..=5 {
            assert!(t.tensors()[j].max_abs() < 1e-10, "j = {j}: {}", t.tensors()[j].max_abs());
        }
        let d = decompose_curvature(&curvature_matrix(&t));
        assert!((d.sigma - c).abs() < 1e-12);
    }
}

#[test]
fn flat_frame_is_coordinate_frame() {
    let g = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
    let fr = build_witt_frame(&g).unwrap();
    assert_eq!(fr.e(), Vector3::new(1.0, 0.0, 0.0));
    assert_eq!(fr.h(), Vector3::new(0.0, 1.0, 0.0));
    assert_eq!(fr.f(), Vector3::new(0.0, 0.0, -1.0));
    assert_eq!(fr.gram_residual(&g), 0.0);
}

#[test]
fn conformal_frame_scaling() {
    let g = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0) * 0.5;
    let fr = build_witt_frame(&g).unwrap();
    let r2 = 2f64.sqrt();
    assert!((fr.e() - Vector3::new(r2, 0.0, 0.0)).norm() < 1e-15);
    assert!((fr.h() - Vector3::new(0.0, r2, 0.0)).norm() < 1e-15);
    assert!((fr.f() - Vector3::new(0.0, 0.0, -r2)).norm() < 1e-15);
}

#[test]
fn generic_frames_have_gram_j() {
    let g = Matrix3::new(-1.3, 0.2, 0.1, 0.2, 1.1, 0.4, 0.1, 0.4, 0.9);
    let fr = build_witt_frame(&g).unwrap();
    assert!(fr.gram_residual(&g) < 1e-12);
    assert_eq!(build_witt_frame(&g).unwrap(), fr);
    assert!(matches!(build_witt_frame(&Matrix3::identity()), Err(CurvatureError::Signature(_))));
}

#[test]
fn curvature_matrix_basics() {
    let k = CurvatureMatrix::from_matrix(&KAPPA0);
    let d = decompose_curvature(&k);
    assert_eq!(d.sigma, 1.0);
    assert_eq!(d.tracefree.matrix(), Matrix3::zeros());
    let k = CurvatureMatrix::from_matrix(&(KAPPA0 * 0.7 + KAPPA1 * -2.0));
    let d = decompose_curvature(&k);
    assert!((d.sigma - 0.7).abs() < 1e-15);
    assert!((d.tracefree.matrix() - KAPPA1 * -2.0).abs().max() < 1e-15);
    assert!(d.module_residual < 1e-15);
    // κ(e∧h) = σE
    let e = Vector3::new(1.0, 0.0, 0.0);
    let h = Vector3::new(0.0, 1.0, 0.0);
    let f = Vector3::new(0.0, 0.0, 1.0);
    assert!((k.apply(&e, &h) - E * 0.7).abs().max() < 1e-15);
    assert!((k.apply(&h, &f) - (E * -2.0 + F * 0.7)).abs().max() < 1e-15);
}

#[test]
fn ehf_commutators() {
    let br = |a: Matrix3<f64>, b: Matrix3<f64>| a * b - b * a;
    assert_eq!(br(H, E), E);
    assert_eq!(br(H, F), -F);
    assert_eq!(br(E, F), H);
    for m in [E, H, F] {
        assert_eq!(skew_residual(&m), 0.0);
    }
}

/// Matrix of `X ↦ q⁻¹ X q` on `o(1,2)` in the basis `(E, H, F)`.
fn adjoint(q: &Matrix3<f64>) -> Matrix3<f64> {
    let qi = q.try_inverse().unwrap();
    let mut m = Matrix3::zeros();
    for (k, b) in [E, H, F].iter().enumerate() {
        m.set_column(k, &to_ehf(&(qi * b * q)));
    }
    m
}

#[test]
fn frame_change_acts_by_conjugation() {
    let t = tower_at(&wobbly(), [0.2, -0.1, 0.3], &Params::new(), 1).unwrap();
    let k = curvature_matrix(&t).matrix();
    let gens = [E * 0.3 + H * -0.4 + F * 0.2, H * 0.7, (E - F) * 0.9];
    for a in gens {
        let q = a.exp();
        assert!((q.transpose() * J * q - J).abs().max() < 1e-13);
        let t2 = t.in_frame(&q);
        let k2 = curvature_matrix(&t2).matrix();
        let ad = adjoint(&q);
        let expect = ad * k * ad.try_inverse().unwrap();
        assert!((k2 - expect).abs().max() < 1e-9, "{k2} vs {expect}");
        let r2 = t2.symmetry_residuals();
        assert!(r2.max() < 1e-9);
    }
}

#[test]
fn sigma_b_for_space_form_is_scalar() {
    let t = tower_at(&space_form(), [0.1, 0.2, -0.15], &params(&[("c", -0.6)]), 1).unwrap();
    let sb = extract_sigma_b(&t, &(E * 2.0)).unwrap();
    assert!((sb.sigma + 0.6).abs() < 1e-12);
    assert!(sb.b.abs() < 1e-12);
    let adapted = sb.change;
    assert!((adapted.try_inverse().unwrap() * E * 2.0 * adapted - E).abs().max() < 1e-12);
    assert!(sb.adapted_frame.gram_residual(t.metric()) < 1e-12);
}

#[test]
fn adapted_change_for_conjugated_nilpotent() {
    let q = (H * 0.3 + F * 0.5).exp();
    let a = q * E * 1.7 * q.try_inverse().unwrap();
    let c = parabolic_adapted_change(&a).unwrap();
    assert!((c.try_inverse().unwrap() * a * c - E).abs().max() < 1e-12);
    assert!((c.transpose() * J * c - J).abs().max() < 1e-12);
    assert!(matches!(parabolic_adapted_change(&H), Err(CurvatureError::NotParabolic { .. })));
}

#[test]
fn insufficient_order_rejected() {
    let g = eval_metric_jets(&galpha(), [0.0, 0.0, 1.0], 4, &params(&[("a", -2.0)])).unwrap();
    assert!(matches!(covariant_tower(&g, [0.0, 0.0, 1.0], 3), Err(CurvatureError::InsufficientOrder { .. })));
}

#[test]
fn scalar_part_matches_closed_form_scalar_curvature() {
    // For g = e^{2φ} g0 in dimension 3: scal = −e^{−2φ}(4Δφ + 2|dφ|²), Δ and |·| for g0.
    // With φ = ½ a ln x3 only ∂3 φ = a/(2 x3) is nonzero and g0^{33} = 0, so scal = 0.
    // Use φ = 0.3 x2 + 0.1 x2² instead: Δφ = 0.2, |dφ|² = (0.3 + 0.2 x2)².
    let spec = parse_metric("exp(0.6*x2 + 0.2*x2^2) * (-2*dx1*dx3 + dx2^2)").unwrap();
    let pt = [0.1, 0.4, 0.2];
    let t = tower_at(&spec, pt, &Params::new(), 1).unwrap();
    let phi = eval_f64(&parse_scalar("0.3*x2 + 0.1*x2^2").unwrap(), pt, &Params::new()).unwrap();
    let grad = 0.3 + 0.2 * pt[1];
    let scal = -(-2.0 * phi).exp() * (4.0 * 0.2 + 2.0 * grad * grad);
    // σ = scal / 6 in dimension 3 with this sign convention
    let d = decompose_curvature(&curvature_matrix(&t));
    assert!((d.sigma - scal / 6.0).abs() < 1e-12, "{} vs {}", d.sigma, scal / 6.0);
    assert!(d.module_residual < 1e-12);
}
