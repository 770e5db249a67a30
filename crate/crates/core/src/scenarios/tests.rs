use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dsl::{eval_f64, MetricBody};

fn random_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.3..3.0)]).collect()
}

#[test]
fn alpha_zero_is_rejected() {
    assert!(matches!(galpha_metric(0.0), Err(ScenarioError::AlphaZero)));
    assert!(matches!(galpha_killing_fields(0.0), Err(ScenarioError::AlphaZero)));
}

#[test]
fn t_field_coefficients_at_minus_two() {
    let [_, _, _, t] = galpha_killing_fields(-2.0).unwrap();
    let p = [0.7, -1.1, 2.3];
    let vals: Vec<f64> = t.components.iter().map(|c| eval_f64(c, p, &Params::new()).unwrap()).collect();
    assert_eq!(vals, vec![0.7, -1.1, 2.3]);
    let [_, y, z, _] = galpha_killing_fields(-3.0).unwrap();
    assert_eq!(y.components.iter().map(|c| eval_f64(c, p, &Params::new()).unwrap()).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
    assert_eq!(z.components.iter().map(|c| eval_f64(c, p, &Params::new()).unwrap()).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
}

#[test]
fn explicit_fields_are_killing() {
    let pts = random_points(5, 17);
    for a in [-2.0, -3.0, -0.5] {
        let g = galpha_metric(a).unwrap();
        let fields = galpha_killing_fields(a).unwrap();
        assert!(verify_killing_field(&g, &Params::new(), &fields[2], &pts).unwrap() < 1e-12);
        for f in &fields {
            let r = verify_killing_field(&g, &Params::new(), f, &pts).unwrap();
            assert!(r < 1e-9, "{a} {}: {r}", f.name);
        }
    }
}

#[test]
fn lie_derivative_of_non_killing_fields() {
    // L_T g0 = 2 g0 for the Euler field, L_{x1∂1} g0 = −2 dx1 dx3
    let g0 = g0_metric();
    let [_, _, _, t] = galpha_killing_fields(-2.0).unwrap();
    let r = verify_killing_field(&g0, &Params::new(), &t, &[[0.1, 0.2, 0.3]]).unwrap();
    assert!((r - 2.0).abs() < 1e-14);
    let x1 = field("x1d1", ["x1", "0", "0"]);
    let r = verify_killing_field(&g0, &Params::new(), &x1, &[[0.4, 0.0, -1.0]]).unwrap();
    assert!((r - 1.0).abs() < 1e-14);
}

#[test]
fn coordinate_brackets() {
    let a = -3.0;
    let [x, y, z, t] = galpha_killing_fields(a).unwrap();
    let p = [0.4, -0.3, 1.7];
    let pr = Params::new();
    // the coordinate bracket of X and Y is −Z
    assert_eq!(vector_field_bracket(&x, &y, p, &pr).unwrap(), [-1.0, 0.0, 0.0]);
    assert_eq!(vector_field_bracket(&y, &z, p, &pr).unwrap(), [0.0, 0.0, 0.0]);
    let tx = vector_field_bracket(&t, &x, p, &pr).unwrap();
    let c = -(a + 2.0) / a;
    assert!((tx[0] - c * p[1]).abs() < 1e-14 && (tx[1] - c * p[2]).abs() < 1e-14);
    let tz = vector_field_bracket(&t, &z, p, &pr).unwrap();
    assert!((tz[0] + 2.0 * (a + 1.0) / a).abs() < 1e-14);
}

#[test]
fn nu_values() {
    assert_eq!(nu_of_alpha(-3.0).unwrap(), 0.1875);
    assert_eq!(nu_of_alpha(-2.0).unwrap(), 0.0);
    assert!(matches!(nu_of_alpha(-1.0), Err(ScenarioError::AlphaPole)));
    for a in [1e3, -1e3, 1e6] {
        let nu = nu_of_alpha(a).unwrap();
        assert!(nu < 0.25 && 0.25 - nu < 1e-5);
    }
}

#[test]
fn glue_minus_four_minus_two() {
    let g = glue_metrics(-4.0, -2.0).unwrap();
    assert_eq!(g.z, 2.0);
    assert!(g.check.value_residual < 1e-12);
    assert!(g.check.derivative_residual < 1e-12);
    // f'' jumps from 20·2⁻⁶ to 6·2⁻⁴
    assert!((g.check.second_derivative_jump - 0.0625).abs() < 1e-12);
    assert_eq!(g.z_alternative, -1.0);
    assert!(g.alternative_check.is_none());
    assert_eq!(g.metric.boundaries(), vec![2.0]);
    let swapped = glue_metrics(-2.0, -4.0).unwrap();
    assert_eq!((swapped.inner_alpha, swapped.outer_alpha, swapped.z), (-4.0, -2.0, 2.0));
}

#[test]
fn glue_preconditions() {
    assert!(matches!(glue_metrics(-3.0, -3.0), Err(ScenarioError::Precondition(_))));
    assert!(matches!(glue_metrics(-3.0, 0.5), Err(ScenarioError::Precondition(_))));
}

#[test]
fn glue_alternative_relation_never_admissible() {
    // for exponents below −1 the swapped relation gives z < 0
    for (a1, a2) in [(-6.0, -2.0), (-1.5, -9.0), (-3.0, -2.5)] {
        let g = glue_metrics(a1, a2).unwrap();
        assert!(g.z > 1.0);
        assert!(g.check.derivative_residual < 1e-12);
        assert!(g.z_alternative < 0.0);
        assert!(g.alternative_check.is_none());
    }
}

proptest::proptest! {
    #[test]
    fn glue_is_c1(a1 in -8.0f64..-1.05, a2 in -8.0f64..-1.05) {
        proptest::prop_assume!((a1 - a2).abs() > 1e-3);
        let g = glue_metrics(a1, a2).unwrap();
        let scale = g.z.powf(g.inner_alpha);
        proptest::prop_assert!(g.check.value_residual <= 1e-12 * scale.max(1.0));
        proptest::prop_assert!(g.check.derivative_residual <= 1e-10 * scale.max(1.0) * g.inner_alpha.abs());
    }
}

#[test]
fn torus_strip() {
    let t = torus_strip_check(-2.0, 2.0).unwrap();
    assert_eq!(t.upper, 16.0);
    assert_eq!(t.continuity_residual, 0.0);
    assert_eq!(t.lower_factor, 4.0);
    assert_eq!(t.upper_factor, 256.0);
    assert_eq!(t.factor_ratio, 64.0);
    assert_eq!(t.translation, 15.5);
    assert!(t.translation_killing_residual < 1e-12);
    assert!(torus_strip_check(-0.5, 2.0).is_err());
    assert!(torus_strip_check(-2.0, 1.0).is_err());
}

#[test]
fn analyze_flat_grid() {
    let body = MetricBody::Single(g0_metric());
    let pts = box_grid([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0], 2);
    let rep = analyze("g0", &body, &Params::new(), &pts, &AnalysisOptions::default()).unwrap();
    assert_eq!(rep.points.len(), 8);
    assert!(rep.rank_constancy.constant);
    for p in &rep.points {
        assert_eq!(p.dims, vec![6; 7]);
        assert_eq!(p.label, "constant curvature (flat)");
        assert_eq!(p.sigma, Some(0.0));
        assert!(p.trusted, "{:?}", p.failed_checks);
        assert_eq!(p.eta_e, Some(0.0));
    }
}

#[test]
fn analyze_galpha() {
    let a = -3.0;
    let body = MetricBody::Single(galpha_metric(a).unwrap());
    let pts = [[0.0, 0.0, 1.0], [0.5, -0.4, 2.2]];
    let rep = analyze("g_alpha", &body, &Params::new(), &pts, &AnalysisOptions::default()).unwrap();
    assert!(rep.trusted);
    assert!(rep.rank_constancy.constant);
    for p in &rep.points {
        assert_eq!(p.stabilized_dim(), Some(4));
        assert_eq!(p.isotropy.as_ref().unwrap().kind, crate::killing::IsotropyKind::Parabolic);
        assert!((p.nu().unwrap() - nu_of_alpha(a).unwrap()).abs() < 1e-6);
        assert!(p.b.unwrap() != 0.0);
        let bound = p.eta_bound.unwrap();
        assert!(p.eta_samples.iter().all(|s| s.eta <= bound * (1.0 + 1e-6)));
    }
    let again = analyze("g_alpha", &body, &Params::new(), &pts, &AnalysisOptions::default()).unwrap();
    assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn analyze_reports_stage_failures() {
    let body = MetricBody::Single(galpha_metric(-3.0).unwrap());
    let rep = analyze("g_alpha", &body, &Params::new(), &[[0.0, 0.0, -1.0]], &AnalysisOptions::default()).unwrap();
    assert!(rep.points[0].error.is_some());
    assert!(!rep.trusted);
    let bad = AnalysisOptions { order: 0, ..AnalysisOptions::default() };
    assert!(analyze("g", &body, &Params::new(), &[[0.0, 0.0, 1.0]], &bad).is_err());
}

#[test]
fn analyze_piecewise_reports_interface() {
    let g = glue_metrics(-4.0, -2.0).unwrap();
    let body = MetricBody::Piecewise(g.metric.clone());
    let (inner, _) = glue_side_points(&g);
    let rep = analyze("glue", &body, &Params::new(), &inner, &AnalysisOptions::default()).unwrap();
    assert_eq!(rep.interfaces.len(), 1);
    assert!(rep.interfaces[0].derivative_residual < 1e-12);
    for p in &rep.points {
        assert!((p.nu().unwrap() - 2.0 / 9.0).abs() < 1e-6);
    }
}

#[test]
fn points_and_grids() {
    let pts = parse_points("# comment\n1, 2, 3\n\n-1 0.5 2e-1  # trailing\n").unwrap();
    assert_eq!(pts, vec![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.2]]);
    assert!(parse_points("1 2\n").is_err());
    assert!(parse_points("1 2 x\n").is_err());
    assert!(parse_points("\n").is_err());
    let g = box_grid([0.0, 0.0, 1.0], [1.0, 2.0, 3.0], 3);
    assert_eq!(g.len(), 27);
    assert_eq!(g[0], [0.0, 0.0, 1.0]);
    assert_eq!(g[26], [1.0, 2.0, 3.0]);
    assert_eq!(g[13], [0.5, 1.0, 2.0]);
}
