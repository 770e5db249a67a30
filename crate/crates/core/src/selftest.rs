//! Jet arithmetic checked against closed forms, identities and finite
//! differences. Backs the `jet-selftest` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::jet::{multi_indices, Jet, JetError, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestCase {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub seed: u64,
    pub cases: Vec<SelfTestCase>,
    pub pass: bool,
}

fn max_diff(a: &Jet, b: &Jet) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_jet(rng: &mut ChaCha8Rng, order: usize, constant: f64) -> Result<Jet, JetError> {
    let coeffs = multi_indices(order)
        .iter()
        .map(|i| {
            if *i == [0, 0, 0] {
                constant
            } else {
                let d: usize = i.iter().sum();
                rng.gen_range(-1.0..1.0) / (1 << d) as f64
            }
        })
        .collect();
    Jet::from_coeffs(order, coeffs)
}

/// Runs every case with jets of order [`MAX_ORDER`].
pub fn jet_selftest(seed: u64) -> Result<SelfTestReport, JetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = MAX_ORDER;
    let mut cases = Vec::new();
    let mut push = |name, residual: f64, tolerance| cases.push(SelfTestCase { name, residual, tolerance, pass: residual <= tolerance });

    // (2 + t)² = 4 + 4t + t²
    let x3 = Jet::seed_coordinate(3, [0.0, 0.0, 2.0], 2)?;
    let sq = x3.try_mul(&x3)?;
    let want = Jet::from_terms(2, &[([0, 0, 0], 4.0), ([0, 0, 1], 4.0), ([0, 0, 2], 1.0)])?;
    push("square of a coordinate", max_diff(&sq, &want), 0.0);

    // 1/x at 2: coefficient (−1)ⁿ 2^{−1−n}
    let inv = Jet::seed_coordinate(3, [0.0, 0.0, 2.0], n)?.recip()?;
    let r = (0..=n).map(|k| (inv.coeff([0, 0, k]) - (-1f64).powi(k as i32) * 0.5f64.powi(k as i32 + 1)).abs()).fold(0.0, f64::max);
    push("reciprocal series", r, 1e-15);

    let a = random_jet(&mut rng, n, 0.7)?;
    let b = random_jet(&mut rng, n, -1.3)?;
    let one = Jet::constant(1.0, n)?;

    let (s, c) = a.sin_cos();
    push("sin^2 + cos^2", max_diff(&s.try_mul(&s)?.try_add(&c.try_mul(&c)?)?, &one), 1e-12);
    push("ln(exp(a))", max_diff(&a.exp().ln()?, &a), 1e-12);
    push("a / a", max_diff(&a.try_div(&a)?, &one), 1e-12);
    push("a^2 by real power", max_diff(&a.pow_real(2.0)?, &a.try_mul(&a)?), 1e-12);
    let ab = a.try_mul(&b)?;
    push("commutativity", max_diff(&ab, &b.try_mul(&a)?), 1e-13);
    push("truncation consistency", max_diff(&a.exp().truncate(4), &a.truncate(4).exp()), 1e-14);

    // Leibniz on the first derivatives
    let mut leibniz = 0.0f64;
    for k in 0..3 {
        let mut e = [0; 3];
        e[k] = 1;
        let lhs = ab.extract_derivative(e)?;
        let rhs = a.extract_derivative(e)? * b.value() + a.value() * b.extract_derivative(e)?;
        leibniz = leibniz.max((lhs - rhs).abs());
    }
    push("Leibniz rule", leibniz, 1e-13);

    // derivatives of exp(x1 x3) against central differences
    let p = [0.3, -0.2, 0.5];
    let f = |q: [f64; 3]| (q[0] * q[2]).exp();
    let j = Jet::seed_coordinate(1, p, 3)?.try_mul(&Jet::seed_coordinate(3, p, 3)?)?.exp();
    let h = 1e-3;
    let shift = |q: [f64; 3], k: usize, s: f64| {
        let mut r = q;
        r[k] += s;
        r
    };
    let d1 = (f(shift(p, 0, h)) - f(shift(p, 0, -h))) / (2.0 * h);
    let d13 = (f(shift(shift(p, 0, h), 2, h)) - f(shift(shift(p, 0, h), 2, -h)) - f(shift(shift(p, 0, -h), 2, h))
        + f(shift(shift(p, 0, -h), 2, -h)))
        / (4.0 * h * h);
    let d333 =
        (f(shift(p, 2, 2.0 * h)) - 2.0 * f(shift(p, 2, h)) + 2.0 * f(shift(p, 2, -h)) - f(shift(p, 2, -2.0 * h))) / (2.0 * h * h * h);
    let fd = (j.extract_derivative([1, 0, 0])? - d1)
        .abs()
        .max((j.extract_derivative([1, 0, 1])? - d13).abs())
        .max((j.extract_derivative([0, 0, 3])? - d333).abs());
    push("finite differences", fd, 1e-6);

    let pass = cases.iter().all(|c| c.pass);
    Ok(SelfTestReport { seed, cases, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_cases_pass() {
        for seed in [0, 1, 99] {
            let r = jet_selftest(seed).unwrap();
            assert!(r.pass, "{:?}", r.cases.iter().filter(|c| !c.pass).collect::<Vec<_>>());
            assert_eq!(r.cases.len(), 10);
        }
    }
}
