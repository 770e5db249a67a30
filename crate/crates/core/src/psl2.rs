//! Odd-dimensional irreducible representations of `PSL(2,R)` on binary
//! forms of degree `2k`, their invariant forms and fixed vectors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rank::{nullspace, RankDecision};

/// Largest `k` accepted by default.
pub const K_MAX: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum Psl2Error {
    #[error("k = {0} outside 1..={K_MAX}")]
    KOutOfRange(usize),
    #[error("a1 must be nonzero and finite")]
    BadScale,
    #[error("E - F has a {0}-dimensional kernel")]
    KernelDim(usize),
    #[error("vector has g(v,v) = 0")]
    NullVector,
    #[error("level set residual {0:e} exceeds tolerance")]
    Residual(f64),
}

/// `ρ(H), ρ(E), ρ(F)` in the monomial basis `x^{2k−j} y^j`, `j = 0..2k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepSpec {
    pub k: usize,
    pub h: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl IrrepSpec {
    pub fn dim(&self) -> usize {
        2 * self.k + 1
    }

    /// Largest entry among `[H,E] − 2E`, `[H,F] + 2F`, `[E,F] − H`.
    pub fn sl2_residual(&self) -> f64 {
        let c = |a: &DMatrix<f64>, b: &DMatrix<f64>| a * b - b * a;
        let r1 = (c(&self.h, &self.e) - &self.e * 2.0).amax();
        let r2 = (c(&self.h, &self.f) + &self.f * 2.0).amax();
        let r3 = (c(&self.e, &self.f) - &self.h).amax();
        r1.max(r2).max(r3)
    }

    /// Diagonal of `H`.
    pub fn weights(&self) -> Vec<i64> {
        (0..self.dim()).map(|i| self.h[(i, i)].round() as i64).collect()
    }
}

pub fn build_irrep(k: usize) -> Result<IrrepSpec, Psl2Error> {
    if k == 0 || k > K_MAX {
        return Err(Psl2Error::KOutOfRange(k));
    }
    let n = 2 * k + 1;
    let mut h = DMatrix::zeros(n, n);
    let mut e = DMatrix::zeros(n, n);
    let mut f = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = (2 * k) as f64 - 2.0 * j as f64;
        // x∂_y lowers j, y∂_x raises it
        if j > 0 {
            e[(j - 1, j)] = j as f64;
        }
        if j + 1 < n {
            f[(j + 1, j)] = (2 * k - j) as f64;
        }
    }
    Ok(IrrepSpec { k, h, e, f })
}

/// `g(x,x) = Σ_{m≤k} 2 c_m x_m x_{2k+2−m} + c_{k+1} x_{k+1}²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantForm {
    pub k: usize,
    /// `c_1 .. c_{k+1}`, `c_{i+1} = −i/(2k+1−i) · c_i`.
    pub coefficients: Vec<f64>,
}

impl InvariantForm {
    /// Symmetric Gram matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = 2 * self.k + 1;
        let mut g = DMatrix::zeros(n, n);
        for m in 0..=self.k {
            g[(m, n - 1 - m)] = self.coefficients[m];
            g[(n - 1 - m, m)] = self.coefficients[m];
        }
        g
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * self.gram() * y)[0]
    }

    /// Weights `a_{i+1} = (2k+1−i)/i · a_i` with `a_1 = c_1`. These are
    /// reciprocal to the invariant ones up to sign and scale, and are not
    /// invariant in this basis.
    pub fn dual_weights(&self) -> Vec<f64> {
        let mut a = vec![self.coefficients[0]];
        for i in 1..=self.k {
            let next = a[i - 1] * (2 * self.k + 1 - i) as f64 / i as f64;
            a.push(next);
        }
        a
    }

    /// Largest `|g(Xu,v) + g(u,Xv)|` over basis pairs, for `X ∈ {H,E,F}`.
    pub fn invariance_residual(&self, spec: &IrrepSpec) -> f64 {
        let g = self.gram();
        [&spec.h, &spec.e, &spec.f].iter().map(|x| (x.transpose() * &g + &g * *x).amax()).fold(0.0, f64::max)
    }

    /// `(positive, negative)` eigenvalue counts of the Gram matrix.
    pub fn signature(&self) -> (usize, usize) {
        let ev = self.gram().symmetric_eigenvalues();
        let tol = 1e-12 * ev.amax();
        (ev.iter().filter(|v| **v > tol).count(), ev.iter().filter(|v| **v < -tol).count())
    }
}

pub fn invariant_form(k: usize, a1: f64) -> Result<InvariantForm, Psl2Error> {
    if k == 0 || k > K_MAX {
        return Err(Psl2Error::KOutOfRange(k));
    }
    if a1 == 0.0 || !a1.is_finite() {
        return Err(Psl2Error::BadScale);
    }
    let mut c = vec![a1];
    for i in 1..=k {
        let next = -c[i - 1] * i as f64 / (2 * k + 1 - i) as f64;
        c.push(next);
    }
    Ok(InvariantForm { k, coefficients: c })
}

/// Unit generator of `ker(E − F)`, the line fixed by the rotation subgroup.
pub fn elliptic_fixed_vector(spec: &IrrepSpec) -> Result<(DVector<f64>, RankDecision), Psl2Error> {
    let (d, z) = nullspace(&(&spec.e - &spec.f));
    if z.ncols() != 1 {
        return Err(Psl2Error::KernelDim(z.ncols()));
    }
    let mut v = z.column(0).into_owned();
    // sign fixed by the first nonzero entry
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v = -v;
        }
    }
    Ok((v, d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCertificate {
    pub k: usize,
    /// `g(v,v)`.
    pub level: f64,
    pub words: usize,
    pub max_word_length: usize,
    /// Largest `|g(ρ(w)v, ρ(w)v) − g(v,v)| / |g(v,v)|` over the sampled words.
    pub max_relative_residual: f64,
    /// The orbit lies in the level set `g = level ≠ 0`, which is closed and misses `0`.
    pub excludes_zero: bool,
}

/// `exp(tX)` for `X ∈ {H, E, F}`: diagonal or a finite nilpotent series.
fn exp_letter(spec: &IrrepSpec, letter: usize, t: f64) -> DMatrix<f64> {
    let n = spec.dim();
    if letter == 0 {
        return DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (t * spec.h[(i, i)]).exp()));
    }
    let x = if letter == 1 { &spec.e } else { &spec.f } * t;
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for m in 1..n {
        term = &term * &x / m as f64;
        out += &term;
    }
    out
}

pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Range of the letter parameters in sampled words.
pub const T_MAX: f64 = 0.25;

/// Samples `words` random products of `exp(tH), exp(tE), exp(tF)` with
/// `|t| ≤ T_MAX` and length at most `max_len`, and checks the level set of `v`.
pub fn orbit_closedness_certificate(
    spec: &IrrepSpec,
    form: &InvariantForm,
    v: &DVector<f64>,
    words: usize,
    max_len: usize,
    seed: u64,
) -> Result<OrbitCertificate, Psl2Error> {
    let level = form.eval(v, v);
    if v.amax() == 0.0 || level.abs() <= 1e-14 * v.norm_squared() * form.coefficients[0].abs() {
        return Err(Psl2Error::NullVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..words {
        let len = rng.gen_range(1..=max_len.max(1));
        let mut w = v.clone();
        for _ in 0..len {
            let letter = rng.gen_range(0..3);
            let t = rng.gen_range(-T_MAX..T_MAX);
            w = exp_letter(spec, letter, t) * w;
        }
        worst = worst.max((form.eval(&w, &w) - level).abs() / level.abs());
    }
    if worst >= CERTIFICATE_TOL {
        return Err(Psl2Error::Residual(worst));
    }
    Ok(OrbitCertificate { k: spec.k, level, words, max_word_length: max_len, max_relative_residual: worst, excludes_zero: true })
}

#[cfg(test)]
mod tests;
