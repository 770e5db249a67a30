//! Truncated Taylor expansions in three variables.
//!
//! A [`Jet`] of order `n` stores the Taylor coefficients of a scalar function
//! at a base point for every multi-index `(i1, i2, i3)` with `i1 + i2 + i3 <= n`.
//! Coefficients are laid out densely in graded-lexicographic order (degree
//! first, then descending `i1`, then descending `i2`). Because the layout is
//! graded, the coefficients of a jet truncated to a lower order form a prefix
//! of the full coefficient vector; the slice kernels at the bottom of this
//! module rely on that.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use thiserror::Error;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 9;

/// A multi-index `(i1, i2, i3)`.
pub type MultiIndex = [usize; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order {0} exceeds the maximum order {MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("coordinate axis {0} is not one of 1, 2, 3")]
    BadAxis(usize),
    #[error("multi-index {index:?} has degree above the jet order {order}")]
    IndexAboveOrder { index: MultiIndex, order: usize },
    #[error("jets of orders {0} and {1} cannot be combined")]
    OrderMismatch(usize, usize),
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("{func} needs a positive constant term, got {value}")]
    Domain { func: &'static str, value: f64 },
}

/// Number of multi-indices of degree at most `order` in three variables.
pub const fn num_coeffs(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

pub(crate) struct Tables {
    indices: Vec<MultiIndex>,
    degree: Vec<usize>,
    lookup: Vec<u16>,
    /// Product triples `(a, b, c)` with `deg a + deg b = deg c <= MAX_ORDER`,
    /// sorted by `deg c`.
    products: Vec<(u16, u16, u16)>,
    /// `product_end[d]` is the number of product triples with output degree `<= d`.
    product_end: Vec<usize>,
    /// `derivs[axis]`: `(src, dst, factor)` with `deg src` ascending.
    derivs: [Vec<(u16, u16, f64)>; 3],
}

fn lookup_slot(i: MultiIndex) -> usize {
    (i[0] * (MAX_ORDER + 1) + i[1]) * (MAX_ORDER + 1) + i[2]
}

pub(crate) fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut indices = Vec::with_capacity(num_coeffs(MAX_ORDER));
        for d in 0..=MAX_ORDER {
            for i1 in (0..=d).rev() {
                for i2 in (0..=d - i1).rev() {
                    indices.push([i1, i2, d - i1 - i2]);
                }
            }
        }
        let degree: Vec<usize> = indices.iter().map(|i| i.iter().sum()).collect();
        let mut lookup = vec![u16::MAX; (MAX_ORDER + 1).pow(3)];
        for (k, &i) in indices.iter().enumerate() {
            lookup[lookup_slot(i)] = k as u16;
        }
        let idx = |i: MultiIndex| lookup[lookup_slot(i)];

        let mut products = Vec::new();
        let mut product_end = Vec::with_capacity(MAX_ORDER + 1);
        for d in 0..=MAX_ORDER {
            for (c, &ic) in indices.iter().enumerate() {
                if degree[c] != d {
                    continue;
                }
                for (a, &ia) in indices.iter().enumerate() {
                    if (0..3).all(|k| ia[k] <= ic[k]) {
                        let ib = [ic[0] - ia[0], ic[1] - ia[1], ic[2] - ia[2]];
                        products.push((a as u16, idx(ib), c as u16));
                    }
                }
            }
            product_end.push(products.len());
        }

        let derivs = std::array::from_fn(|axis| {
            let mut v = Vec::new();
            for (s, &is) in indices.iter().enumerate() {
                if is[axis] == 0 {
                    continue;
                }
                let mut id = is;
                id[axis] -= 1;
                v.push((s as u16, idx(id), is[axis] as f64));
            }
            v
        });

        Tables { indices, degree, lookup, products, product_end, derivs }
    })
}

impl Tables {
    pub(crate) fn index_of(&self, i: MultiIndex) -> usize {
        self.lookup[lookup_slot(i)] as usize
    }

    fn products(&self, order: usize) -> &[(u16, u16, u16)] {
        &self.products[..self.product_end[order]]
    }

    /// Product triples whose output has degree exactly `d`.
    fn products_of_degree(&self, d: usize) -> &[(u16, u16, u16)] {
        let start = if d == 0 { 0 } else { self.product_end[d - 1] };
        &self.products[start..self.product_end[d]]
    }
}

/// Enumerates multi-indices of degree `<= order` in storage order.
pub fn multi_indices(order: usize) -> &'static [MultiIndex] {
    &tables().indices[..num_coeffs(order.min(MAX_ORDER))]
}

/// Truncated Taylor expansion of a scalar function of `(x1, x2, x3)`.
#[derive(Clone, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = tables();
        let mut m = f.debug_map();
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                m.entry(&t.indices[k], c);
            }
        }
        m.finish()
    }
}

fn check_order(order: usize) -> Result<(), JetError> {
    if order > MAX_ORDER {
        Err(JetError::OrderOutOfRange(order))
    } else {
        Ok(())
    }
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Result<Self, JetError> {
        check_order(order)?;
        let mut coeffs = vec![0.0; num_coeffs(order)];
        coeffs[0] = value;
        Ok(Self { order, coeffs })
    }

    pub fn zero(order: usize) -> Result<Self, JetError> {
        Self::constant(0.0, order)
    }

    /// The jet of the coordinate function `x_axis` (axis in `1..=3`) at `base_point`.
    pub fn seed_coordinate(axis: usize, base_point: [f64; 3], order: usize) -> Result<Self, JetError> {
        if !(1..=3).contains(&axis) {
            return Err(JetError::BadAxis(axis));
        }
        let mut jet = Self::constant(base_point[axis - 1], order)?;
        if order >= 1 {
            let mut i = [0; 3];
            i[axis - 1] = 1;
            jet.coeffs[tables().index_of(i)] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from raw Taylor coefficients in storage order.
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        check_order(order)?;
        assert_eq!(coeffs.len(), num_coeffs(order), "coefficient count does not match order");
        Ok(Self { order, coeffs })
    }

    /// Builds a jet from `(multi-index, coefficient)` pairs.
    pub fn from_terms(order: usize, terms: &[(MultiIndex, f64)]) -> Result<Self, JetError> {
        let mut jet = Self::zero(order)?;
        for &(i, c) in terms {
            let d: usize = i.iter().sum();
            if d > order {
                return Err(JetError::IndexAboveOrder { index: i, order });
            }
            jet.coeffs[tables().index_of(i)] += c;
        }
        Ok(jet)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient at `index` (zero above the order).
    pub fn coeff(&self, index: MultiIndex) -> f64 {
        let d: usize = index.iter().sum();
        if d > self.order {
            0.0
        } else {
            self.coeffs[tables().index_of(index)]
        }
    }

    /// Partial derivative `∂^index f` at the base point.
    pub fn extract_derivative(&self, index: MultiIndex) -> Result<f64, JetError> {
        let d: usize = index.iter().sum();
        if d > self.order {
            return Err(JetError::IndexAboveOrder { index, order: self.order });
        }
        let fact: f64 = index.iter().map(|&k| factorial(k)).product();
        Ok(self.coeffs[tables().index_of(index)] * fact)
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self { order, coeffs: self.coeffs[..num_coeffs(order)].to_vec() }
    }

    /// Jet of `∂f/∂x_axis` (axis in `1..=3`), one order lower.
    pub fn derivative(&self, axis: usize) -> Result<Self, JetError> {
        if !(1..=3).contains(&axis) {
            return Err(JetError::BadAxis(axis));
        }
        if self.order == 0 {
            return Err(JetError::OrderOutOfRange(0));
        }
        let mut out = vec![0.0; num_coeffs(self.order - 1)];
        derivative_into(&mut out, &self.coeffs, self.order, axis - 1);
        Ok(Self { order: self.order - 1, coeffs: out })
    }

    fn same_order(&self, other: &Self) -> Result<(), JetError> {
        if self.order != other.order {
            Err(JetError::OrderMismatch(self.order, other.order))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JetError> {
        self.same_order(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.same_order(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.same_order(other)?;
        let mut out = vec![0.0; self.coeffs.len()];
        mul_acc(&mut out, &self.coeffs, &other.coeffs, self.order);
        Ok(Self { order: self.order, coeffs: out })
    }

    /// Quotient by back-substitution of `a = q * b` in graded order.
    pub fn try_div(&self, other: &Self) -> Result<Self, JetError> {
        self.same_order(other)?;
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let t = tables();
        let mut q = vec![0.0; self.coeffs.len()];
        q[0] = self.coeffs[0] / b0;
        for d in 1..=self.order {
            let mut acc = vec![0.0; self.coeffs.len()];
            for &(iq, ib, ic) in t.products_of_degree(d) {
                if t.degree[iq as usize] < d {
                    acc[ic as usize] += q[iq as usize] * other.coeffs[ib as usize];
                }
            }
            for c in degree_range(d) {
                q[c] = (self.coeffs[c] - acc[c]) / b0;
            }
        }
        Ok(Self { order: self.order, coeffs: q })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        Self::constant(1.0, self.order)?.try_div(self)
    }

    /// Integer power by repeated squaring; negative exponents go through [`Jet::recip`].
    pub fn powi(&self, n: i32) -> Result<Self, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Self::constant(1.0, self.order)?;
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(result)
    }

    /// `self^exponent` for a positive constant term, via the recurrence
    /// `a · D(p) = r · p · D(a)` with `D` the Euler degree operator.
    pub fn pow_real(&self, exponent: f64) -> Result<Self, JetError> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(JetError::Domain { func: "real power", value: a0 });
        }
        let t = tables();
        let mut p = vec![0.0; self.coeffs.len()];
        p[0] = a0.powf(exponent);
        let a = &self.coeffs;
        for d in 1..=self.order {
            let mut acc = vec![0.0; self.coeffs.len()];
            for &(i, j, c) in t.products_of_degree(d) {
                let (i, j, c) = (i as usize, j as usize, c as usize);
                let dj = t.degree[j] as f64;
                // r * p_i * |j| a_j  (p_i known since |i| < d whenever |j| >= 1)
                if t.degree[j] >= 1 {
                    acc[c] += exponent * dj * a[j] * p[i];
                }
                // - a_i * |j| p_j for |i| >= 1
                if t.degree[i] >= 1 {
                    acc[c] -= a[i] * dj * p[j];
                }
            }
            for c in degree_range(d) {
                p[c] = acc[c] / (a0 * d as f64);
            }
        }
        Ok(Self { order: self.order, coeffs: p })
    }

    pub fn exp(&self) -> Self {
        let t = tables();
        let a = &self.coeffs;
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for d in 1..=self.order {
            for &(i, j, c) in t.products_of_degree(d) {
                let (i, j, c) = (i as usize, j as usize, c as usize);
                if t.degree[j] >= 1 {
                    e[c] += t.degree[j] as f64 * a[j] * e[i] / d as f64;
                }
            }
        }
        Self { order: self.order, coeffs: e }
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let a = &self.coeffs;
        let a0 = a[0];
        if !(a0 > 0.0) {
            return Err(JetError::Domain { func: "ln", value: a0 });
        }
        let t = tables();
        let mut l = vec![0.0; a.len()];
        l[0] = a0.ln();
        for d in 1..=self.order {
            let mut acc = vec![0.0; a.len()];
            for &(i, j, c) in t.products_of_degree(d) {
                let (i, j, c) = (i as usize, j as usize, c as usize);
                if t.degree[i] >= 1 {
                    acc[c] += t.degree[j] as f64 * l[j] * a[i];
                }
            }
            for c in degree_range(d) {
                l[c] = (a[c] - acc[c] / d as f64) / a0;
            }
        }
        Ok(Self { order: self.order, coeffs: l })
    }

    /// Returns `(sin a, cos a)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let t = tables();
        let a = &self.coeffs;
        let mut s = vec![0.0; a.len()];
        let mut co = vec![0.0; a.len()];
        s[0] = a[0].sin();
        co[0] = a[0].cos();
        for d in 1..=self.order {
            for &(i, j, c) in t.products_of_degree(d) {
                let (i, j, c) = (i as usize, j as usize, c as usize);
                if t.degree[j] >= 1 {
                    let w = t.degree[j] as f64 * a[j] / d as f64;
                    s[c] += w * co[i];
                    co[c] -= w * s[i];
                }
            }
        }
        (Self { order: self.order, coeffs: s }, Self { order: self.order, coeffs: co })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect() }
    }
}

fn degree_range(d: usize) -> std::ops::Range<usize> {
    let start = if d == 0 { 0 } else { num_coeffs(d - 1) };
    start..num_coeffs(d)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

// Operator impls panic on order mismatch; the `try_*` forms return errors.
impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet orders differ")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet orders differ")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet orders differ")
    }
}

impl Div for &Jet {
    type Output = Result<Jet, JetError>;
    fn div(self, rhs: &Jet) -> Result<Jet, JetError> {
        self.try_div(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

// Slice kernels. Inputs may be longer than needed: truncation is a prefix.

/// `out[..num_coeffs(order)] += a * b` truncated at `order`.
pub(crate) fn mul_acc(out: &mut [f64], a: &[f64], b: &[f64], order: usize) {
    for &(i, j, c) in tables().products(order) {
        out[c as usize] += a[i as usize] * b[j as usize];
    }
}

/// `out[..num_coeffs(order)] -= a * b` truncated at `order`.
pub(crate) fn mul_sub(out: &mut [f64], a: &[f64], b: &[f64], order: usize) {
    mul_sub_with(out, a, b, product_table(order));
}

/// Product triples `(i, j, c)` for jets of order `order`, for hot loops that
/// multiply many jets of one order.
pub(crate) fn product_table(order: usize) -> &'static [(u16, u16, u16)] {
    tables().products(order)
}

pub(crate) fn mul_sub_with(out: &mut [f64], a: &[f64], b: &[f64], table: &[(u16, u16, u16)]) {
    for &(i, j, c) in table {
        out[c as usize] -= a[i as usize] * b[j as usize];
    }
}

/// Writes the derivative along `axis` (0-based) of an order-`order` jet into an
/// order `order - 1` buffer. Every output slot is written once.
pub(crate) fn derivative_into(out: &mut [f64], src: &[f64], order: usize, axis: usize) {
    let n_src = num_coeffs(order);
    for &(s, d, f) in &tables().derivs[axis] {
        if (s as usize) >= n_src {
            break;
        }
        out[d as usize] = f * src[s as usize];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
        a.coeffs.iter().zip(&b.coeffs).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn storage_is_graded() {
        assert_eq!(num_coeffs(8), 165);
        assert_eq!(num_coeffs(MAX_ORDER), 220);
        let idx = multi_indices(2);
        assert_eq!(idx[0], [0, 0, 0]);
        assert_eq!(&idx[1..4], &[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(idx.len(), 10);
    }

    #[test]
    fn seed_examples() {
        let j = Jet::seed_coordinate(3, [0.0, 0.0, 2.0], 2).unwrap();
        assert_eq!(j.coeff([0, 0, 0]), 2.0);
        assert_eq!(j.coeff([0, 0, 1]), 1.0);
        assert_eq!(j.coeffs().iter().filter(|c| **c != 0.0).count(), 2);

        let j = Jet::seed_coordinate(1, [5.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(j.coeffs(), &[5.0]);

        let j = Jet::seed_coordinate(2, [0.0, -1.0, 0.0], 8).unwrap();
        assert_eq!(j.coeff([0, 0, 0]), -1.0);
        assert_eq!(j.coeff([0, 1, 0]), 1.0);
        assert_eq!(j.coeffs().iter().filter(|c| **c != 0.0).count(), 2);
    }

    #[test]
    fn order_out_of_range() {
        assert_eq!(Jet::seed_coordinate(1, [0.0; 3], MAX_ORDER + 1), Err(JetError::OrderOutOfRange(MAX_ORDER + 1)));
        assert!(matches!(Jet::seed_coordinate(4, [0.0; 3], 2), Err(JetError::BadAxis(4))));
    }

    #[test]
    fn square_of_shifted_coordinate() {
        let x = Jet::seed_coordinate(3, [0.0, 0.0, 2.0], 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeff([0, 0, 0]), 4.0);
        assert_eq!(sq.coeff([0, 0, 1]), 4.0);
        assert_eq!(sq.coeff([0, 0, 2]), 1.0);
    }

    #[test]
    fn division_errors_on_zero_constant() {
        let x = Jet::seed_coordinate(1, [0.0; 3], 3).unwrap();
        let one = Jet::constant(1.0, 3).unwrap();
        assert_eq!(&one / &x, Err(JetError::DivisionByZero));
    }

    #[test]
    fn reciprocal_series_at_two() {
        let x = Jet::seed_coordinate(3, [0.0, 0.0, 2.0], 8).unwrap();
        let r = x.pow_real(-1.0).unwrap();
        for n in 0..=8 {
            let expected = (-1f64).powi(n as i32) * 2f64.powi(-1 - n as i32);
            assert!((r.coeff([0, 0, n]) - expected).abs() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn pow_real_consistency() {
        let x = Jet::seed_coordinate(1, [1.5, 0.0, 0.0], 6).unwrap();
        let y = Jet::seed_coordinate(2, [0.0, 0.3, 0.0], 6).unwrap();
        let a = &x + &(&y * &y);
        assert!(close(&a.pow_real(1.0).unwrap(), &a, 1e-14));
        assert!(close(&a.pow_real(2.0).unwrap(), &(&a * &a), 1e-13));
        assert!(matches!(a.scale(-1.0).pow_real(0.5), Err(JetError::Domain { .. })));
    }

    #[test]
    fn exp_of_zero_is_one() {
        let z = Jet::zero(5).unwrap();
        assert_eq!(z.exp(), Jet::constant(1.0, 5).unwrap());
    }

    #[test]
    fn ln_domain() {
        let z = Jet::constant(-1.0, 3).unwrap();
        assert!(matches!(z.ln(), Err(JetError::Domain { func: "ln", .. })));
    }

    #[test]
    fn extract_derivative_scaling() {
        let j = Jet::from_terms(3, &[([0, 0, 2], 1.0)]).unwrap();
        assert_eq!(j.extract_derivative([0, 0, 2]).unwrap(), 2.0);
        let c = Jet::constant(3.0, 3).unwrap();
        assert_eq!(c.extract_derivative([1, 1, 0]).unwrap(), 0.0);
        assert!(matches!(c.extract_derivative([2, 1, 1]), Err(JetError::IndexAboveOrder { .. })));
    }

    #[test]
    fn derivative_lowers_order() {
        // f = x1^2 x3 at (1, 0, 2): df/dx1 = 2 x1 x3
        let x1 = Jet::seed_coordinate(1, [1.0, 0.0, 2.0], 4).unwrap();
        let x3 = Jet::seed_coordinate(3, [1.0, 0.0, 2.0], 4).unwrap();
        let f = &(&x1 * &x1) * &x3;
        let df = f.derivative(1).unwrap();
        assert_eq!(df.order(), 3);
        assert!((df.value() - 4.0).abs() < 1e-15);
        assert!((df.extract_derivative([1, 0, 1]).unwrap() - 2.0).abs() < 1e-15);
    }
}
