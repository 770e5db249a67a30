//! Rank decisions shared by the Killing solver and the Lie algebra classifier.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Relative threshold below which a singular value counts as zero.
pub const TAU_RANK: f64 = 1e-8;

/// Minimum ratio between the smallest kept and the largest dropped singular value.
pub const GAP_MIN: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDecision {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `s_rank / s_{rank+1}`, with dropped values floored at `ε·max(s₁, 1)`.
    pub gap: f64,
    pub trusted: bool,
}

impl RankDecision {
    pub fn nullity(&self) -> usize {
        self.singular_values.len() - self.rank
    }
}

/// Rank of a spectrum of singular values with the relative tolerance
/// `TAU_RANK·max(s₁, 1)`.
pub fn rank_decision(mut s: Vec<f64>) -> RankDecision {
    s.sort_by(|a, b| b.total_cmp(a));
    let reference = s.first().copied().unwrap_or(0.0).max(1.0);
    let rank = s.iter().filter(|v| **v >= TAU_RANK * reference).count();
    let floor = f64::EPSILON * reference;
    let upper = if rank > 0 { s[rank - 1] } else { reference };
    let lower = s.get(rank).copied().unwrap_or(0.0).max(floor);
    let gap = upper / lower;
    RankDecision { singular_values: s, rank, gap, trusted: gap >= GAP_MIN }
}

/// Full SVD `m = U diag(s) Vᵀ` with `s` descending; `U` and `V` square.
struct Factors {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
}

fn factor(m: &DMatrix<f64>) -> Factors {
    let (r, n) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(r, n, |i, j| m[(i, j)]);
    let svd = fm.svd().expect("SVD of a finite matrix converges");
    let d = svd.S().column_vector();
    let k = r.min(n);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let (fu, fv) = (svd.U(), svd.V());
    let u = DMatrix::from_fn(r, r, |i, j| fu[(i, if j < k { order[j] } else { j })]);
    let v = DMatrix::from_fn(n, n, |i, j| fv[(i, if j < k { order[j] } else { j })]);
    Factors { u, s: order.iter().map(|&i| d[i]).collect(), v }
}

/// Right nullspace of `m` as orthonormal columns.
pub fn nullspace(m: &DMatrix<f64>) -> (RankDecision, DMatrix<f64>) {
    let n = m.ncols();
    if n == 0 {
        return (rank_decision(Vec::new()), DMatrix::zeros(0, 0));
    }
    let f = factor(m);
    // missing singular values of a wide matrix are zeros
    let mut s = f.s;
    s.resize(n, 0.0);
    let decision = rank_decision(s);
    let basis = f.v.columns(decision.rank, n - decision.rank).into_owned();
    (decision, basis)
}

/// Orthonormal basis of the column space of `m`.
pub fn range(m: &DMatrix<f64>) -> (RankDecision, DMatrix<f64>) {
    let (r, n) = m.shape();
    if r == 0 || n == 0 {
        return (rank_decision(Vec::new()), DMatrix::zeros(r, 0));
    }
    let f = factor(m);
    let mut s = f.s;
    s.resize(r, 0.0);
    let decision = rank_decision(s);
    let basis = f.u.columns(0, decision.rank).into_owned();
    (decision, basis)
}

/// Minimum-norm least-squares solution of `m x = b`, discarding singular
/// values at or below `cutoff`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let f = factor(m);
    let utb = f.u.transpose() * b;
    let mut y = DVector::zeros(n);
    for (i, s) in f.s.iter().enumerate() {
        if *s > cutoff {
            y[i] = utb[i] / s;
        }
    }
    f.v * y
}

/// Reduced row echelon form of the span of the columns of `b`, returned as
/// columns. Deterministic for a given subspace up to rounding.
pub fn canonical_basis(b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut rows = b.transpose();
    let (k, n) = rows.shape();
    let scale = rows.amax();
    let mut next = 0;
    for col in 0..n {
        if next == k {
            break;
        }
        let (piv, val) = (next..k).map(|r| (r, rows[(r, col)].abs())).fold((next, 0.0), |a, x| if x.1 > a.1 { x } else { a });
        if val <= 1e-9 * scale {
            continue;
        }
        rows.swap_rows(next, piv);
        let p = rows[(next, col)];
        let pivot_row = rows.row(next) / p;
        rows.set_row(next, &pivot_row);
        for r in 0..k {
            if r != next {
                let f = rows[(r, col)];
                if f != 0.0 {
                    let upd = rows.row(r) - &pivot_row * f;
                    rows.set_row(r, &upd);
                }
            }
        }
        next += 1;
    }
    rows.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_counts_and_gap() {
        let d = rank_decision(vec![1e-14, 3.0, 2.0]);
        assert_eq!(d.rank, 2);
        assert_eq!(d.singular_values, vec![3.0, 2.0, 1e-14]);
        assert!(d.trusted);
        let d = rank_decision(vec![1.0, 1e-7, 1e-9]);
        assert_eq!(d.rank, 2);
        assert!((d.gap - 100.0).abs() < 1e-9);
        assert!(!d.trusted);
        assert_eq!(rank_decision(vec![0.0; 4]).rank, 0);
        assert!(rank_decision(vec![0.0; 4]).trusted);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let (d, b) = nullspace(&m);
        assert_eq!(d.rank, 1);
        assert_eq!(b.ncols(), 2);
        assert!((&m * &b).amax() < 1e-14);
        let c = canonical_basis(&b);
        assert!((c.column(0) - nalgebra::DVector::from_vec(vec![1.0, -1.0, 0.0])).amax() < 1e-14);
        assert!((c.column(1) - nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-14);
    }

    #[test]
    fn range_of_nearly_rank_one_block() {
        // columns all proportional to one vector; a bad SVD returns a tilted line
        let w = [-0.021475847085335675, 0.057841312464228446, 0.09021095152085776, -0.05443828647599695];
        let m = DMatrix::from_fn(4, 3, |i, k| w[i] * [1.0, 1.5707598, -14.596848][k]);
        let (d, b) = range(&m);
        assert_eq!(d.rank, 1);
        let dir = nalgebra::DVector::from_row_slice(&w).normalize();
        assert!((b.column(0).dot(&dir).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_minimum_norm() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let x = lstsq(&m, &DVector::from_vec(vec![2.0, 4.0]), 1e-12);
        assert!((x - DVector::from_vec(vec![2.0, 2.0, 2.0])).amax() < 1e-14);
    }
}
