//! Connection, Riemann tensor and covariant derivatives as jets in chart coordinates.

use nalgebra::Matrix3;

use super::CurvatureError;
use crate::dsl::MetricJets;
use crate::jet::{derivative_into, mul_acc, mul_sub, mul_sub_with, num_coeffs, product_table, Jet};

fn pow3(p: usize) -> usize {
    3usize.pow(p as u32)
}

/// Inverse of a metric jet matrix via the adjugate.
pub fn inverse_metric(g: &MetricJets) -> Result<MetricJets, CurvatureError> {
    let m = |i: usize, j: usize| &g[i % 3][j % 3];
    let cof = |i: usize, j: usize| {
        // cofactor of entry (j, i): transpose of the cofactor matrix
        let (r, c) = (j, i);
        &(m(r + 1, c + 1) * m(r + 2, c + 2)) - &(m(r + 1, c + 2) * m(r + 2, c + 1))
    };
    let adj: [[Jet; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| cof(i, j)));
    let det = &(&(m(0, 0) * &adj[0][0]) + &(m(0, 1) * &adj[1][0])) + &(m(0, 2) * &adj[2][0]);
    let value = Matrix3::from_fn(|i, j| g[i][j].value());
    if det.value().abs() <= 1e-14 * value.abs().max().powi(3) {
        return Err(CurvatureError::Degenerate(det.value()));
    }
    let inv_det = det.recip().map_err(|_| CurvatureError::Degenerate(0.0))?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| &adj[i][j] * &inv_det)))
}

/// Christoffel symbols `Γ^k_ij` as jets one order below the metric.
#[derive(Debug, Clone)]
pub struct ConnectionData {
    order: usize,
    /// Index `9k + 3i + j`.
    gamma: Vec<Jet>,
}

impl ConnectionData {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `Γ^k_ij` with 0-based indices.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[9 * k + 3 * i + j]
    }

    /// Largest `|Γ^k_ij − Γ^k_ji|` over all coefficients.
    pub fn torsion_residual(&self) -> f64 {
        let mut r = 0.0f64;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    for (a, b) in self.gamma(k, i, j).coeffs().iter().zip(self.gamma(k, j, i).coeffs()) {
                        r = r.max((a - b).abs());
                    }
                }
            }
        }
        r
    }
}

/// Levi-Civita connection of the metric jets.
pub fn christoffel(g: &MetricJets) -> Result<ConnectionData, CurvatureError> {
    let order = g[0][0].order();
    if order < 1 {
        return Err(CurvatureError::InsufficientOrder { needed: 1, got: order });
    }
    let ginv = inverse_metric(g)?;
    let o = order - 1;
    // dg[a][i][j] = ∂_a g_ij
    let dg: Vec<Jet> = (0..27).map(|n| g[(n / 3) % 3][n % 3].derivative(n / 9 + 1).expect("order >= 1")).collect();
    let d = |a: usize, i: usize, j: usize| &dg[9 * a + 3 * i + j];
    let mut gamma = Vec::with_capacity(27);
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = vec![0.0; num_coeffs(o)];
                for l in 0..3 {
                    let lower: Vec<f64> = (0..num_coeffs(o))
                        .map(|c| 0.5 * (d(i, j, l).coeffs()[c] + d(j, i, l).coeffs()[c] - d(l, i, j).coeffs()[c]))
                        .collect();
                    mul_acc(&mut acc, ginv[k][l].coeffs(), &lower, o);
                }
                gamma.push(Jet::from_coeffs(o, acc).expect("sized"));
            }
        }
    }
    Ok(ConnectionData { order: o, gamma })
}

/// Covariant tensor with all indices down, stored as jets in chart coordinates.
/// Component `(b1, .., bp)` lives at flat index `Σ b_s 3^(p-s)`, first index
/// most significant.
#[derive(Debug, Clone)]
pub struct TensorJets {
    rank: usize,
    order: usize,
    data: Vec<f64>,
}

impl TensorJets {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn stride(&self) -> usize {
        num_coeffs(self.order)
    }

    fn comp(&self, flat: usize) -> &[f64] {
        let s = self.stride();
        &self.data[flat * s..(flat + 1) * s]
    }

    /// Constant terms: the tensor components at the base point.
    pub fn values(&self) -> Vec<f64> {
        let s = self.stride();
        self.data.iter().step_by(s).copied().collect()
    }

    pub fn component(&self, index: &[usize]) -> Jet {
        assert_eq!(index.len(), self.rank);
        let flat = index.iter().fold(0, |acc, b| 3 * acc + b);
        Jet::from_coeffs(self.order, self.comp(flat).to_vec()).expect("sized")
    }
}

/// Riemann tensor `R_abcd = g(R(∂_a, ∂_b)∂_c, ∂_d)` with
/// `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.
pub fn riemann(conn: &ConnectionData, g: &MetricJets) -> Result<TensorJets, CurvatureError> {
    if conn.order < 1 {
        return Err(CurvatureError::InsufficientOrder { needed: 2, got: conn.order + 1 });
    }
    let o = conn.order - 1;
    let n = num_coeffs(o);
    let live: Vec<bool> = conn.gamma.iter().map(|j| j.coeffs()[..n].iter().any(|v| *v != 0.0)).collect();
    let dgam: Vec<Vec<f64>> = (0..81)
        .map(|idx| {
            // ∂_a Γ^l_jk at idx = 27a + 9l + 3j + k
            let (a, rest) = (idx / 27, idx % 27);
            let mut buf = vec![0.0; n];
            derivative_into(&mut buf, conn.gamma[rest].coeffs(), conn.order, a);
            buf
        })
        .collect();
    let dg = |a: usize, l: usize, j: usize, k: usize| &dgam[27 * a + 9 * l + 3 * j + k];
    // R^l_ijk
    let mut up = vec![0.0; 81 * n];
    for l in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let out = &mut up[(27 * l + 9 * i + 3 * j + k) * n..][..n];
                    for (o_, (x, y)) in out.iter_mut().zip(dg(i, l, j, k).iter().zip(dg(j, l, i, k))) {
                        *o_ = x - y;
                    }
                    for m in 0..3 {
                        if live[9 * l + 3 * i + m] && live[9 * m + 3 * j + k] {
                            mul_acc(out, conn.gamma(l, i, m).coeffs(), conn.gamma(m, j, k).coeffs(), o);
                        }
                        if live[9 * l + 3 * j + m] && live[9 * m + 3 * i + k] {
                            mul_sub(out, conn.gamma(l, j, m).coeffs(), conn.gamma(m, i, k).coeffs(), o);
                        }
                    }
                }
            }
        }
    }
    let mut data = vec![0.0; 81 * n];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let out = &mut data[(27 * a + 9 * b + 3 * c + d) * n..][..n];
                    for l in 0..3 {
                        mul_acc(out, g[d][l].coeffs(), &up[(27 * l + 9 * a + 3 * b + c) * n..][..n], o);
                    }
                }
            }
        }
    }
    Ok(TensorJets { rank: 4, order: o, data })
}

/// `(∇T)_{a b1..bp} = ∂_a T_{b1..bp} − Σ_s Γ^m_{a b_s} T_{b1..m..bp}`.
pub fn covariant_derivative(t: &TensorJets, conn: &ConnectionData) -> Result<TensorJets, CurvatureError> {
    if t.order < 1 {
        return Err(CurvatureError::InsufficientOrder { needed: t.rank - 2, got: 0 });
    }
    let p = t.rank;
    let o = t.order - 1;
    let n = num_coeffs(o);
    let ncomp = pow3(p);
    let live: Vec<bool> = conn.gamma.iter().map(|j| j.coeffs()[..n].iter().any(|v| *v != 0.0)).collect();
    let prods = product_table(o);
    let mut data = vec![0.0; 3 * ncomp * n];
    for a in 0..3 {
        let block = &mut data[a * ncomp * n..][..ncomp * n];
        if o == 0 {
            // the linear coefficients sit at slots 1, 2, 3
            for (b, src) in block.iter_mut().zip(t.data.chunks_exact(4)) {
                *b = src[1 + a];
            }
        } else {
            for flat in 0..ncomp {
                derivative_into(&mut block[flat * n..][..n], t.comp(flat), t.order, a);
            }
        }
        for s in 0..p {
            let place = pow3(p - 1 - s);
            for b0 in (0..ncomp).step_by(3 * place) {
                for d in 0..3 {
                    for m in 0..3 {
                        let gi = 9 * m + 3 * a + d;
                        if !live[gi] {
                            continue;
                        }
                        let gamma = conn.gamma[gi].coeffs();
                        if o == 0 {
                            let g = gamma[0];
                            for i in 0..place {
                                block[(b0 + d * place + i) * n] -= g * t.comp(b0 + m * place + i)[0];
                            }
                            continue;
                        }
                        for i in 0..place {
                            let out = &mut block[(b0 + d * place + i) * n..][..n];
                            mul_sub_with(out, gamma, t.comp(b0 + m * place + i), prods);
                        }
                    }
                }
            }
        }
    }
    Ok(TensorJets { rank: p + 1, order: o, data })
}
