use std::fmt;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4, Vector4};
use serde::Serialize;

use super::LieAlgebra4;
use crate::killing::EPS_TYPE;
use crate::rank::{nullspace, range, RankDecision, TAU_RANK};

/// Isomorphism classes distinguished by the classifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassLabel {
    /// `R × heis`: `ad(T)` trivial on `heis`.
    RTimesHeis,
    /// Trace-free diagonalizable block, eigenvalues `±1`.
    RhHeis,
    /// Nonzero nilpotent block.
    RpHeis,
    /// Trace-free block with imaginary eigenvalues.
    ReHeis,
    /// Nonzero scalar block.
    RsHeis,
    /// Non-unimodular, non-scalar block; `ν = det A / (tr A)²`.
    RnuHeis {
        nu: f64,
    },
    Sl2PlusR,
    Other {
        reason: String,
    },
}

impl ClassLabel {
    pub fn nu(&self) -> Option<f64> {
        match self {
            ClassLabel::RnuHeis { nu } => Some(*nu),
            _ => None,
        }
    }

    fn other(reason: impl Into<String>) -> Self {
        ClassLabel::Other { reason: reason.into() }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::RTimesHeis => write!(f, "R x heis"),
            ClassLabel::RhHeis => write!(f, "R ⋉_h heis"),
            ClassLabel::RpHeis => write!(f, "R ⋉_p heis"),
            ClassLabel::ReHeis => write!(f, "R ⋉_e heis"),
            ClassLabel::RsHeis => write!(f, "R ⋉_s heis"),
            ClassLabel::RnuHeis { nu } => write!(f, "R ⋉_ν heis (ν = {nu:.9})"),
            ClassLabel::Sl2PlusR => write!(f, "sl(2,R) ⊕ R"),
            ClassLabel::Other { reason } => write!(f, "other ({reason})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: ClassLabel,
    /// Every rank decision along the way cleared the gap test.
    pub trusted: bool,
    pub derived_dim: usize,
    pub unimodular: bool,
    /// `ad(T)` on `heis / center` in an adapted basis, when one was built.
    pub block: Option<[[f64; 2]; 2]>,
    /// Columns `T, X, Y, Z` with `[X,Y] = Z`, in the input basis.
    #[serde(skip)]
    pub adapted_basis: Option<Matrix4<f64>>,
}

fn unit(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|k, _| if k == i { 1.0 } else { 0.0 })
}

fn columns(vs: &[Vector4<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(4, vs.len(), |i, k| vs[k][i])
}

fn col4(m: &DMatrix<f64>, k: usize) -> Vector4<f64> {
    Vector4::from_fn(|i, _| m[(i, k)])
}

struct Ctx {
    alg: LieAlgebra4,
    decisions: Vec<RankDecision>,
}

impl Ctx {
    fn range(&mut self, vs: &[Vector4<f64>]) -> DMatrix<f64> {
        let (d, b) = range(&columns(vs));
        self.decisions.push(d);
        b
    }

    fn brackets_of(&self, a: &[Vector4<f64>], b: &[Vector4<f64>]) -> Vec<Vector4<f64>> {
        a.iter().flat_map(|x| b.iter().map(move |y| self.alg.bracket(x, y))).collect()
    }

    fn finish(self, label: ClassLabel, derived_dim: usize, unimodular: bool) -> Classification {
        let trusted = self.decisions.iter().all(|d| d.trusted);
        Classification { label, trusted, derived_dim, unimodular, block: None, adapted_basis: None }
    }
}

/// Classify a 4-dimensional Lie algebra.
pub fn classify4(l: &LieAlgebra4) -> Classification {
    let scale = l.scale();
    if scale == 0.0 {
        return Classification {
            label: ClassLabel::other("abelian"),
            trusted: true,
            derived_dim: 0,
            unimodular: true,
            block: None,
            adapted_basis: None,
        };
    }
    // constants divided by their scale: an isomorphic algebra
    let mut c = *l.constants();
    c.iter_mut().flatten().flatten().for_each(|v| *v /= scale);
    let mut ctx = Ctx { alg: LieAlgebra4::new(c), decisions: Vec::new() };
    let basis: Vec<_> = (0..4).map(unit).collect();

    let all: Vec<_> = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).map(|(i, j)| ctx.alg.basis_bracket(i, j)).collect();
    let derived = ctx.range(&all);
    let dd = derived.ncols();
    let chi = Vector4::from_fn(|i, _| ctx.alg.ad(&unit(i)).trace());
    let unimodular = chi.amax() <= TAU_RANK;
    let dvecs: Vec<_> = (0..dd).map(|k| col4(&derived, k)).collect();

    if dd == 3 {
        let dd2 = ctx.range(&ctx.brackets_of(&dvecs, &dvecs)).ncols();
        if dd2 == 3 {
            let label = semisimple_label(&ctx.alg, &dvecs);
            return ctx.finish(label, dd, unimodular);
        }
    }

    // a 3-dimensional ideal that should be heis, and a complement T
    let (ideal, t) = if !unimodular {
        let (d, k) = nullspace(&DMatrix::from_row_slice(1, 4, chi.as_slice()));
        ctx.decisions.push(d);
        ((0..3).map(|i| col4(&k, i)).collect::<Vec<_>>(), chi / chi.norm_squared())
    } else {
        match dd {
            3 => {
                let (d, k) = nullspace(&DMatrix::from_fn(3, 4, |i, j| dvecs[i][j]));
                ctx.decisions.push(d);
                (dvecs.clone(), col4(&k, 0))
            }
            2 => {
                let l2 = ctx.range(&ctx.brackets_of(&basis, &dvecs));
                let l2v: Vec<_> = (0..l2.ncols()).map(|k| col4(&l2, k)).collect();
                let l3 = ctx.range(&ctx.brackets_of(&basis, &l2v)).ncols();
                let label = if l2v.len() == 1 && l3 == 0 {
                    ClassLabel::RpHeis
                } else {
                    ClassLabel::other("unimodular with 2-dimensional derived algebra, not nilpotent")
                };
                return ctx.finish(label, dd, unimodular);
            }
            1 => {
                let central = ctx.brackets_of(&basis, &dvecs).iter().all(|w| w.amax() <= TAU_RANK);
                let label =
                    if central { ClassLabel::RTimesHeis } else { ClassLabel::other("1-dimensional derived algebra is not central") };
                return ctx.finish(label, dd, unimodular);
            }
            _ => return ctx.finish(ClassLabel::other("abelian"), dd, unimodular),
        }
    };

    // heis test: [I, I] is a central line of I
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let ii: Vec<_> = pairs.iter().map(|&(a, b)| ctx.alg.bracket(&ideal[a], &ideal[b])).collect();
    let zspan = ctx.range(&ii);
    if zspan.ncols() != 1 {
        let reason = format!("3-dimensional ideal has {}-dimensional derived algebra", zspan.ncols());
        return ctx.finish(ClassLabel::other(reason), dd, unimodular);
    }
    let z = col4(&zspan, 0);
    if ideal.iter().any(|q| ctx.alg.bracket(q, &z).amax() > TAU_RANK) {
        return ctx.finish(ClassLabel::other("3-dimensional ideal is not nilpotent"), dd, unimodular);
    }
    let plane: Vec<_> = ideal.iter().map(|q| q - z * z.dot(q)).collect();
    let xy = ctx.range(&plane);
    let (x, y) = (col4(&xy, 0), col4(&xy, 1));
    let zn = ctx.alg.bracket(&x, &y);
    let p = Matrix4::from_columns(&[t, x, y, zn]);
    let Some(pinv) = p.try_inverse() else {
        return ctx.finish(ClassLabel::other("degenerate adapted basis"), dd, unimodular);
    };
    let adt = ctx.alg.ad(&t);
    let img = pinv * adt * p;
    let a = Matrix2::new(img[(1, 1)], img[(1, 2)], img[(2, 1)], img[(2, 2)]);
    let label = block_label(&a, unimodular);
    let mut out = ctx.finish(label, dd, unimodular);
    out.block = Some([[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]]);
    // undo the normalization so the basis refers to the caller's constants
    let mut pb = p;
    pb.set_column(0, &(t / scale));
    pb.set_column(3, &(zn * scale));
    out.adapted_basis = Some(pb);
    out
}

fn block_label(a: &Matrix2<f64>, unimodular: bool) -> ClassLabel {
    let n2 = a.norm_squared();
    let tr = a.trace();
    let det = a.determinant();
    if n2 <= TAU_RANK * TAU_RANK {
        return ClassLabel::RTimesHeis;
    }
    if !unimodular {
        let off = a - Matrix2::identity() * (tr / 2.0);
        if off.norm_squared() <= EPS_TYPE * n2 {
            return ClassLabel::RsHeis;
        }
        return ClassLabel::RnuHeis { nu: det / (tr * tr) };
    }
    let rel = det / n2;
    if rel > EPS_TYPE {
        ClassLabel::ReHeis
    } else if rel < -EPS_TYPE {
        ClassLabel::RhHeis
    } else {
        ClassLabel::RpHeis
    }
}

/// Perfect 3-dimensional derived algebra: read its Killing form.
fn semisimple_label(alg: &LieAlgebra4, d: &[Vector4<f64>]) -> ClassLabel {
    let q = columns(d);
    let qt = q.transpose();
    // structure constants of D in the orthonormal basis d
    let ad = |x: &Vector4<f64>| -> Matrix3<f64> {
        let m = DMatrix::from_fn(4, 3, |i, j| alg.bracket(x, &d[j])[i]);
        let r = &qt * m;
        Matrix3::from_fn(|i, j| r[(i, j)])
    };
    let ads: Vec<_> = d.iter().map(ad).collect();
    let kf = Matrix3::from_fn(|i, j| (ads[i] * ads[j]).trace());
    let eig = kf.symmetric_eigenvalues();
    let neg = eig.iter().filter(|v| **v < 0.0).count();
    match neg {
        1 | 2 => ClassLabel::Sl2PlusR,
        _ => ClassLabel::other("compact simple ideal"),
    }
}
