use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use super::{CurvatureError, J};

/// Null frame `(e, h, f)` with Gram matrix `J`: `g(e,f) = g(h,h) = 1`, all
/// other pairings zero. Stored as the columns of a matrix in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WittFrame {
    #[serde(serialize_with = "ser_columns")]
    vectors: Matrix3<f64>,
}

fn ser_columns<S: serde::Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(3))?;
    for (k, name) in ["e", "h", "f"].iter().enumerate() {
        map.serialize_entry(name, &[m[(0, k)], m[(1, k)], m[(2, k)]])?;
    }
    map.end()
}

impl WittFrame {
    /// Wraps a matrix whose columns are `e, h, f`; no check is made.
    pub fn from_columns(vectors: Matrix3<f64>) -> Self {
        Self { vectors }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.vectors
    }

    pub fn e(&self) -> Vector3<f64> {
        self.vectors.column(0).into()
    }

    pub fn h(&self) -> Vector3<f64> {
        self.vectors.column(1).into()
    }

    pub fn f(&self) -> Vector3<f64> {
        self.vectors.column(2).into()
    }

    /// Largest entry of `Pᵀ g P − J`.
    pub fn gram_residual(&self, g: &Matrix3<f64>) -> f64 {
        (self.vectors.transpose() * g * self.vectors - J).abs().max()
    }

    /// Chart vector with the given frame components.
    pub fn to_chart(&self, frame_components: &Vector3<f64>) -> Vector3<f64> {
        self.vectors * frame_components
    }

    /// Frame components of a chart vector.
    pub fn to_frame(&self, chart: &Vector3<f64>) -> Vector3<f64> {
        self.vectors.try_inverse().expect("frame vectors are independent") * chart
    }

    /// Frame whose vectors have components `q` (columns) in this frame.
    pub fn compose(&self, q: &Matrix3<f64>) -> Self {
        Self { vectors: self.vectors * q }
    }
}

/// First element attaining the maximum of `key`.
fn first_max(items: impl Iterator<Item = Vector3<f64>>, key: impl Fn(&Vector3<f64>) -> f64) -> Vector3<f64> {
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for v in items {
        let k = key(&v);
        if best.as_ref().is_none_or(|(b, _)| k > *b) {
            best = Some((k, v));
        }
    }
    best.expect("nonempty").1
}

fn pairing(g: &Matrix3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    (u.transpose() * g * v)[0]
}

/// Deterministic Witt frame for a Lorentz metric value `g` (one negative,
/// two positive eigenvalues).
///
/// `e` is the first coordinate vector that is null, or else the sum of the
/// unit timelike and the unit spacelike eigenvectors of the largest
/// eigenvalue (each signed so its largest entry is positive). `f` is built
/// from the coordinate vector pairing most strongly with `e`, and `h` from
/// the coordinate vector whose projection onto `{e, f}⊥` is longest. Finally
/// `e` and `f` are rescaled by reciprocal factors to equal chart length.
pub fn build_witt_frame(g: &Matrix3<f64>) -> Result<WittFrame, CurvatureError> {
    let eig = SymmetricEigen::new(*g);
    let scale = eig.eigenvalues.abs().max();
    let negatives = eig.eigenvalues.iter().filter(|v| **v < -1e-12 * scale).count();
    let positives = eig.eigenvalues.iter().filter(|v| **v > 1e-12 * scale).count();
    if scale == 0.0 || !scale.is_finite() || negatives != 1 || positives != 2 {
        return Err(CurvatureError::Signature([eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]]));
    }
    let tol = 1e-14 * scale;
    let basis = |k: usize| Vector3::from_fn(|i, _| if i == k { 1.0 } else { 0.0 });

    let e = match (0..3).find(|&k| g[(k, k)].abs() <= tol) {
        Some(k) => basis(k),
        None => {
            let signed = |v: Vector3<f64>| {
                let k = v.iamax();
                if v[k] < 0.0 {
                    -v
                } else {
                    v
                }
            };
            let neg = eig.eigenvalues.iter().position(|v| *v < 0.0).expect("one negative eigenvalue");
            let pos = eig.eigenvalues.imax();
            let t = signed(eig.eigenvectors.column(neg).into()) / (-eig.eigenvalues[neg]).sqrt();
            let s = signed(eig.eigenvectors.column(pos).into()) / eig.eigenvalues[pos].sqrt();
            (t + s) / 2f64.sqrt()
        }
    };

    let w = first_max((0..3).map(basis), |v| pairing(g, &e, v).abs());
    let f1 = w / pairing(g, &e, &w);
    let f = f1 - 0.5 * pairing(g, &f1, &f1) * e;

    let project = |u: Vector3<f64>| u - pairing(g, &u, &f) * e - pairing(g, &u, &e) * f;
    let h1 = first_max((0..3).map(|k| project(basis(k))), |v| pairing(g, v, v));
    let hh = pairing(g, &h1, &h1);
    if !(hh > 0.0) {
        return Err(CurvatureError::Signature([eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]]));
    }
    let h = h1 / hh.sqrt();
    // boost e → ce, f → f/c so both have the same chart length
    let c = (f.norm() / e.norm()).sqrt();
    Ok(WittFrame { vectors: Matrix3::from_columns(&[e * c, h, f / c]) })
}
