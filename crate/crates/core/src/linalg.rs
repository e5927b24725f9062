//! Dense complex matrix helpers on top of `faer`.

use faer::{c64, Mat, Scale, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real_diag(diag: &[f64]) -> CMat {
    let n = diag.len();
    CMat::from_fn(n, n, |i, j| if i == j { c64::new(diag[i], 0.0) } else { ZERO })
}

/// Builds a matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| c64::new(rows[i][j], 0.0))
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn scaled(a: &CMat, z: c64) -> CMat {
    Scale(z) * a
}

pub fn shape(a: &CMat) -> (usize, usize) {
    (a.nrows(), a.ncols())
}

fn ensure_same_shape(context: &'static str, a: &CMat, b: &CMat) -> Result<()> {
    if shape(a) != shape(b) {
        return Err(Error::ShapeMismatch {
            context,
            left: shape(a),
            right: shape(b),
        });
    }
    Ok(())
}

fn ensure_square(context: &'static str, a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            context,
            left: shape(a),
            right: (a.ncols(), a.nrows()),
        });
    }
    Ok(())
}

pub fn is_finite(a: &CMat) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

/// `DA - AD`
pub fn commutator(d: &CMat, a: &CMat) -> Result<CMat> {
    ensure_square("commutator", d)?;
    ensure_same_shape("commutator", d, a)?;
    Ok(d * a - a * d)
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(shape(a), shape(b), "max_abs_diff shape mismatch");
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Entrywise distance between `a` and its adjoint.
pub fn hermitian_defect(a: &CMat) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order. Only the lower
/// triangle is read.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    ensure_square("hermitian_eigenvalues", a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors (as columns).
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    ensure_square("hermitian_eigen", a)?;
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Largest singular value, computed from the Hermitian eigensolve of the
/// smaller Gram matrix.
pub fn operator_norm(t: &CMat) -> Result<f64> {
    if !is_finite(t) {
        return Err(Error::NonFinite("operator_norm input"));
    }
    if t.nrows() == 0 || t.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if t.ncols() <= t.nrows() {
        t.adjoint() * t
    } else {
        t * t.adjoint()
    };
    let top = hermitian_eigenvalues(&gram)?
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// Singular values in nonincreasing order.
pub fn singular_values(t: &CMat) -> Result<Vec<f64>> {
    if t.nrows() == 0 || t.ncols() == 0 {
        return Ok(Vec::new());
    }
    t.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = shape(a);
    let (br, bc) = shape(b);
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major vectorisation.
pub fn vectorize(a: &CMat) -> Vec<c64> {
    let mut v = Vec::with_capacity(a.nrows() * a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |i, j| v[j * n + i])
}

/// Orthonormal basis for the complex linear span of a family of equally shaped
/// matrices, used for membership residuals.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    rows: usize,
    cols: usize,
    /// Orthonormal columns, each a vectorised matrix.
    q: CMat,
}

impl SpanBasis {
    pub fn new(mats: &[CMat], rel_tol: f64) -> Result<Self> {
        let (rows, cols) = mats.first().map(shape).unwrap_or((0, 0));
        for m in mats {
            if shape(m) != (rows, cols) {
                return Err(Error::ShapeMismatch {
                    context: "span basis",
                    left: (rows, cols),
                    right: shape(m),
                });
            }
        }
        let len = rows * cols;
        let stacked = CMat::from_fn(len, mats.len(), |i, j| mats[j][(i % rows, i / rows)]);
        let q = if mats.is_empty() || len == 0 {
            CMat::zeros(len, 0)
        } else {
            let svd = stacked
                .thin_svd()
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
            let smax = s.first().copied().unwrap_or(0.0);
            let rank = s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count();
            svd.U().subcols(0, rank).to_owned()
        };
        Ok(SpanBasis { rows, cols, q })
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// The orthonormal basis, reshaped back into matrices.
    pub fn matrices(&self) -> Vec<CMat> {
        (0..self.dim())
            .map(|k| CMat::from_fn(self.rows, self.cols, |i, j| self.q[(j * self.rows + i, k)]))
            .collect()
    }

    /// Frobenius distance from `x` to the span.
    pub fn residual(&self, x: &CMat) -> f64 {
        assert_eq!(shape(x), (self.rows, self.cols), "span residual shape");
        let v = CMat::from_fn(self.rows * self.cols, 1, |i, _| x[(i % self.rows, i / self.rows)]);
        let proj = &self.q * (self.q.adjoint() * &v);
        (&v - &proj).norm_l2()
    }
}
