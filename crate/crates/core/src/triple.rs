//! Finite-dimensional spectral triples `(A, H, D)`.
//!
//! `H = C^n`, `A` is given by a spanning family of `n x n` matrices (unital and
//! *-closed) and `D` is a Hermitian matrix. All operators are everywhere
//! defined, so domain conditions carry no content here.

use std::f64::consts::PI;

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, SpanBasis};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const SPAN_TOL: f64 = 1e-10;
/// Membership tolerance for elements handed to the Lipschitz seminorm.
pub const ELEMENT_SPAN_TOL: f64 = 1e-8;
/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FiniteSpectralTriple {
    dirac: CMat,
    basis: Vec<CMat>,
    span: SpanBasis,
}

impl FiniteSpectralTriple {
    pub fn new(dirac: CMat, basis: Vec<CMat>) -> Result<Self> {
        let n = dirac.nrows();
        if n == 0 || dirac.ncols() != n {
            return Err(Error::InvalidTriple(format!(
                "D must be a nonempty square matrix, got {}x{}",
                dirac.nrows(),
                dirac.ncols()
            )));
        }
        if !linalg::is_finite(&dirac) {
            return Err(Error::NonFinite("Dirac operator"));
        }
        let defect = linalg::hermitian_defect(&dirac);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidTriple(format!(
                "D is not Hermitian (max |D - D*| = {defect:.3e})"
            )));
        }
        if basis.is_empty() {
            return Err(Error::InvalidTriple("algebra basis is empty".into()));
        }
        for (k, a) in basis.iter().enumerate() {
            if linalg::shape(a) != (n, n) {
                return Err(Error::InvalidTriple(format!(
                    "basis element {k} has shape {:?}, expected {n}x{n}",
                    linalg::shape(a)
                )));
            }
            if !linalg::is_finite(a) {
                return Err(Error::NonFinite("algebra basis"));
            }
        }
        let span = SpanBasis::new(&basis, 1e-12)?;
        let unit_residual = span.residual(&linalg::identity(n));
        if unit_residual >= SPAN_TOL {
            return Err(Error::InvalidTriple(format!(
                "identity is not in the algebra span (residual {unit_residual:.3e})"
            )));
        }
        for (k, a) in basis.iter().enumerate() {
            let r = span.residual(&linalg::dagger(a));
            if r >= SPAN_TOL {
                return Err(Error::InvalidTriple(format!(
                    "span is not *-closed: adjoint of basis element {k} has residual {r:.3e}"
                )));
            }
        }
        Ok(FiniteSpectralTriple { dirac, basis, span })
    }

    /// `A = C^2` (diagonal matrices) with `D = [[0, L], [L, 0]]`.
    pub fn two_point(lambda: f64) -> Result<Self> {
        let dirac = linalg::from_real_rows(&[&[0.0, lambda], &[lambda, 0.0]]);
        let basis = vec![
            linalg::from_real_diag(&[1.0, 0.0]),
            linalg::from_real_diag(&[0.0, 1.0]),
        ];
        Self::new(dirac, basis)
    }

    /// `A = C`, `D = 0` on `H = C`: tensoring with this leaves only `M_c`.
    pub fn scalar() -> Result<Self> {
        Self::new(linalg::zeros(1, 1), vec![linalg::identity(1)])
    }

    /// `A = M_N` spanned by clock/shift monomials `C^j S^k`, with `D` the
    /// circulant operator `F diag(spectrum) F*` (`F` the unitary DFT), i.e. a
    /// function of the shift.
    pub fn clock_shift(spectrum: &[f64]) -> Result<Self> {
        let n = spectrum.len();
        if n == 0 {
            return Err(Error::InvalidTriple("clock_shift needs a nonempty spectrum".into()));
        }
        let dft = dft_matrix(n);
        let dirac = &dft * linalg::from_real_diag(spectrum) * dft.adjoint();
        // Symmetrise away rounding so the Hermitian check is exact.
        let dirac = CMat::from_fn(n, n, |i, j| (dirac[(i, j)] + dirac[(j, i)].conj()) * 0.5);
        let clock = clock_matrix(n);
        let shift = shift_matrix(n);
        let mut basis = Vec::with_capacity(n * n);
        let mut cj = linalg::identity(n);
        for _ in 0..n {
            let mut sk = linalg::identity(n);
            for _ in 0..n {
                basis.push(&cj * &sk);
                sk = &sk * &shift;
            }
            cj = &cj * &clock;
        }
        Self::new(dirac, basis)
    }

    pub fn dim(&self) -> usize {
        self.dirac.nrows()
    }

    pub fn dirac(&self) -> &CMat {
        &self.dirac
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn span(&self) -> &SpanBasis {
        &self.span
    }

    /// Frobenius distance from `a` to the algebra span.
    pub fn span_residual(&self, a: &CMat) -> f64 {
        self.span.residual(a)
    }

    pub fn dirac_eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.dirac)
    }

    /// `L(a) = ||[D, a]||` together with `||a||_1 = ||a|| + L(a)`.
    pub fn lipschitz(&self, a: &CMat) -> Result<LipschitzReport> {
        let commutator = linalg::commutator(&self.dirac, a)?;
        let span_residual = self.span.residual(a);
        if span_residual >= ELEMENT_SPAN_TOL {
            log::warn!("element is outside the algebra span (residual {span_residual:.3e})");
        }
        let seminorm = linalg::operator_norm(&commutator)?;
        let norm = linalg::operator_norm(a)?;
        Ok(LipschitzReport {
            seminorm,
            norm,
            banach_norm: norm + seminorm,
            span_residual,
        })
    }

    /// Dimension of `{a in span : [D, a] = 0}`.
    pub fn metric_commutant_dimension(&self) -> Result<usize> {
        let q = self.span.matrices();
        let n = self.dim();
        let images: Vec<Vec<c64>> = q
            .iter()
            .map(|a| linalg::commutator(&self.dirac, a).map(|c| linalg::vectorize(&c)))
            .collect::<Result<_>>()?;
        let map = CMat::from_fn(n * n, q.len(), |i, k| images[k][i]);
        let sv = linalg::singular_values(&map)?;
        let smax = sv.first().copied().unwrap_or(0.0);
        let rank = if smax == 0.0 {
            0
        } else {
            sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
        };
        Ok(q.len() - rank)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzReport {
    pub seminorm: f64,
    pub norm: f64,
    pub banach_norm: f64,
    pub span_residual: f64,
}

/// A state on `M_n` given by its density matrix.
#[derive(Clone, Debug)]
pub struct State {
    rho: CMat,
}

impl State {
    pub const TOL: f64 = 1e-10;

    pub fn new(rho: CMat) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        if !linalg::is_finite(&rho) {
            return Err(Error::NonFinite("density matrix"));
        }
        let defect = linalg::hermitian_defect(&rho);
        if defect > Self::TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = linalg::trace(&rho);
        if (tr - c64::new(1.0, 0.0)).norm() > Self::TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = linalg::hermitian_eigenvalues(&rho)?[0];
        if min_eig < -Self::TOL {
            return Err(Error::InvalidState(format!(
                "not positive (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(State { rho })
    }

    /// Vector state `x x* / |x|^2`.
    pub fn pure(x: &[c64]) -> Result<Self> {
        let norm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let n = x.len();
        Self::new(CMat::from_fn(n, n, |i, j| x[i] * x[j].conj() / norm2))
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(linalg::scaled(&linalg::identity(n), c64::new(1.0 / n as f64, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn density(&self) -> &CMat {
        &self.rho
    }

    /// `trace(rho a)`
    pub fn eval(&self, a: &CMat) -> Result<c64> {
        if linalg::shape(a) != linalg::shape(&self.rho) {
            return Err(Error::ShapeMismatch {
                context: "state evaluation",
                left: linalg::shape(&self.rho),
                right: linalg::shape(a),
            });
        }
        let n = self.dim();
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.rho[(i, j)] * a[(j, i)];
            }
        }
        Ok(acc)
    }
}

pub fn clock_matrix(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            c64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64)
        } else {
            linalg::ZERO
        }
    })
}

/// `S e_j = e_{j+1 mod n}`
pub fn shift_matrix(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == (j + 1) % n { linalg::ONE } else { linalg::ZERO })
}

pub fn dft_matrix(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |i, j| {
        c64::from_polar(scale, 2.0 * PI * ((i * j) % n) as f64 / n as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_diag, identity, max_abs};

    #[test]
    fn rejects_non_hermitian_dirac() {
        let d = linalg::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let err = FiniteSpectralTriple::new(d, vec![identity(2)]).unwrap_err();
        assert!(matches!(err, Error::InvalidTriple(_)));
    }

    #[test]
    fn rejects_non_unital_or_non_star_closed_basis() {
        let d = linalg::zeros(2, 2);
        assert!(FiniteSpectralTriple::new(d.clone(), vec![from_real_diag(&[1.0, 0.0])]).is_err());
        let upper = linalg::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(FiniteSpectralTriple::new(d, vec![identity(2), upper]).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let x = FiniteSpectralTriple::two_point(2.5).unwrap();
        let unit = x.lipschitz(&identity(2)).unwrap();
        assert_eq!(unit.seminorm, 0.0);
        assert!((unit.banach_norm - 1.0).abs() < 1e-12);
        let p = x.lipschitz(&from_real_diag(&[1.0, 0.0])).unwrap();
        assert!((p.seminorm - 2.5).abs() < 1e-12);

        let y = FiniteSpectralTriple::clock_shift(&[1.0, -0.5, 2.0]).unwrap();
        assert!(y.span_residual(y.dirac()) < 1e-10);
        assert!(y.lipschitz(y.dirac()).unwrap().seminorm < 1e-12);
    }

    #[test]
    fn metric_commutant_examples() {
        let flat = FiniteSpectralTriple::new(linalg::zeros(2, 2), vec![
            from_real_diag(&[1.0, 0.0]),
            from_real_diag(&[0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(flat.metric_commutant_dimension().unwrap(), 2);
        assert_eq!(
            FiniteSpectralTriple::two_point(1.0).unwrap().metric_commutant_dimension().unwrap(),
            1
        );
        // Simple spectrum: the commutant of D in M_3 is the polynomials in D.
        let full = FiniteSpectralTriple::clock_shift(&[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(full.metric_commutant_dimension().unwrap(), 3);
    }

    #[test]
    fn state_evaluation() {
        let e1 = State::pure(&[c64::new(1.0, 0.0), c64::new(0.0, 0.0)]).unwrap();
        assert_eq!(e1.eval(&from_real_diag(&[3.0, 7.0])).unwrap(), c64::new(3.0, 0.0));
        assert!((e1.eval(&identity(2)).unwrap() - c64::new(1.0, 0.0)).norm() < 1e-15);
        let mixed = State::maximally_mixed(3).unwrap();
        let a = linalg::from_real_rows(&[&[1.0, 2.0, 0.0], &[2.0, -1.0, 0.5], &[0.0, 0.5, 3.0]]);
        let mean: f64 = linalg::hermitian_eigenvalues(&a).unwrap().iter().sum::<f64>() / 3.0;
        assert!((mixed.eval(&a).unwrap().re - mean).abs() < 1e-12);
        assert!(e1.eval(&identity(3)).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(State::new(from_real_diag(&[0.5, 0.6])).is_err());
        assert!(State::new(from_real_diag(&[1.5, -0.5])).is_err());
        assert!(State::new(from_real_diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn clock_and_shift_braid() {
        let n = 4;
        let c = clock_matrix(n);
        let s = shift_matrix(n);
        let omega = c64::from_polar(1.0, 2.0 * PI / n as f64);
        let lhs = &c * &s;
        let rhs = linalg::scaled(&(&s * &c), omega);
        assert!(max_abs(&(&lhs - &rhs)) < 1e-14);
    }
}
