//! Connes distance between states of a finite spectral triple, by a cutting-plane
//! method over the traceless Hermitian part of the algebra.

use faer::{c64, Mat};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use crate::crossed::{build_dual_operator, off_diagonal, represent, CrossedElement, CrossedSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, SpanBasis};
use crate::triple::{FiniteSpectralTriple, State};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// Threshold on the objective's component along the metric commutant.
pub const UNBOUNDED_TOL: f64 = 1e-8;
const BASIS_RANK_TOL: f64 = 1e-10;
const COMMUTANT_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct DistanceOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DistanceValue {
    Finite(f64),
    Unbounded,
}

impl DistanceValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            DistanceValue::Finite(v) => Some(*v),
            DistanceValue::Unbounded => None,
        }
    }

    pub fn value_or_flag(&self) -> String {
        match self {
            DistanceValue::Finite(v) => format!("{v:.12e}"),
            DistanceValue::Unbounded => "UNBOUNDED".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    /// Coefficients of the optimal element in the reduced parametrization.
    pub coefficients: Vec<f64>,
    pub element: CMat,
    /// `||[D, a*]||`, recomputed from `element`.
    pub seminorm: f64,
    /// `|rho_1(a*) - rho_2(a*)|`
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub value: DistanceValue,
    /// Best value of the outer (master) approximation.
    pub upper: f64,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    pub gap: f64,
    /// Set when the iteration cap was hit before the gap closed.
    pub flagged: bool,
    pub commutant_component: f64,
}

/// Real coordinates on the traceless Hermitian part of the algebra, modulo
/// the metric commutant.
#[derive(Clone, Debug)]
pub struct HermitianParametrization {
    dirac: CMat,
    /// Orthonormal (real Frobenius) directions on which `a -> i[D, a]` is injective.
    range: Vec<CMat>,
    /// `i[D, h]` for each range direction.
    images: Vec<CMat>,
    /// Orthonormal directions in the commutant, scalars excluded.
    commutant: Vec<CMat>,
    sigma_min: f64,
}

impl HermitianParametrization {
    pub fn new(dirac: &CMat, basis: &[CMat]) -> Result<Self> {
        let n = dirac.nrows();
        let span = SpanBasis::new(basis, BASIS_RANK_TOL)?;
        let unital = span.residual(&linalg::identity(n)) < 1e-8;
        let mut candidates = Vec::new();
        for q in span.matrices() {
            let qs = linalg::dagger(&q);
            if span.residual(&qs) > 1e-8 {
                return Err(Error::InvalidTriple("algebra span is not closed under adjoints".into()));
            }
            let re = linalg::scaled(&(&q + &qs), c64::new(0.5, 0.0));
            let im = linalg::scaled(&(&q - &qs), c64::new(0.0, -0.5));
            candidates.push(re);
            candidates.push(im);
        }
        if unital {
            for h in &mut candidates {
                let tr = linalg::trace(h).re / n as f64;
                *h = &*h - linalg::scaled(&linalg::identity(n), c64::new(tr, 0.0));
            }
        }
        let hermitian = real_orthonormal(&candidates, n)?;

        // columns: real vectorisation of i[D, h_k]
        let images: Vec<CMat> = hermitian
            .iter()
            .map(|h| linalg::commutator(dirac, h).map(|c| linalg::scaled(&c, linalg::I)))
            .collect::<Result<_>>()?;
        let p = hermitian.len();
        let mut range = Vec::new();
        let mut commutant = Vec::new();
        let mut sigma_min = f64::INFINITY;
        if p > 0 {
            let l = real_columns(&images, n);
            let svd = l.thin_svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
            let v = svd.V();
            let smax = s.first().copied().unwrap_or(0.0);
            let cutoff = COMMUTANT_RANK_TOL * smax.max(1.0);
            for j in 0..p {
                let sj = s.get(j).copied().unwrap_or(0.0);
                let mut h = linalg::zeros(n, n);
                for (k, hk) in hermitian.iter().enumerate() {
                    h += linalg::scaled(hk, c64::new(v[(k, j)], 0.0));
                }
                if sj > cutoff {
                    sigma_min = sigma_min.min(sj);
                    range.push(h);
                } else {
                    commutant.push(h);
                }
            }
        }
        let images = range
            .iter()
            .map(|h| linalg::commutator(dirac, h).map(|c| linalg::scaled(&c, linalg::I)))
            .collect::<Result<_>>()?;
        Ok(HermitianParametrization {
            dirac: dirac.clone(),
            range,
            images,
            commutant,
            sigma_min,
        })
    }

    pub fn dim(&self) -> usize {
        self.range.len()
    }

    /// Dimension of the metric commutant with scalars removed.
    pub fn commutant_dim(&self) -> usize {
        self.commutant.len()
    }

    pub fn element(&self, x: &[f64]) -> CMat {
        combine(&self.range, x, self.dirac.nrows())
    }

    /// `i[D, a(x)]`, Hermitian.
    pub fn image(&self, x: &[f64]) -> CMat {
        combine(&self.images, x, self.dirac.nrows())
    }
}

fn combine(mats: &[CMat], x: &[f64], n: usize) -> CMat {
    let mut out = linalg::zeros(n, n);
    for (m, &xi) in mats.iter().zip(x) {
        if xi != 0.0 {
            out += linalg::scaled(m, c64::new(xi, 0.0));
        }
    }
    out
}

/// Stacks real and imaginary parts of each matrix into one real column.
fn real_columns(mats: &[CMat], n: usize) -> Mat<f64> {
    Mat::from_fn(2 * n * n, mats.len(), |r, k| {
        let z = mats[k][((r / 2) % n, (r / 2) / n)];
        if r % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

fn real_orthonormal(mats: &[CMat], n: usize) -> Result<Vec<CMat>> {
    if mats.is_empty() {
        return Ok(Vec::new());
    }
    let a = real_columns(mats, n);
    let svd = a.thin_svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let u = svd.U();
    let rank = s.iter().filter(|&&x| x > BASIS_RANK_TOL * smax && x > 0.0).count();
    Ok((0..rank)
        .map(|k| {
            CMat::from_fn(n, n, |i, j| {
                let r = 2 * (j * n + i);
                c64::new(u[(r, k)], u[(r + 1, k)])
            })
        })
        .collect())
}

/// `d(rho_1, rho_2) = sup { |rho_1(a) - rho_2(a)| : ||[D, a]|| <= 1 }`.
pub fn connes_distance(
    triple: &FiniteSpectralTriple,
    rho1: &State,
    rho2: &State,
    opts: DistanceOptions,
) -> Result<DistanceResult> {
    if rho1.dim() != triple.dim() || rho2.dim() != triple.dim() {
        return Err(Error::ShapeMismatch {
            context: "connes_distance states",
            left: (rho1.dim(), rho2.dim()),
            right: (triple.dim(), triple.dim()),
        });
    }
    let param = HermitianParametrization::new(triple.dirac(), triple.basis())?;
    distance_with(&param, rho1.density(), rho2.density(), opts)
}

/// Cutting-plane solve on a prepared parametrization; densities are assumed valid.
pub fn distance_with(
    param: &HermitianParametrization,
    rho1: &CMat,
    rho2: &CMat,
    opts: DistanceOptions,
) -> Result<DistanceResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("distance tolerance must be positive, got {}", opts.tol)));
    }
    let diff = rho1 - rho2;
    let objective = |h: &CMat| (linalg::trace(&(&diff * h))).re;
    let commutant_component = param
        .commutant
        .iter()
        .map(|h| objective(h).powi(2))
        .sum::<f64>()
        .sqrt();
    if commutant_component > UNBOUNDED_TOL {
        return Ok(DistanceResult {
            value: DistanceValue::Unbounded,
            upper: f64::INFINITY,
            certificate: None,
            iterations: 0,
            gap: f64::INFINITY,
            flagged: false,
            commutant_component,
        });
    }
    let p = param.dim();
    let v: Vec<f64> = param.range.iter().map(objective).collect();
    if p == 0 || v.iter().all(|&c| c == 0.0) {
        let x = vec![0.0; p];
        return Ok(DistanceResult {
            value: DistanceValue::Finite(0.0),
            upper: 0.0,
            certificate: Some(make_certificate(param, &x, &v)?),
            iterations: 0,
            gap: 0.0,
            flagged: false,
            commutant_component,
        });
    }

    // ||[D, a]|| <= 1 forces ||i[D, a]||_F <= sqrt(n), hence |x| <= sqrt(n) / sigma_min.
    let n = param.dirac.nrows();
    let bound = (n as f64).sqrt() / param.sigma_min;
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = v.iter().map(|&c| problem.add_var(c, (-bound, bound))).collect();
    let mut solution = problem.solve().map_err(|e| Error::Eigen(format!("master problem: {e}")))?;

    let mut best_lower = 0.0f64;
    let mut best_x = vec![0.0; p];
    let mut upper = solution.objective();
    let mut iterations = 0;
    let mut flagged = true;
    while iterations < opts.max_iterations {
        iterations += 1;
        let x: Vec<f64> = vars.iter().map(|&var| *solution.var_value(var)).collect();
        upper = solution.objective();
        let c = param.image(&x);
        let (eigs, vecs) = linalg::hermitian_eigen(&c)?;
        let norm = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if norm > 0.0 {
            let scale = norm.max(1.0);
            let value: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / scale;
            if value > best_lower {
                best_lower = value;
                best_x = x.iter().map(|xi| xi / scale).collect();
            }
        }
        if upper - best_lower <= opts.tol {
            flagged = false;
            break;
        }
        let mut added = false;
        for (k, &lambda) in eigs.iter().enumerate() {
            if lambda.abs() <= 1.0 {
                continue;
            }
            let w = vecs.col(k);
            let g: Vec<f64> = param
                .images
                .iter()
                .map(|ci| {
                    let cw = ci * w;
                    (w.adjoint() * &cw).re
                })
                .collect();
            for sgn in [1.0, -1.0] {
                let expr: Vec<_> = vars.iter().zip(&g).map(|(&var, &gi)| (var, sgn * gi)).collect();
                solution = solution
                    .add_constraint(expr, ComparisonOp::Le, 1.0)
                    .map_err(|e| Error::Eigen(format!("master problem: {e}")))?;
            }
            added = true;
        }
        if !added {
            // the master optimum is itself feasible
            flagged = false;
            break;
        }
    }
    if flagged {
        log::warn!(
            "connes_distance hit the iteration cap ({}) with gap {:.3e}",
            opts.max_iterations,
            upper - best_lower
        );
    }
    let certificate = make_certificate(param, &best_x, &v)?;
    Ok(DistanceResult {
        value: DistanceValue::Finite(certificate.objective),
        upper,
        certificate: Some(certificate),
        iterations,
        gap: (upper - best_lower).max(0.0),
        flagged,
        commutant_component,
    })
}

fn make_certificate(param: &HermitianParametrization, x: &[f64], v: &[f64]) -> Result<Certificate> {
    let element = param.element(x);
    let seminorm = linalg::operator_norm(&linalg::commutator(&param.dirac, &element)?)?;
    let objective = v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs();
    Ok(Certificate {
        coefficients: x.to_vec(),
        element,
        seminorm,
        objective,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualMetricRow {
    pub pair: usize,
    pub radius: u32,
    pub base: DistanceValue,
    pub dual: DistanceValue,
    /// `d_Y / d_X` when both are finite and `d_X > 0`.
    pub ratio: Option<f64>,
    pub base_iterations: usize,
    pub dual_iterations: usize,
    pub flagged: bool,
}

/// Distances on the base triple against distances of pulled-back states on the
/// truncated dual triple `(span pi_hat(a (x) delta_g), D_hat)`. Data only.
pub fn compare_dual_metric(
    system: &CrossedSystem,
    radius: u32,
    cap: usize,
    pairs: &[(State, State)],
    opts: DistanceOptions,
) -> Result<Vec<DualMetricRow>> {
    let window = system.window(radius, cap)?;
    let dop = build_dual_operator(&system.triple, &window)?;
    let dual_dirac = dop.assemble();
    let mut dual_basis = Vec::new();
    for g in window.ball().elements() {
        for a in system.triple.basis() {
            let rep = represent(&window, &CrossedElement::single(g.clone(), a.clone())).matrix;
            dual_basis.push(direct_sum(&rep));
        }
    }
    let base_param = HermitianParametrization::new(system.triple.dirac(), system.triple.basis())?;
    let dual_param = HermitianParametrization::new(&dual_dirac, &dual_basis)?;
    let blocks = window.ball().len();
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, (r1, r2)) in pairs.iter().enumerate() {
        let base = distance_with(&base_param, r1.density(), r2.density(), opts)?;
        let p1 = pullback(r1.density(), blocks);
        let p2 = pullback(r2.density(), blocks);
        let dual = distance_with(&dual_param, &p1, &p2, opts)?;
        let ratio = match (base.value, dual.value) {
            (DistanceValue::Finite(b), DistanceValue::Finite(d)) if b > 0.0 => Some(d / b),
            _ => None,
        };
        rows.push(DualMetricRow {
            pair: k,
            radius,
            base: base.value,
            dual: dual.value,
            ratio,
            base_iterations: base.iterations,
            dual_iterations: dual.iterations,
            flagged: base.flagged || dual.flagged,
        });
    }
    Ok(rows)
}

/// `x (+) x`
fn direct_sum(x: &CMat) -> CMat {
    let n = x.nrows();
    let mut m = off_diagonal(&linalg::zeros(n, n), &linalg::zeros(n, n));
    m.as_mut().submatrix_mut(0, 0, n, n).copy_from(x);
    m.as_mut().submatrix_mut(n, n, n, n).copy_from(x);
    m
}

/// `rho (x) (1 / |B_R|) (x) (1 / 2)` in the group-major layout, then doubled.
fn pullback(rho: &CMat, blocks: usize) -> CMat {
    let scale = c64::new(1.0 / (2.0 * blocks as f64), 0.0);
    let spread = linalg::kron(&linalg::identity(blocks), &linalg::scaled(rho, scale));
    direct_sum(&spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::UnitaryAction;
    use crate::crossed::DEFAULT_DIM_CAP;
    use crate::group::GroupModel;
    use crate::linalg::{from_real_diag, from_real_rows};

    fn point_states() -> (State, State) {
        let one = c64::new(1.0, 0.0);
        let zero = c64::new(0.0, 0.0);
        (State::pure(&[one, zero]).unwrap(), State::pure(&[zero, one]).unwrap())
    }

    #[test]
    fn equal_states_are_at_distance_zero() {
        let t = FiniteSpectralTriple::two_point(1.0).unwrap();
        let (a, _) = point_states();
        let d = connes_distance(&t, &a, &a, DistanceOptions::default()).unwrap();
        assert_eq!(d.value, DistanceValue::Finite(0.0));
    }

    #[test]
    fn two_point_distance() {
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            let t = FiniteSpectralTriple::two_point(lambda).unwrap();
            let (a, b) = point_states();
            let d = connes_distance(&t, &a, &b, DistanceOptions::default()).unwrap();
            let v = d.value.finite().unwrap();
            assert!((v - 1.0 / lambda).abs() < 1e-6, "lambda {lambda}: {v}");
            let cert = d.certificate.unwrap();
            assert!(cert.seminorm <= 1.0 + 1e-6);
            assert!(!d.flagged);
        }
    }

    #[test]
    fn zero_dirac_is_unbounded() {
        let t = FiniteSpectralTriple::new(
            crate::linalg::zeros(2, 2),
            vec![from_real_diag(&[1.0, 0.0]), from_real_diag(&[0.0, 1.0])],
        )
        .unwrap();
        let (a, b) = point_states();
        let d = connes_distance(&t, &a, &b, DistanceOptions::default()).unwrap();
        assert_eq!(d.value, DistanceValue::Unbounded);
        assert_eq!(d.value.value_or_flag(), "UNBOUNDED");
    }

    #[test]
    fn clock_shift_distance_is_symmetric_with_valid_certificate() {
        let t = FiniteSpectralTriple::clock_shift(&[1.0, -0.5, 2.0]).unwrap();
        // D is diagonal in the Fourier basis; both states are uniform there,
        // so they agree on the commutant.
        let x = State::pure(&[c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)]).unwrap();
        let y = State::maximally_mixed(3).unwrap();
        let z = State::pure(&[c64::new(0.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 0.0)]).unwrap();
        let dxz = connes_distance(&t, &x, &z, DistanceOptions::default()).unwrap();
        assert!(dxz.value.finite().unwrap() > 0.0);
        let dxy = connes_distance(&t, &x, &y, DistanceOptions::default()).unwrap();
        let dyx = connes_distance(&t, &y, &x, DistanceOptions::default()).unwrap();
        let (a, b) = (dxy.value.finite().unwrap(), dyx.value.finite().unwrap());
        assert!((a - b).abs() <= 2e-6);
        assert!(dxy.certificate.unwrap().seminorm <= 1.0 + 1e-6);
    }

    #[test]
    fn dual_metric_table() {
        let g = GroupModel::integers();
        let sys = CrossedSystem::new(
            g,
            FiniteSpectralTriple::two_point(1.0).unwrap(),
            UnitaryAction::new(g, vec![from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap(),
        )
        .unwrap();
        let (a, b) = point_states();
        let rows = compare_dual_metric(&sys, 1, DEFAULT_DIM_CAP, &[(a.clone(), a), (b.clone(), b)], DistanceOptions::default())
            .unwrap();
        assert!(rows.iter().all(|r| r.base == DistanceValue::Finite(0.0) && r.dual == DistanceValue::Finite(0.0)));
    }
}
