//! Truncated regular representation of the reduced crossed product and the
//! dual Dirac operator.
//!
//! Everything lives on `H (x) l^2(B_R)` with group-major indexing: basis vector
//! `e_i (x) delta_t` has index `pos(t) * n + i`. Infinite-rank operators are
//! compressed by the projection onto this window; because `D (x) 1` and
//! `1 (x) M_c` are block diagonal over `t`, compressing a commutator equals
//! taking the commutator of the compressions.

use std::collections::BTreeMap;

use faer::c64;
use serde::Serialize;

use crate::action::UnitaryAction;
use crate::error::{Error, Result};
use crate::group::{Ball, Element, GroupModel};
use crate::linalg::{self, CMat};
use crate::triple::{FiniteSpectralTriple, ELEMENT_SPAN_TOL};

pub const DEFAULT_DIM_CAP: usize = 4096;
/// Entrywise agreement required between kernel-formula and naive commutators.
pub const KERNEL_TOL: f64 = 1e-12;
pub const SPECTRUM_TOL: f64 = 1e-9;
pub const BOUND_SLACK_TOL: f64 = 1e-9;
pub const MONOTONE_TOL: f64 = 1e-10;

/// The dynamical system `(X, G, alpha)`.
#[derive(Clone, Debug)]
pub struct CrossedSystem {
    pub group: GroupModel,
    pub triple: FiniteSpectralTriple,
    pub action: UnitaryAction,
}

impl CrossedSystem {
    /// Radius of the ball on which invariance of the algebra span is checked.
    pub const INVARIANCE_RADIUS: u32 = 2;

    pub fn new(group: GroupModel, triple: FiniteSpectralTriple, action: UnitaryAction) -> Result<Self> {
        if action.group() != group {
            return Err(Error::InvalidAction(format!(
                "action is for {}, system group is {}",
                action.group().family_name(),
                group.family_name()
            )));
        }
        if action.dim() != triple.dim() {
            return Err(Error::InvalidAction(format!(
                "action acts on C^{}, triple on C^{}",
                action.dim(),
                triple.dim()
            )));
        }
        let ball = group.ball(Self::INVARIANCE_RADIUS, usize::MAX)?;
        let inv = action.invariance(&triple, &ball);
        if !inv.invariant {
            return Err(Error::InvalidAction(format!(
                "action does not preserve the algebra span (residual {:.3e} on B_{})",
                inv.max_residual, inv.radius
            )));
        }
        Ok(CrossedSystem { group, triple, action })
    }

    pub fn dim(&self) -> usize {
        self.triple.dim()
    }

    /// Enumerates `B_R` and caches `u_t`; fails when `n |B_R|` exceeds `cap`.
    pub fn window(&self, radius: u32, cap: usize) -> Result<Window> {
        let n = self.dim();
        let ball = self.group.ball(radius, cap / n.max(1))?;
        let requested = n * ball.len();
        if requested > cap {
            return Err(Error::ResourceCap {
                what: "truncated Hilbert dimension",
                requested,
                cap,
            });
        }
        let unitaries = self.action.unitaries(&ball);
        Ok(Window {
            group: self.group,
            n,
            ball,
            unitaries,
        })
    }
}

/// A ball `B_R` together with the cached implementing unitaries.
#[derive(Clone, Debug)]
pub struct Window {
    group: GroupModel,
    n: usize,
    ball: Ball,
    unitaries: Vec<CMat>,
}

impl Window {
    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn radius(&self) -> u32 {
        self.ball.radius()
    }

    pub fn group(&self) -> GroupModel {
        self.group
    }

    /// Dimension `n` of the triple's Hilbert space.
    pub fn block(&self) -> usize {
        self.n
    }

    /// `n |B_R|`
    pub fn dim(&self) -> usize {
        self.n * self.ball.len()
    }

    pub fn unitary(&self, t: usize) -> &CMat {
        &self.unitaries[t]
    }

    /// `alpha_{t^-1}(x) = u_t* x u_t` for the `t`-th ball element.
    pub fn alpha_inv(&self, t: usize, x: &CMat) -> CMat {
        let u = &self.unitaries[t];
        u.adjoint() * x * u
    }

    /// `alpha_t(x)` for the `t`-th ball element.
    pub fn alpha(&self, t: usize, x: &CMat) -> CMat {
        let u = &self.unitaries[t];
        u * x * u.adjoint()
    }

    fn check_support_inside(&self, f: &CrossedElement, what: &str) -> Result<()> {
        if let Some(s) = f.support().find(|s| !self.ball.contains(s)) {
            return Err(Error::Boundary(format!(
                "{what}: support element {} is outside B_{}",
                self.group.display(s),
                self.radius()
            )));
        }
        Ok(())
    }
}

/// Finitely supported `F: G -> A`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement {
    terms: BTreeMap<Element, CMat>,
}

impl CrossedElement {
    /// Terms with equal group elements are summed.
    pub fn new(terms: impl IntoIterator<Item = (Element, CMat)>) -> Self {
        let mut map: BTreeMap<Element, CMat> = BTreeMap::new();
        for (g, a) in terms {
            match map.get_mut(&g) {
                Some(existing) => *existing = &*existing + &a,
                None => {
                    map.insert(g, a);
                }
            }
        }
        CrossedElement { terms: map }
    }

    /// `a (x) f`, i.e. `F(s) = f(s) a`.
    pub fn elementary(a: &CMat, f: &[(Element, c64)]) -> Self {
        Self::new(f.iter().map(|(g, z)| (g.clone(), linalg::scaled(a, *z))))
    }

    /// `a (x) delta_g`
    pub fn single(g: Element, a: CMat) -> Self {
        Self::new([(g, a)])
    }

    pub fn terms(&self) -> &BTreeMap<Element, CMat> {
        &self.terms
    }

    pub fn get(&self, s: &Element) -> Option<&CMat> {
        self.terms.get(s)
    }

    pub fn support(&self) -> impl Iterator<Item = &Element> {
        self.terms.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `max c(s)` over the support.
    pub fn diameter(&self, group: &GroupModel) -> u32 {
        self.support().map(|s| group.word_length(s)).max().unwrap_or(0)
    }

    pub fn validate(&self, system: &CrossedSystem) -> Result<()> {
        let n = system.dim();
        for (s, a) in &self.terms {
            system.group.validate(s)?;
            if linalg::shape(a) != (n, n) {
                return Err(Error::InvalidCrossedElement(format!(
                    "value at {} has shape {:?}, expected {n}x{n}",
                    system.group.display(s),
                    linalg::shape(a)
                )));
            }
            let r = system.triple.span_residual(a);
            if r >= ELEMENT_SPAN_TOL {
                return Err(Error::InvalidCrossedElement(format!(
                    "value at {} is outside the algebra span (residual {r:.3e})",
                    system.group.display(s)
                )));
            }
        }
        Ok(())
    }

    /// `F*(t) = alpha_t(F(t^-1)*)` (the modular function is 1 for discrete groups).
    pub fn adjoint(&self, system: &CrossedSystem) -> Self {
        Self::new(self.terms.iter().map(|(s, a)| {
            let t = system.group.inverse(s);
            let value = system.action.apply(&t, &linalg::dagger(a));
            (t, value)
        }))
    }

    pub fn map_values(&self, mut f: impl FnMut(&Element, &CMat) -> Option<CMat>) -> Self {
        CrossedElement {
            terms: self
                .terms
                .iter()
                .filter_map(|(s, a)| f(s, a).map(|v| (s.clone(), v)))
                .collect(),
        }
    }
}

/// `P_R pi_hat(F) P_R`
#[derive(Clone, Debug)]
pub struct TruncatedRep {
    pub radius: u32,
    pub block: usize,
    pub matrix: CMat,
    /// Support elements that fell outside the window.
    pub outside_support: Vec<Element>,
}

/// Block `(t, t')` of the compression is `alpha_{t^-1}(F(t t'^-1))`.
pub fn represent(window: &Window, f: &CrossedElement) -> TruncatedRep {
    let group = window.group();
    let ball = window.ball();
    let n = window.block();
    let mut matrix = linalg::zeros(window.dim(), window.dim());
    for (ti, t) in ball.elements().iter().enumerate() {
        for (s, value) in f.terms() {
            let tp = group.left_divide(s, t);
            if let Some(tpi) = ball.position(&tp) {
                let blk = window.alpha_inv(ti, value);
                add_block(&mut matrix, n, ti, tpi, &blk);
            }
        }
    }
    let outside_support: Vec<Element> = f.support().filter(|s| !ball.contains(s)).cloned().collect();
    if !outside_support.is_empty() {
        log::warn!(
            "{} support element(s) of F lie outside B_{}",
            outside_support.len(),
            ball.radius()
        );
    }
    TruncatedRep {
        radius: ball.radius(),
        block: n,
        matrix,
        outside_support,
    }
}

pub(crate) fn add_block(m: &mut CMat, n: usize, bi: usize, bj: usize, blk: &CMat) {
    for j in 0..n {
        for i in 0..n {
            m[(bi * n + i, bj * n + j)] += blk[(i, j)];
        }
    }
}

#[cfg(test)]
pub(crate) fn get_block(m: &CMat, n: usize, bi: usize, bj: usize) -> CMat {
    m.submatrix(bi * n, bj * n, n, n).to_owned()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Truncated `D_hat` for the window: off-diagonal with entries
/// `D (x) 1 -+ i 1 (x) M_c`.
#[derive(Clone, Debug)]
pub struct DualOperator {
    radius: u32,
    dirac: CMat,
    dirac_eigenvalues: Vec<f64>,
    lengths: Vec<u32>,
}

impl DualOperator {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn block(&self) -> usize {
        self.dirac.nrows()
    }

    pub fn dim(&self) -> usize {
        self.block() * self.lengths.len()
    }

    pub fn dirac_eigenvalues(&self) -> &[f64] {
        &self.dirac_eigenvalues
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// Diagonal of `1 (x) M_c`: `c(t)` repeated `n` times per `t`.
    pub fn mc_diagonal(&self) -> Vec<f64> {
        let n = self.block();
        self.lengths
            .iter()
            .flat_map(|&c| std::iter::repeat(c as f64).take(n))
            .collect()
    }

    /// `D_hat_+ = D (x) 1 + i 1 (x) M_c` or `D_hat_- = D (x) 1 - i 1 (x) M_c`.
    pub fn signed(&self, sign: Sign) -> CMat {
        let n = self.block();
        let mut m = linalg::zeros(self.dim(), self.dim());
        for (ti, &c) in self.lengths.iter().enumerate() {
            for j in 0..n {
                for i in 0..n {
                    m[(ti * n + i, ti * n + j)] = self.dirac[(i, j)];
                }
                m[(ti * n + j, ti * n + j)] += c64::new(0.0, sign.factor() * c as f64);
            }
        }
        m
    }

    /// The Hermitian `2N x 2N` operator `[[0, D_hat_-], [D_hat_+, 0]]`.
    pub fn assemble(&self) -> CMat {
        off_diagonal(&self.signed(Sign::Minus), &self.signed(Sign::Plus))
    }
}

/// `[[0, upper], [lower, 0]]`
pub fn off_diagonal(upper: &CMat, lower: &CMat) -> CMat {
    let n = upper.nrows();
    let mut m = linalg::zeros(2 * n, 2 * n);
    m.as_mut().submatrix_mut(0, n, n, n).copy_from(upper);
    m.as_mut().submatrix_mut(n, 0, n, n).copy_from(lower);
    m
}

pub fn build_dual_operator(triple: &FiniteSpectralTriple, window: &Window) -> Result<DualOperator> {
    Ok(DualOperator {
        radius: window.radius(),
        dirac: triple.dirac().clone(),
        dirac_eigenvalues: triple.dirac_eigenvalues()?,
        lengths: window.ball().lengths().to_vec(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub radius: u32,
    pub dim: usize,
    /// Dense eigensolve of the assembled operator, ascending.
    pub computed: Vec<f64>,
    /// `{ +-sqrt(lambda_k^2 + c(t)^2) }`, ascending.
    pub predicted: Vec<f64>,
    pub max_mismatch: f64,
    pub multiplicities_ok: bool,
}

impl SpectrumReport {
    pub fn passes(&self) -> bool {
        self.max_mismatch <= SPECTRUM_TOL && self.multiplicities_ok
    }
}

pub fn dual_spectrum(dop: &DualOperator) -> Result<SpectrumReport> {
    let computed = linalg::hermitian_eigenvalues(&dop.assemble())?;
    let mut predicted = Vec::with_capacity(computed.len());
    for &lambda in dop.dirac_eigenvalues() {
        for &c in dop.lengths() {
            let r = (lambda * lambda + (c as f64) * (c as f64)).sqrt();
            predicted.push(r);
            predicted.push(-r);
        }
    }
    predicted.sort_by(f64::total_cmp);
    let max_mismatch = computed
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let multiplicities_ok = check_multiplicities(dop, &computed);
    Ok(SpectrumReport {
        radius: dop.radius(),
        dim: computed.len(),
        computed,
        predicted,
        max_mismatch,
        multiplicities_ok,
    })
}

/// Each `+-sqrt(lambda_k^2 + mu^2)` must occur at least
/// `dim E_k * #{t : c(t) = mu}` times.
fn check_multiplicities(dop: &DualOperator, computed: &[f64]) -> bool {
    let mut lambdas: Vec<(f64, usize)> = Vec::new();
    for &l in dop.dirac_eigenvalues() {
        match lambdas.last_mut() {
            Some((v, m)) if (l - *v).abs() <= SPECTRUM_TOL => *m += 1,
            _ => lambdas.push((l, 1)),
        }
    }
    let mut shells: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in dop.lengths() {
        *shells.entry(c).or_default() += 1;
    }
    lambdas.iter().all(|&(lambda, mult)| {
        shells.iter().all(|(&mu, &count)| {
            let r = (lambda * lambda + (mu as f64) * (mu as f64)).sqrt();
            let required = mult * count;
            [r, -r].iter().all(|&target| {
                computed.iter().filter(|&&x| (x - target).abs() <= SPECTRUM_TOL).count() >= required
            })
        })
    })
}

/// `[D (x) 1, F]` and `[1 (x) M_c, F]` on the window.
#[derive(Clone, Debug)]
pub struct DualCommutators {
    pub radius: u32,
    pub d_part: CMat,
    pub mc_part: CMat,
    /// Entrywise distance between the kernel formulas and the naive commutators.
    pub naive_mismatch: f64,
}

impl DualCommutators {
    /// `[D_hat_+-, F] = [D (x) 1, F] +- i [1 (x) M_c, F]`
    pub fn signed(&self, sign: Sign) -> CMat {
        &self.d_part + linalg::scaled(&self.mc_part, c64::new(0.0, sign.factor()))
    }

    /// `[D_hat, F (+) F]`
    pub fn assembled(&self) -> CMat {
        off_diagonal(&self.signed(Sign::Minus), &self.signed(Sign::Plus))
    }

    pub fn norm(&self, sign: Sign) -> Result<f64> {
        linalg::operator_norm(&self.signed(sign))
    }

    /// `||[D_hat, F (+) F]|| = max` over both signs.
    pub fn assembled_norm(&self) -> Result<f64> {
        Ok(self.norm(Sign::Plus)?.max(self.norm(Sign::Minus)?))
    }
}

/// Builds both commutators from the kernels
/// `([D (x) 1, F] xi)(t) = sum_s [D, alpha_{t^-1}(F(s))] xi(s^-1 t)` and
/// `([1 (x) M_c, F] xi)(t) = sum_s alpha_{t^-1}(F(s)) (c(t) - c(s^-1 t)) xi(s^-1 t)`,
/// then cross-checks them against the commutators of the compressed matrices.
pub fn commutator_with_dual(
    window: &Window,
    dop: &DualOperator,
    f: &CrossedElement,
) -> Result<DualCommutators> {
    window.check_support_inside(f, "commutator_with_dual")?;
    if dop.radius() != window.radius() || dop.block() != window.block() {
        return Err(Error::Precondition("dual operator and window disagree".into()));
    }
    let group = window.group();
    let ball = window.ball();
    let n = window.block();
    let dim = window.dim();
    let dirac = &dop.dirac;
    let mut d_part = linalg::zeros(dim, dim);
    let mut mc_part = linalg::zeros(dim, dim);
    for (ti, t) in ball.elements().iter().enumerate() {
        let ct = ball.length(ti) as f64;
        for (s, value) in f.terms() {
            let tp = group.left_divide(s, t);
            let Some(tpi) = ball.position(&tp) else {
                continue;
            };
            let x = window.alpha_inv(ti, value);
            add_block(&mut d_part, n, ti, tpi, &linalg::commutator(dirac, &x)?);
            let shift = ct - ball.length(tpi) as f64;
            add_block(&mut mc_part, n, ti, tpi, &linalg::scaled(&x, c64::new(shift, 0.0)));
        }
    }

    let rep = represent(window, f).matrix;
    let naive_d = block_diag_left(dirac, &rep) - block_diag_right(&rep, dirac);
    let mc = dop.mc_diagonal();
    let naive_mc = CMat::from_fn(dim, dim, |i, j| rep[(i, j)] * (mc[i] - mc[j]));
    let naive_mismatch = linalg::max_abs_diff(&d_part, &naive_d).max(linalg::max_abs_diff(&mc_part, &naive_mc));
    Ok(DualCommutators {
        radius: window.radius(),
        d_part,
        mc_part,
        naive_mismatch,
    })
}

/// `(D (x) 1) M` for a block-diagonal left factor.
fn block_diag_left(d: &CMat, m: &CMat) -> CMat {
    let n = d.nrows();
    let blocks = m.nrows() / n;
    let mut out = linalg::zeros(m.nrows(), m.ncols());
    for b in 0..blocks {
        let rows = d * m.submatrix(b * n, 0, n, m.ncols());
        out.as_mut().submatrix_mut(b * n, 0, n, m.ncols()).copy_from(&rows);
    }
    out
}

/// `M (D (x) 1)`
fn block_diag_right(m: &CMat, d: &CMat) -> CMat {
    let n = d.nrows();
    let blocks = m.ncols() / n;
    let mut out = linalg::zeros(m.nrows(), m.ncols());
    for b in 0..blocks {
        let cols = m.submatrix(0, b * n, m.nrows(), n) * d;
        out.as_mut().submatrix_mut(0, b * n, m.nrows(), n).copy_from(&cols);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        BoundCheck {
            name,
            lhs,
            rhs,
            slack,
            pass: slack >= -BOUND_SLACK_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub radius: u32,
    /// `max_{t in B_R} ||[D, alpha_{t^-1}(a)]||`
    pub window_sup: f64,
    pub f_l1: f64,
    /// `sum_s m_s |f(s)|` with windowed `m_s`.
    pub mf_l1: f64,
    /// Same with the analytic `m_s = c(s)`.
    pub mf_l1_analytic: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks the commutator bounds for `F = a (x) f` at the window's truncation:
/// `||[D (x) 1, F]|| <= sup_t ||[D, alpha_{t^-1}(a)]|| ||f||_1`,
/// `||[1 (x) M_c, F]|| <= ||a|| ||m f||_1` (windowed `m_s`, and again with
/// `m_s = c(s)`) and `||[1 (x) M_c, F]|| <= ||a|| ||f||_1 max_{s in supp f} m_s`.
pub fn verify_bounds(
    window: &Window,
    dop: &DualOperator,
    triple: &FiniteSpectralTriple,
    a: &CMat,
    f: &[(Element, c64)],
) -> Result<BoundsReport> {
    let group = window.group();
    let ball = window.ball();
    let elem = CrossedElement::elementary(a, f);
    let comm = commutator_with_dual(window, dop, &elem)?;

    let window_sup = (0..ball.len())
        .map(|ti| linalg::operator_norm(&linalg::commutator(triple.dirac(), &window.alpha_inv(ti, a))?))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let a_norm = linalg::operator_norm(a)?;
    let f_l1: f64 = f.iter().map(|(_, z)| z.norm()).sum();
    let mut mf_l1 = 0.0;
    let mut mf_l1_analytic = 0.0;
    let mut max_m = 0.0f64;
    for (s, z) in f {
        if z.norm() == 0.0 {
            continue;
        }
        let disp = group.displacement(s, ball);
        mf_l1 += disp.window_max as f64 * z.norm();
        mf_l1_analytic += disp.bound as f64 * z.norm();
        max_m = max_m.max(disp.window_max as f64);
    }
    let lhs_d = linalg::operator_norm(&comm.d_part)?;
    let lhs_mc = linalg::operator_norm(&comm.mc_part)?;
    let mut checks = vec![
        BoundCheck::new("d_commutator_le_sup_times_l1", lhs_d, window_sup * f_l1),
        BoundCheck::new("mc_commutator_le_mf_l1", lhs_mc, a_norm * mf_l1),
        BoundCheck::new("mc_commutator_le_l1_times_max_m", lhs_mc, a_norm * f_l1 * max_m),
        BoundCheck::new("mc_commutator_le_mf_l1_word_length", lhs_mc, a_norm * mf_l1_analytic),
    ];
    for sign in Sign::BOTH {
        let name = match sign {
            Sign::Plus => "dual_plus_le_sum_of_bounds",
            Sign::Minus => "dual_minus_le_sum_of_bounds",
        };
        checks.push(BoundCheck::new(
            name,
            comm.norm(sign)?,
            window_sup * f_l1 + a_norm * mf_l1,
        ));
    }
    Ok(BoundsReport {
        radius: window.radius(),
        window_sup,
        f_l1,
        mf_l1,
        mf_l1_analytic,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompressionProfile {
    pub radii: Vec<u32>,
    /// `||P_R [D_hat, F (+) F] P_R||`
    pub norms: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub monotone: bool,
    pub last_increment: f64,
}

pub fn compression_profile(
    system: &CrossedSystem,
    f: &CrossedElement,
    radii: &[u32],
    cap: usize,
) -> Result<CompressionProfile> {
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("radii must be strictly increasing".into()));
    }
    let mut plus = Vec::with_capacity(radii.len());
    let mut minus = Vec::with_capacity(radii.len());
    for &r in radii {
        let window = system.window(r, cap)?;
        let dop = build_dual_operator(&system.triple, &window)?;
        let comm = commutator_with_dual(&window, &dop, f)?;
        plus.push(comm.norm(Sign::Plus)?);
        minus.push(comm.norm(Sign::Minus)?);
    }
    let norms: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| p.max(*m)).collect();
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL);
    let monotone = nondecreasing(&norms) && nondecreasing(&plus) && nondecreasing(&minus);
    let last_increment = match norms.len() {
        0 | 1 => 0.0,
        k => norms[k - 1] - norms[k - 2],
    };
    Ok(CompressionProfile {
        radii: radii.to_vec(),
        norms,
        plus,
        minus,
        monotone,
        last_increment,
    })
}
