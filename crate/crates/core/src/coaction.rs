//! Positive-definite functions on `G`, the action `beta_phi`, slice maps and the
//! unitary `W` implementing the dual coaction.

use std::collections::{BTreeMap, HashMap};

use faer::c64;
use serde::Serialize;

use crate::crossed::{
    build_dual_operator, commutator_with_dual, represent, CrossedElement, CrossedSystem, DualOperator,
    Sign, Window,
};
use crate::error::{Error, Result};
use crate::group::{Ball, Element, GroupModel};
use crate::linalg::{self, CMat};

pub const STATE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const CONTRACTIVE_TOL: f64 = 1e-9;
pub const ISOMETRY_NORM_TOL: f64 = 1e-9;
pub const CONJUGATION_TOL: f64 = 1e-10;
pub const COACTION_TOL: f64 = 1e-10;
pub const SLICE_TOL: f64 = 1e-9;
pub const AFFINE_TOL: f64 = 1e-10;

pub const SCHUR_MECHANISM: &str = "on B_R the compressed beta_phi is the Schur multiplier by \
K(t,t') = phi(t t'^-1); K is positive semidefinite with unit diagonal, hence contractive at every truncation";

/// A state on `C*_r(G)` seen as a normalized positive-definite function.
#[derive(Clone, Debug, PartialEq)]
pub enum PositiveDefiniteState {
    /// `chi(g) = exp(i sum_j theta_j g_j)`, abelian groups only.
    Character { angles: Vec<f64> },
    /// `phi(s) = <lambda_s xi, xi>` for a unit vector `xi` of finite support.
    Vector { xi: BTreeMap<Element, c64> },
    Mixture {
        weights: Vec<f64>,
        members: Vec<PositiveDefiniteState>,
    },
    /// Pointwise product; positive definite by the Schur product theorem.
    Product { factors: Vec<PositiveDefiniteState> },
}

impl PositiveDefiniteState {
    pub fn character(group: &GroupModel, angles: Vec<f64>) -> Result<Self> {
        if !group.is_abelian() {
            return Err(Error::NonAbelian(group.family_name()));
        }
        if angles.len() != group.rank() {
            return Err(Error::InvalidState(format!(
                "character needs {} angles, got {}",
                group.rank(),
                angles.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidState("non-finite character angle".into()));
        }
        Ok(PositiveDefiniteState::Character { angles })
    }

    /// Requires `sum |xi(t)|^2 = 1` within `STATE_TOL`.
    pub fn vector(group: &GroupModel, support: Vec<(Element, c64)>) -> Result<Self> {
        let mut xi: BTreeMap<Element, c64> = BTreeMap::new();
        for (g, z) in support {
            group.validate(&g)?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidState("non-finite vector coefficient".into()));
            }
            *xi.entry(g).or_default() += z;
        }
        xi.retain(|_, z| *z != c64::new(0.0, 0.0));
        let norm2: f64 = xi.values().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "vector state needs a unit vector, |xi|^2 = {norm2}"
            )));
        }
        Ok(PositiveDefiniteState::Vector { xi })
    }

    /// Like [`Self::vector`] but rescales `xi` to unit length first.
    pub fn vector_normalized(group: &GroupModel, support: Vec<(Element, c64)>) -> Result<Self> {
        let norm = support.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("vector state from a zero vector".into()));
        }
        Self::vector(group, support.into_iter().map(|(g, z)| (g, z / norm)).collect())
    }

    /// The state of `xi = delta_e`, i.e. the canonical trace.
    pub fn trace(group: &GroupModel) -> Self {
        let mut xi = BTreeMap::new();
        xi.insert(group.identity(), c64::new(1.0, 0.0));
        PositiveDefiniteState::Vector { xi }
    }

    pub fn mixture(weights: Vec<f64>, members: Vec<PositiveDefiniteState>) -> Result<Self> {
        if weights.is_empty() || weights.len() != members.len() {
            return Err(Error::InvalidState(format!(
                "mixture with {} weights and {} members",
                weights.len(),
                members.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidState("mixture weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("mixture weights sum to {total}")));
        }
        Ok(PositiveDefiniteState::Mixture { weights, members })
    }

    pub fn product(factors: Vec<PositiveDefiniteState>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidState("empty product".into()));
        }
        Ok(PositiveDefiniteState::Product { factors })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PositiveDefiniteState::Character { .. } => "character",
            PositiveDefiniteState::Vector { .. } => "vector",
            PositiveDefiniteState::Mixture { .. } => "mixture",
            PositiveDefiniteState::Product { .. } => "product",
        }
    }

    /// `phi(s)`
    pub fn eval(&self, group: &GroupModel, s: &Element) -> Result<c64> {
        match self {
            PositiveDefiniteState::Character { angles } => {
                if !group.is_abelian() {
                    return Err(Error::NonAbelian(group.family_name()));
                }
                if angles.len() != s.0.len() {
                    return Err(Error::InvalidState("character rank mismatch".into()));
                }
                let phase: f64 = angles.iter().zip(&s.0).map(|(a, &g)| a * g as f64).sum();
                Ok(c64::from_polar(1.0, phase))
            }
            PositiveDefiniteState::Vector { xi } => {
                let mut acc = c64::new(0.0, 0.0);
                for (t, xt) in xi {
                    if let Some(x) = xi.get(&group.left_divide(s, t)) {
                        acc += x * xt.conj();
                    }
                }
                Ok(acc)
            }
            PositiveDefiniteState::Mixture { weights, members } => {
                let mut acc = c64::new(0.0, 0.0);
                for (w, m) in weights.iter().zip(members) {
                    acc += m.eval(group, s)? * *w;
                }
                Ok(acc)
            }
            PositiveDefiniteState::Product { factors } => {
                let mut acc = c64::new(1.0, 0.0);
                for f in factors {
                    acc *= f.eval(group, s)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Memoizes `phi` over group elements.
struct StateCache<'a> {
    group: &'a GroupModel,
    state: &'a PositiveDefiniteState,
    values: HashMap<Element, c64>,
}

impl<'a> StateCache<'a> {
    fn new(group: &'a GroupModel, state: &'a PositiveDefiniteState) -> Self {
        StateCache {
            group,
            state,
            values: HashMap::new(),
        }
    }

    fn get(&mut self, s: &Element) -> Result<c64> {
        if let Some(v) = self.values.get(s) {
            return Ok(*v);
        }
        let v = self.state.eval(self.group, s)?;
        self.values.insert(s.clone(), v);
        Ok(v)
    }
}

/// `(beta_phi F)(s) = phi(s) F(s)`; terms where `phi(s) = 0` are dropped.
pub fn beta(group: &GroupModel, phi: &PositiveDefiniteState, f: &CrossedElement) -> Result<CrossedElement> {
    let mut values = BTreeMap::new();
    for s in f.support() {
        values.insert(s.clone(), phi.eval(group, s)?);
    }
    Ok(f.map_values(|s, a| {
        let z = values[s];
        (z != c64::new(0.0, 0.0)).then(|| linalg::scaled(a, z))
    }))
}

#[derive(Clone, Debug)]
pub struct SchurKernel {
    pub radius: u32,
    /// `K(t, t') = phi(t t'^-1)` over `B_R`.
    pub matrix: CMat,
    pub min_eigenvalue: f64,
    /// `max_t |K(t, t) - 1|`
    pub diagonal_defect: f64,
}

impl SchurKernel {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL
    }
}

pub fn schur_kernel(group: &GroupModel, phi: &PositiveDefiniteState, ball: &Ball) -> Result<SchurKernel> {
    let matrix = kernel_matrix(group, phi, ball)?;
    let min_eigenvalue = linalg::hermitian_eigenvalues(&matrix)?.first().copied().unwrap_or(0.0);
    let diagonal_defect = (0..ball.len())
        .map(|i| (matrix[(i, i)] - c64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(SchurKernel {
        radius: ball.radius(),
        matrix,
        min_eigenvalue,
        diagonal_defect,
    })
}

fn kernel_matrix(group: &GroupModel, phi: &PositiveDefiniteState, ball: &Ball) -> Result<CMat> {
    let mut cache = StateCache::new(group, phi);
    let m = ball.len();
    let inverses: Vec<Element> = ball.elements().iter().map(|t| group.inverse(t)).collect();
    let mut k = linalg::zeros(m, m);
    for (i, t) in ball.elements().iter().enumerate() {
        for (j, tpinv) in inverses.iter().enumerate() {
            k[(i, j)] = cache.get(&group.multiply(t, tpinv))?;
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, Serialize)]
pub struct SignedComparison {
    pub sign: Sign,
    /// `||[D_hat_+-, beta_phi F]||_R`
    pub lhs: f64,
    /// `||[D_hat_+-, F]||_R`
    pub rhs: f64,
    pub slack: f64,
    pub ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractivityReport {
    pub radius: u32,
    pub state_kind: &'static str,
    pub rows: Vec<SignedComparison>,
    pub psd_min_eigenvalue: f64,
    pub diagonal_defect: f64,
    /// Distance between `[D_hat_+-, beta_phi F]_R` and `K o [D_hat_+-, F]_R`.
    pub schur_mismatch: f64,
    pub mechanism: &'static str,
}

impl ContractivityReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn ensure_inside(window: &Window, f: &CrossedElement) -> Result<()> {
    match f.support().find(|s| !window.ball().contains(s)) {
        Some(s) => Err(Error::Precondition(format!(
            "support element {} is outside B_{}",
            window.group().display(s),
            window.radius()
        ))),
        None => Ok(()),
    }
}

/// Compares `||[D_hat_+-, beta_phi F]||` with `||[D_hat_+-, F]||` on the window.
pub fn verify_contractive(
    window: &Window,
    dop: &DualOperator,
    f: &CrossedElement,
    phi: &PositiveDefiniteState,
) -> Result<ContractivityReport> {
    ensure_inside(window, f)?;
    let group = window.group();
    let bf = beta(&group, phi, f)?;
    let base = commutator_with_dual(window, dop, f)?;
    let moved = commutator_with_dual(window, dop, &bf)?;
    let kernel = schur_kernel(&group, phi, window.ball())?;
    let n = window.block();

    let mut rows = Vec::with_capacity(2);
    let mut schur_mismatch = 0.0f64;
    for sign in Sign::BOTH {
        let c = base.signed(sign);
        let cb = moved.signed(sign);
        let multiplied = CMat::from_fn(c.nrows(), c.ncols(), |i, j| kernel.matrix[(i / n, j / n)] * c[(i, j)]);
        schur_mismatch = schur_mismatch.max(linalg::max_abs_diff(&multiplied, &cb));
        let lhs = linalg::operator_norm(&cb)?;
        let rhs = linalg::operator_norm(&c)?;
        let slack = rhs - lhs;
        rows.push(SignedComparison {
            sign,
            lhs,
            rhs,
            slack,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            pass: slack >= -CONTRACTIVE_TOL,
        });
    }
    Ok(ContractivityReport {
        radius: window.radius(),
        state_kind: phi.kind(),
        rows,
        psd_min_eigenvalue: kernel.min_eigenvalue,
        diagonal_defect: kernel.diagonal_defect,
        schur_mismatch,
        mechanism: SCHUR_MECHANISM,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryReport {
    pub radius: u32,
    pub rows: Vec<SignedComparison>,
    /// `represent(beta_chi F)` against `(1 (x) M_chi) represent(F) (1 (x) M_chi)^-1`.
    pub conjugation_mismatch: f64,
}

impl IsometryReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.conjugation_mismatch <= CONJUGATION_TOL
    }
}

pub fn verify_isometric_abelian(
    window: &Window,
    dop: &DualOperator,
    f: &CrossedElement,
    chi: &PositiveDefiniteState,
) -> Result<IsometryReport> {
    let group = window.group();
    if !group.is_abelian() {
        return Err(Error::NonAbelian(group.family_name()));
    }
    if !matches!(chi, PositiveDefiniteState::Character { .. }) {
        return Err(Error::InvalidState(format!("expected a character, got a {} state", chi.kind())));
    }
    ensure_inside(window, f)?;
    let bf = beta(&group, chi, f)?;
    let base = commutator_with_dual(window, dop, f)?;
    let moved = commutator_with_dual(window, dop, &bf)?;
    let mut rows = Vec::with_capacity(2);
    for sign in Sign::BOTH {
        let lhs = moved.norm(sign)?;
        let rhs = base.norm(sign)?;
        rows.push(SignedComparison {
            sign,
            lhs,
            rhs,
            slack: rhs - lhs,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            pass: (rhs - lhs).abs() <= ISOMETRY_NORM_TOL,
        });
    }

    let n = window.block();
    let chis: Vec<c64> = window
        .ball()
        .elements()
        .iter()
        .map(|t| chi.eval(&group, t))
        .collect::<Result<_>>()?;
    let m_chi = CMat::from_fn(window.dim(), window.dim(), |i, j| {
        if i == j {
            chis[i / n]
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let rep = represent(window, f).matrix;
    let conjugated = &m_chi * &rep * m_chi.adjoint();
    let rep_beta = represent(window, &bf).matrix;
    Ok(IsometryReport {
        radius: window.radius(),
        rows,
        conjugation_mismatch: linalg::max_abs_diff(&rep_beta, &conjugated),
    })
}

fn check_inner_window(window: &Window, f: &CrossedElement, inner: u32) -> Result<()> {
    let r = window.radius();
    let diam = f.diameter(&window.group());
    if inner + diam > r || 2 * inner > r {
        return Err(Error::Precondition(format!(
            "window too small: need R_inner + diam(supp F) <= R and 2 R_inner <= R, got R = {r}, R_inner = {inner}, diam = {diam}"
        )));
    }
    Ok(())
}

/// Index tables for the unitary `W` on `l^2(B_R) (x) l^2(B_R)`:
/// `(W zeta)(s, t) = zeta(s, s^-1 t)`, dropped when `s^-1 t` leaves `B_R`.
struct ShiftTables {
    /// `pos(v^-1 t)` for `v` in the inner ball and every `t` in `B_R`.
    source: Vec<Vec<Option<usize>>>,
}

impl ShiftTables {
    fn new(group: &GroupModel, ball: &Ball, inner_len: usize) -> Self {
        let source = ball.elements()[..inner_len]
            .iter()
            .map(|v| {
                ball.elements()
                    .iter()
                    .map(|t| ball.position(&group.left_divide(v, t)))
                    .collect()
            })
            .collect();
        ShiftTables { source }
    }

    /// Whether row `(v, t)` and column `(v', t')` of `W (X (x) 1) W*` meet.
    fn linked(&self, v: usize, t: usize, vp: usize, tp: usize) -> bool {
        let a = self.source[v][t];
        a.is_some() && a == self.source[vp][tp]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoactionReport {
    pub radius: u32,
    pub inner_radius: u32,
    /// Entrywise distance between `W (pi_hat(F) (x) 1) W*` and
    /// `sum_s pi_hat(F(s)) lambda~_s (x) lambda_s` on the inner window.
    pub max_mismatch: f64,
    pub nonzero_blocks: usize,
    pub compared_blocks: usize,
}

impl CoactionReport {
    pub fn passes(&self) -> bool {
        self.max_mismatch <= COACTION_TOL
    }
}

pub fn coaction_via_w(window: &Window, f: &CrossedElement, inner: u32) -> Result<CoactionReport> {
    check_inner_window(window, f, inner)?;
    let group = window.group();
    let ball = window.ball();
    let n = window.block();
    let m = ball.prefix_len(inner);
    let tables = ShiftTables::new(&group, ball, m);
    let rep = represent(window, f).matrix;

    // Right-hand side ingredients: s = v v'^-1 and alpha_{v^-1}(F(s)).
    let support: Vec<(&Element, &CMat)> = f.terms().iter().collect();
    let support_of: HashMap<usize, usize> = support
        .iter()
        .enumerate()
        .filter_map(|(k, (s, _))| ball.position(s).map(|p| (p, k)))
        .collect();
    let quotient: Vec<Vec<Option<usize>>> = (0..m)
        .map(|v| {
            (0..m)
                .map(|vp| {
                    let s = group.multiply(ball.element(v), &group.inverse(ball.element(vp)));
                    ball.position(&s).and_then(|p| support_of.get(&p).copied())
                })
                .collect()
        })
        .collect();
    let shifted: Vec<Vec<Option<usize>>> = support
        .iter()
        .map(|(s, _)| {
            (0..m)
                .map(|t| ball.position(&group.left_divide(s, ball.element(t))).filter(|&p| p < m))
                .collect()
        })
        .collect();
    let twisted: Vec<Vec<CMat>> = (0..m)
        .map(|v| support.iter().map(|(_, a)| window.alpha_inv(v, a)).collect())
        .collect();

    let mut max_mismatch = 0.0f64;
    let mut nonzero_blocks = 0;
    let mut compared_blocks = 0;
    for v in 0..m {
        for vp in 0..m {
            let rhs_term = quotient[v][vp];
            for t in 0..m {
                for tp in 0..m {
                    compared_blocks += 1;
                    let lhs_on = tables.linked(v, t, vp, tp);
                    let rhs_block = rhs_term.filter(|&k| shifted[k][t] == Some(tp)).map(|k| &twisted[v][k]);
                    let mut lhs_nonzero = false;
                    for j in 0..n {
                        for i in 0..n {
                            let l = if lhs_on { rep[(v * n + i, vp * n + j)] } else { c64::new(0.0, 0.0) };
                            let r = rhs_block.map_or(c64::new(0.0, 0.0), |b| b[(i, j)]);
                            lhs_nonzero |= l != c64::new(0.0, 0.0);
                            max_mismatch = max_mismatch.max((l - r).norm());
                        }
                    }
                    nonzero_blocks += usize::from(lhs_nonzero);
                }
            }
        }
    }
    Ok(CoactionReport {
        radius: window.radius(),
        inner_radius: inner,
        max_mismatch,
        nonzero_blocks,
        compared_blocks,
    })
}

/// An operator on `K (x) l^2(G)` given by nonzero blocks `T_{t,t'}` acting on `K`.
#[derive(Clone, Debug)]
pub struct GroupBlocks {
    pub k_dim: usize,
    pub blocks: Vec<(Element, Element, CMat)>,
}

#[derive(Clone, Debug)]
pub struct SliceResult {
    pub operator: CMat,
    /// Largest disagreement between blocks `T_{t,t'}` sharing `s = t t'^-1`.
    pub translation_defect: f64,
    pub terms: usize,
}

impl SliceResult {
    pub fn structured(&self) -> bool {
        self.translation_defect == 0.0
    }
}

/// `S_phi(sum_s T_s (x) lambda_s) = sum_s phi(s) T_s`, reading `T_s` off the
/// first block with `t t'^-1 = s`.
pub fn slice(group: &GroupModel, phi: &PositiveDefiniteState, t: &GroupBlocks) -> Result<SliceResult> {
    let mut by_s: BTreeMap<Element, &CMat> = BTreeMap::new();
    let mut translation_defect = 0.0f64;
    for (row, col, blk) in &t.blocks {
        if linalg::shape(blk) != (t.k_dim, t.k_dim) {
            return Err(Error::ShapeMismatch {
                context: "slice block",
                left: (t.k_dim, t.k_dim),
                right: linalg::shape(blk),
            });
        }
        let s = group.multiply(row, &group.inverse(col));
        match by_s.get(&s) {
            Some(first) => translation_defect = translation_defect.max(linalg::max_abs_diff(first, blk)),
            None => {
                by_s.insert(s, blk);
            }
        }
    }
    if translation_defect > 0.0 {
        log::warn!("slice input is not translation structured (defect {translation_defect:.3e})");
    }
    let mut operator = linalg::zeros(t.k_dim, t.k_dim);
    for (s, blk) in &by_s {
        operator += linalg::scaled(blk, phi.eval(group, s)?);
    }
    Ok(SliceResult {
        operator,
        translation_defect,
        terms: by_s.len(),
    })
}

/// Blocks of `W (C (x) 1) W*` for `C` on the window, restricted to the inner
/// window in the first factor, for second-factor rows `t` in `anchors`.
pub fn coaction_blocks(window: &Window, c: &CMat, inner: u32, anchors: &[usize]) -> GroupBlocks {
    let group = window.group();
    let ball = window.ball();
    let n = window.block();
    let m = ball.prefix_len(inner);
    let tables = ShiftTables::new(&group, ball, m);
    let mut blocks = Vec::new();
    for &t in anchors {
        for tp in 0..ball.len() {
            let mut blk = linalg::zeros(n * m, n * m);
            let mut any = false;
            for v in 0..m {
                for vp in 0..m {
                    if !tables.linked(v, t, vp, tp) {
                        continue;
                    }
                    for j in 0..n {
                        for i in 0..n {
                            let z = c[(v * n + i, vp * n + j)];
                            blk[(v * n + i, vp * n + j)] = z;
                            any |= z != c64::new(0.0, 0.0);
                        }
                    }
                }
            }
            if any {
                blocks.push((ball.element(t).clone(), ball.element(tp).clone(), blk));
            }
        }
    }
    GroupBlocks { k_dim: n * m, blocks }
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceMechanismRow {
    pub sign: Sign,
    /// `slice(phi, delta([D_hat_+-, F]))` against `[D_hat_+-, beta_phi F]` on the inner window.
    pub mismatch: f64,
    pub translation_defect: f64,
    pub slice_norm: f64,
    pub source_norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceMechanismReport {
    pub radius: u32,
    pub inner_radius: u32,
    pub rows: Vec<SliceMechanismRow>,
}

impl SliceMechanismReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn verify_slice_mechanism(
    window: &Window,
    dop: &DualOperator,
    f: &CrossedElement,
    phi: &PositiveDefiniteState,
    inner: u32,
) -> Result<SliceMechanismReport> {
    check_inner_window(window, f, inner)?;
    let group = window.group();
    let n = window.block();
    let k = n * window.ball().prefix_len(inner);
    // e together with the generators
    let anchors: Vec<usize> = (0..window.ball().prefix_len(1)).collect();
    let base = commutator_with_dual(window, dop, f)?;
    let moved = commutator_with_dual(window, dop, &beta(&group, phi, f)?)?;
    let mut rows = Vec::with_capacity(2);
    for sign in Sign::BOTH {
        let c = base.signed(sign);
        let sliced = slice(&group, phi, &coaction_blocks(window, &c, inner, &anchors))?;
        let target = moved.signed(sign).submatrix(0, 0, k, k).to_owned();
        let mismatch = linalg::max_abs_diff(&sliced.operator, &target);
        let slice_norm = linalg::operator_norm(&sliced.operator)?;
        let source_norm = linalg::operator_norm(&c.submatrix(0, 0, k, k).to_owned())?;
        rows.push(SliceMechanismRow {
            sign,
            mismatch,
            translation_defect: sliced.translation_defect,
            slice_norm,
            source_norm,
            pass: mismatch <= SLICE_TOL && slice_norm <= source_norm + SLICE_TOL,
        });
    }
    Ok(SliceMechanismReport {
        radius: window.radius(),
        inner_radius: inner,
        rows,
    })
}

/// `max_lambda ||C(lambda) - ((1 - lambda) C(0) + lambda C(1))||` for
/// `C(lambda) = [D_hat_+-, beta_{phi_lambda} F]` along the segment of mixtures.
pub fn mixture_affinity_defect(
    window: &Window,
    dop: &DualOperator,
    f: &CrossedElement,
    phi0: &PositiveDefiniteState,
    phi1: &PositiveDefiniteState,
    lambdas: &[f64],
) -> Result<f64> {
    let group = window.group();
    let at = |phi: &PositiveDefiniteState| commutator_with_dual(window, dop, &beta(&group, phi, f)?);
    let c0 = at(phi0)?;
    let c1 = at(phi1)?;
    let mut worst = 0.0f64;
    for &l in lambdas {
        let mix = PositiveDefiniteState::mixture(vec![1.0 - l, l], vec![phi0.clone(), phi1.clone()])?;
        let cl = at(&mix)?;
        for sign in Sign::BOTH {
            let affine = linalg::scaled(&c0.signed(sign), c64::new(1.0 - l, 0.0))
                + linalg::scaled(&c1.signed(sign), c64::new(l, 0.0));
            worst = worst.max(linalg::operator_norm(&(cl.signed(sign) - affine))?);
        }
    }
    Ok(worst)
}

/// Convenience for callers holding only a system: the window and dual
/// operator for radius `r`.
pub fn window_and_dual(system: &CrossedSystem, r: u32, cap: usize) -> Result<(Window, DualOperator)> {
    let window = system.window(r, cap)?;
    let dop = build_dual_operator(&system.triple, &window)?;
    Ok((window, dop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::UnitaryAction;
    use crate::crossed::DEFAULT_DIM_CAP;
    use crate::linalg::{from_real_diag, from_real_rows, identity, max_abs_diff};
    use crate::triple::FiniteSpectralTriple;
    use std::f64::consts::PI;

    fn one() -> c64 {
        c64::new(1.0, 0.0)
    }

    fn z(k: i32) -> Element {
        Element(vec![k])
    }

    fn two_point_system() -> CrossedSystem {
        let g = GroupModel::integers();
        CrossedSystem::new(
            g,
            FiniteSpectralTriple::two_point(1.0).unwrap(),
            UnitaryAction::new(g, vec![from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap(),
        )
        .unwrap()
    }

    fn scalar_system(g: GroupModel) -> CrossedSystem {
        CrossedSystem::new(g, FiniteSpectralTriple::scalar().unwrap(), UnitaryAction::trivial(g, 1)).unwrap()
    }

    fn sample_f() -> CrossedElement {
        CrossedElement::new([
            (z(0), from_real_diag(&[0.5, -1.0])),
            (z(1), from_real_diag(&[1.0, 0.25])),
            (z(-2), from_real_diag(&[0.0, 2.0])),
        ])
    }

    #[test]
    fn eval_examples() {
        let g = GroupModel::integers();
        let tr = PositiveDefiniteState::trace(&g);
        assert_eq!(tr.eval(&g, &z(0)).unwrap(), one());
        assert_eq!(tr.eval(&g, &z(3)).unwrap(), c64::new(0.0, 0.0));

        let theta = 0.7;
        let chi = PositiveDefiniteState::character(&g, vec![theta]).unwrap();
        let v = chi.eval(&g, &z(3)).unwrap();
        assert!((v - c64::from_polar(1.0, 3.0 * theta)).norm() < 1e-15);

        let f2 = GroupModel::free(2).unwrap();
        let a = f2.parse_word("a").unwrap();
        let r = 0.5f64.sqrt();
        let xi = PositiveDefiniteState::vector(&f2, vec![(f2.identity(), c64::new(r, 0.0)), (a.clone(), c64::new(r, 0.0))]).unwrap();
        assert!((xi.eval(&f2, &a).unwrap() - c64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((xi.eval(&f2, &f2.identity()).unwrap() - one()).norm() < 1e-15);
    }

    #[test]
    fn character_on_free_group_is_rejected() {
        let f2 = GroupModel::free(2).unwrap();
        assert!(matches!(PositiveDefiniteState::character(&f2, vec![0.1, 0.2]), Err(Error::NonAbelian(_))));
        let g = GroupModel::integers();
        let chi = PositiveDefiniteState::character(&g, vec![0.1]).unwrap();
        assert!(matches!(chi.eval(&f2, &f2.identity()), Err(Error::NonAbelian(_))));
    }

    #[test]
    fn invalid_states() {
        let g = GroupModel::integers();
        assert!(PositiveDefiniteState::vector(&g, vec![(z(0), c64::new(2.0, 0.0))]).is_err());
        assert!(PositiveDefiniteState::vector_normalized(&g, vec![]).is_err());
        let tr = PositiveDefiniteState::trace(&g);
        assert!(PositiveDefiniteState::mixture(vec![0.5, 0.6], vec![tr.clone(), tr.clone()]).is_err());
        assert!(PositiveDefiniteState::mixture(vec![1.5, -0.5], vec![tr.clone(), tr]).is_err());
    }

    #[test]
    fn beta_examples() {
        let g = GroupModel::integers();
        let f = sample_f();
        let trivial = PositiveDefiniteState::character(&g, vec![0.0]).unwrap();
        assert_eq!(beta(&g, &trivial, &f).unwrap(), f);
        let tr = PositiveDefiniteState::trace(&g);
        let killed = beta(&g, &tr, &f).unwrap();
        assert_eq!(killed, CrossedElement::single(z(0), from_real_diag(&[0.5, -1.0])));
    }

    #[test]
    fn semigroup_law_is_exact_for_dyadic_values() {
        let g = GroupModel::integers();
        let f = sample_f();
        let phi = PositiveDefiniteState::character(&g, vec![PI]).unwrap();
        let psi = PositiveDefiniteState::vector_normalized(&g, vec![(z(0), one()), (z(1), one())]).unwrap();
        let product = PositiveDefiniteState::product(vec![phi.clone(), psi.clone()]).unwrap();
        let twice = beta(&g, &phi, &beta(&g, &psi, &f).unwrap()).unwrap();
        let once = beta(&g, &product, &f).unwrap();
        assert_eq!(twice.terms().keys().collect::<Vec<_>>(), once.terms().keys().collect::<Vec<_>>());
        for (s, a) in once.terms() {
            assert!(max_abs_diff(a, twice.get(s).unwrap()) <= 1e-15);
        }
    }

    #[test]
    fn kernel_examples() {
        let g = GroupModel::integers();
        let ball = g.ball(3, 100).unwrap();
        let tr = schur_kernel(&g, &PositiveDefiniteState::trace(&g), &ball).unwrap();
        assert_eq!(max_abs_diff(&tr.matrix, &identity(ball.len())), 0.0);

        let chi = schur_kernel(&g, &PositiveDefiniteState::character(&g, vec![1.1]).unwrap(), &ball).unwrap();
        let eig = linalg::hermitian_eigenvalues(&chi.matrix).unwrap();
        assert!((eig.last().unwrap() - ball.len() as f64).abs() < 1e-12);
        assert!(eig[..eig.len() - 1].iter().all(|e| e.abs() < 1e-12));
        assert!(chi.is_psd());

        let f2 = GroupModel::free(2).unwrap();
        let a = f2.parse_word("a").unwrap();
        let xi = PositiveDefiniteState::vector_normalized(&f2, vec![(f2.identity(), one()), (a, one())]).unwrap();
        let k = schur_kernel(&f2, &xi, &f2.ball(1, 100).unwrap()).unwrap();
        assert!(k.is_psd());
        assert!(k.diagonal_defect < 1e-15);
    }

    #[test]
    fn contractive_examples() {
        let sys = two_point_system();
        let (w, dop) = window_and_dual(&sys, 3, DEFAULT_DIM_CAP).unwrap();
        let f = sample_f();
        let tr = verify_contractive(&w, &dop, &f, &PositiveDefiniteState::trace(&sys.group)).unwrap();
        assert!(tr.passes());
        assert!(tr.schur_mismatch < 1e-14);

        let trivial = PositiveDefiniteState::character(&sys.group, vec![0.0]).unwrap();
        let rep = verify_contractive(&w, &dop, &f, &trivial).unwrap();
        for row in &rep.rows {
            assert_eq!(row.lhs, row.rhs);
        }

        let vec_state = PositiveDefiniteState::vector_normalized(
            &sys.group,
            vec![(z(0), c64::new(1.0, 0.5)), (z(1), c64::new(-0.3, 0.2)), (z(3), c64::new(0.1, -1.0))],
        )
        .unwrap();
        let rep = verify_contractive(&w, &dop, &f, &vec_state).unwrap();
        assert!(rep.passes());
        assert!(rep.psd_min_eigenvalue >= -PSD_TOL);
        assert!(rep.schur_mismatch < 1e-13);
    }

    #[test]
    fn contractive_needs_support_inside() {
        let sys = two_point_system();
        let (w, dop) = window_and_dual(&sys, 1, DEFAULT_DIM_CAP).unwrap();
        let err = verify_contractive(&w, &dop, &sample_f(), &PositiveDefiniteState::trace(&sys.group));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn abelian_isometry_examples() {
        let sys = two_point_system();
        let (w, dop) = window_and_dual(&sys, 4, DEFAULT_DIM_CAP).unwrap();
        let a = from_real_diag(&[1.0, -0.5]);
        let f = CrossedElement::elementary(&a, &[(z(0), one()), (z(1), one())]);
        let chi = PositiveDefiniteState::character(&sys.group, vec![PI / 3.0]).unwrap();
        let rep = verify_isometric_abelian(&w, &dop, &f, &chi).unwrap();
        assert!(rep.passes(), "{rep:?}");

        let scalar = scalar_system(GroupModel::integers());
        let (w, dop) = window_and_dual(&scalar, 4, DEFAULT_DIM_CAP).unwrap();
        let shift = CrossedElement::single(z(1), identity(1));
        let rep = verify_isometric_abelian(&w, &dop, &shift, &chi).unwrap();
        assert!(rep.conjugation_mismatch < 1e-15);

        let f2 = scalar_system(GroupModel::free(2).unwrap());
        let (w, dop) = window_and_dual(&f2, 1, DEFAULT_DIM_CAP).unwrap();
        let tr = PositiveDefiniteState::trace(&f2.group);
        assert!(matches!(
            verify_isometric_abelian(&w, &dop, &CrossedElement::single(f2.group.identity(), identity(1)), &tr),
            Err(Error::NonAbelian(_))
        ));
    }

    #[test]
    fn coaction_identity_examples() {
        let sys = two_point_system();
        let w = sys.window(6, DEFAULT_DIM_CAP).unwrap();
        let unit = coaction_via_w(&w, &CrossedElement::single(z(0), identity(2)), 3).unwrap();
        assert!(unit.passes());
        // identity on the inner window: one block per (v, t)
        assert_eq!(unit.nonzero_blocks, 7 * 7);

        let f = CrossedElement::single(z(1), from_real_diag(&[0.3, 2.0]));
        assert!(coaction_via_w(&w, &f, 3).unwrap().passes());

        let scalar = scalar_system(GroupModel::integers());
        let w = scalar.window(6, DEFAULT_DIM_CAP).unwrap();
        let rep = coaction_via_w(&w, &CrossedElement::single(z(2), identity(1)), 3).unwrap();
        assert_eq!(rep.max_mismatch, 0.0);

        let err = coaction_via_w(&w, &CrossedElement::single(z(4), identity(1)), 3);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn slice_examples() {
        let g = GroupModel::integers();
        let x = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let y = from_real_diag(&[5.0, -1.0]);
        // X (x) lambda_2 + Y (x) lambda_0 seen through a few blocks
        let blocks = GroupBlocks {
            k_dim: 2,
            blocks: vec![
                (z(0), z(-2), x.clone()),
                (z(1), z(-1), x.clone()),
                (z(0), z(0), y.clone()),
                (z(3), z(3), y.clone()),
            ],
        };
        let tr = slice(&g, &PositiveDefiniteState::trace(&g), &blocks).unwrap();
        assert_eq!(max_abs_diff(&tr.operator, &y), 0.0);
        assert!(tr.structured());

        let chi = PositiveDefiniteState::character(&g, vec![0.4]).unwrap();
        let only_x = GroupBlocks {
            k_dim: 2,
            blocks: vec![(z(0), z(-2), x.clone())],
        };
        let out = slice(&g, &chi, &only_x).unwrap();
        let expected = linalg::scaled(&x, c64::from_polar(1.0, 0.8));
        assert!(max_abs_diff(&out.operator, &expected) < 1e-15);

        let broken = GroupBlocks {
            k_dim: 2,
            blocks: vec![(z(0), z(-2), x.clone()), (z(1), z(-1), y.clone())],
        };
        let out = slice(&g, &chi, &broken).unwrap();
        assert!(!out.structured());
    }

    #[test]
    fn slice_mechanism_on_two_point_system() {
        let sys = two_point_system();
        let (w, dop) = window_and_dual(&sys, 6, DEFAULT_DIM_CAP).unwrap();
        let phi = PositiveDefiniteState::mixture(
            vec![0.25, 0.75],
            vec![
                PositiveDefiniteState::character(&sys.group, vec![1.3]).unwrap(),
                PositiveDefiniteState::vector_normalized(&sys.group, vec![(z(0), one()), (z(2), c64::new(0.0, 1.0))]).unwrap(),
            ],
        )
        .unwrap();
        let rep = verify_slice_mechanism(&w, &dop, &sample_f(), &phi, 3).unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.translation_defect == 0.0));
    }

    #[test]
    fn mixtures_are_affine() {
        let sys = two_point_system();
        let (w, dop) = window_and_dual(&sys, 3, DEFAULT_DIM_CAP).unwrap();
        let phi0 = PositiveDefiniteState::character(&sys.group, vec![0.9]).unwrap();
        let phi1 = PositiveDefiniteState::trace(&sys.group);
        let d = mixture_affinity_defect(&w, &dop, &sample_f(), &phi0, &phi1, &[0.1, 0.5, 0.8]).unwrap();
        assert!(d <= AFFINE_TOL);
    }
}
