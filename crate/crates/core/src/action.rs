//! Unitarily implemented group actions `alpha_g(a) = u_g a u_g*` and their
//! windowed metric diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Ball, Element, GroupModel};
use crate::linalg::{self, CMat};
use crate::triple::FiniteSpectralTriple;

pub const UNITARY_TOL: f64 = 1e-10;
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Absolute tolerance when comparing commutator norms along an orbit.
pub const ISOMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct UnitaryAction {
    group: GroupModel,
    /// Images of the free generators `g_1, ..., g_rank`.
    generators: Vec<CMat>,
    inverses: Vec<CMat>,
}

impl UnitaryAction {
    /// `generators[i]` is the image of the `i`-th free generator; inverses are
    /// implemented by adjoints.
    pub fn new(group: GroupModel, generators: Vec<CMat>) -> Result<Self> {
        if generators.len() != group.rank() {
            return Err(Error::InvalidAction(format!(
                "{} needs {} generator images, got {}",
                group.family_name(),
                group.rank(),
                generators.len()
            )));
        }
        let n = generators[0].nrows();
        for (i, u) in generators.iter().enumerate() {
            if linalg::shape(u) != (n, n) {
                return Err(Error::InvalidAction(format!(
                    "generator image {i} has shape {:?}, expected {n}x{n}",
                    linalg::shape(u)
                )));
            }
            let defect = linalg::operator_norm(&(u.adjoint() * u - linalg::identity(n)))?;
            if defect >= UNITARY_TOL {
                return Err(Error::InvalidAction(format!(
                    "generator image {i} is not unitary (||u*u - 1|| = {defect:.3e})"
                )));
            }
        }
        if group.is_abelian() {
            for i in 0..generators.len() {
                for j in i + 1..generators.len() {
                    let c = linalg::commutator(&generators[i], &generators[j])?;
                    let defect = linalg::operator_norm(&c)?;
                    if defect >= UNITARY_TOL {
                        return Err(Error::InvalidAction(format!(
                            "generator images {i} and {j} do not commute ({defect:.3e})"
                        )));
                    }
                }
            }
        }
        let inverses = generators.iter().map(linalg::dagger).collect();
        Ok(UnitaryAction {
            group,
            generators,
            inverses,
        })
    }

    pub fn trivial(group: GroupModel, n: usize) -> Self {
        let generators = vec![linalg::identity(n); group.rank()];
        UnitaryAction {
            group,
            inverses: generators.clone(),
            generators,
        }
    }

    pub fn group(&self) -> GroupModel {
        self.group
    }

    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }

    /// `u_g`, multiplied out along the normal form of `g`.
    pub fn unitary(&self, g: &Element) -> CMat {
        let mut u = linalg::identity(self.dim());
        if self.group.is_abelian() {
            for (i, &power) in g.as_slice().iter().enumerate() {
                let factor = if power >= 0 {
                    &self.generators[i]
                } else {
                    &self.inverses[i]
                };
                for _ in 0..power.unsigned_abs() {
                    u = &u * factor;
                }
            }
        } else {
            for &letter in g.as_slice() {
                let idx = letter.unsigned_abs() as usize - 1;
                let factor = if letter > 0 {
                    &self.generators[idx]
                } else {
                    &self.inverses[idx]
                };
                u = &u * factor;
            }
        }
        u
    }

    /// `u_t` for every `t` in the ball, in ball order.
    pub fn unitaries(&self, ball: &Ball) -> Vec<CMat> {
        ball.elements().iter().map(|g| self.unitary(g)).collect()
    }

    pub fn apply(&self, g: &Element, a: &CMat) -> CMat {
        conjugate(&self.unitary(g), a)
    }

    /// Largest distance from `alpha_g(b)` to the algebra span, over basis
    /// elements `b` and `g` in the ball.
    pub fn invariance(&self, triple: &FiniteSpectralTriple, ball: &Ball) -> InvarianceReport {
        let mut max_residual = 0.0f64;
        for u in self.unitaries(ball) {
            for b in triple.basis() {
                max_residual = max_residual.max(triple.span_residual(&conjugate(&u, b)));
            }
        }
        InvarianceReport {
            radius: ball.radius(),
            max_residual,
            invariant: max_residual < INVARIANCE_TOL,
        }
    }

    /// `g -> ||[D, alpha_g(a)]||` over the window.
    pub fn bound_profile(
        &self,
        triple: &FiniteSpectralTriple,
        a: &CMat,
        ball: &Ball,
    ) -> Result<BoundProfile> {
        let values = ball
            .elements()
            .iter()
            .map(|g| {
                let c = linalg::commutator(triple.dirac(), &self.apply(g, a))?;
                linalg::operator_norm(&c)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(BoundProfile::from_values(ball, values))
    }

    pub fn classify_on_window(
        &self,
        triple: &FiniteSpectralTriple,
        ball: &Ball,
        sample: &[CMat],
    ) -> Result<WindowClassification> {
        let invariance = self.invariance(triple, ball);
        let mut elements = Vec::with_capacity(sample.len());
        for (index, a) in sample.iter().enumerate() {
            let profile = self.bound_profile(triple, a, ball)?;
            let base = profile.values[0];
            let max_deviation = profile
                .values
                .iter()
                .map(|v| (v - base).abs())
                .fold(0.0, f64::max);
            elements.push(ElementClassification {
                index,
                base_seminorm: base,
                window_sup: profile.sup,
                growth_ratio: profile.growth_ratio,
                max_deviation,
                isometric: max_deviation <= ISOMETRY_TOL,
            });
        }
        let isometric_on_window = elements.iter().all(|e| e.isometric);
        Ok(WindowClassification {
            radius: ball.radius(),
            invariance,
            isometric_on_window,
            elements,
            caveat: format!(
                "only g in B_{} was examined; statements about all of G are not implied",
                ball.radius()
            ),
        })
    }
}

/// `u a u*`
pub fn conjugate(u: &CMat, a: &CMat) -> CMat {
    u * a * u.adjoint()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InvarianceReport {
    pub radius: u32,
    pub max_residual: f64,
    pub invariant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundProfile {
    pub radius: u32,
    /// `||[D, alpha_t(a)]||` in ball order.
    pub values: Vec<f64>,
    pub sup: f64,
    /// `sup` over `B_R` divided by `sup` over `B_{R/2}`; `None` when the latter is zero.
    pub growth_ratio: Option<f64>,
}

impl BoundProfile {
    fn from_values(ball: &Ball, values: Vec<f64>) -> Self {
        let sup = values.iter().copied().fold(0.0, f64::max);
        let half = ball.prefix_len(ball.radius() / 2);
        let half_sup = values[..half].iter().copied().fold(0.0, f64::max);
        BoundProfile {
            radius: ball.radius(),
            values,
            sup,
            growth_ratio: (half_sup > 0.0).then(|| sup / half_sup),
        }
    }

    /// Sup over the sub-window `B_r`, `r <= R`.
    pub fn sup_within(&self, ball: &Ball, r: u32) -> f64 {
        self.values[..ball.prefix_len(r)]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementClassification {
    pub index: usize,
    pub base_seminorm: f64,
    pub window_sup: f64,
    pub growth_ratio: Option<f64>,
    pub max_deviation: f64,
    pub isometric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowClassification {
    pub radius: u32,
    pub invariance: InvarianceReport,
    pub isometric_on_window: bool,
    pub elements: Vec<ElementClassification>,
    pub caveat: String,
}
