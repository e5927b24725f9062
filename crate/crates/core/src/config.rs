//! Experiment configuration: JSON schema, validation and seeded sampling.

use std::f64::consts::PI;
use std::path::Path;

use faer::c64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::UnitaryAction;
use crate::coaction::PositiveDefiniteState;
use crate::crossed::{CrossedElement, CrossedSystem, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::group::{Element, GroupModel};
use crate::linalg::{self, CMat};
use crate::metric::{DistanceOptions, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL};
use crate::triple::{clock_matrix, shift_matrix, FiniteSpectralTriple, State};

pub const RNG_NAME: &str = "ChaCha8";

const DEMO_TWO_POINT: &str = include_str!("../configs/two_point_swap.json");
const DEMO_FREE_SCALAR: &str = include_str!("../configs/free_group_scalar.json");
const DEMO_CLOCK_SHIFT: &str = include_str!("../configs/clock_shift.json");

/// Built-in configurations, addressable as `demo:<name>`.
pub const DEMOS: [(&str, &str); 3] = [
    ("two-point-swap", DEMO_TWO_POINT),
    ("free-group-scalar", DEMO_FREE_SCALAR),
    ("clock-shift", DEMO_CLOCK_SHIFT),
];

pub fn demo_source(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> c64 {
        match self {
            Entry::Real(x) => c64::new(x, 0.0),
            Entry::Complex([re, im]) => c64::new(re, im),
        }
    }
}

/// Row-major matrix.
pub type MatrixSpec = Vec<Vec<Entry>>;

fn matrix(spec: &MatrixSpec, what: &str) -> Result<CMat> {
    let n = spec.len();
    let m = spec.first().map_or(0, Vec::len);
    if n == 0 || spec.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("{what}: matrix rows must be nonempty and of equal length")));
    }
    Ok(CMat::from_fn(n, m, |i, j| spec[i][j].value()))
}

/// Coordinates for lattices, a word for free groups.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Coords(Vec<i64>),
    Word(String),
}

impl ElementSpec {
    pub fn resolve(&self, group: &GroupModel) -> Result<Element> {
        match self {
            ElementSpec::Coords(c) => group.from_coords(c),
            ElementSpec::Word(w) => group.parse_word(w),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum GroupSpec {
    Z,
    Zd { d: usize },
    Free { k: usize },
}

impl GroupSpec {
    pub fn build(&self) -> Result<GroupModel> {
        match *self {
            GroupSpec::Z => Ok(GroupModel::integers()),
            GroupSpec::Zd { d } => GroupModel::lattice(d),
            GroupSpec::Free { k } => GroupModel::free(k),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum TripleSpec {
    TwoPoint { lambda: f64 },
    ClockShift { spectrum: Vec<f64> },
    Scalar,
    Inline { dirac: MatrixSpec, basis: Vec<MatrixSpec> },
}

impl TripleSpec {
    pub fn build(&self) -> Result<FiniteSpectralTriple> {
        match self {
            TripleSpec::TwoPoint { lambda } => FiniteSpectralTriple::two_point(*lambda),
            TripleSpec::ClockShift { spectrum } => FiniteSpectralTriple::clock_shift(spectrum),
            TripleSpec::Scalar => FiniteSpectralTriple::scalar(),
            TripleSpec::Inline { dirac, basis } => FiniteSpectralTriple::new(
                matrix(dirac, "triple.dirac")?,
                basis
                    .iter()
                    .map(|b| matrix(b, "triple.basis"))
                    .collect::<Result<_>>()?,
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionSpec {
    /// Explicit unitaries for the positive generators.
    Generators { generators: Vec<MatrixSpec> },
    Builder { builder: ActionBuilder },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionBuilder {
    Trivial,
    /// `[[0, 1], [1, 0]]` for every generator; needs `n = 2`.
    Swap,
    /// Conjugation by the clock matrix for every generator.
    Clock,
    /// Conjugation by the cyclic shift for every generator.
    Shift,
}

impl ActionSpec {
    pub fn build(&self, group: GroupModel, n: usize) -> Result<UnitaryAction> {
        let same = |u: CMat| UnitaryAction::new(group, vec![u; group.rank()]);
        match self {
            ActionSpec::Generators { generators } => UnitaryAction::new(
                group,
                generators
                    .iter()
                    .map(|g| matrix(g, "action.generators"))
                    .collect::<Result<_>>()?,
            ),
            ActionSpec::Builder { builder } => match builder {
                ActionBuilder::Trivial => Ok(UnitaryAction::trivial(group, n)),
                ActionBuilder::Swap if n == 2 => same(linalg::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])),
                ActionBuilder::Swap => Err(Error::Config(format!("swap action needs n = 2, triple has n = {n}"))),
                ActionBuilder::Clock => same(clock_matrix(n)),
                ActionBuilder::Shift => same(shift_matrix(n)),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub g: ElementSpec,
    pub matrix: MatrixSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementEntry {
    pub id: String,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportTerm {
    pub g: ElementSpec,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Character { angles: Vec<f64> },
    Vector { support: Vec<SupportTerm> },
    Mixture { weights: Vec<f64>, members: Vec<StateSpec> },
}

impl StateSpec {
    pub fn build(&self, group: &GroupModel) -> Result<PositiveDefiniteState> {
        match self {
            StateSpec::Character { angles } => PositiveDefiniteState::character(group, angles.clone()),
            StateSpec::Vector { support } => PositiveDefiniteState::vector(
                group,
                support
                    .iter()
                    .map(|t| Ok((t.g.resolve(group)?, c64::new(t.re, t.im))))
                    .collect::<Result<_>>()?,
            ),
            StateSpec::Mixture { weights, members } => PositiveDefiniteState::mixture(
                weights.clone(),
                members.iter().map(|m| m.build(group)).collect::<Result<_>>()?,
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateEntry {
    pub id: String,
    #[serde(flatten)]
    pub spec: StateSpec,
}

/// A state on the finite algebra: a unit vector or a density matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Pure { id: String, vector: Vec<Entry> },
    Mixed { id: String, density: MatrixSpec },
}

impl DensitySpec {
    pub fn id(&self) -> &str {
        match self {
            DensitySpec::Pure { id, .. } | DensitySpec::Mixed { id, .. } => id,
        }
    }

    pub fn build(&self) -> Result<State> {
        match self {
            DensitySpec::Pure { vector, .. } => {
                State::pure(&vector.iter().map(|e| e.value()).collect::<Vec<_>>())
            }
            DensitySpec::Mixed { density, .. } => State::new(matrix(density, "density")?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomElements {
    pub count: usize,
    #[serde(default = "default_support_radius")]
    pub support_radius: u32,
    #[serde(default = "default_terms")]
    pub terms: usize,
}

fn default_support_radius() -> u32 {
    1
}

fn default_terms() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStates {
    pub count: usize,
    #[serde(default = "default_state_radius")]
    pub support_radius: u32,
}

fn default_state_radius() -> u32 {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoactionSpec {
    pub radius: u32,
    pub inner: u32,
    /// How many states enter the slice-map mechanism check per element.
    #[serde(default = "default_slice_states")]
    pub slice_states: usize,
}

fn default_slice_states() -> usize {
    3
}

impl Default for CoactionSpec {
    fn default() -> Self {
        CoactionSpec {
            radius: 6,
            inner: 3,
            slice_states: default_slice_states(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Number of extra random pure states on the algebra.
    #[serde(default)]
    pub random_states: usize,
    /// Truncation radius for the dual-metric comparison; omitted means skipped.
    #[serde(default)]
    pub dual_radius: Option<u32>,
    #[serde(default = "default_dual_pairs")]
    pub dual_pairs: usize,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_dual_pairs() -> usize {
    2
}

impl Default for DistanceSpec {
    fn default() -> Self {
        DistanceSpec {
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            random_states: 0,
            dual_radius: None,
            dual_pairs: default_dual_pairs(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub spectrum: f64,
    pub bounds: f64,
    pub contractive: f64,
    pub isometry: f64,
    pub conjugation: f64,
    pub coaction: f64,
    pub slice: f64,
    pub psd: f64,
    pub monotone: f64,
    pub kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            spectrum: crate::crossed::SPECTRUM_TOL,
            bounds: crate::crossed::BOUND_SLACK_TOL,
            contractive: crate::coaction::CONTRACTIVE_TOL,
            isometry: crate::coaction::ISOMETRY_NORM_TOL,
            conjugation: crate::coaction::CONJUGATION_TOL,
            coaction: crate::coaction::COACTION_TOL,
            slice: crate::coaction::SLICE_TOL,
            psd: crate::coaction::PSD_TOL,
            monotone: crate::crossed::MONOTONE_TOL,
            kernel: crate::crossed::KERNEL_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default = "default_cap")]
    pub max_dim: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_dim: DEFAULT_DIM_CAP }
    }
}

/// The on-disk experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub group: GroupSpec,
    pub triple: TripleSpec,
    pub action: ActionSpec,
    #[serde(default)]
    pub elements: Vec<ElementEntry>,
    #[serde(default)]
    pub random_elements: Option<RandomElements>,
    #[serde(default)]
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub random_states: Option<RandomStates>,
    #[serde(default)]
    pub density_states: Vec<DensitySpec>,
    pub radii: Vec<u32>,
    #[serde(default)]
    pub coaction: CoactionSpec,
    #[serde(default)]
    pub distance: DistanceSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a file, or a built-in demo when `path` is `demo:<name>`.
    pub fn load(path: &str) -> Result<(Self, String)> {
        let text = match path.strip_prefix("demo:") {
            Some(name) => demo_source(name)
                .ok_or_else(|| {
                    let names: Vec<&str> = DEMOS.iter().map(|(n, _)| *n).collect();
                    Error::Config(format!("unknown demo {name:?}; available: {}", names.join(", ")))
                })?
                .to_string(),
            None => std::fs::read_to_string(Path::new(path))?,
        };
        Ok((Self::from_json(&text)?, text))
    }

    pub fn build(&self) -> Result<Experiment> {
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("radii must be a nonempty strictly increasing list".into()));
        }
        if 2 * self.coaction.inner > self.coaction.radius {
            return Err(Error::Config(format!(
                "coaction window too small: 2 * inner ({}) exceeds radius ({})",
                self.coaction.inner, self.coaction.radius
            )));
        }
        if !(self.distance.tol > 0.0) {
            return Err(Error::Config("distance.tol must be positive".into()));
        }
        let group = self.group.build()?;
        let triple = self.triple.build()?;
        let n = triple.dim();
        let action = self.action.build(group, n)?;
        if action.dim() != n {
            return Err(Error::Config(format!("action acts on C^{}, triple on C^{n}", action.dim())));
        }
        let system = CrossedSystem::new(group, triple, action)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut elements = Vec::new();
        for entry in &self.elements {
            let terms = entry
                .terms
                .iter()
                .map(|t| Ok((t.g.resolve(&group)?, matrix(&t.matrix, &entry.id)?)))
                .collect::<Result<Vec<_>>>()?;
            let f = CrossedElement::new(terms);
            f.validate(&system)
                .map_err(|e| Error::Config(format!("element {}: {e}", entry.id)))?;
            elements.push((entry.id.clone(), f));
        }
        if let Some(spec) = &self.random_elements {
            for k in 0..spec.count {
                let f = random_element(&system, spec.support_radius, spec.terms, &mut rng)?;
                elements.push((format!("rF{k}"), f));
            }
        }

        let mut states = Vec::new();
        for entry in &self.states {
            let phi = entry
                .spec
                .build(&group)
                .map_err(|e| Error::Config(format!("state {}: {e}", entry.id)))?;
            states.push((entry.id.clone(), phi));
        }
        if let Some(spec) = &self.random_states {
            for k in 0..spec.count {
                states.push((format!("rS{k}"), random_state(&group, spec.support_radius, k, &mut rng)?));
            }
        }

        let mut densities = Vec::new();
        for d in &self.density_states {
            let state = d
                .build()
                .map_err(|e| Error::Config(format!("density state {}: {e}", d.id())))?;
            if state.dim() != n {
                return Err(Error::Config(format!(
                    "density state {} lives on C^{}, triple on C^{n}",
                    d.id(),
                    state.dim()
                )));
            }
            densities.push((d.id().to_string(), state));
        }
        for k in 0..self.distance.random_states {
            densities.push((format!("rho{k}"), random_pure_state(n, &mut rng)?));
        }

        // a (x) f cases for the commutator bounds, one per element, on the same support
        let mut bound_cases = Vec::with_capacity(elements.len());
        for (id, f) in &elements {
            let a = random_algebra_element(&system.triple, &mut rng);
            let coeffs = f.support().map(|s| (s.clone(), random_complex(&mut rng))).collect();
            bound_cases.push(BoundCase {
                id: format!("a_{id}"),
                a,
                f: coeffs,
            });
        }

        Ok(Experiment {
            name: self.name.clone(),
            system,
            elements,
            bound_cases,
            states,
            densities,
            radii: self.radii.clone(),
            coaction: self.coaction.clone(),
            distance: DistanceOptions {
                tol: self.distance.tol,
                max_iterations: self.distance.max_iterations,
            },
            dual_radius: self.distance.dual_radius,
            dual_pairs: self.distance.dual_pairs,
            tolerances: self.tolerances.clone(),
            seed: self.seed,
            cap: self.caps.max_dim,
        })
    }
}

/// A validated, fully materialized experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub system: CrossedSystem,
    pub elements: Vec<(String, CrossedElement)>,
    pub bound_cases: Vec<BoundCase>,
    pub states: Vec<(String, PositiveDefiniteState)>,
    pub densities: Vec<(String, State)>,
    pub radii: Vec<u32>,
    pub coaction: CoactionSpec,
    pub distance: DistanceOptions,
    pub dual_radius: Option<u32>,
    pub dual_pairs: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub cap: usize,
}

/// `F = a (x) f` for the commutator bounds.
#[derive(Clone, Debug)]
pub struct BoundCase {
    pub id: String,
    pub a: CMat,
    pub f: Vec<(Element, c64)>,
}

fn random_complex<R: Rng>(rng: &mut R) -> c64 {
    c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random element of the algebra span.
pub fn random_algebra_element<R: Rng>(triple: &FiniteSpectralTriple, rng: &mut R) -> CMat {
    let n = triple.dim();
    let mut a = linalg::zeros(n, n);
    for b in triple.basis() {
        a += linalg::scaled(b, random_complex(rng));
    }
    a
}

/// `terms` distinct support points in `B_radius`, each carrying a random
/// element of the algebra.
pub fn random_element<R: Rng>(
    system: &CrossedSystem,
    radius: u32,
    terms: usize,
    rng: &mut R,
) -> Result<CrossedElement> {
    let ball = system.group.ball(radius, usize::MAX)?;
    let k = terms.clamp(1, ball.len());
    let support: Vec<&Element> = ball.elements().choose_multiple(rng, k).collect();
    let mut support: Vec<Element> = support.into_iter().cloned().collect();
    support.sort();
    Ok(CrossedElement::new(
        support
            .into_iter()
            .map(|g| (g, random_algebra_element(&system.triple, rng)))
            .collect::<Vec<_>>(),
    ))
}

/// Cycles through characters (abelian groups only), vector states and
/// two-member mixtures.
pub fn random_state<R: Rng>(
    group: &GroupModel,
    radius: u32,
    index: usize,
    rng: &mut R,
) -> Result<PositiveDefiniteState> {
    let kinds: &[&str] = if group.is_abelian() {
        &["character", "vector", "mixture"]
    } else {
        &["vector", "mixture"]
    };
    match kinds[index % kinds.len()] {
        "character" => random_character(group, rng),
        "vector" => random_vector_state(group, radius, rng),
        _ => {
            let first = if group.is_abelian() {
                random_character(group, rng)?
            } else {
                random_vector_state(group, radius, rng)?
            };
            let second = random_vector_state(group, radius, rng)?;
            let w: f64 = rng.gen_range(0.0..1.0);
            PositiveDefiniteState::mixture(vec![w, 1.0 - w], vec![first, second])
        }
    }
}

fn random_character<R: Rng>(group: &GroupModel, rng: &mut R) -> Result<PositiveDefiniteState> {
    let angles = (0..group.rank()).map(|_| rng.gen_range(-PI..PI)).collect();
    PositiveDefiniteState::character(group, angles)
}

fn random_vector_state<R: Rng>(group: &GroupModel, radius: u32, rng: &mut R) -> Result<PositiveDefiniteState> {
    let ball = group.ball(radius, usize::MAX)?;
    let k = rng.gen_range(1..=3usize).min(ball.len());
    let mut support: Vec<Element> = ball.elements().choose_multiple(rng, k).cloned().collect();
    support.sort();
    PositiveDefiniteState::vector_normalized(
        group,
        support.into_iter().map(|g| (g, random_complex(rng))).collect(),
    )
}

pub fn random_pure_state<R: Rng>(n: usize, rng: &mut R) -> Result<State> {
    let v: Vec<c64> = (0..n).map(|_| random_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    State::pure(&v.iter().map(|z| z / norm).collect::<Vec<_>>())
}
