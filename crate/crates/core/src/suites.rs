//! Verification suites over a built [`Experiment`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::coaction::{
    coaction_via_w, mixture_affinity_defect, verify_contractive, verify_isometric_abelian,
    verify_slice_mechanism, PositiveDefiniteState,
};
use crate::config::Experiment;
use crate::crossed::{
    build_dual_operator, commutator_with_dual, compression_profile, dual_spectrum, verify_bounds, CrossedElement,
    DualOperator, Sign, Window,
};
use crate::error::{Error, Result};
use crate::metric::{compare_dual_metric, connes_distance, DistanceResult, DistanceValue};
use crate::report::{fmt_f64, Row, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Spectrum,
    Bounds,
    Contractivity,
    AbelianIsometry,
    CoactionIdentity,
    Distance,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Spectrum,
        Suite::Bounds,
        Suite::Contractivity,
        Suite::AbelianIsometry,
        Suite::CoactionIdentity,
        Suite::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Spectrum => "spectrum",
            Suite::Bounds => "bounds",
            Suite::Contractivity => "contractivity",
            Suite::AbelianIsometry => "abelian-isometry",
            Suite::CoactionIdentity => "coaction-identity",
            Suite::Distance => "distance",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a suite name; `"all"` selects every suite.
pub fn parse_selector(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Ok(vec![s.parse()?])
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub rows: Vec<Row>,
    pub tables: Vec<Table>,
    pub note: Option<String>,
}

pub fn run_suite(exp: &Experiment, suite: Suite) -> Result<SuiteOutput> {
    match suite {
        Suite::Spectrum => spectrum(exp),
        Suite::Bounds => bounds(exp),
        Suite::Contractivity => contractivity(exp),
        Suite::AbelianIsometry => abelian_isometry(exp),
        Suite::CoactionIdentity => coaction_identity(exp),
        Suite::Distance => distance(exp),
    }
}

fn window_and_dual(exp: &Experiment, r: u32) -> Result<(Window, DualOperator)> {
    let window = exp.system.window(r, exp.cap)?;
    let dop = build_dual_operator(&exp.system.triple, &window)?;
    Ok((window, dop))
}

/// Elements whose support fits in `B_r`; the rest are skipped with a warning.
fn fitting<'a>(exp: &'a Experiment, window: &Window) -> Vec<&'a (String, CrossedElement)> {
    exp.elements
        .iter()
        .filter(|(id, f)| {
            let ok = f.support().all(|s| window.ball().contains(s));
            if !ok {
                log::warn!("element {id} does not fit in B_{}; skipped", window.radius());
            }
            ok
        })
        .collect()
}

fn sign_label(sign: Sign) -> String {
    sign.label().to_string()
}

fn spectrum(exp: &Experiment) -> Result<SuiteOutput> {
    let tol = exp.tolerances.spectrum;
    let mut out = SuiteOutput::default();
    for &r in &exp.radii {
        let (_, dop) = window_and_dual(exp, r)?;
        let rep = dual_spectrum(&dop)?;
        let inputs = [("R", r.to_string()), ("dim", rep.dim.to_string())];
        out.rows.push(Row::mismatch("spectrum", "eigenvalues_match_formula", &inputs, rep.max_mismatch, tol));
        out.rows.push(
            Row::mismatch("spectrum", "multiplicities", &inputs, if rep.multiplicities_ok { 0.0 } else { 1.0 }, 0.0),
        );
    }
    Ok(out)
}

fn bounds(exp: &Experiment) -> Result<SuiteOutput> {
    let tol = exp.tolerances.bounds;
    let group = exp.system.group;
    let mut out = SuiteOutput::default();
    for &r in &exp.radii {
        let (window, dop) = window_and_dual(exp, r)?;
        for case in &exp.bound_cases {
            if case.f.iter().any(|(s, _)| !window.ball().contains(s)) {
                continue;
            }
            let rep = verify_bounds(&window, &dop, &exp.system.triple, &case.a, &case.f)?;
            for c in &rep.checks {
                let inputs = [("F", case.id.clone()), ("R", r.to_string())];
                out.rows.push(Row::le("bounds", c.name, &inputs, c.lhs, c.rhs, tol));
            }
        }
        for (id, f) in fitting(exp, &window) {
            let comm = commutator_with_dual(&window, &dop, f)?;
            let inputs = [("F", id.clone()), ("R", r.to_string())];
            out.rows
                .push(Row::mismatch("bounds", "kernel_formula_vs_naive", &inputs, comm.naive_mismatch, exp.tolerances.kernel));
        }
    }

    // compression profiles over all radii, for elements supported in the smallest window
    let r0 = exp.radii[0];
    let inner = exp.system.window(r0, exp.cap)?;
    for (id, f) in fitting(exp, &inner) {
        let p = compression_profile(&exp.system, f, &exp.radii, exp.cap)?;
        let series = [("assembled", &p.norms), ("plus", &p.plus), ("minus", &p.minus)];
        for (label, values) in series {
            let drop = values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
            let inputs = [("F", id.clone()), ("series", label.to_string())];
            out.rows.push(Row::mismatch("bounds", "compression_monotone", &inputs, drop, exp.tolerances.monotone));
        }
    }

    // sup_t ||[D, alpha_t(b)]|| over growing windows, for each basis element
    let largest = group.ball(*exp.radii.last().unwrap(), exp.cap)?;
    for (k, b) in exp.system.triple.basis().iter().enumerate() {
        let profile = exp.system.action.bound_profile(&exp.system.triple, b, &largest)?;
        let sups: Vec<f64> = exp.radii.iter().map(|&r| profile.sup_within(&largest, r)).collect();
        let drop = sups.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        let inputs = [("basis", k.to_string())];
        out.rows.push(Row::mismatch("bounds", "action_bound_profile_monotone", &inputs, drop, exp.tolerances.monotone));
    }
    Ok(out)
}

fn contractivity(exp: &Experiment) -> Result<SuiteOutput> {
    let tol = exp.tolerances.contractive;
    let mut out = SuiteOutput::default();
    let mut table = Table::new(
        "contractivity",
        &["F_id", "phi_id", "phi_kind", "R", "sign", "lhs", "rhs", "slack", "ratio", "psd_min_eig"],
    );
    let mut kernels: BTreeMap<(String, u32), f64> = BTreeMap::new();
    for &r in &exp.radii {
        let (window, dop) = window_and_dual(exp, r)?;
        let elements = fitting(exp, &window);
        let grid: Vec<(&String, &CrossedElement, &String, &PositiveDefiniteState)> = elements
            .iter()
            .flat_map(|(fid, f)| exp.states.iter().map(move |(pid, phi)| (fid, f, pid, phi)))
            .collect();
        let reports = grid
            .par_iter()
            .map(|(_, f, _, phi)| verify_contractive(&window, &dop, f, phi))
            .collect::<Result<Vec<_>>>()?;
        for ((fid, _, pid, phi), rep) in grid.iter().zip(&reports) {
            for row in &rep.rows {
                let inputs = [
                    ("F", (*fid).clone()),
                    ("phi", (*pid).clone()),
                    ("R", r.to_string()),
                    ("sign", sign_label(row.sign)),
                ];
                out.rows.push(Row::le("contractivity", "contractive", &inputs, row.lhs, row.rhs, tol));
                table.push(vec![
                    (*fid).clone(),
                    (*pid).clone(),
                    phi.kind().to_string(),
                    r.to_string(),
                    sign_label(row.sign),
                    fmt_f64(row.lhs),
                    fmt_f64(row.rhs),
                    fmt_f64(row.slack),
                    row.ratio.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(rep.psd_min_eigenvalue),
                ]);
            }
            let inputs = [("F", (*fid).clone()), ("phi", (*pid).clone()), ("R", r.to_string())];
            out.rows.push(Row::mismatch("contractivity", "schur_multiplier_form", &inputs, rep.schur_mismatch, exp.tolerances.kernel));
            kernels.insert(((*pid).clone(), r), rep.psd_min_eigenvalue);
        }

        // affine dependence on the mixture parameter, for consecutive state pairs
        if let Some((fid, f)) = elements.first() {
            for pair in exp.states.windows(2) {
                let d = mixture_affinity_defect(&window, &dop, f, &pair[0].1, &pair[1].1, &[0.25, 0.5, 0.75])?;
                let inputs = [
                    ("F", fid.clone()),
                    ("phi0", pair[0].0.clone()),
                    ("phi1", pair[1].0.clone()),
                    ("R", r.to_string()),
                ];
                out.rows
                    .push(Row::mismatch("contractivity", "mixture_affine", &inputs, d, crate::coaction::AFFINE_TOL));
            }
        }
    }
    for ((pid, r), min_eig) in kernels {
        let inputs = [("phi", pid), ("R", r.to_string())];
        out.rows.push(Row::ge("contractivity", "schur_kernel_psd", &inputs, min_eig, -exp.tolerances.psd));
    }
    out.tables.push(table.sorted());
    out.note = Some(crate::coaction::SCHUR_MECHANISM.to_string());
    Ok(out)
}

fn abelian_isometry(exp: &Experiment) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    if !exp.system.group.is_abelian() {
        out.note = Some(format!("skipped: {} is not abelian", exp.system.group.family_name()));
        return Ok(out);
    }
    let characters: Vec<&(String, PositiveDefiniteState)> = exp
        .states
        .iter()
        .filter(|(_, s)| matches!(s, PositiveDefiniteState::Character { .. }))
        .collect();
    if characters.is_empty() {
        out.note = Some("skipped: no character states configured".into());
    }
    for &r in &exp.radii {
        let (window, dop) = window_and_dual(exp, r)?;
        for (fid, f) in fitting(exp, &window) {
            for (pid, chi) in &characters {
                let rep = verify_isometric_abelian(&window, &dop, f, chi)?;
                for row in &rep.rows {
                    let inputs = [
                        ("F", fid.clone()),
                        ("chi", pid.clone()),
                        ("R", r.to_string()),
                        ("sign", sign_label(row.sign)),
                    ];
                    out.rows.push(Row::mismatch(
                        "abelian-isometry",
                        "norms_equal",
                        &inputs,
                        (row.lhs - row.rhs).abs(),
                        exp.tolerances.isometry,
                    ));
                }
                let inputs = [("F", fid.clone()), ("chi", pid.clone()), ("R", r.to_string())];
                out.rows.push(Row::mismatch(
                    "abelian-isometry",
                    "conjugation_identity",
                    &inputs,
                    rep.conjugation_mismatch,
                    exp.tolerances.conjugation,
                ));
            }
        }
    }
    Ok(out)
}

fn coaction_identity(exp: &Experiment) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let r = exp.coaction.radius;
    let inner = exp.coaction.inner;
    let (window, dop) = window_and_dual(exp, r)?;
    let group = exp.system.group;
    let usable: Vec<&(String, CrossedElement)> = exp
        .elements
        .iter()
        .filter(|(id, f)| {
            let ok = inner + f.diameter(&group) <= r;
            if !ok {
                log::warn!("element {id} is too wide for R = {r}, R_inner = {inner}; skipped");
            }
            ok
        })
        .collect();
    let reports = usable
        .par_iter()
        .map(|(_, f)| coaction_via_w(&window, f, inner))
        .collect::<Result<Vec<_>>>()?;
    for ((fid, _), rep) in usable.iter().zip(&reports) {
        let inputs = [("F", fid.clone()), ("R", r.to_string()), ("R_inner", inner.to_string())];
        out.rows.push(Row::mismatch("coaction-identity", "w_conjugation", &inputs, rep.max_mismatch, exp.tolerances.coaction));
    }
    let states: Vec<_> = exp.states.iter().take(exp.coaction.slice_states).collect();
    let grid: Vec<_> = usable
        .iter()
        .flat_map(|(fid, f)| states.iter().map(move |(pid, phi)| (fid, f, pid, phi)))
        .collect();
    let reports = grid
        .par_iter()
        .map(|(_, f, _, phi)| verify_slice_mechanism(&window, &dop, f, phi, inner))
        .collect::<Result<Vec<_>>>()?;
    for ((fid, _, pid, _), rep) in grid.iter().zip(&reports) {
        for row in &rep.rows {
            let inputs = [
                ("F", (*fid).clone()),
                ("phi", (*pid).clone()),
                ("R", r.to_string()),
                ("R_inner", inner.to_string()),
                ("sign", sign_label(row.sign)),
            ];
            out.rows.push(
                Row::mismatch("coaction-identity", "slice_of_coaction", &inputs, row.mismatch, exp.tolerances.slice),
            );
            out.rows.push(Row::le(
                "coaction-identity",
                "slice_is_contractive",
                &inputs,
                row.slice_norm,
                row.source_norm,
                exp.tolerances.slice,
            ));
        }
    }
    Ok(out)
}

fn distance(exp: &Experiment) -> Result<SuiteOutput> {
    let opts = exp.distance;
    let tol = opts.tol;
    let triple = &exp.system.triple;
    let states = &exp.densities;
    let mut out = SuiteOutput::default();
    let mut table = Table::new("distance", &["state_pair_id", "value_or_flag", "certificate_seminorm", "iterations", "gap"]);
    if states.len() < 2 {
        out.note = Some("skipped: fewer than two density states".into());
    }

    let mut d: BTreeMap<(usize, usize), DistanceResult> = BTreeMap::new();
    for i in 0..states.len() {
        for j in 0..states.len() {
            if i != j {
                d.insert((i, j), connes_distance(triple, &states[i].1, &states[j].1, opts)?);
            }
        }
    }
    let pair_id = |i: usize, j: usize| format!("{}|{}", states[i].0, states[j].0);
    for (&(i, j), res) in &d {
        let seminorm = res.certificate.as_ref().map_or(f64::NAN, |c| c.seminorm);
        table.push(vec![
            pair_id(i, j),
            res.value.value_or_flag(),
            fmt_f64(seminorm),
            res.iterations.to_string(),
            fmt_f64(res.gap),
        ]);
        let inputs = [("pair", pair_id(i, j))];
        if let DistanceValue::Finite(_) = res.value {
            out.rows.push(Row::le("distance", "certificate_lipschitz", &inputs, seminorm, 1.0, tol));
            out.rows.push(Row::mismatch("distance", "gap_closed", &inputs, res.gap, tol).with_pass(!res.flagged));
        } else {
            out.rows.push(Row::info("distance", "unbounded", &inputs, res.commutant_component, crate::metric::UNBOUNDED_TOL));
        }
    }
    for (&(i, j), res) in &d {
        if i < j {
            if let (Some(a), Some(b)) = (res.value.finite(), d[&(j, i)].value.finite()) {
                let inputs = [("pair", pair_id(i, j))];
                out.rows.push(Row::mismatch("distance", "symmetry", &inputs, (a - b).abs(), 2.0 * tol));
            }
        }
    }
    for i in 0..states.len() {
        for j in 0..states.len() {
            for k in 0..states.len() {
                if i == j || j == k || i == k {
                    continue;
                }
                let (Some(ik), Some(ij), Some(jk)) =
                    (d[&(i, k)].value.finite(), d[&(i, j)].value.finite(), d[&(j, k)].value.finite())
                else {
                    continue;
                };
                let inputs = [("triple", format!("{}|{}|{}", states[i].0, states[j].0, states[k].0))];
                out.rows.push(Row::le("distance", "triangle", &inputs, ik, ij + jk, 3.0 * tol));
            }
        }
    }
    out.tables.push(table.sorted());

    if let Some(r) = exp.dual_radius {
        let pairs: Vec<_> = (0..states.len())
            .flat_map(|i| (i + 1..states.len()).map(move |j| (i, j)))
            .take(exp.dual_pairs)
            .collect();
        let state_pairs: Vec<_> = pairs.iter().map(|&(i, j)| (states[i].1.clone(), states[j].1.clone())).collect();
        let rows = compare_dual_metric(&exp.system, r, exp.cap, &state_pairs, opts)?;
        let mut dual = Table::new("dual_metric", &["state_pair_id", "R", "d_base", "d_dual", "ratio", "flagged"]);
        for (row, &(i, j)) in rows.iter().zip(&pairs) {
            dual.push(vec![
                pair_id(i, j),
                r.to_string(),
                row.base.value_or_flag(),
                row.dual.value_or_flag(),
                row.ratio.map(fmt_f64).unwrap_or_default(),
                row.flagged.to_string(),
            ]);
            let inputs = [("pair", pair_id(i, j)), ("R", r.to_string())];
            out.rows.push(Row::info(
                "distance",
                "dual_metric_ratio",
                &inputs,
                row.dual.finite().unwrap_or(f64::INFINITY),
                row.base.finite().unwrap_or(f64::INFINITY),
            ));
        }
        out.tables.push(dual.sorted());
    }
    Ok(out)
}

/// Long-form `(R, quantity, value)` table plus the checks derived from it.
#[derive(Debug, Default)]
pub struct SweepOutput {
    pub table: Table,
    pub rows: Vec<Row>,
}

pub fn sweep(exp: &Experiment) -> Result<SweepOutput> {
    if exp.radii.len() < 2 {
        return Err(Error::Config("sweep needs at least two radii".into()));
    }
    let mut table = Table::new("sweep", &["R", "quantity", "value"]);
    let mut rows = Vec::new();
    let mut norms: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let smallest = exp.system.window(exp.radii[0], exp.cap)?;
    let elements = fitting(exp, &smallest);
    for &r in &exp.radii {
        let (window, dop) = window_and_dual(exp, r)?;
        let spec = dual_spectrum(&dop)?;
        table.push(vec![r.to_string(), "spectrum_max_mismatch".into(), fmt_f64(spec.max_mismatch)]);
        rows.push(Row::mismatch("sweep", "spectrum", &[("R", r.to_string())], spec.max_mismatch, exp.tolerances.spectrum));

        let mut min_psd = f64::INFINITY;
        for (fid, f) in &elements {
            let comm = commutator_with_dual(&window, &dop, f)?;
            let plus = comm.norm(Sign::Plus)?;
            let minus = comm.norm(Sign::Minus)?;
            for (label, v) in [("assembled", plus.max(minus)), ("plus", plus), ("minus", minus)] {
                let q = format!("norm_{label}[{fid}]");
                table.push(vec![r.to_string(), q.clone(), fmt_f64(v)]);
                norms.entry(q).or_default().push(v);
            }
            let reports = exp
                .states
                .par_iter()
                .map(|(_, phi)| verify_contractive(&window, &dop, f, phi))
                .collect::<Result<Vec<_>>>()?;
            let min_slack = reports
                .iter()
                .flat_map(|rep| rep.rows.iter().map(|row| row.slack))
                .fold(f64::INFINITY, f64::min);
            min_psd = reports.iter().map(|rep| rep.psd_min_eigenvalue).fold(min_psd, f64::min);
            if min_slack.is_finite() {
                table.push(vec![r.to_string(), format!("min_contractivity_slack[{fid}]"), fmt_f64(min_slack)]);
                let inputs = [("F", fid.clone()), ("R", r.to_string())];
                rows.push(Row::ge("sweep", "contractivity_slack", &inputs, min_slack, -exp.tolerances.contractive));
            }
        }
        if min_psd.is_finite() {
            table.push(vec![r.to_string(), "min_psd_eig".into(), fmt_f64(min_psd)]);
            rows.push(Row::ge("sweep", "schur_kernel_psd", &[("R", r.to_string())], min_psd, -exp.tolerances.psd));
        }
    }
    for (q, values) in norms {
        let drop = values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        rows.push(Row::mismatch("sweep", "monotone", &[("quantity", q)], drop, exp.tolerances.monotone));
    }
    Ok(SweepOutput {
        table: table.sorted_by_radius(),
        rows,
    })
}

impl Table {
    /// Sorts numerically by the leading radius column, then by the rest.
    fn sorted_by_radius(mut self) -> Self {
        self.rows.sort_by(|a, b| {
            let ra: u32 = a[0].parse().unwrap_or(0);
            let rb: u32 = b[0].parse().unwrap_or(0);
            (ra, &a[1..]).cmp(&(rb, &b[1..]))
        });
        self
    }
}
