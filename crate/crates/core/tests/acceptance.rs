//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crossed_triple::coaction::{
    schur_kernel, verify_contractive, verify_isometric_abelian, window_and_dual, PositiveDefiniteState,
};
use crossed_triple::config::{Experiment, ExperimentConfig};
use crossed_triple::crossed::{compression_profile, dual_spectrum, DEFAULT_DIM_CAP};
use crossed_triple::linalg::{self, CMat};
use crossed_triple::metric::{connes_distance, DistanceOptions, DistanceValue};
use crossed_triple::suites::{run_suite, Suite};
use crossed_triple::triple::{FiniteSpectralTriple, State};

const DEMOS: [&str; 3] = ["two-point-swap", "free-group-scalar", "clock-shift"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn demo(name: &str) -> Experiment {
    let (cfg, _) = ExperimentConfig::load(&format!("demo:{name}")).unwrap();
    cfg.build().unwrap()
}

/// Radii used for the dense grids; the free group grows too fast for R = 6.
fn grid_radii(exp: &Experiment) -> Vec<u32> {
    if exp.system.group.is_abelian() {
        vec![2, 4, 6]
    } else {
        vec![2, 3, 4]
    }
}

fn spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut multiplicities = true;
    for name in DEMOS {
        let exp = demo(name);
        for r in [2, 4, 6] {
            let (window, dop) = window_and_dual(&exp.system, r, DEFAULT_DIM_CAP).unwrap();
            assert!(window.dim() <= DEFAULT_DIM_CAP);
            let rep = dual_spectrum(&dop).unwrap();
            worst = worst.max(rep.max_mismatch);
            multiplicities &= rep.multiplicities_ok;
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && multiplicities && elapsed < Duration::from_secs(60),
        format!("{cases} cases, max deviation {worst:.2e}, multiplicities ok: {multiplicities}, {:.1} s", elapsed.as_secs_f64()),
    )
}

fn contractivity() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut count = 0usize;
    let mut grid_ok = true;
    for name in DEMOS {
        let exp = demo(name);
        grid_ok &= exp.states.len() >= 20 && exp.elements.len() >= 5;
        for r in grid_radii(&exp) {
            let (window, dop) = window_and_dual(&exp.system, r, DEFAULT_DIM_CAP).unwrap();
            let grid: Vec<_> = exp
                .elements
                .iter()
                .filter(|(_, f)| f.support().all(|s| window.ball().contains(s)))
                .flat_map(|(_, f)| exp.states.iter().map(move |(_, phi)| (f, phi)))
                .collect();
            let slacks: Vec<f64> = grid
                .par_iter()
                .map(|(f, phi)| {
                    let rep = verify_contractive(&window, &dop, f, phi).unwrap();
                    rep.rows.iter().map(|row| row.slack).fold(f64::INFINITY, f64::min)
                })
                .collect();
            count += slacks.len();
            worst = slacks.into_iter().fold(worst, f64::min);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        grid_ok && worst >= -1e-9 && elapsed < Duration::from_secs(300),
        format!("{count} (F, phi, R) cases x 2 signs, min slack {worst:.2e}, {:.1} s", elapsed.as_secs_f64()),
    )
}

fn abelian_isometry() -> Outcome {
    let exp = demo("two-point-swap");
    let characters: Vec<_> = (0..12)
        .map(|k| PositiveDefiniteState::character(&exp.system.group, vec![-PI + (k as f64 + 0.5) * PI / 6.0]).unwrap())
        .collect();
    let mut norm_diff: f64 = 0.0;
    let mut conj: f64 = 0.0;
    let mut cases = 0;
    for r in [2, 4, 6] {
        let (window, dop) = window_and_dual(&exp.system, r, DEFAULT_DIM_CAP).unwrap();
        for (_, f) in &exp.elements {
            if !f.support().all(|s| window.ball().contains(s)) {
                continue;
            }
            for chi in &characters {
                let rep = verify_isometric_abelian(&window, &dop, f, chi).unwrap();
                for row in &rep.rows {
                    norm_diff = norm_diff.max((row.lhs - row.rhs).abs());
                }
                conj = conj.max(rep.conjugation_mismatch);
                cases += 1;
            }
        }
    }
    outcome(
        norm_diff <= 1e-9 && conj <= 1e-10,
        format!("{} characters, {cases} cases, max |norm diff| {norm_diff:.2e}, max conjugation mismatch {conj:.2e}", characters.len()),
    )
}

fn norm_bounds() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut rows = 0;
    let mut group_rows = 0;
    let mut group_worst = f64::INFINITY;
    for name in DEMOS {
        let exp = demo(name);
        let out = run_suite(&exp, Suite::Bounds).unwrap();
        for row in out.rows.iter().filter(|r| r.relation == "<=") {
            worst = worst.min(row.slack);
            rows += 1;
            if name == "free-group-scalar" && row.check == "mc_commutator_le_mf_l1" {
                group_worst = group_worst.min(row.slack);
                group_rows += 1;
            }
        }
        if let Some(bad) = out.rows.iter().find(|r| !r.pass) {
            return outcome(false, format!("{name}: {} failed ({:?})", bad.check, bad.inputs));
        }
    }
    outcome(
        worst >= -1e-9 && group_rows > 0 && group_worst >= -1e-9,
        format!("{rows} inequality rows, min slack {worst:.2e}; pure-group M_c rows {group_rows}, min slack {group_worst:.2e}"),
    )
}

fn coaction() -> Outcome {
    let mut w_worst: f64 = 0.0;
    let mut slice_worst: f64 = 0.0;
    let mut w_rows = 0;
    let mut slice_rows = 0;
    let mut all_pass = true;
    for name in DEMOS {
        let exp = demo(name);
        assert_eq!((exp.coaction.radius, exp.coaction.inner), (6, 3));
        let out = run_suite(&exp, Suite::CoactionIdentity).unwrap();
        for row in &out.rows {
            all_pass &= row.pass;
            match row.check.as_str() {
                "w_conjugation" => {
                    w_worst = w_worst.max(row.lhs);
                    w_rows += 1;
                }
                "slice_of_coaction" => {
                    slice_worst = slice_worst.max(row.lhs);
                    slice_rows += 1;
                }
                _ => {}
            }
        }
        let expected = exp.elements.iter().filter(|(_, f)| 3 + f.diameter(&exp.system.group) <= 6).count();
        all_pass &= out.rows.iter().filter(|r| r.check == "w_conjugation").count() == expected;
    }
    outcome(
        all_pass && w_worst <= 1e-10 && slice_worst <= 1e-9,
        format!("{w_rows} W-conjugation rows, max {w_worst:.2e}; {slice_rows} slice rows, max {slice_worst:.2e}"),
    )
}

/// Largest `t` with `||[D, t h]|| <= 1`, by bisection.
fn boundary(triple: &FiniteSpectralTriple, h: &CMat) -> f64 {
    let l = triple.lipschitz(h).unwrap().seminorm;
    if l < 1e-14 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 2.0 / l);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if triple.lipschitz(&linalg::scaled(h, c64::new(mid, 0.0))).unwrap().seminorm <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Scans real diagonal directions `diag(cos a, sin a)` of the two-point algebra.
fn two_point_oracle(triple: &FiniteSpectralTriple, rho: &State, sigma: &State) -> f64 {
    let steps = 7200;
    (0..steps)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / steps as f64;
            let h = linalg::from_real_diag(&[a.cos(), a.sin()]);
            let t = boundary(triple, &h);
            let diff = (rho.eval(&h).unwrap() - sigma.eval(&h).unwrap()).re;
            if t.is_finite() {
                t * diff.abs()
            } else if diff.abs() > 1e-14 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Densities agreeing with the maximally mixed state on the eigenbasis of `D`.
fn balanced_density(triple: &FiniteSpectralTriple, rng: &mut ChaCha8Rng) -> State {
    let (_, v) = linalg::hermitian_eigen(triple.dirac()).unwrap();
    let n = triple.dim();
    let mut k = linalg::identity(n);
    for i in 0..n {
        k[(i, i)] = c64::new(1.0 / n as f64, 0.0);
        for j in 0..i {
            let z = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (0.4 / (n as f64 * n as f64));
            k[(i, j)] = z;
            k[(j, i)] = z.conj();
        }
    }
    State::new(&v * &k * linalg::dagger(&v)).unwrap()
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> State {
    let mut m = linalg::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let rho = &m * linalg::dagger(&m);
    let tr = linalg::trace(&rho).re;
    State::new(linalg::scaled(&rho, c64::new(1.0 / tr, 0.0))).unwrap()
}

fn distance() -> Outcome {
    let opts = DistanceOptions::default();
    let mut notes = Vec::new();
    let mut pass = true;

    let p0 = State::pure(&[c64::new(1.0, 0.0), c64::new(0.0, 0.0)]).unwrap();
    let p1 = State::pure(&[c64::new(0.0, 0.0), c64::new(1.0, 0.0)]).unwrap();
    let mut family_err: f64 = 0.0;
    for lambda in [0.5, 1.0, 2.0, 4.0] {
        let triple = FiniteSpectralTriple::two_point(lambda).unwrap();
        let d = connes_distance(&triple, &p0, &p1, opts).unwrap().value.finite().unwrap_or(f64::INFINITY);
        let oracle = two_point_oracle(&triple, &p0, &p1);
        family_err = family_err.max((d - 1.0 / lambda).abs()).max((oracle - 1.0 / lambda).abs());
    }
    pass &= family_err <= 1e-6;
    notes.push(format!("two-point family err {family_err:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sym: f64 = 0.0;
    let mut tri = f64::INFINITY;
    let mut triples = 0;
    let systems = [
        FiniteSpectralTriple::two_point(1.5).unwrap(),
        FiniteSpectralTriple::clock_shift(&[1.0, -0.5, 2.0]).unwrap(),
    ];
    for (which, triple) in systems.iter().enumerate() {
        for _ in 0..30 {
            let s: Vec<State> = (0..3)
                .map(|_| if which == 0 { random_density(2, &mut rng) } else { balanced_density(triple, &mut rng) })
                .collect();
            let mut d = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        match connes_distance(triple, &s[i], &s[j], opts).unwrap().value {
                            DistanceValue::Finite(v) => d[i][j] = v,
                            DistanceValue::Unbounded => return outcome(false, "sampled pair unexpectedly unbounded".into()),
                        }
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    sym = sym.max((d[i][j] - d[j][i]).abs());
                    for k in 0..3 {
                        if i != j && j != k && i != k {
                            tri = tri.min(d[i][j] + d[j][k] - d[i][k]);
                        }
                    }
                }
            }
            triples += 1;
        }
    }
    pass &= sym <= 2.0 * opts.tol && tri >= -3.0 * opts.tol && triples >= 50;
    notes.push(format!("{triples} triples, max asymmetry {sym:.1e}, min triangle slack {tri:.1e}"));

    let zero = FiniteSpectralTriple::new(
        linalg::zeros(2, 2),
        FiniteSpectralTriple::two_point(1.0).unwrap().basis().to_vec(),
    )
    .unwrap();
    let unbounded = matches!(connes_distance(&zero, &p0, &p1, opts).unwrap().value, DistanceValue::Unbounded);
    pass &= unbounded;
    notes.push(format!("D = 0 unbounded: {unbounded}"));
    outcome(pass, notes.join("; "))
}

fn kernels_psd() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for name in DEMOS {
        let exp = demo(name);
        for r in grid_radii(&exp) {
            let ball = exp.system.group.ball(r, DEFAULT_DIM_CAP).unwrap();
            let eigs: Vec<f64> = exp
                .states
                .par_iter()
                .map(|(_, phi)| schur_kernel(&exp.system.group, phi, &ball).unwrap().min_eigenvalue)
                .collect();
            count += eigs.len();
            worst = eigs.into_iter().fold(worst, f64::min);
        }
    }
    outcome(worst >= -1e-10, format!("{count} kernels, min eigenvalue {worst:.2e}"))
}

fn run_cli(out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_crossed-triple"))
        .env("SOURCE_DATE_EPOCH", "0")
        .args(["run", "--config", "demo:two-point-swap", "--suite", "all", "--out"])
        .arg(out)
        .stdout(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn monotone_and_deterministic() -> Outcome {
    let mut worst_drop: f64 = 0.0;
    let mut profiles = 0;
    for name in DEMOS {
        let exp = demo(name);
        let radii: Vec<u32> = if exp.system.group.is_abelian() { (1..=6).collect() } else { (1..=4).collect() };
        let inner = exp.system.window(1, DEFAULT_DIM_CAP).unwrap();
        for (_, f) in &exp.elements {
            if !f.support().all(|s| inner.ball().contains(s)) {
                continue;
            }
            let p = compression_profile(&exp.system, f, &radii, DEFAULT_DIM_CAP).unwrap();
            for series in [&p.norms, &p.plus, &p.minus] {
                worst_drop = series.windows(2).map(|w| w[0] - w[1]).fold(worst_drop, f64::max);
                profiles += 1;
            }
        }
        let ball = exp.system.group.ball(*radii.last().unwrap(), DEFAULT_DIM_CAP).unwrap();
        for b in exp.system.triple.basis() {
            let prof = exp.system.action.bound_profile(&exp.system.triple, b, &ball).unwrap();
            let sups: Vec<f64> = radii.iter().map(|&r| prof.sup_within(&ball, r)).collect();
            worst_drop = sups.windows(2).map(|w| w[0] - w[1]).fold(worst_drop, f64::max);
            profiles += 1;
        }
    }

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ran = run_cli(a.path()) && run_cli(b.path());
    let mut identical = ran;
    let mut files = 0;
    if ran {
        for entry in std::fs::read_dir(a.path()).unwrap() {
            let path = entry.unwrap().path();
            let other = b.path().join(path.file_name().unwrap());
            identical &= std::fs::read(&path).ok() == std::fs::read(&other).ok();
            files += 1;
        }
    }
    outcome(
        worst_drop <= 1e-10 && identical && files > 0,
        format!("{profiles} profiles, max decrease {worst_drop:.2e}; {files} output files byte-identical: {identical}"),
    )
}

fn main() {
    faer::set_global_parallelism(faer::Par::Seq);
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("spectrum", spectrum),
        ("contractivity", contractivity),
        ("abelian-isometry", abelian_isometry),
        ("norm-bounds", norm_bounds),
        ("coaction-identity", coaction),
        ("connes-distance", distance),
        ("kernel-psd", kernels_psd),
        ("monotone-deterministic", monotone_and_deterministic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {} {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
