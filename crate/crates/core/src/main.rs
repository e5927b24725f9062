use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crossed_triple::config::{Experiment, ExperimentConfig, RNG_NAME};
use crossed_triple::report::{sha256_hex, timestamp, Metadata, Report, Row, Table};
use crossed_triple::suites::{parse_selector, run_suite, sweep};
use crossed_triple::Error;

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 1;

/// Numerical checks for truncated crossed products of spectral triples.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// Worker threads for the parameter grids (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the config's maximum matrix dimension.
    #[arg(long, global = true)]
    cap_dim: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one suite, or `all`.
    Run {
        /// JSON config path, or `demo:<name>` for a built-in demo.
        #[arg(long)]
        config: String,
        /// spectrum | bounds | contractivity | abelian-isometry | coaction-identity | distance | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, env = "CROSSED_TRIPLE_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Tabulate norms and slacks across the configured radii.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, env = "CROSSED_TRIPLE_OUT", default_value = "out")]
        out: PathBuf,
    },
}

struct Loaded {
    exp: Experiment,
    hash: String,
}

fn load(path: &str, cap: Option<usize>) -> Result<Loaded, Error> {
    let (mut cfg, text) = ExperimentConfig::load(path)?;
    if let Some(cap) = cap {
        cfg.caps.max_dim = cap;
    }
    let exp = cfg.build()?;
    Ok(Loaded {
        exp,
        hash: sha256_hex(text.as_bytes()),
    })
}

fn metadata(command: &str, name: &str, hash: &str, seed: u64, suites: Vec<String>) -> Metadata {
    Metadata {
        name: name.to_string(),
        command: command.to_string(),
        config_hash: hash.to_string(),
        version: format!("crossed-triple {}; faer 0.24", env!("CARGO_PKG_VERSION")),
        seed,
        rng: RNG_NAME.to_string(),
        suites,
        generated_at: timestamp(),
    }
}

/// Writes a report carrying only the error, for failures before any suite ran.
fn error_report(command: &str, config: &str, out: &Path, err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    let meta = metadata(command, config, "", 0, Vec::new());
    let report = Report::new(meta, Vec::new(), BTreeMap::new(), Some(err.to_string()));
    if let Err(e) = report.write(out, &[]) {
        eprintln!("error: could not write report: {e}");
    }
    ExitCode::from(EXIT_ERROR)
}

fn finish(report: &Report, out: &Path, tables: &[Table]) -> ExitCode {
    for (suite, s) in &report.summary {
        println!("{suite:<18} {:<7} {}/{} rows pass", s.verdict, s.passed, s.rows);
    }
    match report.write(out, tables) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: could not write report: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    if let Some(err) = &report.error {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_ERROR);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} checks failed", report.failures());
        ExitCode::from(EXIT_FAIL)
    }
}

fn run(config: &str, suite: &str, out: &Path, cap: Option<usize>) -> ExitCode {
    let suites = match parse_selector(suite) {
        Ok(s) => s,
        Err(e) => return error_report("run", config, out, &e),
    };
    let Loaded { exp, hash } = match load(config, cap) {
        Ok(l) => l,
        Err(e) => return error_report("run", config, out, &e),
    };
    let names = suites.iter().map(|s| s.name().to_string()).collect();
    let meta = metadata("run", &exp.name, &hash, exp.seed, names);
    let mut rows: Vec<Row> = Vec::new();
    let mut tables = Vec::new();
    let mut notes = BTreeMap::new();
    let mut error = None;
    for s in suites {
        log::info!("running {s}");
        match run_suite(&exp, s) {
            Ok(o) => {
                rows.extend(o.rows);
                tables.extend(o.tables);
                if let Some(n) = o.note {
                    notes.insert(s.name().to_string(), n);
                }
            }
            Err(e) => {
                error = Some(format!("{s}: {e}"));
                break;
            }
        }
    }
    let report = Report::new(meta, rows, notes, error);
    finish(&report, out, &tables)
}

fn run_sweep(config: &str, out: &Path, cap: Option<usize>) -> ExitCode {
    let Loaded { exp, hash } = match load(config, cap) {
        Ok(l) => l,
        Err(e) => return error_report("sweep", config, out, &e),
    };
    let meta = metadata("sweep", &exp.name, &hash, exp.seed, vec!["sweep".into()]);
    let (rows, tables, error) = match sweep(&exp) {
        Ok(s) => (s.rows, vec![s.table], None),
        Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
    };
    let report = Report::new(meta, rows, BTreeMap::new(), error);
    finish(&report, out, &tables)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match &cli.command {
        Command::Run { config, suite, out } => run(config, suite, out, cli.cap_dim),
        Command::Sweep { config, out } => run_sweep(config, out, cli.cap_dim),
    }
}
