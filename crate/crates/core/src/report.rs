//! Machine-readable reports: versioned JSON plus CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One verified inequality or identity.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub suite: String,
    pub check: String,
    pub inputs: BTreeMap<String, String>,
    /// `"<="`, `">="` or `"mismatch"` (`lhs` is a distance, `rhs` its tolerance).
    pub relation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Row {
    fn base(suite: &str, check: &str, inputs: &[(&str, String)]) -> Self {
        Row {
            suite: suite.to_string(),
            check: check.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            relation: "<=",
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            pass: true,
        }
    }

    /// `lhs <= rhs + tol`
    pub fn le(suite: &str, check: &str, inputs: &[(&str, String)], lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Row {
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
            ..Self::base(suite, check, inputs)
        }
    }

    /// `lhs >= rhs`
    pub fn ge(suite: &str, check: &str, inputs: &[(&str, String)], lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Row {
            relation: ">=",
            lhs,
            rhs,
            slack,
            pass: slack >= 0.0,
            ..Self::base(suite, check, inputs)
        }
    }

    /// `value <= tol`
    pub fn mismatch(suite: &str, check: &str, inputs: &[(&str, String)], value: f64, tol: f64) -> Self {
        Row {
            relation: "mismatch",
            lhs: value,
            rhs: tol,
            slack: tol - value,
            pass: value <= tol,
            ..Self::base(suite, check, inputs)
        }
    }

    /// Data without an assertion attached.
    pub fn info(suite: &str, check: &str, inputs: &[(&str, String)], lhs: f64, rhs: f64) -> Self {
        Row {
            relation: "info",
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: true,
            ..Self::base(suite, check, inputs)
        }
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = self.pass && pass;
        self
    }

    pub fn inputs_key(&self) -> String {
        self.inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn sort_key(&self) -> (String, String, String) {
        (self.suite.clone(), self.check.clone(), self.inputs_key())
    }
}

/// A named CSV table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn sorted(mut self) -> Self {
        self.rows.sort();
        self
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteSummary {
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    /// `"pass"`, `"fail"` or `"skipped"`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub name: String,
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub rng: String,
    pub suites: Vec<String>,
    /// Seconds since the Unix epoch; not part of `content_hash`.
    pub generated_at: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub metadata: Metadata,
    pub summary: BTreeMap<String, SuiteSummary>,
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub content_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the wall clock.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Report {
    /// Sorts rows, fills the summary (suites without rows are marked skipped
    /// unless listed in `notes`) and computes the content hash.
    pub fn new(
        metadata: Metadata,
        mut rows: Vec<Row>,
        notes: BTreeMap<String, String>,
        error: Option<String>,
    ) -> Self {
        rows.sort_by_key(Row::sort_key);
        let mut summary: BTreeMap<String, SuiteSummary> = metadata
            .suites
            .iter()
            .map(|s| (s.clone(), SuiteSummary::default()))
            .collect();
        for r in &rows {
            let e = summary.entry(r.suite.clone()).or_default();
            e.rows += 1;
            if r.pass {
                e.passed += 1;
            } else {
                e.failed += 1;
            }
        }
        for (name, s) in summary.iter_mut() {
            s.verdict = match (s.rows, s.failed) {
                (0, _) => "skipped",
                (_, 0) => "pass",
                _ => "fail",
            }
            .to_string();
            s.note = notes.get(name).cloned();
        }
        let mut report = Report {
            schema: SCHEMA_VERSION,
            metadata,
            summary,
            rows,
            error,
            content_hash: String::new(),
        };
        report.content_hash = report.compute_hash();
        report
    }

    fn compute_hash(&self) -> String {
        let mut clone = self.clone();
        clone.metadata.generated_at = 0;
        clone.content_hash = String::new();
        let bytes = serde_json::to_vec(&clone).expect("report serialization");
        sha256_hex(&bytes)
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn rows_table(&self) -> Table {
        let mut t = Table::new("rows", &["suite", "check", "inputs", "relation", "lhs", "rhs", "slack", "pass"]);
        for r in &self.rows {
            t.push(vec![
                r.suite.clone(),
                r.check.clone(),
                r.inputs_key(),
                r.relation.to_string(),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.slack),
                r.pass.to_string(),
            ]);
        }
        t
    }

    /// Writes `report.json`, `rows.csv` and any extra tables into `dir`.
    pub fn write(&self, dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&json_path, text)?;
        let mut written = vec![json_path, self.rows_table().write(dir)?];
        for t in tables {
            written.push(t.write(dir)?);
        }
        Ok(written)
    }
}

/// Shortest round-trip representation; `inf`/`NaN` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata {
            name: "t".into(),
            command: "run".into(),
            config_hash: "abc".into(),
            version: "0".into(),
            seed: 1,
            rng: "ChaCha8".into(),
            suites: vec!["a".into(), "b".into()],
            generated_at: 5,
        }
    }

    #[test]
    fn row_constructors() {
        let r = Row::le("s", "c", &[], 1.0, 2.0, 0.0);
        assert!(r.pass && r.slack == 1.0);
        assert!(!Row::le("s", "c", &[], 2.0, 1.0, 1e-9).pass);
        assert!(Row::le("s", "c", &[], 1.0 + 1e-12, 1.0, 1e-9).pass);
        assert!(Row::mismatch("s", "c", &[], 1e-11, 1e-10).pass);
        assert!(!Row::ge("s", "c", &[], -1.0, 0.0).pass);
    }

    #[test]
    fn hash_ignores_timestamp_and_row_order() {
        let rows = vec![
            Row::le("a", "x", &[("R", "2".into())], 1.0, 2.0, 0.0),
            Row::le("a", "x", &[("R", "1".into())], 1.0, 2.0, 0.0),
        ];
        let mut reversed = rows.clone();
        reversed.reverse();
        let r1 = Report::new(meta(), rows, BTreeMap::new(), None);
        let mut m2 = meta();
        m2.generated_at = 99;
        let r2 = Report::new(m2, reversed, BTreeMap::new(), None);
        assert_eq!(r1.content_hash, r2.content_hash);
        assert_eq!(r1.summary["a"].verdict, "pass");
        assert_eq!(r1.summary["b"].verdict, "skipped");
        assert_eq!(r1.rows[0].inputs["R"], "1");
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = Report::new(meta(), vec![Row::mismatch("a", "m", &[], 0.0, 1e-10)], BTreeMap::new(), None);
        let mut t = Table::new("extra", &["x", "y"]);
        t.push(vec!["1".into(), "2".into()]);
        let files = report.write(dir.path(), &[t]).unwrap();
        assert_eq!(files.len(), 3);
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        let csv = std::fs::read_to_string(dir.path().join("extra.csv")).unwrap();
        assert_eq!(csv, "x,y\n1,2\n");
    }
}
