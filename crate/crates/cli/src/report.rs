//! Run reports and atomic artifact output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use starkscat_core::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Acceptance criterion number, if the check is one.
    pub criterion: Option<u32>,
    pub status: Status,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    /// Failure caused by a numerical accuracy or integration error rather
    /// than by a violated inequality.
    pub numeric_error: bool,
    /// Excluded from the JSON so that reports are reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl CheckResult {
    pub fn new(name: &str, criterion: Option<u32>) -> Self {
        CheckResult {
            name: name.into(),
            criterion,
            status: Status::Pass,
            detail: String::new(),
            metrics: BTreeMap::new(),
            numeric_error: false,
            seconds: 0.0,
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self
    }

    /// Marks a failed inequality; the first reason is kept in `detail`.
    pub fn require(&mut self, ok: bool, reason: impl FnOnce() -> String) -> &mut Self {
        if !ok && self.status != Status::Fail {
            self.status = Status::Fail;
            self.detail = reason();
        }
        self
    }

    pub fn skip(&mut self, reason: &str) -> &mut Self {
        self.status = Status::Skip;
        self.detail = format!("skip: {reason}");
        self
    }

    /// Records a module error as a failure.
    pub fn error(&mut self, context: &str, e: &Error) -> &mut Self {
        self.status = Status::Fail;
        self.numeric_error = is_numeric(e);
        self.detail = format!("{context}: {e}");
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

pub fn is_numeric(e: &Error) -> bool {
    matches!(
        e,
        Error::Accuracy { .. } | Error::Integration { .. } | Error::Divergence { .. } | Error::Construction { .. }
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub wall_time_s: f64,
}

impl RunReport {
    /// 0 pass, 1 check failure, 3 numeric-accuracy failure.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| !c.passed() && c.numeric_error) {
            3
        } else if self.checks.iter().any(|c| !c.passed()) {
            1
        } else {
            0
        }
    }

    /// JSON without the wall time, identical across runs with the same seed.
    pub fn deterministic_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_time_s");
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            let id = c.criterion.map(|n| format!("[{n:>2}] ")).unwrap_or_default();
            s.push_str(&format!("{tag} {id}{} ({:.2} s) {}\n", c.name, c.seconds, c.detail));
        }
        s
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// A CSV table with a mandatory header row, written atomically.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    pub fn row(&mut self, values: &[f64]) {
        // `{}` on f64 prints the shortest round-tripping decimal with '.'
        let cells: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        self.writer.write_record(&cells).expect("in-memory write");
    }

    pub fn text_row(&mut self, cells: &[&str]) {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn write(self, path: &Path) -> Result<()> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        write_atomic(path, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_status() {
        let mut r = RunReport {
            command: "t".into(),
            config_hash: String::new(),
            seed: 0,
            checks: vec![CheckResult::new("a", None)],
            wall_time_s: 1.0,
        };
        assert_eq!(r.exit_code(), 0);
        r.checks.push(CheckResult::new("b", Some(1)));
        r.checks[1].require(false, || "bad".into());
        assert_eq!(r.exit_code(), 1);
        r.checks[0].error(
            "op",
            &Error::Accuracy {
                op: "q",
                achieved: 1.0,
                requested: 0.1,
            },
        );
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn skip_is_not_failure() {
        let mut c = CheckResult::new("s", None);
        c.skip("no singular part");
        assert!(c.passed());
        assert_eq!(c.detail, "skip: no singular part");
    }

    #[test]
    fn deterministic_json_drops_wall_time() {
        let mut r = RunReport {
            command: "t".into(),
            config_hash: "h".into(),
            seed: 1,
            checks: vec![],
            wall_time_s: 1.0,
        };
        let a = r.deterministic_json();
        r.wall_time_s = 2.0;
        assert_eq!(a, r.deterministic_json());
        assert!(!a.contains("wall_time"));
    }

    #[test]
    fn table_uses_newlines_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["s", "value"]);
        t.row(&[0.5, -1.25e-3]);
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "s,value\n0.5,-0.00125\n");
    }
}
