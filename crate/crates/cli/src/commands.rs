//! Command dispatch: which checks each command runs and where artifacts go.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;

use crate::checks::{self, Outcome};
use crate::config::{ExperimentConfig, Profile};
use crate::report::{write_atomic, RunReport, Status, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Parabolic,
    Orbit,
    Invariance,
    Symbols,
    Eigenfunction,
    StationaryPhaseCheck,
    BornKernel,
    SingularityFit,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Parabolic => "parabolic",
            Command::Orbit => "orbit",
            Command::Invariance => "invariance",
            Command::Symbols => "symbols",
            Command::Eigenfunction => "eigenfunction",
            Command::StationaryPhaseCheck => "stationary-phase-check",
            Command::BornKernel => "born-kernel",
            Command::SingularityFit => "singularity-fit",
            Command::Suite => "suite",
        }
    }
}

/// Options that only some commands read.
#[derive(Debug, Clone, Default)]
pub struct Extras {
    /// Kernel CSV for `singularity-fit`.
    pub input: Option<PathBuf>,
    /// Pinned exponent for `singularity-fit`.
    pub pin: Option<f64>,
}

/// Runs `command`, writes its artifacts and `<command>.json` under the
/// configured output directory, and returns the report.
pub fn run(command: Command, cfg: &ExperimentConfig, profile: Profile, extras: &Extras) -> Result<RunReport> {
    let start = Instant::now();
    let cfg = cfg.clone().with_profile(profile);
    let outcomes: Vec<Outcome> = match command {
        Command::Parabolic => (1..=3).map(|n| checks::criterion(n, &cfg)).collect(),
        Command::Orbit => checks::orbit_checks(&cfg),
        Command::Invariance => vec![checks::criterion(4, &cfg)],
        Command::Symbols => vec![checks::criterion(5, &cfg), checks::criterion(6, &cfg), checks::cutoff_check(&cfg)],
        Command::Eigenfunction => vec![checks::criterion(7, &cfg), checks::eigenfunction_check(&cfg)],
        Command::StationaryPhaseCheck => vec![checks::criterion(8, &cfg)],
        Command::BornKernel => (9..=13).map(|n| checks::criterion(n, &cfg)).collect(),
        Command::SingularityFit => match &extras.input {
            Some(path) => {
                let (s, values) = read_kernel(path)?;
                vec![checks::fit_from_table(&s, &values, extras.pin)]
            }
            None => vec![checks::kernel_outcome(&cfg)],
        },
        Command::Suite => (1..=checks::CRITERIA).map(|n| checks::criterion(n, &cfg)).collect(),
    };
    let dir = Path::new(&cfg.output.dir);
    let mut report = RunReport {
        command: command.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        checks: Vec::new(),
        wall_time_s: 0.0,
    };
    let mut summary = Table::new(&["criterion", "status", "name", "detail"]);
    for o in outcomes {
        for (name, table) in o.tables {
            table.write(&dir.join(name))?;
        }
        for (name, doc) in o.documents {
            write_atomic(&dir.join(name), serde_json::to_string_pretty(&doc)?.as_bytes())?;
        }
        if let Some(n) = o.check.criterion {
            let status = match o.check.status {
                Status::Pass => "pass",
                Status::Skip => "skip",
                Status::Fail => "fail",
            };
            summary.text_row(&[&n.to_string(), status, &o.check.name, &o.check.detail]);
        }
        report.checks.push(o.check);
    }
    if command == Command::Suite {
        summary.write(&dir.join("suite_summary.csv"))?;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    write_atomic(&dir.join(format!("{}.json", command.name())), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// Reads `s, ReT, ImT[, |T|]` rows.
pub fn read_kernel(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = rd.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(is), Some(ir), Some(ii)) = (col("s"), col("ReT"), col("ImT")) else {
        bail!("{}: kernel CSV needs columns s, ReT, ImT", path.display());
    };
    let mut s = Vec::new();
    let mut v = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i).unwrap_or("").trim().parse::<f64>().with_context(|| format!("bad number in {}", path.display()))
        };
        s.push(num(is)?);
        v.push(Complex64::new(num(ir)?, num(ii)?));
    }
    Ok((s, v))
}
