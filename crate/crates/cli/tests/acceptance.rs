//! Acceptance criteria 1-13 at their stated tolerances and runtime budgets,
//! with the default configuration (regularized Coulomb, κ = 1, d = 3).

use starkscat::checks::{criterion, CRITERIA};
use starkscat::config::ExperimentConfig;
use starkscat::report::Status;

/// Stated runtime budget in seconds, where one is given.
fn budget(n: u32) -> Option<f64> {
    match n {
        1 => Some(1.0),
        2 => Some(5.0),
        4 => Some(30.0),
        5 => Some(120.0),
        7 => Some(10.0),
        8 => Some(300.0),
        9 => Some(1.0),
        11 => Some(300.0),
        _ => None,
    }
}

#[test]
fn acceptance_criteria() {
    let cfg = ExperimentConfig::default();
    let mut failures = Vec::new();
    for n in 1..=CRITERIA {
        let out = criterion(n, &cfg);
        let c = &out.check;
        let within = budget(n).map_or(true, |b| c.seconds < b);
        let ok = c.status == Status::Pass && within;
        let metrics: Vec<String> = c.metrics.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        println!(
            "criterion {n:>2} {}: {} ({:.2} s{}) {} [{}]",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            budget(n).map(|b| format!(" of {b} s")).unwrap_or_default(),
            c.detail,
            metrics.join(", ")
        );
        if !ok {
            failures.push(n);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
