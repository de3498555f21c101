//! Configuration, orchestration and reporting for the starkscat checks.

pub mod checks;
pub mod commands;
pub mod config;
pub mod report;
pub mod rng;
