//! Experiment configuration: a versioned TOML document.
//!
//! Every section has defaults, so an empty file (apart from
//! `schema_version`) is a valid configuration. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use starkscat_core::classical::Potential;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    20_240_601
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            potential: PotentialConfig::default(),
            problem: ProblemConfig::default(),
            grids: GridConfig::default(),
            tolerances: ToleranceConfig::default(),
            orbit: OrbitConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zero,
    /// Regularized Coulomb, core radius `r0`.
    Coulomb,
    PowerLaw,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub family: Family,
    pub kappa: f64,
    /// Power-law exponent; Coulomb forces 1.
    pub alpha: f64,
    /// Short-range exponent used by the decay checks; defaults to the
    /// largest admissible value for the family.
    pub delta: Option<f64>,
    pub r0: f64,
    /// Gaussian width.
    pub width: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            family: Family::Coulomb,
            kappa: 1.0,
            alpha: 1.0,
            delta: None,
            r0: starkscat_core::classical::COULOMB_CORE,
            width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// Space dimension, 2 to 4.
    pub d: usize,
    /// Weight exponent of `⟨y⟩_m`.
    pub m: u32,
    /// Region opening of `X^±_ε`, in (0, 1).
    pub epsilon: f64,
    /// Energy.
    pub lambda: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            d: 3,
            m: 1,
            epsilon: 0.5,
            lambda: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub parabolic_points: usize,
    pub eikonal_points: usize,
    pub laplacian_points: usize,
    pub invariance_seeds: usize,
    pub invariance_horizon: f64,
    pub invariance_steps: usize,
    pub transport_points: usize,
    pub transport_order_points: usize,
    pub airy_points: usize,
    pub stationary_x: Vec<f64>,
    pub born_scales: Vec<f64>,
    pub kernel_y_max: f64,
    pub per_decade: usize,
    /// Levels of the Borel cutoff sequence built by `symbols`.
    pub symbol_order: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            parabolic_points: 10_000,
            eikonal_points: 1_000,
            laplacian_points: 50,
            invariance_seeds: 10_000,
            invariance_horizon: 100.0,
            invariance_steps: 200,
            transport_points: 100,
            transport_order_points: 5,
            airy_points: 61,
            stationary_x: vec![25.0, 100.0, 400.0, 1600.0],
            born_scales: vec![100.0, 200.0],
            kernel_y_max: 16384.0,
            per_decade: 64,
            symbol_order: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub parabolic: f64,
    pub eikonal: f64,
    pub laplacian: f64,
    pub mourre_slack: f64,
    pub transport: f64,
    pub order_band: f64,
    pub decay_margin: f64,
    pub airy: f64,
    pub slope_band: f64,
    pub constants: f64,
    pub elebnd: f64,
    pub exponent_band: f64,
    pub coefficient: f64,
    pub phase: f64,
    pub drift: f64,
    pub born: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            parabolic: 1e-12,
            eikonal: 1e-6,
            laplacian: 1e-6,
            mourre_slack: 1e-8,
            transport: 1e-3,
            order_band: 0.3,
            decay_margin: 0.1,
            airy: 1e-6,
            slope_band: 0.3,
            constants: 1e-8,
            elebnd: 1e-10,
            exponent_band: 0.05,
            coefficient: 0.05,
            phase: 0.1,
            drift: 0.02,
            born: 0.1,
        }
    }
}

/// Initial point of the `orbit` command; vector components beyond the
/// first are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitConfig {
    pub x: f64,
    pub y: f64,
    pub eta: f64,
    pub zeta: f64,
    pub horizon: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            x: 5.0,
            y: 1.0,
            eta: 1.0,
            zeta: 0.5,
            horizon: 50.0,
            samples: 200,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Quick,
    Full,
}

/// Every violated field with its reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<(String, String)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for (field, reason) in &self.violations {
            writeln!(f, "  {field}: {reason}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
            violations: vec![("config".into(), e.message().to_string())],
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            violations: vec![("config".into(), format!("cannot read {}: {e}", path.display()))],
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form. The output directory does not
    /// affect results and is excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Shrinks the sampling sizes for the quick suite.
    pub fn with_profile(mut self, profile: Profile) -> Self {
        if profile == Profile::Quick {
            let g = &mut self.grids;
            g.parabolic_points = g.parabolic_points.min(1_000);
            g.eikonal_points = g.eikonal_points.min(200);
            g.laplacian_points = g.laplacian_points.min(10);
            g.invariance_seeds = g.invariance_seeds.min(500);
            g.transport_points = g.transport_points.min(10);
            g.transport_order_points = g.transport_order_points.min(2);
            g.airy_points = g.airy_points.min(16);
            g.stationary_x.retain(|&x| x <= 400.0);
        }
        self
    }

    pub fn potential(&self) -> Potential {
        let p = &self.potential;
        match p.family {
            Family::Zero => Potential::Zero,
            Family::Coulomb => Potential::PowerLaw {
                kappa: p.kappa,
                alpha: 1.0,
                r0: p.r0,
                delta: self.delta(),
            },
            Family::PowerLaw => Potential::PowerLaw {
                kappa: p.kappa,
                alpha: p.alpha,
                r0: p.r0,
                delta: self.delta(),
            },
            Family::Gaussian => Potential::Gaussian {
                kappa: p.kappa,
                width: p.width,
            },
        }
    }

    /// Largest admissible short-range exponent of the family.
    fn max_delta(&self) -> f64 {
        match self.potential.family {
            Family::Coulomb => 0.5,
            Family::PowerLaw => (self.potential.alpha - 0.5).min(0.5),
            Family::Zero | Family::Gaussian => 0.5,
        }
    }

    pub fn delta(&self) -> f64 {
        self.potential.delta.unwrap_or_else(|| self.max_delta())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut bad = |field: &str, reason: &str| v.push((field.into(), reason.into()));
        if self.schema_version != SCHEMA_VERSION {
            bad("schema_version", "unsupported schema version (expected 1)");
        }
        let p = &self.potential;
        if !p.kappa.is_finite() {
            bad("potential.kappa", "must be finite");
        }
        if p.family == Family::PowerLaw && !(p.alpha > 0.5 && p.alpha.is_finite()) {
            bad("potential.alpha", "short range needs alpha > 1/2");
        }
        if matches!(p.family, Family::Coulomb | Family::PowerLaw) && !(p.r0 >= 0.0 && p.r0.is_finite()) {
            bad("potential.r0", "core radius must be finite and nonnegative");
        }
        if p.family == Family::Gaussian && !(p.width > 0.0 && p.width.is_finite()) {
            bad("potential.width", "must be positive");
        }
        if let Some(d) = p.delta {
            if !(d > 0.0 && d <= self.max_delta()) {
                bad("potential.delta", "must lie in (0, max admissible delta] for the family");
            }
        }
        let pr = &self.problem;
        if !(2..=4).contains(&pr.d) {
            bad("problem.d", "dimension must be 2, 3 or 4");
        }
        if pr.m == 0 {
            bad("problem.m", "must be a positive integer");
        }
        if !(pr.epsilon > 0.0 && pr.epsilon < 1.0) {
            bad("problem.epsilon", "must lie in (0, 1)");
        }
        if !pr.lambda.is_finite() {
            bad("problem.lambda", "must be finite");
        }
        let g = &self.grids;
        for (name, n) in [
            ("grids.parabolic_points", g.parabolic_points),
            ("grids.eikonal_points", g.eikonal_points),
            ("grids.laplacian_points", g.laplacian_points),
            ("grids.invariance_seeds", g.invariance_seeds),
            ("grids.invariance_steps", g.invariance_steps),
            ("grids.transport_points", g.transport_points),
            ("grids.transport_order_points", g.transport_order_points),
        ] {
            if n == 0 {
                bad(name, "must be at least 1");
            }
        }
        if g.airy_points < 2 {
            bad("grids.airy_points", "must be at least 2");
        }
        if !(g.invariance_horizon > 0.0 && g.invariance_horizon.is_finite()) {
            bad("grids.invariance_horizon", "must be positive");
        }
        if g.stationary_x.len() < 2 || g.stationary_x.iter().any(|&x| !(x > 1.0 && x.is_finite())) {
            bad("grids.stationary_x", "need at least two finite values above 1");
        }
        if g.born_scales.len() < 2 || g.born_scales.iter().any(|&x| !(x >= 1.0 && x.is_finite())) {
            bad("grids.born_scales", "need at least two finite scales >= 1");
        }
        if !(g.kernel_y_max >= 64.0 && g.kernel_y_max.is_finite()) {
            bad("grids.kernel_y_max", "must be at least 64");
        }
        if g.per_decade < 8 {
            bad("grids.per_decade", "must be at least 8");
        }
        if g.symbol_order == 0 || g.symbol_order > 4 {
            bad("grids.symbol_order", "must be 1 to 4");
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("tolerances.parabolic", t.parabolic),
            ("tolerances.eikonal", t.eikonal),
            ("tolerances.laplacian", t.laplacian),
            ("tolerances.mourre_slack", t.mourre_slack),
            ("tolerances.transport", t.transport),
            ("tolerances.order_band", t.order_band),
            ("tolerances.decay_margin", t.decay_margin),
            ("tolerances.airy", t.airy),
            ("tolerances.slope_band", t.slope_band),
            ("tolerances.constants", t.constants),
            ("tolerances.elebnd", t.elebnd),
            ("tolerances.exponent_band", t.exponent_band),
            ("tolerances.coefficient", t.coefficient),
            ("tolerances.phase", t.phase),
            ("tolerances.drift", t.drift),
            ("tolerances.born", t.born),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                bad(name, "must be finite and nonnegative");
            }
        }
        let o = &self.orbit;
        if ![o.x, o.y, o.eta, o.zeta].iter().all(|v| v.is_finite()) {
            bad("orbit", "initial point must be finite");
        }
        if !(o.horizon > 0.0 && o.horizon.is_finite()) {
            bad("orbit.horizon", "must be positive");
        }
        if o.samples == 0 {
            bad("orbit.samples", "must be at least 1");
        }
        if !(o.tol > 0.0 && o.tol < 1.0) {
            bad("orbit.tol", "must lie in (0, 1)");
        }
        if self.output.dir.is_empty() {
            bad("output.dir", "must not be empty");
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: v })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("schema_version = 1\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn epsilon_out_of_range_is_named() {
        let err = ExperimentConfig::from_toml("schema_version = 1\n[problem]\nepsilon = 1.5\n").unwrap_err();
        assert!(err.violations.iter().any(|(f, _)| f == "problem.epsilon"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "schema_version = 2\n[problem]\nepsilon = 1.5\nd = 7\n[potential]\nfamily = \"gaussian\"\nwidth = -1.0\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        let fields: Vec<&str> = err.violations.iter().map(|(f, _)| f.as_str()).collect();
        for f in ["schema_version", "problem.epsilon", "problem.d", "potential.width"] {
            assert!(fields.contains(&f), "{fields:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("schema_version = 1\nfoo = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("schema_version = 1\n[problem]\nmu = 3\n").is_err());
    }

    #[test]
    fn missing_schema_version_is_rejected() {
        assert!(ExperimentConfig::from_toml("seed = 1\n").is_err());
    }

    #[test]
    fn quick_profile_only_shrinks() {
        let full = ExperimentConfig::default();
        let quick = full.clone().with_profile(Profile::Quick);
        assert!(quick.grids.parabolic_points <= full.grids.parabolic_points);
        assert_eq!(quick.grids.stationary_x, vec![25.0, 100.0, 400.0]);
        assert_eq!(quick.tolerances, full.tolerances);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
