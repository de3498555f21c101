use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use starkscat::commands::{self, Command, Extras};
use starkscat::config::{ExperimentConfig, Profile};

/// Numerical checks for stationary Stark scattering.
#[derive(Parser, Debug)]
#[command(name = "starkscat", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Full)]
    profile: ProfileArg,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
enum Cmd {
    /// Parabolic identities, eikonal property, Laplacian identity.
    Parabolic,
    /// Perturbed orbit, energy conservation, asymptotic momenta.
    Orbit,
    /// Free-flow invariance of X±_ε and the classical Mourre estimate.
    Invariance,
    /// Transport residuals, decay exponents, Borel cutoffs.
    Symbols,
    /// Cubic-phase integral against Airy; free eigenfunction.
    Eigenfunction,
    /// Leading stationary-phase asymptotics and Hessian convergence.
    StationaryPhaseCheck,
    /// Constants, principal symbol, kernel, Born refinement.
    BornKernel,
    /// Power-law fit of a kernel.
    SingularityFit {
        /// Kernel CSV with columns s, ReT, ImT; computed when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Exponent used for the coefficient; the fitted one when absent.
        #[arg(long, allow_hyphen_values = true)]
        pin: Option<f64>,
    },
    /// All acceptance criteria.
    Suite,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ProfileArg {
    Quick,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprint!("{e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Err(e) = cfg.validate() {
        eprint!("{e}");
        return ExitCode::from(2);
    }
    let (command, extras) = match cli.command {
        Cmd::Parabolic => (Command::Parabolic, Extras::default()),
        Cmd::Orbit => (Command::Orbit, Extras::default()),
        Cmd::Invariance => (Command::Invariance, Extras::default()),
        Cmd::Symbols => (Command::Symbols, Extras::default()),
        Cmd::Eigenfunction => (Command::Eigenfunction, Extras::default()),
        Cmd::StationaryPhaseCheck => (Command::StationaryPhaseCheck, Extras::default()),
        Cmd::BornKernel => (Command::BornKernel, Extras::default()),
        Cmd::SingularityFit { input, pin } => (Command::SingularityFit, Extras { input, pin }),
        Cmd::Suite => (Command::Suite, Extras::default()),
    };
    let profile = match cli.profile {
        ProfileArg::Quick => Profile::Quick,
        ProfileArg::Full => Profile::Full,
    };
    match commands::run(command, &cfg, profile, &extras) {
        Ok(report) => {
            print!("{}", report.summary());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
