//! Command-line driver: configuration parsing, run dispatch and artifact
//! emission for the `gibbs-geom` binary.
//!
//! Exit codes: 0 success, 1 other failure, 2 clan explosion, 3 invalid
//! configuration, 4 infeasible rejection oracle.

mod config;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{
    parse_config, parse_config_str, ConfigErrors, DiagnoseSpec, EstimateSpec, ExperimentSpec,
    FunctionalSpec, MarginSpec, Mode, PotentialSpec, Quantity, RunConfig, SamplerSpec,
    FUNCTIONAL_TYPES, POTENTIAL_TYPES,
};
pub use run::{run, Phase, RunReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] gibbs_geom::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use gibbs_geom::Error as E;
        match self {
            RunError::Config(_) => 3,
            RunError::Core(E::ClanExplosion(_)) => 2,
            RunError::Core(E::InfeasibleOracle { .. }) => 4,
            RunError::Core(
                E::InvalidInput(_)
                | E::UnsupportedDimension(_)
                | E::NonHardCore(_)
                | E::DensityFloor { .. },
            ) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gibbs-geom", version, about = "Perfect sampling of Gibbs point processes and limit experiments for stabilizing functionals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw perfect samples; writes points.csv, samples.csv and report.json.
    Sample(Args),
    /// Estimate the limit constants E and V of each functional.
    Estimate(Args),
    /// Run a law of large numbers, variance or normality experiment.
    Experiment(Args),
    /// Clan-diameter, empty-ball and stabilization diagnostics.
    Diagnose(Args),
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// JSON run configuration.
    #[arg(short = 'c', long = "config")]
    pub config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the config value, then to all cores.
    #[arg(long, env = "GIBBS_GEOM_THREADS")]
    pub threads: Option<usize>,
    /// Artifact directory; overrides the config (default: current directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (Mode, &Args) {
        match self {
            Command::Sample(a) => (Mode::Sample, a),
            Command::Estimate(a) => (Mode::Estimate, a),
            Command::Experiment(a) => (Mode::Experiment, a),
            Command::Diagnose(a) => (Mode::Diagnose, a),
        }
    }
}

/// Parses the config, applies the command-line overrides and runs it.
pub fn execute(cli: &Cli) -> Result<RunReport, RunError> {
    let (mode, args) = cli.command.parts();
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.threads == Some(0) {
        return Err(ConfigErrors(vec!["threads: must be positive".into()]).into());
    }
    let threads = args
        .threads
        .or(cfg.threads)
        .unwrap_or_else(rayon::current_num_threads);
    let out = args
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    run(&cfg, mode, &out, threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        use gibbs_geom::Error as E;
        let code = |e: E| RunError::from(e).exit_code();
        assert_eq!(code(E::ClanExplosion("x".into())), 2);
        assert_eq!(code(E::InfeasibleOracle { proposals: 1, accepted: 0 }), 4);
        assert_eq!(code(E::InvalidInput("x".into())), 3);
        assert_eq!(code(E::InsufficientData("x".into())), 1);
        assert_eq!(RunError::Config(ConfigErrors(vec![])).exit_code(), 3);
        assert_eq!(RunError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "gibbs-geom", "experiment", "-c", "cfg.json", "--seed", "7", "--threads", "2",
            "--out-dir", "out",
        ])
        .unwrap();
        let (mode, a) = cli.command.parts();
        assert_eq!(mode, Mode::Experiment);
        assert_eq!(a.seed, Some(7));
        assert_eq!(a.threads, Some(2));
        assert_eq!(a.out_dir.as_deref(), Some(std::path::Path::new("out")));
    }
}
