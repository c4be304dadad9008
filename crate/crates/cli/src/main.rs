//! Command-line driver: one subcommand per library module plus `repro`,
//! which regenerates the data and plots of each experiment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod repro;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ConfigFile, ExperimentConfig, ExperimentId, Overrides};
use crate::error::{CliError, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "ikegmres", version, about = "GMRES convergence analysis for I + K + E")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build one of the example families and write its factors.
    Gen(commands::GenArgs),
    /// Run GMRES on I + K (+ E) and record the residual history.
    Gmres(commands::GmresArgs),
    /// Pseudospectral level curves, eigenvalue condition numbers and disks.
    Pseudo(commands::PseudoArgs),
    /// Pseudospectral residual bounds for perturbed systems.
    Bound(commands::BoundArgs),
    /// Sensitive eigenvalues of I + K from the SVD of K.
    Analyze(commands::AnalyzeArgs),
    /// The preconditioned Broyden experiment on the convection-diffusion problem.
    Pde(commands::PdeArgs),
    /// Reproduce an experiment end to end.
    Repro(ReproArgs),
    /// Render exported CSV files as an SVG plot.
    Plot(commands::PlotArgs),
}

#[derive(Debug, clap::Args)]
struct ReproArgs {
    /// Experiment to run; may instead come from the config file.
    #[arg(value_enum)]
    experiment: Option<ExperimentId>,
    /// TOML file with `experiment`, `output_dir` and an `[overrides]` table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rerun the configuration recorded in a previous manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Output directory, by default `out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn resolve(args: ReproArgs) -> Result<ExperimentConfig, CliError> {
    if let Some(path) = &args.manifest {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read manifest {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_value(value["config"].clone())
            .map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))?;
        if let Some(out) = args.out {
            cfg.output_dir = out;
        }
        return ExperimentConfig::resolve(cfg.experiment, cfg.output_dir.clone(), cfg.into_overrides().overlay(args.overrides));
    }
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile { experiment: None, output_dir: None, overrides: Overrides::default() },
    };
    let experiment = args
        .experiment
        .or(file.experiment)
        .ok_or_else(|| CliError::Validation("no experiment given on the command line or in the config".into()))?;
    let output_dir = args
        .out
        .or(file.output_dir)
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    ExperimentConfig::resolve(experiment, output_dir, file.overrides.overlay(args.overrides))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => commands::gen(&a),
        Command::Gmres(a) => commands::gmres(&a),
        Command::Pseudo(a) => commands::pseudo(&a),
        Command::Bound(a) => commands::bound(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Pde(a) => commands::pde(&a),
        Command::Plot(a) => commands::plot(&a),
        Command::Repro(a) => {
            let cfg = resolve(a)?;
            let manifest = repro::run(&cfg)?;
            println!("{}", manifest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
