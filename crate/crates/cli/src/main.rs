use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conelab_cli::commands;
use conelab_cli::config::parse_config;
use conelab_cli::CliError;

/// Cone-criterion and regularity diagnostics for elliptic problems on
/// semialgebraic domains.
#[derive(Parser)]
#[command(name = "conelab", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the boundary cone criterion at configured points.
    CheckCone(CommonArgs),
    /// Solve the boundary problem (2D mesh solver, 3D sphere walk).
    Solve(CommonArgs),
    /// Estimate the critical gradient-integrability exponent at points.
    EstimateP(CommonArgs),
    /// Measure slice Poincare ratios near a boundary stratum.
    SlicePoincare(CommonArgs),
    /// Build and write the 2D triangulation without solving.
    MeshExport(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured analysis points (repeatable), "x,y[,z]".
    #[arg(long = "point")]
    points: Vec<String>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(name: &str, args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg = parse_config(&args.config)?;
    if !args.points.is_empty() {
        let mut pts = Vec::new();
        for s in &args.points {
            pts.push(commands::parse_cli_point(s)?);
        }
        cfg.analysis.points = pts;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        cfg.analysis.seed = seed;
    }
    commands::run(name, cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::CheckCone(a) => ("check-cone", a),
        Command::Solve(a) => ("solve", a),
        Command::EstimateP(a) => ("estimate-p", a),
        Command::SlicePoincare(a) => ("slice-poincare", a),
        Command::MeshExport(a) => ("mesh-export", a),
    };
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
