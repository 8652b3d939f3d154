use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fieldatlas::commands::{
    self, EvaluateArgs, LearnArgs, RenderArgs, SimulateArgs,
};

/// Learns static attractive areas from agent trajectories.
#[derive(Parser)]
#[command(name = "fieldatlas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory dataset from a scenario.
    Simulate(SimulateCli),
    /// Learn an attractor atlas from a trajectory CSV.
    Learn(LearnCli),
    /// Compare one or more atlases against scenario ground truth.
    Evaluate(EvaluateCli),
    /// Rasterize the intensity map of an atlas.
    Render(RenderCli),
}

#[derive(Args)]
struct SimulateCli {
    /// Scenario JSON; defaults to the built-in three-attractor scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Run configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset seed (mandatory; replaces the scenario's seed).
    #[arg(long)]
    seed: u64,
    /// Signal-to-noise ratio override.
    #[arg(long)]
    snr: Option<f64>,
    /// Trajectory count override.
    #[arg(long = "n-trajectories")]
    n_trajectories: Option<usize>,
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnCli {
    /// Input trajectory CSV.
    #[arg(long)]
    input: PathBuf,
    /// Run configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clustering seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output atlas JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateCli {
    /// Atlas JSON; repeat for a sweep (order defines the sweep order).
    #[arg(long = "atlas", required = true)]
    atlases: Vec<PathBuf>,
    /// Scenario JSON; defaults to the built-in three-attractor scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Seed for the default scenario.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional metrics JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderCli {
    /// Atlas JSON to render.
    #[arg(long)]
    atlas: PathBuf,
    /// Bounds as xmin,ymin,xmax,ymax.
    #[arg(long, default_value = "-1,-1,1,1", value_parser = parse_bounds)]
    bounds: Bounds,
    /// Cells per axis.
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    /// Output raster CSV; a .meta.json sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct Bounds([f64; 4]);

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected xmin,ymin,xmax,ymax".into());
    }
    let mut b = [0.0; 4];
    for (slot, p) in b.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| format!("bad number `{p}`"))?;
    }
    if !(b[2] > b[0] && b[3] > b[1]) {
        return Err("bounds must satisfy xmin < xmax and ymin < ymax".into());
    }
    Ok(Bounds(b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&SimulateArgs {
            scenario: a.scenario,
            config: a.config,
            seed: a.seed,
            snr: a.snr,
            n_trajectories: a.n_trajectories,
            out: a.out,
        }),
        Command::Learn(a) => commands::cmd_learn(&LearnArgs {
            input: a.input,
            config: a.config,
            seed: a.seed,
            out: a.out,
        }),
        Command::Evaluate(a) => commands::cmd_evaluate(&EvaluateArgs {
            atlases: a.atlases,
            scenario: a.scenario,
            seed: a.seed,
            out: a.out,
        }),
        Command::Render(a) => commands::cmd_render(&RenderArgs {
            atlas: a.atlas,
            bounds: a.bounds.0,
            resolution: a.resolution,
            out: a.out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code as u8)
        }
    }
}
