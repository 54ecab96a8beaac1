//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gather",
    version,
    about = "Bearing-only swarm gathering: simulate, benchmark, train and serve",
    long_about = "Bearing-only swarm gathering: simulate, benchmark, train and serve.\n\n\
        Relative output paths are resolved against --out-dir. Input paths are \
        used as given. Exit status is 0 on success, 1 on a runtime failure and \
        2 on a usage error."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for scenario generation and controller randomness
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses one per core. Outputs do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory for output files
    #[arg(long, global = true, env = "GATHER_OUT_DIR", hide_env_values = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Log verbosity on stderr: off, error, warn, info, debug or trace
    #[arg(long, global = true, env = "GATHER_LOG_LEVEL", hide_env_values = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write seeded, connected initial constellations as scenario files
    Generate(GenerateArgs),
    /// Run a single episode and print its result as JSON
    Run(RunArgs),
    /// Evaluate a controller on a scenario suite
    Bench(BenchArgs),
    /// Train a shared policy with PPO
    Train(TrainArgs),
    /// Evaluate checkpoints on a fixed scenario set and select the best
    Sweep(SweepArgs),
    /// Draw an episode trace as SVG
    Render(RenderArgs),
    /// Host environments for protocol clients on stdio or a Unix socket
    Serve(ServeArgs),
    /// Act as an external controller over stdio
    Controller(ControllerArgs),
    /// Print this command reference as Markdown
    Reference(ReferenceArgs),
}

/// Swarm size, visibility range and visibility ratio of generated scenarios.
#[derive(Debug, Args)]
pub struct SwarmArgs {
    /// Number of agents
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Visibility range
    #[arg(long = "V", default_value_t = 50.0)]
    pub visibility: f64,
    /// Visibility ratio; scenarios are connected under V * VR
    #[arg(long = "VR", default_value_t = 0.75)]
    pub visibility_ratio: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// Number of scenarios; scenario k uses seed --seed + k
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Minimum distance between any two agents
    #[arg(long)]
    pub min_separation: Option<f64>,
    /// File name prefix; files are <prefix>_<k>.json
    #[arg(long, default_value = "scenario")]
    pub prefix: String,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file; without it a scenario is generated from --n, --V, --VR and --seed
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// analytical, stationary, random, policy:<weights> or external:<command>
    #[arg(long, default_value = "analytical")]
    pub controller: String,
    /// Write the step-by-step trace here as JSON lines
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Step cut-off; defaults to 150 steps per agent
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// analytical, stationary, random, policy:<weights> or external:<command>
    #[arg(long, default_value = "analytical")]
    pub controller: String,
    /// Swarm sizes (comma separated); one suite per size and ratio
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub n: Vec<usize>,
    /// Visibility range
    #[arg(long = "V", default_value_t = 50.0)]
    pub visibility: f64,
    /// Visibility ratios (comma separated)
    #[arg(long = "VR", value_delimiter = ',', default_value = "0.75")]
    pub visibility_ratio: Vec<f64>,
    /// Scenarios per suite; scenario k uses seed --seed + k
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Evaluate the scenario files of this directory instead of generating
    #[arg(long)]
    pub scenario_dir: Option<PathBuf>,
    /// Episodes per scenario
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    /// Step cut-off; defaults to 150 steps per agent
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON trainer configuration; flags below override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Transitions to train for (one per agent per environment step)
    #[arg(long)]
    pub total_steps: Option<u64>,
    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Transitions per update
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Parallel environments
    #[arg(long)]
    pub n_envs: Option<usize>,
    /// Transitions between checkpoints
    #[arg(long)]
    pub checkpoint_interval: Option<u64>,
    /// Number of agents (single-phase curriculum)
    #[arg(long)]
    pub n: Option<usize>,
    /// Visibility ratio of training scenarios (single-phase curriculum)
    #[arg(long = "VR")]
    pub visibility_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Weight files, or directories whose *.s2pw files are taken in name order
    #[arg(required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// Size of the fixed scenario set
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    /// Use the scenario files of this directory instead of generating
    #[arg(long)]
    pub scenario_dir: Option<PathBuf>,
    /// Step cut-off; defaults to 150 steps per agent
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Trace file written by `run --trace`
    #[arg(long)]
    pub trace: PathBuf,
    /// SVG file; defaults to the trace name with .svg
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Draw each agent's visibility disc at its start
    #[arg(long)]
    pub discs: bool,
    /// Canvas width in pixels
    #[arg(long, default_value_t = 600.0)]
    pub width: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen on this Unix socket instead of stdin/stdout
    #[arg(long)]
    pub socket: Option<PathBuf>,
    /// Stop after this many socket sessions
    #[arg(long)]
    pub max_sessions: Option<usize>,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// Step cut-off; defaults to 150 steps per agent
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ControllerArgs {
    /// analytical, stationary, random or policy:<weights>
    #[arg(long, default_value = "analytical")]
    pub controller: String,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    /// Write to this file instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}
