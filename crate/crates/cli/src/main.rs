//! `gtp`: learn, check, plan and test against the reference RPG.

mod commands;
mod play;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gtp", version, about = "Planning-based game testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a STRIPS domain from a directory of gtrace-1 traces.
    Learn {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Name of the learned domain.
        #[arg(long, default_value = "rpg")]
        name: String,
    },
    /// Check a domain against logged traces (exit 1 when inconsistent).
    Check {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search for a plan and write it as a plan file.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Breadth-first search: the plan is the shortest one.
        #[arg(long)]
        optimal: bool,
        /// With --optimal, only consider plans of at most N steps.
        #[arg(long, requires = "optimal")]
        bound: Option<usize>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Instantiate a goal template into numbered problem files.
    Scenarios {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Start every scenario from a random reachable state after N steps.
        #[arg(long, requires = "seed")]
        walk: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plan from random reachable states to find dead-ends (exit 1 if any).
    Deadends {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Scan every goal of this template instead of the problem's goal.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        walk: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Prove that no plan shorter than --bound exists (exit 1 if one does).
    Shortcut {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        bound: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Drive the reference simulator.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Serve interactive play sessions over HTTP and websockets.
    Play {
        /// Map file, or `builtin:demo|trap|small`.
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        trace_dir: PathBuf,
        /// Directory with the browser UI bundle.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Play a command script or a policy and record the trace.
    Run {
        #[arg(long)]
        map: String,
        /// Whitespace-separated directions (up, down, left, right).
        #[arg(long, conflicts_with = "policy")]
        script: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Execute a plan as a test script (exit 1 on divergence).
    Exec {
        #[arg(long)]
        map: String,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the ground-truth problem (and optionally the reference domain).
    ExportPddl {
        #[arg(long)]
        map: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        domain_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Coverage,
    Random,
}

#[derive(Args, Clone, Copy)]
struct LimitArgs {
    /// Stop after expanding N states.
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Stop after S seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

fn main() -> ExitCode {
    let env = env_logger::Env::new().filter_or("GTP_LOG_LEVEL", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
