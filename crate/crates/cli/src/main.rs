use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use etc_cli::commands::{self, verify::BellmanPerturbation, Globals};
use etc_cli::exit;
use etc_core::pomdp::GenSpec;

#[derive(Parser)]
#[command(
    name = "etc-bench",
    version,
    about = "Embed-to-control benchmarks for tabular low-rank POMDPs"
)]
struct Cli {
    /// Seed for generation, learner runs and Monte-Carlo evaluation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Override every verification tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Lift the operator row cap and the policy enumeration cap.
    #[arg(long = "unsafe", global = true)]
    unsafe_limits: bool,
    /// Fill the wall_ms log column.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random low-rank model and write it with its factors.
    GenModel {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        observations: usize,
        /// Bottleneck rank.
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        future: usize,
        #[arg(long, default_value_t = 1)]
        past: usize,
        #[arg(long, default_value_t = 1000)]
        max_tries: usize,
    },
    /// Report sufficiency constants and singular values of a model.
    Inspect { model: PathBuf },
    /// Check the operator identities against brute-force enumeration.
    Verify {
        model: PathBuf,
        /// Longest trajectory checked (defaults to H + 1).
        #[arg(long)]
        depth: Option<usize>,
        /// Debug: add DELTA to every entry of one Bellman operator, given as
        /// `step,action,observation,delta`.
        #[arg(long, value_name = "H,A,O,DELTA")]
        perturb_bellman: Option<BellmanPerturbation>,
    },
    /// Run the learner from a TOML config.
    RunEtc { config: PathBuf },
    /// Run every combination of a sweep config and aggregate medians.
    Sweep { config: PathBuf },
    /// Evaluate a policy file exactly, through operators and by simulation.
    EvalPolicy {
        model: PathBuf,
        policy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Globals {
        seed: cli.seed,
        out: cli.out,
        jobs: cli.jobs,
        tolerance: cli.tolerance,
        unsafe_limits: cli.unsafe_limits,
        timing: cli.timing,
    };
    let result = match cli.command {
        Command::GenModel {
            states,
            actions,
            observations,
            rank,
            horizon,
            future,
            past,
            max_tries,
        } => {
            let spec = GenSpec {
                states,
                actions,
                observations,
                rank,
                horizon,
                future,
                past,
            };
            commands::gen_model::run(&g, &spec, max_tries)
        }
        Command::Inspect { model } => commands::inspect::run(&g, &model),
        Command::Verify {
            model,
            depth,
            perturb_bellman,
        } => commands::verify::run(&g, &model, depth, perturb_bellman),
        Command::RunEtc { config } => commands::run::run(&g, &config),
        Command::Sweep { config } => commands::sweep::run(&g, &config),
        Command::EvalPolicy {
            model,
            policy,
            episodes,
        } => commands::eval::run(&g, &model, &policy, episodes),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e) as u8)
        }
    }
}
