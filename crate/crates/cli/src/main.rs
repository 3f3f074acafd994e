//! `memsim`: canned experiments and config-driven runs.
//!
//! Parameters resolve as built-in defaults < `--config` file < `--set`
//! overrides < dedicated flags. The seed resolves as `--seed` >
//! `experiment.seed` in the config > `MEMSIM_SEED` > 0.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "memsim",
    version,
    about = "Memristive neuromorphic system simulator"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML config file; each component reads its own [section].
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory. Without it, the single result goes to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override, e.g. `device.v_set_V=2.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// I-V loop of one device under a periodic drive.
    IvSweep(commands::IvSweep),
    /// Resistance read back after each pulse of a programming train.
    PulseProgram(commands::PulseProgram),
    /// DPI synapse output current for a spike train.
    Epsc(commands::Epsc),
    /// Conductance change against pre/post spike timing.
    StdpCurve(commands::StdpCurve),
    /// Peak EPSC of a hybrid bank against branch resistance.
    CrossbarRead(commands::CrossbarRead),
    /// Effective write voltage over the crossbar.
    WriteOffset(commands::WriteOffset),
    /// Closed-form board traffic and communication power.
    MeshTraffic(commands::MeshTraffic),
    /// Discrete-event routing of address events over the chip mesh.
    MeshSim(commands::MeshSim),
    /// Mean and spread of the EPSC over a mismatched population.
    MismatchEpsp(commands::MismatchEpsp),
    /// Runs an experiment config and writes traces plus a summary.
    Run(commands::Run),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json_line());
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut ctx = commands::Context::load(
        cli.global.config.as_deref(),
        &cli.global.set,
        cli.global.out,
        cli.global.seed,
    )?;
    match cli.command {
        Command::IvSweep(c) => c.execute(&mut ctx),
        Command::PulseProgram(c) => c.execute(&mut ctx),
        Command::Epsc(c) => c.execute(&mut ctx),
        Command::StdpCurve(c) => c.execute(&mut ctx),
        Command::CrossbarRead(c) => c.execute(&mut ctx),
        Command::WriteOffset(c) => c.execute(&mut ctx),
        Command::MeshTraffic(c) => c.execute(&mut ctx),
        Command::MeshSim(c) => c.execute(&mut ctx),
        Command::MismatchEpsp(c) => c.execute(&mut ctx),
        Command::Run(c) => c.execute(&mut ctx),
    }
}
