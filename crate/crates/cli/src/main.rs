use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gripsim_cli::RunOptions;

#[derive(Parser, Debug)]
#[command(
    name = "gripsim",
    version,
    about = "Quasi-static gripper simulations driven by scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in the scenario.
    Run(Flags),
    /// Evaluate the scenario over its sweep grid.
    Sweep(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Treat failed feasibility checks as errors (exit 3).
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the solver's random restarts.
    #[arg(long)]
    seed: Option<u64>,
}

impl Flags {
    fn options(&self) -> RunOptions {
        RunOptions {
            strict: self.strict,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

fn init_logging() {
    let level = std::env::var("GRIPSIM_LOG").unwrap_or_else(|_| "error".into());
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(f) => gripsim_cli::run(&f.scenario, &f.out, &f.options()),
        Command::Sweep(f) => gripsim_cli::sweep(&f.scenario, &f.out, &f.options()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gripsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
