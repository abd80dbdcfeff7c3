use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use cheri_core::interp::RunConfig;
use cheri_core::CapSize;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cheric",
    version,
    about = "Run CHERI-C IL programs against the memory model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program and report how it terminated.
    Run {
        file: PathBuf,
        /// Capability size in bytes.
        #[arg(long, default_value_t = 16, value_parser = parse_cap_size)]
        cap_size: u64,
        /// Print `pc=<n> <instruction>` for every executed instruction.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
}

fn parse_cap_size(s: &str) -> Result<u64, String> {
    let n: u64 = s.parse().map_err(|e| format!("{e}"))?;
    CapSize::new(n)
        .map(|_| n)
        .ok_or_else(|| "must be 16 or 32".to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            file,
            cap_size,
            trace,
            max_steps,
        } => {
            let config = RunConfig {
                cap_size: CapSize::new(cap_size).expect("validated by clap"),
                trace,
                max_steps: max_steps.max(1),
            };
            let code = cheri_cli::run_file(
                &file,
                &config,
                &mut io::stdout().lock(),
                &mut io::stderr().lock(),
            )
            .unwrap_or_else(|e| {
                eprintln!("{e}");
                cheri_cli::EXIT_IO_ERROR
            });
            ExitCode::from(code as u8)
        }
    }
}
