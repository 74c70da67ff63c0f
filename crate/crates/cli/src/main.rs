use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qrecords_cli::{report, run_file, write_outputs, RunOptions};

#[derive(Parser)]
#[command(name = "qrecords", version, about = "Run measurement and record-keeping scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        /// Seed for every random choice; overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write report.json, events.jsonl and summary.txt here instead of
        /// printing the report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample count for sampling experiments.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        scenario,
        seed,
        out,
        samples,
    } = cli.command;
    let result = run_file(&scenario, &RunOptions { seed, samples }).and_then(|output| {
        match out {
            Some(dir) => write_outputs(&output, &dir),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&report::to_pretty(&output.report))?;
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrecords: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
