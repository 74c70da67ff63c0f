//! Scenario runner behind the `qrecords` binary.
//!
//! A scenario file is JSON; [`run_text`] parses it, runs the requested
//! experiment and returns the report plus the run log. Output is a pure
//! function of the scenario bytes and the seed.

mod error;
pub mod experiments;
pub mod report;
pub mod scenario;

use std::fs;
use std::path::Path;

use serde_json::Value;

pub use error::CliError;
pub use report::Report;

use experiments::{run_experiment, Knobs};

/// Command-line overrides; `None` falls back to the scenario, then defaults.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub events: Vec<Value>,
}

pub fn run_text(text: &str, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let scenario = scenario::parse(text)?;
    let knobs = Knobs {
        seed: opts.seed.or(scenario.parameters.seed).unwrap_or(0),
        samples: opts.samples,
    };
    let outcome = run_experiment(&scenario, &knobs)?;
    Ok(RunOutput {
        report: Report {
            tool_version: report::TOOL_VERSION,
            scenario_hash: report::scenario_hash(text.as_bytes()),
            seed: knobs.seed,
            mode: match scenario.mode {
                scenario::Mode::Abstract => "abstract",
                scenario::Mode::Lattice => "lattice",
            },
            experiment: scenario.experiment.name(),
            results: outcome.results,
            diagnostics: outcome.diagnostics,
        },
        events: outcome.events,
    })
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let text = fs::read_to_string(path)?;
    run_text(&text, opts)
}

/// Writes `report.json`, `events.jsonl` and `summary.txt` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report::to_pretty(&out.report))?;
    fs::write(dir.join("events.jsonl"), report::to_lines(&out.events))?;
    fs::write(dir.join("summary.txt"), report::summary(&out.report))?;
    Ok(())
}
