//! Runner behind the `cheric` binary: parse a program, execute it, and map
//! the final machine status to an exit code.

use std::io::{self, Write};
use std::path::Path;

use cheri_core::interp::{self, RunConfig, RunOutcome, RunReport};
use cheri_core::MemError;

pub const EXIT_HALTED: i32 = 0;
pub const EXIT_PARSE_ERROR: i32 = 2;
pub const EXIT_CAP_ERR: i32 = 10;
pub const EXIT_LOGIC_ERR: i32 = 11;
pub const EXIT_ASSERT_FAILED: i32 = 12;
pub const EXIT_BUDGET: i32 = 13;
/// The input file could not be read.
pub const EXIT_IO_ERROR: i32 = 1;

/// Exit code for a finished run.
pub fn exit_code(outcome: &RunOutcome) -> i32 {
    match outcome {
        RunOutcome::Halted(_) => EXIT_HALTED,
        RunOutcome::Faulted {
            err: MemError::Cap(_),
            ..
        } => EXIT_CAP_ERR,
        RunOutcome::Faulted {
            err: MemError::Logic(_),
            ..
        } => EXIT_LOGIC_ERR,
        RunOutcome::AssertFailed { .. } => EXIT_ASSERT_FAILED,
        RunOutcome::BudgetExhausted { .. } => EXIT_BUDGET,
    }
}

/// Parses and runs `source`. The trace (if enabled) and the final status
/// line go to `out`; parse diagnostics go to `err`.
pub fn run_source(
    source: &str,
    name: &str,
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<(i32, Option<RunReport>)> {
    let program = match interp::parse_program(source) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "{name}:{e}")?;
            return Ok((EXIT_PARSE_ERROR, None));
        }
    };
    let report = interp::run(&program, config);
    for line in &report.trace {
        writeln!(out, "{line}")?;
    }
    writeln!(out, "{}", report.outcome)?;
    Ok((exit_code(&report.outcome), Some(report)))
}

pub fn run_file(
    path: &Path,
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_IO_ERROR);
        }
    };
    run_source(&source, &path.display().to_string(), config, out, err).map(|(code, _)| code)
}
