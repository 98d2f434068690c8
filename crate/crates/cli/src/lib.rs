//! `optctl` command-line front end.
//!
//! `optctl solve` selects a registered problem and a method, runs the
//! solver(s), and writes a trajectory CSV plus a JSON run report. Exit codes:
//! 0 when every solver converged, 2 on non-convergence or solver failure,
//! 1 on usage or IO errors.

pub mod args;
pub mod output;
pub mod report;
pub mod run;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command, Method, SolveArgs};
pub use report::RunReport;
pub use run::{run, solve, CliError, RunRequest};

/// Parses `args` (program name first), runs, and returns the exit code.
/// Messages for failures go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let Command::Solve(a) = cli.command;
    match RunRequest::from_args(a).and_then(|req| run(&req)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
