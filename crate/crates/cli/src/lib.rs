//! Command-line front end. [`run`] is the whole program and is what the
//! binary calls.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
//! failure. Machine output goes to `--out` (standard output by default);
//! diagnostics go to standard error.

mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use phasefit_core::Error;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            _ if e.is_data_error() => EXIT_DATA,
            Error::InvalidSpec(_)
            | Error::InvalidMatrix(_)
            | Error::Dimension { .. }
            | Error::HorizonTooSmall { .. }
            | Error::MissingModel => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

/// Caps rayon's global pool at `PHASEFIT_THREADS`; only the first call has an effect.
fn init_threads() {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(phasefit_server::threads_from_env()).build_global();
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    init_threads();
    match commands::dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "phasefit: error: {}", f.message);
            f.code
        }
    }
}
