//! Command-line front end: CSV ingestion, TOML configuration and the
//! `fit`, `band`, `mcv`, `simulate`, `seasonal` and `periodogram` subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use args::{Cli, Command};
pub use commands::execute;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use io::{emit_plot_data, load_series, read_plot_data, ColumnRef, CsvSpec, LoadedSeries};

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
