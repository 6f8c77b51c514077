//! Command-line front end for `nashfl-core`: profile files, report
//! rendering and the `nashfl` command.

mod cli;
pub mod output;
pub mod profile_io;

pub use cli::{run, CliError};
