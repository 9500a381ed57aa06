//! Command-line front end for the `conformal-ood` library.
//!
//! Every subcommand reads CSV inputs, runs one pipeline and writes JSON or
//! CSV. Outputs depend only on the flags and input files, including the seed,
//! so reruns are byte-identical.

pub mod args;
pub mod commands;
pub mod error;
pub mod fixtures;
pub mod io;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, CliResult, EXIT_DOMAIN, EXIT_INPUT};
