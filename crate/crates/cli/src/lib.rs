//! Library side of the `ruin` command: config loading, table formatting, SVG plots and the
//! three subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod svg;

pub use error::CliError;
