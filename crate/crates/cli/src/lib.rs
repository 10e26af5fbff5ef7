//! Library side of the `latticeway` command: config schema, report types and
//! the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
