//! Command-line front end: configuration, output manifests and the
//! subcommand implementations behind the `samp` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
