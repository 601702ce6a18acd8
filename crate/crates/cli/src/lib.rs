//! Command implementations and the local HTTP service behind the `varna`
//! binary.

pub mod commands;
pub mod service;

pub use commands::CliError;
