//! Command-line driver for the batch HIDS experiment toolkit.
//!
//! Orchestrates the library crate end to end: corpus synthesis, manifest
//! validation, the full (dataset × provenance × model) experiment grid with
//! CSV artifacts and a summary document, standalone SVG figures, and a
//! conformance check for external models on the line protocol.

pub mod check;
pub mod config;
pub mod csvio;
pub mod plot;
pub mod runner;

/// Exit taxonomy: usage/config problems exit 2, runtime failures exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}
