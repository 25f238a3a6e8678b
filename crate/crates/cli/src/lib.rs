//! File formats, parallel replica driver, verification suites and the
//! command-line front end built on `sepness-core`.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod parallel;
pub mod stats;
pub mod verify;

pub use error::{CliError, ExitCode};
