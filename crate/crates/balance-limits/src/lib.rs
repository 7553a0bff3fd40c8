//! Standard-library companion to `balance-limits-core`: the parameter file,
//! CSV and JSON formats, Welch spectral estimation, a parallel heatmap and
//! the `balance-limits` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod heatmap;
pub mod output;
pub mod psd;

pub use error::{CliError, Result};
