//! Library side of the `sgrpo` command: configuration, the four commands and
//! the SVG writer, exposed so integration tests can drive them in-process.

pub mod config;
pub mod error;
pub mod report;
pub mod svg;
pub mod sweep;
pub mod train;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig};
pub use error::{CliError, Result};
