//! Configuration, figure presets and CSV/JSON emission for the `photonlab` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{CliError, CliResult, RunConfig};
pub use run::{execute, Command, Context};
