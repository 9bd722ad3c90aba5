//! Configuration, dataset I/O and experiment recipes behind the `uic` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod recipes;

pub use config::{ExperimentConfig, Recipe, RecipeKind};
pub use error::{CliError, ConfigError};
pub use output::{ResultRow, ResultTable, RunOutcome};
pub use recipes::{compute, run_recipe, RunOptions};
