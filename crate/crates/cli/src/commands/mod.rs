mod bound;
mod entropy;
mod orbits;
mod validate;

pub use bound::run_bound;
pub use entropy::run_entropy;
pub use orbits::run_orbits;
pub use validate::run_validate;

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::SuiteResult;

/// What a command hands back to `main` for the manifest.
pub struct Outcome {
    pub suites: Vec<SuiteResult>,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

pub type Command = fn(&ExperimentConfig, &Path) -> Result<Outcome, CliError>;
