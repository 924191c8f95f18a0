use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::CliError;

/// Outcome of one check suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub wall_seconds: f64,
}

impl SuiteResult {
    /// Time `f`, which returns pass/fail and metrics. Errors count as failures.
    pub fn run<F>(name: &str, f: F) -> Self
    where
        F: FnOnce() -> thermolab::Result<(bool, Vec<(&'static str, f64)>)>,
    {
        let start = Instant::now();
        let (passed, metrics) = match f() {
            Ok((p, m)) => (p, m.into_iter().map(|(k, v)| (k.to_string(), v)).collect()),
            Err(e) => {
                eprintln!("suite {name}: {e}");
                (false, BTreeMap::new())
            }
        };
        Self { name: name.into(), passed, metrics, wall_seconds: start.elapsed().as_secs_f64() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub outputs: Vec<String>,
    pub exit_code: u8,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}
