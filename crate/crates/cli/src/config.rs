use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thermolab::flow::IntegratorConfig;
use thermolab::geometry::{Isometry, SurfaceGroup};
use thermolab::orbits::ContinuationConfig;
use thermolab::quadrature::QuadratureConfig;
use thermolab::thermostat::{Bump, FieldFamily};

use crate::error::CliError;

/// Largest `|λ|` accepted in any grid.
pub const MAX_LAMBDA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed; every random stream derives from it. A config file must
    /// set it (or `--seed` must be given).
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub surface: SurfaceSection,
    pub field: FieldSection,
    pub lambda: LambdaSection,
    pub orbits: OrbitsSection,
    pub integrator: IntegratorSection,
    pub quadrature: QuadratureSection,
    pub monte_carlo: MonteCarloSection,
    pub entropy: EntropySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    pub name: String,
    /// Added to the first generator's matrix entry; nonzero only in
    /// negative-control runs.
    pub generator_perturbation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub centers: Vec<[f64; 2]>,
    pub amplitudes: Vec<f64>,
    pub widths: Vec<f64>,
    pub truncation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaSection {
    /// Grid for period derivatives.
    pub period_grid: Vec<f64>,
    /// Grid for the entropy curve.
    pub entropy_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitsSection {
    pub max_word_len: usize,
    /// Points for the inequality margins; `x*` and `2x*` are always added.
    pub margin_x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rtol: f64,
    pub atol: f64,
    pub continuation_rtol: f64,
    pub continuation_atol: f64,
    pub newton_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub initial_nodes: usize,
    pub tolerance: f64,
    pub max_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub samples: usize,
    pub h0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySection {
    pub max_word_len: usize,
    /// Defaults to `1.35·max_word_len`.
    pub max_length: Option<f64>,
    pub deficit: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: Some(20240917),
            output_dir: PathBuf::from("out"),
            surface: SurfaceSection::default(),
            field: FieldSection::default(),
            lambda: LambdaSection::default(),
            orbits: OrbitsSection::default(),
            integrator: IntegratorSection::default(),
            quadrature: QuadratureSection::default(),
            monte_carlo: MonteCarloSection::default(),
            entropy: EntropySection::default(),
        }
    }
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self { name: "bolza".into(), generator_perturbation: 0.0 }
    }
}

impl Default for FieldSection {
    fn default() -> Self {
        let bumps = thermolab::thermostat::default_bumps();
        Self {
            centers: bumps.iter().map(|b| [b.x, b.y]).collect(),
            amplitudes: bumps.iter().map(|b| b.amplitude).collect(),
            widths: bumps.iter().map(|b| b.width).collect(),
            truncation: 6,
        }
    }
}

impl Default for LambdaSection {
    fn default() -> Self {
        Self {
            period_grid: vec![-0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02],
            entropy_grid: vec![-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03],
        }
    }
}

impl Default for OrbitsSection {
    fn default() -> Self {
        Self { max_word_len: 2, margin_x: vec![0.0, 0.1, 0.5, 1.0] }
    }
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, continuation_rtol: 1e-12, continuation_atol: 1e-14, newton_tolerance: 1e-12 }
    }
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self { initial_nodes: q.initial_nodes, tolerance: q.tolerance, max_nodes: q.max_nodes }
    }
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { samples: 100_000, h0: thermolab::entropy::H0_CONSTANT_CURVATURE }
    }
}

impl Default for EntropySection {
    fn default() -> Self {
        Self { max_word_len: 8, max_length: None, deficit: 0.1 }
    }
}

fn invalid(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {why}"))
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite (got {x})")))
    }
}

fn symmetric_grid(key: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    for &l in grid {
        if !(l.abs() <= MAX_LAMBDA) {
            return Err(invalid(key, format!("{l} is outside [-{MAX_LAMBDA}, {MAX_LAMBDA}]")));
        }
        if !grid.iter().any(|&m| m == -l) {
            return Err(invalid(key, format!("grid is not symmetric: {l} has no mirror")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Range and consistency checks; call after command-line overrides.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(invalid("seed", "missing"));
        }
        if self.surface.name != "bolza" {
            return Err(invalid("surface.name", format!("only \"bolza\" is supported (got {:?})", self.surface.name)));
        }
        let f = &self.field;
        if f.amplitudes.len() != f.centers.len() || f.widths.len() != f.centers.len() {
            return Err(invalid("field", "centers, amplitudes and widths must have equal lengths"));
        }
        for (k, c) in f.centers.iter().enumerate() {
            if !(c[0] * c[0] + c[1] * c[1] < 1.0) {
                return Err(invalid(&format!("field.centers[{k}]"), "must lie in the open unit disk"));
            }
        }
        for (k, &w) in f.widths.iter().enumerate() {
            positive(&format!("field.widths[{k}]"), w)?;
        }
        for (k, a) in f.amplitudes.iter().enumerate() {
            if !a.is_finite() {
                return Err(invalid(&format!("field.amplitudes[{k}]"), "must be finite"));
            }
        }
        symmetric_grid("lambda.period_grid", &self.lambda.period_grid)?;
        symmetric_grid("lambda.entropy_grid", &self.lambda.entropy_grid)?;
        if !(1..=6).contains(&self.orbits.max_word_len) {
            return Err(invalid("orbits.max_word_len", "must be between 1 and 6"));
        }
        let i = &self.integrator;
        positive("integrator.rtol", i.rtol)?;
        positive("integrator.atol", i.atol)?;
        positive("integrator.continuation_rtol", i.continuation_rtol)?;
        positive("integrator.continuation_atol", i.continuation_atol)?;
        positive("integrator.newton_tolerance", i.newton_tolerance)?;
        positive("quadrature.tolerance", self.quadrature.tolerance)?;
        if self.quadrature.initial_nodes < 8 || self.quadrature.max_nodes < self.quadrature.initial_nodes {
            return Err(invalid("quadrature", "need 8 <= initial_nodes <= max_nodes"));
        }
        if self.monte_carlo.samples < 2 {
            return Err(invalid("monte_carlo.samples", "must be at least 2"));
        }
        positive("monte_carlo.h0", self.monte_carlo.h0)?;
        if !(1..=12).contains(&self.entropy.max_word_len) {
            return Err(invalid("entropy.max_word_len", "must be between 1 and 12"));
        }
        if let Some(l) = self.entropy.max_length {
            positive("entropy.max_length", l)?;
        }
        if !(self.entropy.deficit > 0.0 && self.entropy.deficit < 1.0) {
            return Err(invalid("entropy.deficit", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; independent of key order in the
    /// source file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    /// Generators with the configured perturbation applied, unchecked.
    pub fn generators(&self) -> thermolab::Result<Vec<Isometry>> {
        let mut gens = SurfaceGroup::bolza()?.generators().to_vec();
        gens[0].a += self.surface.generator_perturbation;
        Ok(gens)
    }

    pub fn group(&self) -> thermolab::Result<SurfaceGroup> {
        let g = SurfaceGroup::bolza()?;
        if self.surface.generator_perturbation == 0.0 {
            return Ok(g);
        }
        SurfaceGroup::from_parts(self.generators()?, g.sides().to_vec(), g.relation().to_vec())
    }

    pub fn field(&self, group: &SurfaceGroup) -> thermolab::Result<FieldFamily> {
        let f = &self.field;
        let bumps = (0..f.centers.len())
            .map(|k| Bump { x: f.centers[k][0], y: f.centers[k][1], amplitude: f.amplitudes[k], width: f.widths[k] })
            .collect();
        FieldFamily::new(group, bumps, f.truncation)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::with_tolerances(self.integrator.rtol, self.integrator.atol)
    }

    pub fn continuation(&self) -> ContinuationConfig {
        let i = &self.integrator;
        ContinuationConfig {
            integrator: IntegratorConfig::with_tolerances(i.continuation_rtol, i.continuation_atol),
            tolerance: i.newton_tolerance,
            ..ContinuationConfig::default()
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        let q = &self.quadrature;
        QuadratureConfig { initial_nodes: q.initial_nodes, tolerance: q.tolerance, max_nodes: q.max_nodes, ..QuadratureConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        let parsed = ExperimentConfig::parse("").unwrap();
        assert_eq!(parsed.seed, None);
        assert!(parsed.validate().unwrap_err().to_string().contains("seed"));
        assert_eq!(ExperimentConfig { seed: ExperimentConfig::default().seed, ..parsed }, ExperimentConfig::default());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = ExperimentConfig::parse("seed = 3\n[monte_carlo]\nsamples = 10\nh0 = 1.0\n").unwrap();
        let b = ExperimentConfig::parse("[monte_carlo]\nh0 = 1.0\nsamples = 10\n").map(|mut c| {
            c.seed = Some(3);
            c
        });
        assert_eq!(a.hash(), b.unwrap().hash());
        let c = ExperimentConfig::parse("seed = 4\n[monte_carlo]\nsamples = 10\nh0 = 1.0\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_values_name_their_key() {
        let cfg = ExperimentConfig::parse("seed = 1\n[integrator]\nrtol = -1e-10\n").unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("integrator.rtol"), "{msg}");
        let cfg = ExperimentConfig::parse("seed = 1\n[lambda]\nperiod_grid = [0.0, 0.01]\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("lambda.period_grid"));
        let err = ExperimentConfig::parse("[field]\nwidth = [1.0]\n").unwrap_err().to_string();
        assert!(err.contains("width") && err.contains("line"), "{err}");
    }

    #[test]
    fn builds_field_and_group() {
        let cfg = ExperimentConfig::default();
        let g = cfg.group().unwrap();
        assert!(!cfg.field(&g).unwrap().is_zero());
    }
}
