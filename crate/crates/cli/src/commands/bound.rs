use std::path::Path;

use serde::Serialize;
use thermolab::entropy::{bound_report, compute_a, fiber_oracle_a, sample_liouville, termwise_check};
use thermolab::orbits::IntegrandVariant;
use thermolab::Error;

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::SuiteResult;

const ORACLE_PANELS: usize = 32;

#[derive(Serialize)]
struct Degenerate {
    error: &'static str,
    a: f64,
    a_stderr: f64,
    message: String,
}

pub fn run_bound(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = cfg.group()?;
    let f = cfg.field(&g)?;
    let start = std::time::Instant::now();
    let sample = sample_liouville(&g, cfg.monte_carlo.samples, cfg.seed())?;
    let path = out.join("bound.json");
    let report = match bound_report(&sample, &f, cfg.monte_carlo.h0, IntegrandVariant::FieldAlongVelocity) {
        Ok(r) => r,
        Err(Error::DegenerateField { a, stderr }) => {
            let body = Degenerate {
                error: "degenerate_field",
                a,
                a_stderr: stderr,
                message: "A is not resolved above three standard errors; the bound is undefined".into(),
            };
            serde_json::to_writer_pretty(std::fs::File::create(&path)?, &body)?;
            let suite = SuiteResult::run("bound", || Ok((false, vec![("a", a), ("a_stderr", stderr)])));
            return Ok(Outcome { suites: vec![suite], outputs: vec!["bound.json".into()], exit_code: 3 });
        }
        Err(e) => return Err(e.into()),
    };
    serde_json::to_writer_pretty(std::fs::File::create(&path)?, &report)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut bound = SuiteResult::run("bound", || {
        Ok((
            report.sign_structure_holds(),
            vec![
                ("a", report.a),
                ("a_stderr", report.a_stderr),
                ("b", report.b),
                ("b_stderr", report.b_stderr),
                ("bound", report.bound),
                ("bound_stderr", report.bound_stderr),
                ("area", sample.area),
                ("area_stderr", sample.area_stderr),
            ],
        ))
    });
    bound.wall_seconds = elapsed;
    let oracle = SuiteResult::run("oracle_a", || {
        let exact = fiber_oracle_a(&g, &f, ORACLE_PANELS);
        let z = (report.a - exact).abs() / report.a_stderr;
        Ok((z < 4.0, vec![("oracle", exact), ("z_score", z)]))
    });
    let termwise = SuiteResult::run("termwise", || {
        let (dev, gap) = termwise_check(&sample, &f);
        let other = compute_a(&sample, &f, IntegrandVariant::GradientAlongVelocity);
        Ok((dev < 1e-10 && gap >= -1e-12, vec![("max_expansion_deviation", dev), ("min_b_minus_a", gap), ("a_variant_a", other.mean)]))
    });
    let suites = vec![bound, oracle, termwise];
    let exit_code = if suites.iter().all(|s| s.passed) { 0 } else { 1 };
    Ok(Outcome { suites, outputs: vec!["bound.json".into()], exit_code })
}
