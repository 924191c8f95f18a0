use std::path::Path;

use serde::Serialize;
use thermolab::entropy::{
    bound_report, fit_quadratic, period_table, sample_liouville, EntropyEstimate, EntropyFit, SpectrumConfig,
};
use thermolab::orbits::IntegrandVariant;

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::SuiteResult;

#[derive(Serialize)]
struct CsvRow {
    lambda: f64,
    h_est: f64,
    fit_err: f64,
}

#[derive(Serialize)]
struct FitSummary {
    coefficients: [f64; 3],
    stderr: [f64; 3],
    half_width: [f64; 3],
    second_derivative: f64,
    slack: f64,
    gap: Option<f64>,
    bound_holds: Option<bool>,
}

#[derive(Serialize)]
struct Summary {
    max_word_len: usize,
    max_length: f64,
    cutoff: f64,
    orbits: usize,
    h0: f64,
    bound: Option<f64>,
    estimates: Vec<EntropyEstimate>,
    fit: Option<FitSummary>,
    partial: bool,
}

pub fn run_entropy(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = cfg.group()?;
    let f = cfg.field(&g)?;
    let start = std::time::Instant::now();
    let e = &cfg.entropy;
    let mut scfg = SpectrumConfig::new(e.max_word_len);
    if let Some(l) = e.max_length {
        scfg.max_length = l;
    }
    scfg.deficit = e.deficit;
    scfg.continuation = cfg.continuation();

    let mut lambdas = cfg.lambda.entropy_grid.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let table = period_table(&g, &f, &lambdas, &scfg)?;
    let estimates = (0..lambdas.len()).map(|i| table.estimate(i)).collect::<thermolab::Result<Vec<_>>>()?;
    let partial = estimates.iter().any(|e| e.partial);

    let h0 = cfg.monte_carlo.h0;
    let bound = if f.is_zero() {
        None
    } else {
        let sample = sample_liouville(&g, cfg.monte_carlo.samples, cfg.seed())?;
        bound_report(&sample, &f, h0, IntegrandVariant::FieldAlongVelocity).ok().map(|r| r.bound)
    };

    let fit = if lambdas.len() >= 3 {
        let hs: Vec<f64> = estimates.iter().map(|e| e.h).collect();
        let (coefficients, stderr, half_width) = fit_quadratic(&lambdas, &hs)?;
        let fit = EntropyFit { lambdas: lambdas.clone(), estimates: estimates.clone(), coefficients, stderr, half_width, partial };
        let slack = fit.slack(h0);
        let gap = bound.map(|b| fit.gap(b));
        Some(FitSummary {
            coefficients,
            stderr,
            half_width,
            second_derivative: fit.second_derivative(),
            slack,
            gap,
            bound_holds: gap.map(|g| g >= -slack),
        })
    } else {
        eprintln!("fewer than 3 grid points; quadratic fit skipped");
        None
    };

    let mut w = csv::Writer::from_path(out.join("entropy.csv"))?;
    for est in &estimates {
        w.serialize(CsvRow { lambda: est.lambda, h_est: est.h, fit_err: est.stderr })?;
    }
    w.flush()?;
    let summary = Summary {
        max_word_len: e.max_word_len,
        max_length: scfg.max_length,
        cutoff: table.cutoff,
        orbits: table.words.len(),
        h0,
        bound,
        estimates,
        fit,
        partial,
    };
    serde_json::to_writer_pretty(std::fs::File::create(out.join("entropy.json"))?, &summary)?;

    let elapsed = start.elapsed().as_secs_f64();
    let mut metrics = vec![("cutoff", table.cutoff), ("orbits", table.words.len() as f64)];
    if let Some(fit) = &summary.fit {
        metrics.push(("second_derivative", fit.second_derivative));
        metrics.push(("slack", fit.slack));
        if let Some(gap) = fit.gap {
            metrics.push(("gap", gap));
        }
    }
    let passed = !partial && summary.fit.as_ref().and_then(|f| f.bound_holds).unwrap_or(true);
    let mut suite = SuiteResult::run("entropy", || Ok((passed, metrics)));
    suite.wall_seconds = elapsed;
    Ok(Outcome { suites: vec![suite], outputs: vec!["entropy.csv".into(), "entropy.json".into()], exit_code: 0 })
}
