use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thermolab::geometry::{enumerate_classes, geodesic_from_class, word_label, ConjugacyClass, SurfaceGroup};
use thermolab::orbits::{energy_second_variation, identity_suite, inequality_margins, period_curve};
use thermolab::thermostat::FieldFamily;

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::SuiteResult;

/// Relative agreement required between the three second-variation values.
pub const MATCH_TOL: f64 = 0.02;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const MARGIN_TOL: f64 = -1e-8;

#[derive(Clone, Debug, Default, Serialize)]
pub struct OrbitRow {
    pub word: String,
    pub period: Option<f64>,
    pub t_prime: Option<f64>,
    pub t_prime_err: Option<f64>,
    pub t_second: Option<f64>,
    pub t_second_err: Option<f64>,
    pub half_energy_second: Option<f64>,
    pub index_ww: Option<f64>,
    pub identity_residual: Option<f64>,
    pub residual_wv_gradient: Option<f64>,
    pub residual_wv_field: Option<f64>,
    pub variant: Option<String>,
    pub x_star: Option<f64>,
    pub min_margin: Option<f64>,
    pub status: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

fn measure(cfg: &ExperimentConfig, g: &SurfaceGroup, f: &FieldFamily, class: &ConjugacyClass) -> OrbitRow {
    let mut row = OrbitRow { word: word_label(&class.word), ..OrbitRow::default() };
    let result = (|| -> thermolab::Result<()> {
        let geo = geodesic_from_class(g, class)?;
        row.period = Some(geo.length);
        let rep = identity_suite(g, f, &geo, &cfg.quadrature())?;
        let ccfg = cfg.continuation();
        let curve = period_curve(g, f, &geo, &cfg.lambda.period_grid, &ccfg)?;
        let energy = energy_second_variation(g, f, &curve, &ccfg)?;
        let t2 = curve.second_derivative();
        let e2 = energy.half_second_derivative();
        let x = rep.x_star();
        let mut xs = cfg.orbits.margin_x.clone();
        xs.extend([x, 2.0 * x]);
        let margin = inequality_margins(&rep, t2, &xs).into_iter().fold(f64::INFINITY, f64::min);
        row.t_prime = Some(curve.first_derivative());
        row.t_prime_err = Some(curve.fit.first_err);
        row.t_second = Some(t2);
        row.t_second_err = Some(curve.fit.second_err);
        row.half_energy_second = Some(e2);
        row.index_ww = Some(rep.i_w_w);
        row.identity_residual = Some(rep.identity_residual());
        row.residual_wv_gradient = Some(rep.residual_wv_gradient);
        row.residual_wv_field = Some(rep.residual_wv_field);
        row.variant = Some(rep.variant.tag().into());
        row.x_star = Some(x);
        row.min_margin = Some(margin);

        let mut failures = Vec::new();
        if curve.first_derivative().abs() >= 1e-4 * geo.length {
            failures.push("t_prime");
        }
        if rel(t2, rep.i_w_w) >= MATCH_TOL || rel(e2, rep.i_w_w) >= MATCH_TOL || rel(t2, e2) >= MATCH_TOL {
            failures.push("second_variation");
        }
        if rep.identity_residual() >= IDENTITY_TOL {
            failures.push("identities");
        }
        if margin < MARGIN_TOL {
            failures.push("margin");
        }
        row.status = if failures.is_empty() { "ok".into() } else { format!("fail:{}", failures.join("+")) };
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("error:{e}");
    }
    row
}

fn max_of(rows: &[OrbitRow], get: impl Fn(&OrbitRow) -> Option<f64>) -> Option<f64> {
    rows.iter().filter_map(get).map(f64::abs).reduce(f64::max)
}

pub fn run_orbits(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = cfg.group()?;
    let f = cfg.field(&g)?;
    let classes = enumerate_classes(&g, cfg.orbits.max_word_len);
    let start = std::time::Instant::now();
    let rows: Vec<OrbitRow> = classes.par_iter().map(|c| measure(cfg, &g, &f, c)).collect();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let summary = OrbitRow {
        word: "summary".into(),
        t_prime: max_of(&rows, |r| r.t_prime),
        t_prime_err: max_of(&rows, |r| r.t_prime_err),
        identity_residual: max_of(&rows, |r| r.identity_residual),
        residual_wv_gradient: max_of(&rows, |r| r.residual_wv_gradient),
        residual_wv_field: max_of(&rows, |r| r.residual_wv_field),
        min_margin: rows.iter().filter_map(|r| r.min_margin).reduce(f64::min),
        status: if failed == 0 { "ok".into() } else { format!("fail:{failed}") },
        ..OrbitRow::default()
    };
    let mut w = csv::Writer::from_path(out.join("orbits.csv"))?;
    for r in rows.iter().chain(std::iter::once(&summary)) {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut metrics = vec![("orbits", rows.len() as f64), ("failed", failed as f64)];
    for (k, v) in [
        ("max_identity_residual", summary.identity_residual),
        ("max_residual_wv_field", summary.residual_wv_field),
        ("min_margin", summary.min_margin),
    ] {
        if let Some(v) = v {
            metrics.push((k, v));
        }
    }
    let mut suite = SuiteResult::run("orbits", || Ok((failed == 0, metrics)));
    suite.wall_seconds = start.elapsed().as_secs_f64();
    Ok(Outcome { suites: vec![suite], outputs: vec!["orbits.csv".into()], exit_code: if failed == 0 { 0 } else { 1 } })
}
