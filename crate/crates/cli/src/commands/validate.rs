use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use thermolab::entropy::{substream_rng, Substream};
use thermolab::flow::{integrate_flow, jacobi_fd_error};
use thermolab::geometry::{exact_geodesic_flow, metric_scale, Isometry, PhasePoint, SurfaceGroup, C64};
use thermolab::thermostat::{energy_form_residual, y_tilde, FieldFamily};

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::SuiteResult;

const PROBE_POINTS: usize = 100;
const PROBES_PER_POINT: usize = 20;
const FLOW_STARTS: usize = 5;
const LAMBDA: f64 = 0.05;

fn random_start<R: Rng>(group: &SurfaceGroup, rng: &mut R) -> PhasePoint {
    let r = group.vertex_radius();
    loop {
        let z = C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if group.domain_margin(z) > 1e-3 {
            return PhasePoint::unit_at(z, rng.gen_range(0.0..TAU));
        }
    }
}

fn inner(z: C64, u: C64, w: C64) -> f64 {
    metric_scale(z) * (u.re * w.re + u.im * w.im)
}

fn relation_defect(gens: &[Isometry], relation: &[u8]) -> f64 {
    relation
        .iter()
        .fold(Isometry::identity(), |acc, &j| acc.compose(&gens[j as usize]))
        .distance_to_identity()
}

pub fn run_validate(cfg: &ExperimentConfig, _out: &Path) -> Result<Outcome, CliError> {
    let seed = cfg.seed();
    let mut suites = vec![SuiteResult::run("relation", || {
        let base = SurfaceGroup::bolza()?;
        let defect = relation_defect(&cfg.generators()?, base.relation());
        let checked = cfg.group().is_ok();
        Ok((defect < 1e-9 && checked, vec![("relation_defect", defect)]))
    })];

    let (group, field) = match cfg.group().and_then(|g| cfg.field(&g).map(|f| (g, f))) {
        Ok(gf) => gf,
        Err(e) => {
            eprintln!("remaining suites skipped: {e}");
            for name in ["energy_form", "antisymmetry", "conservation", "geodesic", "jacobi", "automorphy"] {
                suites.push(SuiteResult::run(name, || Err(thermolab::Error::InvalidGroup("group unavailable".into()))));
            }
            return Ok(Outcome { suites, outputs: vec![], exit_code: 1 });
        }
    };
    let (g, f): (&SurfaceGroup, &FieldFamily) = (&group, &field);
    let icfg = cfg.integrator();

    suites.push(SuiteResult::run("energy_form", || {
        let mut worst: f64 = 0.0;
        for k in 0..PROBE_POINTS {
            let mut rng = substream_rng(seed, Substream::Probes, k as u64);
            let th = random_start(g, &mut rng);
            for lambda in [0.0, LAMBDA] {
                worst = worst.max(energy_form_residual(f, lambda, &th, PROBES_PER_POINT, &mut rng));
            }
        }
        Ok((worst < 1e-10, vec![("max_residual", worst)]))
    }));

    suites.push(SuiteResult::run("antisymmetry", || {
        let mut rng = substream_rng(seed, Substream::Probes, 1 << 20);
        let mut worst: f64 = 0.0;
        for _ in 0..PROBE_POINTS {
            let th = random_start(g, &mut rng);
            let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (u, w) = (c(), c());
            let s = inner(th.p, y_tilde(f, &th, LAMBDA, u), w) + inner(th.p, y_tilde(f, &th, LAMBDA, w), u);
            worst = worst.max(s.abs());
        }
        Ok((worst < 1e-12, vec![("max_defect", worst)]))
    }));

    suites.push(SuiteResult::run("conservation", || {
        let mut rng = substream_rng(seed, Substream::Probes, 2 << 20);
        let mut worst: f64 = 0.0;
        for _ in 0..FLOW_STARTS {
            let th = random_start(g, &mut rng);
            let traj = integrate_flow(g, f, LAMBDA, &th, 20.0, &icfg)?;
            worst = worst.max(traj.states.iter().map(|s| (s.speed() - 1.0).abs()).fold(0.0, f64::max));
        }
        Ok((worst < 1e-9, vec![("max_speed_drift", worst)]))
    }));

    suites.push(SuiteResult::run("geodesic", || {
        let mut rng = substream_rng(seed, Substream::Probes, 3 << 20);
        let mut worst: f64 = 0.0;
        for _ in 0..FLOW_STARTS {
            let th = random_start(g, &mut rng);
            let traj = integrate_flow(g, f, 0.0, &th, 5.0, &icfg)?;
            worst = worst.max(traj.unwrapped_final(g).coord_distance(&exact_geodesic_flow(&th, 5.0)));
        }
        Ok((worst < 1e-8, vec![("max_deviation", worst)]))
    }));

    suites.push(SuiteResult::run("jacobi", || {
        let mut rng = substream_rng(seed, Substream::Probes, 4 << 20);
        let mut worst: f64 = 0.0;
        for lambda in [0.0, LAMBDA] {
            let th = random_start(g, &mut rng);
            let mut c = || C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            let (j0, d0) = (c(), c());
            worst = worst.max(jacobi_fd_error(g, f, lambda, &th, j0, d0, 3.0, 1e-5, &icfg)?);
        }
        Ok((worst < 1e-4, vec![("max_fd_error", worst)]))
    }));

    suites.push(SuiteResult::run("automorphy", || {
        let mut rng = substream_rng(seed, Substream::Probes, 5 << 20);
        let samples: Vec<C64> = (0..300).map(|_| random_start(g, &mut rng).p).collect();
        let defect = f.automorphy_defect(g, &samples);
        Ok((defect < 1e-6, vec![("max_relative_defect", defect)]))
    }));

    let exit_code = if suites.iter().all(|s| s.passed) { 0 } else { 1 };
    Ok(Outcome { suites, outputs: vec![], exit_code })
}
