use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{exact_geodesic_flow, metric_norm, rotate_quarter, PhasePoint, SurfaceGroup, C64};
use crate::thermostat::FieldFamily;

fn setup() -> (SurfaceGroup, FieldFamily) {
    let g = SurfaceGroup::bolza().unwrap();
    let f = FieldFamily::default_field(&g);
    (g, f)
}

fn random_start(group: &SurfaceGroup, rng: &mut ChaCha8Rng) -> PhasePoint {
    loop {
        let z = C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
        if z.norm() < 0.8 && group.contains(z) && group.domain_margin(z) > 1e-3 {
            return PhasePoint::unit_at(z, rng.gen_range(0.0..std::f64::consts::TAU));
        }
    }
}

#[test]
fn geodesic_case_matches_closed_form() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..8 {
        let th = random_start(&g, &mut rng);
        let traj = integrate_flow(&g, &f, 0.0, &th, 5.0, &cfg).unwrap();
        let exact = exact_geodesic_flow(&th, 5.0);
        let got = traj.unwrapped_final(&g);
        assert!(got.coord_distance(&exact) < 1e-8, "{}", got.coord_distance(&exact));
        assert!(traj.stats.events > 0);
        for s in &traj.states {
            assert!(g.contains(s.p));
        }
    }
}

#[test]
fn speed_is_conserved() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for &lambda in &[0.0, 0.02, -0.05, 0.05] {
        let th = random_start(&g, &mut rng);
        let traj = integrate_flow(&g, &f, lambda, &th, 20.0, &cfg).unwrap();
        let worst = traj.states.iter().map(|s| (s.speed() - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "lambda {lambda}: {worst:e}");
        assert!(traj.stats.max_energy_drift < 1e-9);
    }
}

#[test]
fn reversal_retraces() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &lambda in &[0.0, 0.05] {
        let th = random_start(&g, &mut rng);
        let fwd = integrate_flow(&g, &f, lambda, &th, 4.0, &cfg).unwrap();
        let back = integrate_flow(&g, &f, lambda, &reversed(&fwd.final_state()), 4.0, &cfg).unwrap();
        let end = reversed(&back.final_state());
        assert!(end.coord_distance(&th) < 1e-7, "{:e}", end.coord_distance(&th));
    }
}

#[test]
fn sampling_at_stops_and_csv() {
    let (g, f) = setup();
    let th = PhasePoint::unit_at(C64::new(0.1, 0.05), 0.4);
    let traj = integrate_flow_at(&g, &f, 0.01, &th, 3.0, &[1.0, 2.0], &IntegratorConfig::default()).unwrap();
    assert!(traj.sample_at(1.0).is_some() && traj.sample_at(2.0).is_some());
    assert_eq!(traj.t_end(), 3.0);
    assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x,y,v1,v2,deck_word\n"));
    assert_eq!(text.lines().count(), traj.times.len() + 1);
}

#[test]
fn rejects_start_outside_polygon() {
    let (g, f) = setup();
    let th = PhasePoint::unit_at(C64::new(0.9, 0.0), 0.0);
    assert!(integrate_flow(&g, &f, 0.0, &th, 1.0, &IntegratorConfig::default()).is_err());
}

#[test]
fn geodesic_jacobi_fields_are_hyperbolic_functions() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let th = PhasePoint::unit_at(C64::new(-0.2, 0.1), 1.1);
    let stops: Vec<f64> = (1..8).map(|k| 0.5 * k as f64).collect();
    let base = integrate_flow_at(&g, &f, 0.0, &th, 4.0, &stops, &cfg).unwrap();
    let n0 = rotate_quarter(th.v);
    let (a, b) = (0.7, -0.3);
    let sol = integrate_jacobi(&g, &f, &base, n0 * a, n0 * b, &cfg).unwrap();
    for k in 0..sol.times.len() {
        let t = sol.times[k];
        let expect = a * t.cosh() + b * t.sinh();
        assert!((sol.normal_component(k) - expect).abs() < 1e-8 * (1.0 + expect.abs()));
    }
    // the flow direction
    let sol = integrate_jacobi(&g, &f, &base, th.v, C64::new(0.0, 0.0), &cfg).unwrap();
    for k in 0..sol.times.len() {
        let s = sol.states[k];
        assert!(metric_norm(s.p, sol.j_coord(k) - s.v) < 1e-9);
    }
}

#[test]
fn jacobi_is_linear() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let th = PhasePoint::unit_at(C64::new(0.15, -0.3), 2.4);
    let stops: Vec<f64> = (1..10).map(|k| 0.5 * k as f64).collect();
    let base = integrate_flow_at(&g, &f, 0.03, &th, 5.0, &stops, &cfg).unwrap();
    let (j1, d1) = (C64::new(0.1, 0.2), C64::new(-0.05, 0.0));
    let (j2, d2) = (C64::new(-0.3, 0.05), C64::new(0.02, 0.1));
    let s1 = integrate_jacobi(&g, &f, &base, j1, d1, &cfg).unwrap();
    let s2 = integrate_jacobi(&g, &f, &base, j2, d2, &cfg).unwrap();
    let s3 = integrate_jacobi(&g, &f, &base, j1 * 2.0 - j2 * 3.0, d1 * 2.0 - d2 * 3.0, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (k, &t) in s3.times.iter().enumerate() {
        let (Some(a), Some(b)) = (s1.sample_index(t), s2.sample_index(t)) else { continue };
        for i in 0..2 {
            let lin = 2.0 * s1.j[a][i] - 3.0 * s2.j[b][i];
            worst = worst.max((s3.j[k][i] - lin).abs() / (1.0 + lin.abs()));
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
    let res = s3.ode_residual(&g, &f, &cfg);
    assert!(res < 1e-9, "{res:e}");
}

#[test]
fn jacobi_matches_finite_differences() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::with_tolerances(1e-13, 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &lambda in &[0.0, 0.01, 0.02] {
        for _ in 0..2 {
            let th = random_start(&g, &mut rng);
            let j0 = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.1;
            let d0 = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.1;
            let err = jacobi_fd_error(&g, &f, lambda, &th, j0, d0, 3.0, 1e-5, &cfg).unwrap();
            assert!(err < 1e-4, "lambda {lambda}: {err:e}");
        }
    }
}

#[test]
fn base_mismatch_is_reported() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let th = PhasePoint::unit_at(C64::new(0.0, 0.2), 0.3);
    let mut base = integrate_flow(&g, &f, 0.0, &th, 2.0, &cfg).unwrap();
    base.lambda = 0.05;
    let res = integrate_jacobi(&g, &f, &base, th.v, C64::new(0.0, 0.0), &cfg);
    assert!(matches!(res, Err(crate::Error::BaseTrajectory(_))));
}

#[test]
fn variational_flow_agrees_with_jacobi() {
    let (g, f) = setup();
    let cfg = IntegratorConfig::default();
    let th = PhasePoint::unit_at(C64::new(0.25, 0.1), -0.8);
    for &lambda in &[0.0, 0.04] {
        let base = integrate_flow(&g, &f, lambda, &th, 6.0, &cfg).unwrap();
        let var = variational_flow(&g, &f, &base, &cfg).unwrap();
        assert_eq!(var.phi[0], nalgebra::Matrix4::identity());
        assert!(var.abel_defect() < 1e-6, "{:e}", var.abel_defect());
        let (j0, d0) = (C64::new(0.05, -0.02), C64::new(0.01, 0.03));
        let sol = integrate_jacobi(&g, &f, &base, j0, d0, &cfg).unwrap();
        let dv = d0 - crate::geometry::christoffel(th.p, j0, th.v);
        for (k, &t) in sol.times.iter().enumerate() {
            let Some(kv) = var.sample_index(t) else { continue };
            let (a, b) = var.propagate(kv, j0, dv);
            let (c, d) = sol.coordinate_perturbation(k);
            let scale = 1.0 + c.norm() + d.norm();
            assert!((a - c).norm() + (b - d).norm() < 1e-6 * scale);
        }
    }
}
