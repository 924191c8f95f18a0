use std::f64::consts::PI;

use super::*;
use crate::error::Error;
use crate::geometry::SurfaceGroup;
use crate::orbits::IntegrandVariant;
use crate::thermostat::FieldFamily;

const VARIANT: IntegrandVariant = IntegrandVariant::FieldAlongVelocity;

fn setup() -> (SurfaceGroup, FieldFamily) {
    let g = SurfaceGroup::bolza().unwrap();
    let f = FieldFamily::default_field(&g);
    (g, f)
}

#[test]
fn sampling_is_deterministic_and_in_domain() {
    let (g, _) = setup();
    let a = sample_liouville(&g, 1, 42).unwrap();
    let b = sample_liouville(&g, 1, 42).unwrap();
    assert_eq!(a.states, b.states);
    let s = sample_liouville(&g, 3 * SHARD + 17, 42).unwrap();
    assert_eq!(s.count, 3 * SHARD + 17);
    assert_eq!(s.states[0], a.states[0]);
    assert_ne!(sample_liouville(&g, 1, 43).unwrap().states, a.states);
    for th in &s.states {
        assert!(g.contains(th.p));
        assert!((th.speed() - 1.0).abs() < 1e-12);
    }
    assert!(matches!(sample_liouville(&g, 0, 1), Err(Error::InvalidArgument(_))));
}

#[test]
fn sample_symmetry_and_area() {
    let (g, _) = setup();
    let s = sample_liouville(&g, 40_000, 3).unwrap();
    let (mx, se) = s.mean_of(|th| th.p.re);
    assert!(mx.abs() < 3.0 * se, "{mx} {se}");
    assert!((s.area - 4.0 * PI).abs() < 3.0 * s.area_stderr, "{} {}", s.area, s.area_stderr);
    assert!((polygon_integral(&g, 32, |_| 1.0) - 4.0 * PI).abs() < 1e-10);
}

#[test]
fn zero_field_is_degenerate() {
    let (g, _) = setup();
    let s = sample_liouville(&g, 2000, 1).unwrap();
    let f = FieldFamily::zero();
    assert_eq!(compute_a(&s, &f, VARIANT).mean, 0.0);
    assert_eq!(compute_b(&s, &f).mean, 0.0);
    assert!(matches!(bound_report(&s, &f, 1.0, VARIANT), Err(Error::DegenerateField { .. })));
    let scaled = FieldFamily::default_field(&g).scaled(0.0);
    assert!(matches!(bound_report(&s, &scaled, 1.0, VARIANT), Err(Error::DegenerateField { .. })));
}

#[test]
fn a_matches_fiber_oracle() {
    let (g, f) = setup();
    let s = sample_liouville(&g, 30_000, 9).unwrap();
    let a = compute_a(&s, &f, VARIANT);
    assert!(a.mean > 5.0 * a.stderr);
    let oracle = fiber_oracle_a(&g, &f, 32);
    assert!((fiber_oracle_a(&g, &f, 16) - oracle).abs() < 1e-8);
    assert!((a.mean - oracle).abs() < 3.0 * a.stderr, "{a:?} {oracle}");
}

#[test]
fn curvature_expansion_holds_per_sample() {
    let (g, f) = setup();
    let s = sample_liouville(&g, 5000, 2).unwrap();
    let (dev, gap) = termwise_check(&s, &f);
    assert!(dev < 1e-12, "{dev}");
    assert!(gap >= -1e-12, "{gap}");
}

#[test]
fn report_algebra_and_scaling() {
    let (g, f) = setup();
    let s = sample_liouville(&g, 20_000, 5).unwrap();
    let r = bound_report(&s, &f, 1.0, VARIANT).unwrap();
    assert!(r.a > 0.0 && r.b > 0.0 && r.bound < 0.0);
    assert!(r.sign_structure_holds());
    assert_eq!(r.x_star, r.a / r.b);
    assert_eq!(r.bound, -r.a * r.a / r.b);
    assert!(r.bound_stderr.is_finite() && r.x_star_stderr > 0.0);
    let r3 = bound_report(&s, &f, 3.0, VARIANT).unwrap();
    assert!((r3.bound - 3.0 * r.bound).abs() < 1e-15);
    let r2 = bound_report(&s, &f.scaled(2.0), 1.0, VARIANT).unwrap();
    assert!((r2.a / r.a - 4.0).abs() < 1e-12 && (r2.b / r.b - 4.0).abs() < 1e-12);
    assert!((r2.bound / r.bound - 4.0).abs() < 1e-12);
    assert!((r2.x_star - r.x_star).abs() < 1e-12);
    assert_eq!(r, bound_report(&s, &f, 1.0, VARIANT).unwrap());
}

#[test]
fn stderr_scales_with_sample_size() {
    let (g, f) = setup();
    let se: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| compute_a(&sample_liouville(&g, n, 11).unwrap(), &f, VARIANT).stderr)
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1] / 10f64.sqrt();
        assert!(ratio > 1.0 / 1.5 && ratio < 1.5, "{se:?}");
    }
}

#[test]
fn estimator_recovers_exponential_growth() {
    // N(T) = ⌊e^{T}/T⌋ on a lattice of lengths
    let mut lengths = Vec::new();
    let mut n = 0usize;
    for k in 1..=400 {
        let t = 0.025 * k as f64;
        let target = (t.exp() / t).floor() as usize;
        while n < target {
            lengths.push(t);
            n += 1;
        }
    }
    let periods: Vec<Option<f64>> = lengths.iter().map(|&l| Some(l)).collect();
    let est = estimate_from_periods(&lengths, &periods, 10.0).unwrap();
    assert!((est.h - 1.0).abs() < 1e-2, "{est:?}");
    assert!(!est.partial);
    let mut holes = periods.clone();
    holes[lengths.len() - 1] = None;
    assert!(estimate_from_periods(&lengths, &holes, 10.0).unwrap().partial);
}

#[test]
fn quadratic_fit_is_exact_on_quadratics() {
    let xs = [-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03];
    let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 0.5 * x - 3.0 * x * x).collect();
    let (c, se, hw) = fit_quadratic(&xs, &ys).unwrap();
    assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 0.5).abs() < 1e-10 && (c[2] + 3.0).abs() < 1e-8);
    assert!(se.iter().all(|s| *s < 1e-8) && hw.iter().zip(&se).all(|(h, s)| h > s));
    let (_, _, hw3) = fit_quadratic(&xs[2..5], &ys[2..5]).unwrap();
    assert!(hw3.iter().all(|h| h.is_infinite()));
}

#[test]
fn zero_field_curve_is_flat() {
    let (g, _) = setup();
    let f = FieldFamily::zero();
    let fit = entropy_curve(&g, &f, &[-0.02, -0.01, 0.0, 0.01, 0.02], &SpectrumConfig::new(6)).unwrap();
    assert!(!fit.partial);
    assert!(fit.coefficients[1].abs() < 1e-8 && fit.coefficients[2].abs() < 1e-6, "{:?}", fit.coefficients);
    assert!(matches!(
        entropy_curve(&g, &f, &[0.0, 0.01], &SpectrumConfig::new(6)),
        Err(Error::InvalidArgument(_))
    ));
}
