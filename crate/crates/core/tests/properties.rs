use proptest::prelude::*;
use thermolab::entropy::{fit_quadratic, Integrands};
use thermolab::flow::{integrate_flow, integrate_jacobi, IntegratorConfig};
use thermolab::geometry::{
    canonical_word, curvature_r, exact_geodesic_flow, metric_inner, Isometry, PhasePoint, SurfaceGroup, SurfacePoint, C64,
};
use thermolab::orbits::symmetric_fit;
use thermolab::thermostat::{energy_form_residual, thermostat_f, twisted_omega, y_tilde, z_op, FieldFamily, PhaseCotangentProbe};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup() -> (SurfaceGroup, FieldFamily) {
    let g = SurfaceGroup::bolza().unwrap();
    let f = FieldFamily::default_field(&g);
    (g, f)
}

fn point() -> impl Strategy<Value = C64> {
    (0.0..0.95f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| C64::from_polar(r, a))
}

fn vector() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| C64::new(x, y))
}

/// Unit phase point inside the fundamental octagon.
fn domain_state() -> impl Strategy<Value = PhasePoint> {
    (0.0..0.75f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, a, th)| PhasePoint::unit_at(C64::from_polar(r, a), th))
        .prop_filter("inside the octagon", |th| SurfaceGroup::bolza().unwrap().domain_margin(th.p) > 1e-3)
}

fn inner(z: C64, u: C64, w: C64) -> f64 {
    metric_inner(&SurfacePoint::new(z.re, z.im).unwrap(), u, w)
}

fn word() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..8, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_elements_preserve_the_metric(w in word(), p in point(), u in vector(), v in vector()) {
        let g = SurfaceGroup::bolza().unwrap();
        let h = g.word_isometry(&w);
        let q = h.apply(p);
        prop_assume!(q.norm() < 0.999);
        let lhs = inner(q, h.push(p, u), h.push(p, v));
        let rhs = inner(p, u, v);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn isometry_inverse_and_composition(w1 in word(), w2 in word(), p in point()) {
        let g = SurfaceGroup::bolza().unwrap();
        let (a, b) = (g.word_isometry(&w1), g.word_isometry(&w2));
        prop_assert!(a.compose(&a.inverse()).distance_to_identity() < 1e-9);
        let ab = a.compose(&b).apply(p);
        let q = a.apply(b.apply(p));
        prop_assert!((ab - q).norm() < 1e-9 * (1.0 + q.norm()));
    }

    #[test]
    fn canonical_word_is_class_invariant(w in word(), k in 0usize..6) {
        let c = canonical_word(&w);
        let k = k % w.len();
        let rotated: Vec<u8> = w[k..].iter().chain(&w[..k]).copied().collect();
        let inverse: Vec<u8> = w.iter().rev().map(|&j| SurfaceGroup::inverse_letter(j)).collect();
        prop_assert_eq!(canonical_word(&rotated), c.clone());
        prop_assert_eq!(canonical_word(&inverse), c);
    }

    #[test]
    fn curvature_is_antisymmetric_with_constant_contraction(p in point(), u in vector(), w in vector(), z in vector()) {
        let sp = SurfacePoint::new(p.re, p.im).unwrap();
        let a = curvature_r(&sp, u, w, z);
        let b = curvature_r(&sp, w, u, z);
        prop_assert!((a + b).norm() <= 1e-12 * (1.0 + a.norm()));
        // sectional curvature -1: <R(u,w)u,w> = -(|u|²|w|² - <u,w>²)
        let k = inner(p, curvature_r(&sp, u, w, u), w);
        let area = inner(p, u, u) * inner(p, w, w) - inner(p, u, w).powi(2);
        prop_assert!((k + area).abs() <= 1e-10 * area.abs().max(1.0));
    }

    #[test]
    fn exact_flow_group_law_and_reversal(r in 0.0..0.9f64, a in 0.0..6.28f64, th in 0.0..6.28f64, s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let x = PhasePoint::unit_at(C64::from_polar(r, a), th);
        let two = exact_geodesic_flow(&exact_geodesic_flow(&x, s), t);
        let one = exact_geodesic_flow(&x, s + t);
        prop_assert!(two.coord_distance(&one) < 1e-9);
        let y = exact_geodesic_flow(&x, t);
        let back = exact_geodesic_flow(&PhasePoint::new(y.p, -y.v), t);
        prop_assert!(PhasePoint::new(back.p, -back.v).coord_distance(&x) < 1e-9);
    }

    #[test]
    fn y_tilde_and_z_are_antisymmetric(th in domain_state(), lambda in -0.1..0.1f64, u in vector(), w in vector()) {
        let (_, f) = setup();
        let a = inner(th.p, y_tilde(&f, &th, lambda, u), w) + inner(th.p, y_tilde(&f, &th, lambda, w), u);
        let b = inner(th.p, z_op(&f, &th, u), w) + inner(th.p, z_op(&f, &th, w), u);
        prop_assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        let (_, vert) = thermostat_f(&f, lambda, &th);
        prop_assert!(inner(th.p, vert, th.v).abs() < 1e-14);
    }

    #[test]
    fn energy_form_residual_vanishes_everywhere(th in domain_state(), lambda in -0.1..0.1f64, seed in any::<u64>()) {
        let (_, f) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(energy_form_residual(&f, lambda, &th, 20, &mut rng) < 1e-10);
    }

    #[test]
    fn twisted_form_is_antisymmetric(th in domain_state(), lambda in -0.1..0.1f64, seed in any::<u64>()) {
        let (_, f) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = PhaseCotangentProbe::random(th, 1.0, &mut rng);
        let b = PhaseCotangentProbe::random(th, 1.0, &mut rng);
        let s = twisted_omega(&f, lambda, &th, &a, &b) + twisted_omega(&f, lambda, &th, &b, &a);
        prop_assert!(s.abs() < 1e-12);
    }

    #[test]
    fn integrands_scale_quadratically(th in domain_state(), c in -3.0..3.0f64) {
        let (_, f) = setup();
        let base = Integrands::at(&f, &th);
        let scaled = Integrands::at(&f.scaled(c), &th);
        let c2 = c * c;
        prop_assert!((scaled.a - c2 * base.a).abs() <= 1e-12 * (1.0 + c2 * base.a.abs()));
        prop_assert!((scaled.b - c2 * base.b).abs() <= 1e-12 * (1.0 + c2 * base.b.abs()));
        prop_assert!(base.a >= -1e-15 && base.b - base.a >= -1e-12);
    }

    #[test]
    fn fits_recover_polynomials(c in prop::array::uniform3(-1.0..1.0f64), d in -1.0..1.0f64) {
        let xs = [-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03];
        let ys: Vec<f64> = xs.iter().map(|x| c[0] + c[1] * x + c[2] * x * x).collect();
        let (got, _, _) = fit_quadratic(&xs, &ys).unwrap();
        for k in 0..3 {
            prop_assert!((got[k] - c[k]).abs() < 1e-8, "{k}: {} vs {}", got[k], c[k]);
        }
        let quartic: Vec<f64> = xs.iter().map(|x| c[0] + c[1] * x + c[2] * x * x + d * x.powi(3)).collect();
        let fit = symmetric_fit(&xs, &quartic).unwrap();
        prop_assert!((fit.first - c[1]).abs() < 1e-9 && (fit.second - 2.0 * c[2]).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn speed_is_conserved(th in domain_state(), lambda in -0.05..0.05f64) {
        let (g, f) = setup();
        let traj = integrate_flow(&g, &f, lambda, &th, 10.0, &IntegratorConfig::default()).unwrap();
        let worst = traj.states.iter().map(|s| (s.speed() - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn jacobi_equation_is_linear(th in domain_state(), lambda in -0.05..0.05f64, j in vector(), k in vector(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (g, f) = setup();
        let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
        let base = integrate_flow(&g, &f, lambda, &th, 3.0, &cfg).unwrap();
        let sj = integrate_jacobi(&g, &f, &base, j, k, &cfg).unwrap();
        let sk = integrate_jacobi(&g, &f, &base, k, j, &cfg).unwrap();
        let sum = integrate_jacobi(&g, &f, &base, j * a + k * b, k * a + j * b, &cfg).unwrap();
        // step sequences differ between runs, so compare at the common end time
        let (x, y, z) = (sum.j.last().unwrap(), sj.j.last().unwrap(), sk.j.last().unwrap());
        for c in 0..2 {
            let lin = a * y[c] + b * z[c];
            let scale = 1.0 + a.abs() * y[c].abs() + b.abs() * z[c].abs();
            prop_assert!((x[c] - lin).abs() < 1e-9 * scale, "{} vs {lin}", x[c]);
        }
    }
}

#[test]
fn identity_word_is_trivial() {
    let g = SurfaceGroup::bolza().unwrap();
    assert!(g.word_isometry(&[]).distance_to_identity() < 1e-15);
    assert!(g.word_isometry(g.relation()).distance_to_identity() < 1e-9);
    assert!(Isometry::identity().compose(&Isometry::translation(1.0)).distance_to_identity() > 0.1);
}
