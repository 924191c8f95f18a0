use nalgebra::{Matrix4, Vector4};

use super::integrate::{check_start, run, Sample, Trajectory};
use super::ode::{dop853_step, IntegratorConfig};
use super::systems::{c, lifted_derivative, FlowSystem, JacobiSystem, Thermostat, VariationalSystem};
use crate::error::{Error, Result};
use crate::geometry::{christoffel, inner, metric_norm, rotate_quarter, Isometry, PhasePoint, SurfaceGroup, C64};
use crate::thermostat::FieldFamily;

/// Coordinate mismatch tolerated at `t = 0` between a supplied base
/// trajectory and the one recomputed alongside the linearised equations. The
/// two use different step sequences and nearby orbits separate like `e^t`.
const BASE_MATCH: f64 = 1e-8;

/// Substep used when replaying half intervals for the midpoint defect.
const MIDPOINT_STEP: f64 = 0.02;

/// Solution of the thermostat Jacobi equation along a base orbit, in a
/// parallel orthonormal frame `(e1, e2 = i·e1)`.
#[derive(Clone, Debug)]
pub struct JacobiSolution {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    /// `e1` in coordinates at each sample.
    pub frame: Vec<C64>,
    /// Frame components of `J`.
    pub j: Vec<[f64; 2]>,
    /// Frame components of `DJ/dt`.
    pub j_dot: Vec<[f64; 2]>,
    raw: Vec<[f64; 10]>,
    lambda: f64,
}

impl JacobiSolution {
    /// Index of the (non-crossing) sample at time `t`.
    pub fn sample_index(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t);
        (k < self.times.len() && self.times[k] == t).then_some(k)
    }

    /// `J` at sample `k` in coordinates.
    pub fn j_coord(&self, k: usize) -> C64 {
        let e1 = self.frame[k];
        e1 * self.j[k][0] + rotate_quarter(e1) * self.j[k][1]
    }

    /// `DJ/dt` at sample `k` in coordinates.
    pub fn j_dot_coord(&self, k: usize) -> C64 {
        let e1 = self.frame[k];
        e1 * self.j_dot[k][0] + rotate_quarter(e1) * self.j_dot[k][1]
    }

    /// Component of `J` along the unit normal `i·γ̇/|γ̇|`.
    pub fn normal_component(&self, k: usize) -> f64 {
        let s = self.states[k];
        let n = rotate_quarter(s.v) / s.speed();
        inner(s.p, self.j_coord(k), n)
    }

    /// Coordinate perturbation `(δp, δv)` of the flow carried by the field.
    pub fn coordinate_perturbation(&self, k: usize) -> (C64, C64) {
        let s = self.states[k];
        let j = self.j_coord(k);
        (j, self.j_dot_coord(k) - christoffel(s.p, j, s.v))
    }

    /// Midpoint defect: integrate each sample interval forwards and backwards
    /// to its midpoint and compare the Jacobi components. Intervals cut by a
    /// side crossing are skipped.
    pub fn ode_residual(&self, group: &SurfaceGroup, field: &FieldFamily, cfg: &IntegratorConfig) -> f64 {
        let sys = JacobiSystem(Thermostat { field, lambda: self.lambda });
        let f = |y: &[f64; 10]| sys.rhs(y);
        let back = |y: &[f64; 10]| sys.rhs(y).map(|x| -x);
        let mut worst: f64 = 0.0;
        for k in 0..self.times.len().saturating_sub(1) {
            let h = self.times[k + 1] - self.times[k];
            let (a, b) = (self.raw[k], self.raw[k + 1]);
            if h <= 0.0 || (c(&a, 0) - c(&b, 0)).norm() > 4.0 * h {
                continue;
            }
            let m = (h / MIDPOINT_STEP).ceil().max(1.0) as usize;
            let sub = 0.5 * h / m as f64;
            let (mut ya, mut yb) = (a, b);
            for _ in 0..m {
                ya = dop853_step(&f, &ya, &f(&ya), sub, 10, cfg).0;
                yb = dop853_step(&back, &yb, &back(&yb), sub, 10, cfg).0;
            }
            if !group.contains(c(&ya, 0)) || !group.contains(c(&yb, 0)) {
                continue;
            }
            let scale = 1.0 + a[6..10].iter().map(|x| x.abs()).fold(0.0, f64::max);
            let d = (6..10).map(|i| (ya[i] - yb[i]).abs()).fold(0.0, f64::max);
            worst = worst.max(d / scale);
        }
        worst
    }
}

fn compare_base(base: &Trajectory, t: f64, z: C64, v: C64) -> Result<()> {
    let crossed = |k: usize| base.crossings.iter().any(|c| c.sample == k);
    if let Some(k) = base.sample_at(t).filter(|&k| !crossed(k)) {
        let s = base.states[k];
        let d = (s.p - z).norm() + (s.v - v).norm();
        if d > BASE_MATCH * t.exp() {
            return Err(Error::BaseTrajectory(format!("base orbit deviates by {d:e} at t = {t}")));
        }
    }
    Ok(())
}

/// Integrate the Jacobi equation of the thermostat along `base` from
/// `J(0) = j0`, `DJ/dt(0) = j_dot0` (coordinate vectors at the initial point).
pub fn integrate_jacobi(
    group: &SurfaceGroup,
    field: &FieldFamily,
    base: &Trajectory,
    j0: C64,
    j_dot0: C64,
    cfg: &IntegratorConfig,
) -> Result<JacobiSolution> {
    let th0 = base.initial();
    check_start(group, &th0)?;
    if base.times.len() < 2 {
        return Err(Error::BaseTrajectory("base trajectory has fewer than two samples".into()));
    }
    let sys = JacobiSystem(Thermostat { field, lambda: base.lambda });
    let e1 = th0.v / metric_norm(th0.p, th0.v);
    let e2 = rotate_quarter(e1);
    let fc = |u: C64| [inner(th0.p, u, e1), inner(th0.p, u, e2)];
    let (j, jd) = (fc(j0), fc(j_dot0));
    let y0 = [th0.p.re, th0.p.im, th0.v.re, th0.v.im, e1.re, e1.im, j[0], j[1], jd[0], jd[1]];
    let mut sol = JacobiSolution {
        times: Vec::new(),
        states: Vec::new(),
        frame: Vec::new(),
        j: Vec::new(),
        j_dot: Vec::new(),
        raw: Vec::new(),
        lambda: base.lambda,
    };
    let mut mismatch = Ok(());
    run(&sys, group, y0, base.t_end(), &base.step_times(), cfg, &mut |t, y, s| {
        if matches!(s, Sample::Step) && mismatch.is_ok() {
            mismatch = compare_base(base, t, c(y, 0), c(y, 2));
        }
        sol.times.push(t);
        sol.states.push(PhasePoint::new(c(y, 0), c(y, 2)));
        sol.frame.push(c(y, 4));
        sol.j.push([y[6], y[7]]);
        sol.j_dot.push([y[8], y[9]]);
        sol.raw.push(*y);
    })?;
    mismatch?;
    Ok(sol)
}

/// Fundamental matrix of the coordinate linearisation along a base orbit,
/// including the derivatives of the deck maps applied at crossings.
#[derive(Clone, Debug)]
pub struct VariationalSolution {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub phi: Vec<Matrix4<f64>>,
    /// `log det Φ` integrated from the trace of the Jacobian.
    pub log_det: Vec<f64>,
    /// Deck letters applied along the way, in order.
    pub deck: Vec<u8>,
}

impl VariationalSolution {
    pub fn sample_index(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t);
        (k < self.times.len() && self.times[k] == t).then_some(k)
    }

    pub fn final_matrix(&self) -> Matrix4<f64> {
        *self.phi.last().expect("solution has samples")
    }

    /// Largest `|log|det Φ| - ∫ tr DF|` over the samples.
    pub fn abel_defect(&self) -> f64 {
        self.phi
            .iter()
            .zip(&self.log_det)
            .map(|(m, l)| (m.determinant().abs().ln() - l).abs())
            .fold(0.0, f64::max)
    }

    /// Propagate a coordinate perturbation `(δp, δv)` to sample `k`.
    pub fn propagate(&self, k: usize, dp: C64, dv: C64) -> (C64, C64) {
        let r = self.phi[k] * Vector4::new(dp.re, dp.im, dv.re, dv.im);
        (C64::new(r[0], r[1]), C64::new(r[2], r[3]))
    }
}

/// Integrate `Φ̇ = DF·Φ`, `Φ(0) = I`, along `base`.
pub fn variational_flow(
    group: &SurfaceGroup,
    field: &FieldFamily,
    base: &Trajectory,
    cfg: &IntegratorConfig,
) -> Result<VariationalSolution> {
    variational_from(group, field, base.lambda, &base.initial(), base.t_end(), &base.step_times(), Some(base), cfg)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn variational_from(
    group: &SurfaceGroup,
    field: &FieldFamily,
    lambda: f64,
    theta0: &PhasePoint,
    t_end: f64,
    stops: &[f64],
    base: Option<&Trajectory>,
    cfg: &IntegratorConfig,
) -> Result<VariationalSolution> {
    check_start(group, theta0)?;
    let sys = VariationalSystem(Thermostat { field, lambda });
    let mut y0 = [0.0; 21];
    y0[..4].copy_from_slice(&[theta0.p.re, theta0.p.im, theta0.v.re, theta0.v.im]);
    y0[4..20].copy_from_slice(Matrix4::<f64>::identity().as_slice());
    let mut sol = VariationalSolution { times: Vec::new(), states: Vec::new(), phi: Vec::new(), log_det: Vec::new(), deck: Vec::new() };
    let mut mismatch = Ok(());
    run(&sys, group, y0, t_end, stops, cfg, &mut |t, y, s| {
        match s {
            Sample::Crossing(w) => sol.deck.extend_from_slice(w),
            Sample::Step => {
                if let (Some(b), true) = (base, mismatch.is_ok()) {
                    mismatch = compare_base(b, t, c(y, 0), c(y, 2));
                }
            }
        }
        sol.times.push(t);
        sol.states.push(PhasePoint::new(c(y, 0), c(y, 2)));
        sol.phi.push(Matrix4::from_column_slice(&y[4..20]));
        sol.log_det.push(y[20]);
    })?;
    mismatch?;
    Ok(sol)
}

/// Relative discrepancy between the Jacobi solution from `(j0, j_dot0)` and
/// central differences of the nonlinear flow with step `eps`, compared in the
/// universal cover at the integer-spaced sample times up to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn jacobi_fd_error(
    group: &SurfaceGroup,
    field: &FieldFamily,
    lambda: f64,
    theta0: &PhasePoint,
    j0: C64,
    j_dot0: C64,
    t_end: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let stops: Vec<f64> = (1..).map(|k| 0.5 * k as f64).take_while(|&t| t < t_end).collect();
    let base = super::integrate_flow_at(group, field, lambda, theta0, t_end, &stops, cfg)?;
    let sol = integrate_jacobi(group, field, &base, j0, j_dot0, cfg)?;
    let dv = j_dot0 - christoffel(theta0.p, j0, theta0.v);
    let shifted = |s: f64| PhasePoint::new(theta0.p + j0 * s, theta0.v + dv * s);
    let (plus, minus) = (shifted(eps), shifted(-eps));
    // the perturbed starts may leave the polygon by a hair
    let start = |th: PhasePoint| -> Result<(PhasePoint, Isometry)> {
        let (r, w) = group.reduce_to_domain(&th)?;
        Ok((r, group.deck_isometry(&w).inverse()))
    };
    let (plus, g_plus) = start(plus)?;
    let (minus, g_minus) = start(minus)?;
    let tp = super::integrate_flow_at(group, field, lambda, &plus, t_end, &stops, cfg)?;
    let tm = super::integrate_flow_at(group, field, lambda, &minus, t_end, &stops, cfg)?;
    let mut times = stops.clone();
    times.push(t_end);
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for &t in &times {
        let (Some(k), Some(kb), Some(kp), Some(km)) = (sol.sample_index(t), base.sample_at(t), tp.sample_at(t), tm.sample_at(t)) else {
            return Err(Error::BaseTrajectory(format!("missing sample at t = {t}")));
        };
        let cover = |traj: &Trajectory, k: usize, g0: &Isometry| {
            let th = group.unreduce(&traj.states[k], &traj.deck_word_at(k));
            g0.apply_phase(&th)
        };
        let (a, b) = (cover(&tp, kp, &g_plus), cover(&tm, km, &g_minus));
        let g = group.deck_isometry(&base.deck_word_at(kb)).inverse();
        let s = sol.states[k];
        let (jp, jv) = sol.coordinate_perturbation(k);
        let lifted = lifted_derivative(&g, s.p, s.v);
        let r = lifted * Vector4::new(jp.re, jp.im, jv.re, jv.im);
        let q = g.apply(s.p);
        let fd_p = (a.p - b.p) / (2.0 * eps);
        let fd_v = (a.v - b.v) / (2.0 * eps);
        let (jp, jv) = (C64::new(r[0], r[1]), C64::new(r[2], r[3]));
        // compare position and covariant velocity parts in the metric at q
        let d = metric_norm(q, fd_p - jp) + metric_norm(q, fd_v - jv + christoffel(q, fd_p - jp, g.push(s.p, s.v)));
        scale = scale.max(metric_norm(q, jp) + metric_norm(q, jv + christoffel(q, jp, g.push(s.p, s.v))));
        worst = worst.max(d);
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}
