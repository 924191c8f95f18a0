use nalgebra::{DMatrix, DVector, Matrix4, Matrix4x2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate_flow, lifted_derivative, variational_from, IntegratorConfig, Thermostat, Trajectory};
use crate::geometry::{exact_geodesic_flow, rotate_quarter, ClosedGeodesic, Isometry, PhasePoint, SurfaceGroup, C64};
use crate::thermostat::FieldFamily;

/// Step for differentiating the section chart.
const CHART_STEP: f64 = 1e-6;

/// Settings for Newton continuation of periodic orbits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub integrator: IntegratorConfig,
    /// Newton stops once the return residual falls below this.
    pub tolerance: f64,
    /// Largest return residual accepted as a periodic orbit.
    pub accept: f64,
    pub max_iterations: usize,
    /// Largest Newton update component; longer steps are scaled down.
    pub max_step: f64,
    /// Longest shooting segment.
    pub segment: f64,
    /// Homotopy refinement: at most `2^max_halvings` steps in `λ`.
    pub max_halvings: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::with_tolerances(1e-12, 1e-14),
            tolerance: 1e-12,
            accept: 1e-9,
            max_iterations: 12,
            max_step: 0.25,
            segment: 1.0,
            max_halvings: 5,
        }
    }
}

/// A periodic orbit of the thermostat at `λ`, continued from a closed
/// geodesic.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub lambda: f64,
    /// Point of the orbit on the section through the geodesic base,
    /// reduced into the polygon.
    pub anchor: PhasePoint,
    pub period: f64,
    /// Section coordinates: normal displacement and velocity rotation.
    pub section: (f64, f64),
    /// Norm of the continuity defects between shooting segments, the last
    /// one being the return defect after one period.
    pub residual: f64,
    pub iterations: usize,
    pub segments: usize,
    /// One period of the orbit, sampled by the integrator.
    pub samples: Trajectory,
}

/// Section through `base`: move a distance `a` along the normal geodesic,
/// then rotate the parallel-transported velocity by `b`.
pub(crate) fn section_point(base: &PhasePoint, a: f64, b: f64) -> PhasePoint {
    let normal = rotate_quarter(base.v);
    let moved = exact_geodesic_flow(&PhasePoint::new(base.p, normal), a);
    // parallel transport along a geodesic keeps the angle to it
    let v = -rotate_quarter(moved.v) * C64::from_polar(1.0, b);
    PhasePoint::new(moved.p, v)
}

fn as_vec(th: &PhasePoint) -> Vector4<f64> {
    Vector4::new(th.p.re, th.p.im, th.v.re, th.v.im)
}

fn as_phase(x: &DVector<f64>, at: usize) -> PhasePoint {
    PhasePoint::new(C64::new(x[at], x[at + 1]), C64::new(x[at + 2], x[at + 3]))
}

/// Multiple-shooting layout for one closed geodesic. Unknowns are
/// `(a, b, τ, y_1, …, y_{m-1})`: section coordinates of the first segment
/// start, the period, and the other segment starts, each stored in the
/// polygon chart it was reduced into.
struct Shooting<'a> {
    group: &'a SurfaceGroup,
    field: &'a FieldFamily,
    geodesic: &'a ClosedGeodesic,
    /// `frames[k]` maps the universal-cover lift of segment `k` into the
    /// chart of its start; `frames[0]` is the identity.
    frames: Vec<Isometry>,
}

impl<'a> Shooting<'a> {
    fn new(group: &'a SurfaceGroup, field: &'a FieldFamily, geodesic: &'a ClosedGeodesic, segment: f64) -> Result<(Self, DVector<f64>)> {
        let m = ((geodesic.length / segment).ceil() as usize).max(1);
        let mut frames = vec![Isometry::identity()];
        let mut x = DVector::zeros(4 * m - 1);
        x[2] = geodesic.length;
        for k in 1..m {
            let q = exact_geodesic_flow(&geodesic.base, geodesic.length * k as f64 / m as f64);
            let (y, w) = group.reduce_to_domain(&q)?;
            frames.push(group.deck_isometry(&w));
            x.fixed_rows_mut::<4>(4 * k -1).copy_from(&as_vec(&y));
        }
        Ok((Self { group, field, geodesic, frames }, x))
    }

    fn segments(&self) -> usize {
        self.frames.len()
    }

    fn start(&self, x: &DVector<f64>, k: usize) -> PhasePoint {
        if k == 0 {
            section_point(&self.geodesic.base, x[0], x[1])
        } else {
            as_phase(x, 4 * k - 1)
        }
    }

    /// Chart change from the end of segment `k` to the start of the next.
    fn transition(&self, k: usize) -> Isometry {
        let m = self.segments();
        let inv = self.frames[k].inverse();
        if k + 1 < m {
            self.frames[k + 1].compose(&inv)
        } else {
            self.geodesic.translation.inverse().compose(&inv)
        }
    }

    /// Continuity defects and their derivative in the unknowns.
    fn eval(&self, lambda: f64, x: &DVector<f64>, cfg: &IntegratorConfig) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let m = self.segments();
        let n = 4 * m - 1;
        let tau = x[2];
        let h = CHART_STEP;
        let chart = |a: f64, b: f64| as_vec(&section_point(&self.geodesic.base, a, b));
        let mut dchart = Matrix4x2::zeros();
        dchart.set_column(0, &((chart(x[0] + h, x[1]) - chart(x[0] - h, x[1])) / (2.0 * h)));
        dchart.set_column(1, &((chart(x[0], x[1] + h) - chart(x[0], x[1] - h)) / (2.0 * h)));
        let sys = Thermostat { field: self.field, lambda };

        let mut r = DVector::zeros(4 * m);
        let mut jac = DMatrix::zeros(4 * m, n);
        for k in 0..m {
            let start = self.start(x, k);
            let (reduced, w0) = self.group.reduce_to_domain(&start)?;
            let g0 = self.group.deck_isometry(&w0);
            let sol = variational_from(self.group, self.field, lambda, &reduced, tau / m as f64, &[], None, cfg)?;
            let end = *sol.states.last().expect("solution has samples");
            let map = self.transition(k).compose(&g0.inverse()).compose(&self.group.deck_isometry(&sol.deck).inverse());
            let next = if k + 1 < m { self.start(x, k + 1) } else { self.start(x, 0) };
            let row = 4 * k;
            r.fixed_rows_mut::<4>(row).copy_from(&(as_vec(&map.apply_phase(&end)) - as_vec(&next)));

            let dm = lifted_derivative(&map, end.p, end.v);
            let chain: Matrix4<f64> = dm * sol.final_matrix() * lifted_derivative(&g0, start.p, start.v);
            if k == 0 {
                let mut block = jac.fixed_view_mut::<4, 2>(row, 0);
                block += chain * dchart;
            } else {
                let mut block = jac.fixed_view_mut::<4, 4>(row, 4 * k - 1);
                block += chain;
            }
            if k + 1 < m {
                let mut block = jac.fixed_view_mut::<4, 4>(row, 4 * k + 3);
                block -= Matrix4::identity();
            } else {
                let mut block = jac.fixed_view_mut::<4, 2>(row, 0);
                block -= dchart;
            }
            let acc = sys.accel(end.p, end.v);
            let flow = Vector4::new(end.v.re, end.v.im, acc.re, acc.im);
            let mut col = jac.fixed_view_mut::<4, 1>(row, 2);
            col += dm * flow / m as f64;
        }
        Ok((r, jac))
    }

    fn newton(&self, lambda: f64, mut x: DVector<f64>, cfg: &ContinuationConfig) -> Result<(DVector<f64>, f64, usize)> {
        let mut best = f64::INFINITY;
        for it in 0..=cfg.max_iterations {
            let (r, jac) = self.eval(lambda, &x, &cfg.integrator)?;
            let rn = r.norm();
            if !rn.is_finite() || jac.iter().any(|v| !v.is_finite()) {
                break;
            }
            if rn < cfg.tolerance || (it > 0 && rn >= 0.5 * best && rn < cfg.accept) {
                return Ok((x, rn, it));
            }
            best = best.min(rn);
            if it == cfg.max_iterations {
                break;
            }
            let mut step = jac
                .try_svd(true, true, f64::EPSILON, 200)
                .and_then(|svd| svd.solve(&(-r), 1e-14).ok())
                .ok_or(Error::Continuation { lambda, residual: rn })?;
            let size = step.amax();
            if size > cfg.max_step {
                step *= cfg.max_step / size;
            }
            x += step;
        }
        Err(Error::Continuation { lambda, residual: best })
    }

    /// Newton from a solution `start` at one `λ` to the given `λ`,
    /// subdividing the step up to `2^max_halvings` times when a jump fails.
    fn homotopy(&self, start: (f64, &DVector<f64>), lambda: f64, cfg: &ContinuationConfig) -> Result<(DVector<f64>, f64, usize)> {
        let (lambda0, x0) = start;
        let mut last = Error::Continuation { lambda, residual: f64::INFINITY };
        'outer: for halvings in 0..=cfg.max_halvings {
            let steps = 1usize << halvings;
            let mut x = x0.clone();
            let mut found = None;
            for k in 1..=steps {
                let lam = lambda0 + (lambda - lambda0) * k as f64 / steps as f64;
                match self.newton(lam, x, cfg) {
                    Ok((xk, r, it)) => {
                        x = xk;
                        found = Some((r, it));
                    }
                    Err(e) => {
                        last = e;
                        continue 'outer;
                    }
                }
            }
            let (residual, iterations) = found.expect("at least one step");
            return Ok((x, residual, iterations));
        }
        Err(last)
    }

    fn finish(&self, lambda: f64, x: &DVector<f64>, residual: f64, iterations: usize, cfg: &ContinuationConfig) -> Result<PeriodicOrbit> {
        let start = self.start(x, 0);
        let anchor = self.group.reduce_to_domain(&start)?.0;
        let samples = integrate_flow(self.group, self.field, lambda, &anchor, x[2], &cfg.integrator)?;
        Ok(PeriodicOrbit {
            lambda,
            anchor,
            period: x[2],
            section: (x[0], x[1]),
            residual,
            iterations,
            segments: self.segments(),
            samples,
        })
    }
}

/// Continue the closed geodesic to a periodic orbit of the thermostat at
/// `λ` by Newton iteration, starting from the geodesic itself.
pub fn continue_orbit(
    group: &SurfaceGroup,
    field: &FieldFamily,
    geodesic: &ClosedGeodesic,
    lambda: f64,
    cfg: &ContinuationConfig,
) -> Result<PeriodicOrbit> {
    let (shooting, x0) = Shooting::new(group, field, geodesic, cfg.segment)?;
    let (x, residual, iterations) = shooting.homotopy((0.0, &x0), lambda, cfg)?;
    shooting.finish(lambda, &x, residual, iterations, cfg)
}

/// Orbits at every `λ` in `lambdas`, walking outwards from 0 on each side
/// and starting Newton from the neighbouring solution. Results keep the
/// input order.
pub fn continue_family(
    group: &SurfaceGroup,
    field: &FieldFamily,
    geodesic: &ClosedGeodesic,
    lambdas: &[f64],
    cfg: &ContinuationConfig,
) -> Vec<Result<PeriodicOrbit>> {
    let (shooting, x0) = match Shooting::new(group, field, geodesic, cfg.segment) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return lambdas.iter().map(|_| Err(Error::BaseTrajectory(msg.clone()))).collect();
        }
    };
    let mut out: Vec<Option<Result<PeriodicOrbit>>> = lambdas.iter().map(|_| None).collect();
    for positive in [true, false] {
        let mut order: Vec<usize> = (0..lambdas.len())
            .filter(|&i| if positive { lambdas[i] >= 0.0 } else { lambdas[i] < 0.0 })
            .collect();
        order.sort_by(|&i, &j| lambdas[i].abs().total_cmp(&lambdas[j].abs()));
        let mut from = (0.0, x0.clone());
        for i in order {
            let lambda = lambdas[i];
            let solved = shooting.homotopy((from.0, &from.1), lambda, cfg);
            out[i] = Some(solved.and_then(|(x, residual, iterations)| {
                let orbit = shooting.finish(lambda, &x, residual, iterations, cfg);
                from = (lambda, x);
                orbit
            }));
        }
    }
    out.into_iter().map(|r| r.expect("every lambda visited")).collect()
}
