use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::LiouvilleSample;
use crate::error::{Error, Result};
use crate::geometry::{curvature_r, inner, PhasePoint, SurfaceGroup, SurfacePoint, C64};
use crate::orbits::IntegrandVariant;
use crate::quadrature::CompositeRule;
use crate::thermostat::FieldFamily;

/// Topological entropy of the geodesic flow of a surface with `K = -1`.
pub const H0_CONSTANT_CURVATURE: f64 = 1.0;

const CHUNK: usize = 1024;

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Pointwise integrands at a unit phase point `(p, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrands {
    /// `|E|² - ⟨E, v⟩²`.
    pub a: f64,
    /// `|E|² - ⟨∇_v E, v⟩²`.
    pub a_gradient: f64,
    /// `|∇_v E|² - ⟨∇_v E, v⟩² - ⟨R(v, E)v, E⟩`.
    pub b: f64,
    /// `|∇_v E|² - ⟨∇_v E, v⟩² + |E|² - ⟨E, v⟩²`.
    pub b_expanded: f64,
}

impl Integrands {
    pub fn at(field: &FieldFamily, theta: &PhasePoint) -> Self {
        let (p, v) = (theta.p, theta.v);
        let jet = field.jet(p);
        let e = jet.value;
        let de = jet.along(v);
        let vv = inner(p, v, v);
        let e_sq = inner(p, e, e);
        let e_v = inner(p, e, v).powi(2) / vv;
        let de_sq = inner(p, de, de);
        let de_v = inner(p, de, v).powi(2) / vv;
        let point = SurfacePoint::from_complex(p).expect("sample lies in the disk");
        let curv = inner(p, curvature_r(&point, v, e, v), e);
        Self { a: e_sq - e_v, a_gradient: e_sq - de_v, b: de_sq - de_v - curv, b_expanded: de_sq - de_v + e_sq - e_v }
    }

    fn a_for(&self, variant: IntegrandVariant) -> f64 {
        match variant {
            IntegrandVariant::FieldAlongVelocity => self.a,
            IntegrandVariant::GradientAlongVelocity => self.a_gradient,
        }
    }
}

/// Means and covariance of the pair `(A, B)` of integrands over the sample.
struct Moments {
    n: f64,
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

fn moments(sample: &LiouvilleSample, field: &FieldFamily, variant: IntegrandVariant) -> Moments {
    let values: Vec<[f64; 2]> = sample
        .states
        .par_iter()
        .map(|th| {
            let i = Integrands::at(field, th);
            [i.a_for(variant), i.b]
        })
        .collect();
    let n = values.len() as f64;
    // chunked sums reduced in index order, independent of thread count
    let sums: Vec<[f64; 2]> = values.par_chunks(CHUNK).map(|c| c.iter().fold([0.0; 2], |s, x| [s[0] + x[0], s[1] + x[1]])).collect();
    let total = sums.iter().fold([0.0; 2], |s, x| [s[0] + x[0], s[1] + x[1]]);
    let mean = [total[0] / n, total[1] / n];
    let prods: Vec<[f64; 3]> = values
        .par_chunks(CHUNK)
        .map(|c| {
            c.iter().fold([0.0; 3], |s, x| {
                let (da, db) = (x[0] - mean[0], x[1] - mean[1]);
                [s[0] + da * da, s[1] + da * db, s[2] + db * db]
            })
        })
        .collect();
    let p = prods.iter().fold([0.0; 3], |s, x| [s[0] + x[0], s[1] + x[1], s[2] + x[2]]);
    let d = (n - 1.0).max(1.0);
    Moments { n, mean, cov: [[p[0] / d, p[1] / d], [p[1] / d, p[2] / d]] }
}

impl Moments {
    fn estimate(&self, k: usize) -> Estimate {
        Estimate { mean: self.mean[k], stderr: (self.cov[k][k] / self.n).sqrt() }
    }

    /// Standard error of `f(A, B)` with gradient `grad` by the delta method.
    fn delta(&self, grad: [f64; 2]) -> f64 {
        let mut var = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                var += grad[i] * grad[j] * self.cov[i][j];
            }
        }
        (var.max(0.0) / self.n).sqrt()
    }
}

/// Monte Carlo estimate of `A = ∫ |E'_0|² - ⟨E'_0, v⟩² dm` (variant `b`) or
/// its variant-`a` counterpart.
pub fn compute_a(sample: &LiouvilleSample, field: &FieldFamily, variant: IntegrandVariant) -> Estimate {
    moments(sample, field, variant).estimate(0)
}

/// Monte Carlo estimate of `B = ∫ |∇_v E'_0|² - ⟨∇_v E'_0, v⟩² - ⟨R(v, E'_0)v, E'_0⟩ dm`.
pub fn compute_b(sample: &LiouvilleSample, field: &FieldFamily) -> Estimate {
    moments(sample, field, IntegrandVariant::FieldAlongVelocity).estimate(1)
}

/// Largest `|B_i - B̃_i|` between the integrand of `B` and its constant
/// curvature expansion, and the smallest `B_i - A_i`, over the sample.
pub fn termwise_check(sample: &LiouvilleSample, field: &FieldFamily) -> (f64, f64) {
    sample.states.iter().fold((0.0, f64::INFINITY), |(dev, gap), th| {
        let i = Integrands::at(field, th);
        (dev.max((i.b - i.b_expanded).abs()), gap.min(i.b - i.a))
    })
}

/// The entropy second-derivative bound `-h0·A²/B` with its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub a: f64,
    pub a_stderr: f64,
    pub b: f64,
    pub b_stderr: f64,
    pub x_star: f64,
    pub x_star_stderr: f64,
    pub bound: f64,
    pub bound_stderr: f64,
    pub h0: f64,
    pub samples: usize,
    pub seed: u64,
    pub variant: IntegrandVariant,
}

impl BoundReport {
    /// `A > 0 ⇒ B > 0 ⇒ bound < 0`, and `B ≥ A` up to three standard errors.
    pub fn sign_structure_holds(&self) -> bool {
        let signs = !(self.a > 0.0) || (self.b > 0.0 && self.bound < 0.0);
        signs && self.b >= self.a - 3.0 * (self.a_stderr + self.b_stderr)
    }
}

/// Estimate `A` and `B` jointly and form the bound. Fails with
/// [`Error::DegenerateField`] unless `A` exceeds three standard errors.
pub fn bound_report(sample: &LiouvilleSample, field: &FieldFamily, h0: f64, variant: IntegrandVariant) -> Result<BoundReport> {
    let m = moments(sample, field, variant);
    let (a, b) = (m.estimate(0), m.estimate(1));
    if !(a.mean > 3.0 * a.stderr) {
        return Err(Error::DegenerateField { a: a.mean, stderr: a.stderr });
    }
    let (am, bm) = (a.mean, b.mean);
    Ok(BoundReport {
        a: am,
        a_stderr: a.stderr,
        b: bm,
        b_stderr: b.stderr,
        x_star: am / bm,
        x_star_stderr: m.delta([1.0 / bm, -am / (bm * bm)]),
        bound: -h0 * am * am / bm,
        bound_stderr: m.delta([-2.0 * h0 * am / bm, h0 * am * am / (bm * bm)]),
        h0,
        samples: sample.count,
        seed: sample.seed,
        variant,
    })
}

/// `∫ f dA` over the fundamental polygon in hyperbolic area, by composite
/// Gauss–Legendre in geodesic polar coordinates about the origin, one angular
/// block per side.
pub fn polygon_integral<F: Fn(C64) -> f64 + Sync>(group: &SurfaceGroup, panels: usize, f: F) -> f64 {
    let order = 8;
    group
        .sides()
        .par_iter()
        .map(|side| {
            let a0 = side.start.arg();
            let mut a1 = side.end.arg();
            if a1 < a0 {
                a1 += std::f64::consts::TAU;
            }
            let c = side.center;
            let c2 = c.norm_sqr() - side.radius * side.radius;
            CompositeRule::new(a0, a1, panels, order).integrate(|phi| {
                let dir = C64::from_polar(1.0, phi);
                // first crossing of the ray with the side circle
                let s = (c * dir.conj()).re;
                let r = s - (s * s - c2).sqrt();
                let rho_max = 2.0 * r.atanh();
                CompositeRule::new(0.0, rho_max, panels, order).integrate(|rho| f(dir * (0.5 * rho).tanh()) * rho.sinh())
            })
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Deterministic value of `A`: the fiber average of `⟨E, v⟩²` over unit
/// vectors is `|E|²/2`, so `A = ∫_M |E|² dA / (2·Area)`.
pub fn fiber_oracle_a(group: &SurfaceGroup, field: &FieldFamily, panels: usize) -> f64 {
    let area = polygon_integral(group, panels, |_| 1.0);
    let e_sq = polygon_integral(group, panels, |z| {
        let e = field.grad(z);
        inner(z, e, e)
    });
    e_sq / (2.0 * area)
}
