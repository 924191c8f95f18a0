use std::f64::consts::TAU;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{exact_geodesic_flow, inner, rotate_quarter, ClosedGeodesic, PhasePoint, SurfaceGroup, C64};
use crate::quadrature::CompositeRule;
use crate::thermostat::FieldFamily;

/// Residual target for the Fourier solve, checked at [`RESIDUAL_NODES`].
const TARGET: f64 = 1e-9;
/// Largest residual accepted once the sample count is exhausted.
const ACCEPT: f64 = 1e-8;
const RESIDUAL_NODES: usize = 256;
const MIN_SAMPLES: usize = 64;
const MAX_SAMPLES: usize = 1 << 15;

/// `E'_0` and `∇_{γ̇}E'_0` along a closed geodesic, in the parallel frame
/// `(γ̇, n)` with `n = iγ̇`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameJet {
    /// `⟨E'_0, γ̇⟩`.
    pub tangential: f64,
    /// `⟨E'_0, n⟩`.
    pub normal: f64,
    /// `⟨∇_{γ̇}E'_0, γ̇⟩`.
    pub d_tangential: f64,
    /// `⟨∇_{γ̇}E'_0, n⟩`.
    pub d_normal: f64,
}

/// Unit phase point of the geodesic at time `t`, reduced into the polygon.
pub fn geodesic_state(group: &SurfaceGroup, geodesic: &ClosedGeodesic, t: f64) -> Result<PhasePoint> {
    let t = t.rem_euclid(geodesic.length);
    Ok(group.reduce_to_domain(&exact_geodesic_flow(&geodesic.base, t))?.0)
}

/// Frame components of the field and its derivative at time `t`.
pub fn frame_jet(group: &SurfaceGroup, field: &FieldFamily, geodesic: &ClosedGeodesic, t: f64) -> Result<FrameJet> {
    let th = geodesic_state(group, geodesic, t)?;
    let jet = field.jet(th.p);
    let n = rotate_quarter(th.v);
    let de = jet.along(th.v);
    Ok(FrameJet {
        tangential: inner(th.p, jet.value, th.v),
        normal: inner(th.p, jet.value, n),
        d_tangential: inner(th.p, de, th.v),
        d_normal: inner(th.p, de, n),
    })
}

/// Periodic solution of `Ẅ + R(γ̇,W)γ̇ = E'_0 - ⟨E'_0,γ̇⟩γ̇` along a closed
/// geodesic. The tangential part is fixed to zero; the normal part `w` solves
/// `ẅ - w = f` with `f = ⟨E'_0, n⟩` and is stored as a Fourier series.
#[derive(Clone, Debug)]
pub struct WField {
    pub period: f64,
    /// `c_k` with `w(t) = Re Σ c_k e^{2πikt/T}`.
    coefficients: Vec<C64>,
    /// Samples per period used by the final solve.
    pub samples: usize,
    /// Largest `|ẅ - w - f|` over the residual nodes.
    pub residual: f64,
}

impl WField {
    fn series(&self, t: f64, order: u32) -> f64 {
        let base = C64::from_polar(1.0, TAU * t / self.period);
        let mut z = C64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (k, c) in self.coefficients.iter().enumerate() {
            let w = TAU * k as f64 / self.period;
            // d/dt multiplies by iω
            let factor = C64::new(0.0, w).powu(order);
            acc += (c * factor * z).re;
            z *= base;
        }
        acc
    }

    /// Normal component `w(t)`.
    pub fn normal(&self, t: f64) -> f64 {
        self.series(t, 0)
    }

    pub fn normal_dot(&self, t: f64) -> f64 {
        self.series(t, 1)
    }

    pub fn normal_ddot(&self, t: f64) -> f64 {
        self.series(t, 2)
    }

    /// Tangential component; identically zero in the chosen gauge.
    pub fn tangential(&self, _t: f64) -> f64 {
        0.0
    }

    /// `|W(T) - W(0)| + |Ẇ(T) - Ẇ(0)|`.
    pub fn periodicity_defect(&self) -> f64 {
        let t = self.period;
        (self.normal(t) - self.normal(0.0)).abs() + (self.normal_dot(t) - self.normal_dot(0.0)).abs()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == C64::new(0.0, 0.0))
    }
}

/// Unique `T`-periodic solution of `ẅ - w = f`.
pub fn solve_periodic<F>(period: f64, mut forcing: F) -> Result<WField>
where
    F: FnMut(f64) -> Result<f64>,
{
    let rule = CompositeRule::new(0.0, period, RESIDUAL_NODES / 8, 8);
    let mut check = Vec::with_capacity(rule.len());
    for &t in &rule.nodes {
        check.push((t, forcing(t)?));
    }
    let mut planner = FftPlanner::new();
    let mut n = MIN_SAMPLES;
    loop {
        let mut buf = Vec::with_capacity(n);
        for j in 0..n {
            buf.push(C64::new(forcing(period * j as f64 / n as f64)?, 0.0));
        }
        planner.plan_fft_forward(n).process(&mut buf);
        let half = n / 2;
        let mut coefficients = Vec::with_capacity(half + 1);
        for (k, fk) in buf.iter().take(half + 1).enumerate() {
            let w = TAU * k as f64 / period;
            let weight = if k == 0 || k == half { 1.0 } else { 2.0 };
            let mut c = -fk / (n as f64) / (w * w + 1.0) * weight;
            if k == half {
                // the Nyquist mode carries no sine part
                c = C64::new(c.re, 0.0);
            }
            coefficients.push(c);
        }
        while coefficients.len() > 1 && coefficients.last().is_some_and(|c| c.norm() == 0.0) {
            coefficients.pop();
        }
        let mut sol = WField { period, coefficients, samples: n, residual: 0.0 };
        sol.residual = check
            .iter()
            .map(|&(t, f)| (sol.normal_ddot(t) - sol.normal(t) - f).abs())
            .fold(0.0, f64::max);
        if sol.residual < TARGET || (n >= MAX_SAMPLES && sol.residual < ACCEPT) {
            return Ok(sol);
        }
        if n >= MAX_SAMPLES {
            return Err(Error::BoundaryValue { residual: sol.residual, modes: n });
        }
        n *= 2;
    }
}

/// Solve for the periodic variational field `W` along `geodesic`.
pub fn solve_w(group: &SurfaceGroup, field: &FieldFamily, geodesic: &ClosedGeodesic) -> Result<WField> {
    solve_periodic(geodesic.length, |t| Ok(frame_jet(group, field, geodesic, t)?.normal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_classes, geodesic_from_class};

    #[test]
    fn constant_forcing() {
        let w = solve_periodic(3.0, |_| Ok(0.7)).unwrap();
        for &t in &[0.0, 0.4, 2.9] {
            assert!((w.normal(t) + 0.7).abs() < 1e-14);
        }
        let zero = solve_periodic(2.0, |_| Ok(0.0)).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn trigonometric_forcing() {
        // ẅ - w = cos(ωt) has w = -cos(ωt)/(1+ω²)
        let t_per = 2.5;
        let om = TAU * 3.0 / t_per;
        let w = solve_periodic(t_per, |t| Ok((om * t).cos())).unwrap();
        for &t in &[0.1, 1.3, 2.2] {
            assert!((w.normal(t) + (om * t).cos() / (1.0 + om * om)).abs() < 1e-13);
            assert!((w.normal_dot(t) - om * (om * t).sin() / (1.0 + om * om)).abs() < 1e-12);
        }
    }

    #[test]
    fn default_field_on_systoles() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        for class in enumerate_classes(&g, 2).iter().take(4) {
            let geo = geodesic_from_class(&g, class).unwrap();
            let w = solve_w(&g, &f, &geo).unwrap();
            assert!(w.residual < 1e-8, "{}", w.residual);
            assert!(w.periodicity_defect() < 1e-9);
            assert!(!w.is_zero());
        }
    }

    #[test]
    fn frame_jet_is_periodic() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        let geo = geodesic_from_class(&g, &enumerate_classes(&g, 1)[0]).unwrap();
        let a = frame_jet(&g, &f, &geo, 0.3).unwrap();
        let b = frame_jet(&g, &f, &geo, 0.3 + geo.length).unwrap();
        assert!((a.normal - b.normal).abs() < 1e-10 && (a.d_tangential - b.d_tangential).abs() < 1e-10);
        // d/dt ⟨E, γ̇⟩ = ⟨∇_γ̇ E, γ̇⟩ along a geodesic
        let h = 1e-5;
        let fd = (frame_jet(&g, &f, &geo, 0.3 + h).unwrap().tangential - frame_jet(&g, &f, &geo, 0.3 - h).unwrap().tangential) / (2.0 * h);
        assert!((fd - a.d_tangential).abs() < 1e-6);
        let fd = (frame_jet(&g, &f, &geo, 0.3 + h).unwrap().normal - frame_jet(&g, &f, &geo, 0.3 - h).unwrap().normal) / (2.0 * h);
        assert!((fd - a.d_normal).abs() < 1e-6);
    }
}
