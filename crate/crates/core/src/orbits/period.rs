use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::continuation::{continue_orbit, ContinuationConfig, PeriodicOrbit};
use crate::error::{Error, Result};
use crate::flow::integrate_flow_at;
use crate::geometry::{ClosedGeodesic, SurfaceGroup};
use crate::quadrature::CompositeRule;
use crate::thermostat::FieldFamily;

/// Nodes of the rule used for the energy of a reparametrized orbit.
const ENERGY_NODES: usize = 256;

/// First and second derivatives at 0 from samples on a symmetric grid, with
/// error estimates from dropping the widest step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetricFit {
    pub first: f64,
    pub first_err: f64,
    pub second: f64,
    pub second_err: f64,
}

/// Exact polynomial fit of the odd and even parts through the positive grid
/// steps (generalized Richardson extrapolation).
pub fn symmetric_fit(lambdas: &[f64], values: &[f64]) -> Result<SymmetricFit> {
    let at = |x: f64| {
        lambdas.iter().position(|&l| (l - x).abs() <= 1e-14 * x.abs().max(1.0)).map(|k| values[k])
    };
    let f0 = at(0.0).ok_or_else(|| Error::InvalidArgument("grid must contain 0".into()))?;
    let mut steps: Vec<f64> = lambdas.iter().copied().filter(|&l| l > 0.0).collect();
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    let mut odd = Vec::new();
    let mut even = Vec::new();
    for &h in &steps {
        let minus = at(-h).ok_or_else(|| Error::InvalidArgument(format!("grid is not symmetric at {h}")))?;
        let plus = at(h).expect("listed step");
        odd.push(0.5 * (plus - minus));
        even.push(0.5 * (plus + minus) - f0);
    }
    if steps.is_empty() {
        return Ok(SymmetricFit { first: 0.0, first_err: 0.0, second: 0.0, second_err: 0.0 });
    }
    let lead = |hs: &[f64], ys: &[f64], first_power: i32| -> f64 {
        let m = hs.len();
        let a = DMatrix::from_fn(m, m, |i, j| hs[i].powi(first_power + 2 * j as i32));
        let c = a.lu().solve(&DVector::from_column_slice(ys)).map(|c| c[0]).unwrap_or(f64::NAN);
        c
    };
    let m = steps.len();
    let first = lead(&steps, &odd, 1);
    let second = 2.0 * lead(&steps, &even, 2);
    let (first_err, second_err) = if m > 1 {
        (
            (first - lead(&steps[..m - 1], &odd[..m - 1], 1)).abs(),
            (second - 2.0 * lead(&steps[..m - 1], &even[..m - 1], 2)).abs(),
        )
    } else {
        (first.abs(), second.abs())
    };
    Ok(SymmetricFit { first, first_err, second, second_err })
}

/// Periods of the continued orbits over a symmetric `λ` grid.
#[derive(Clone, Debug)]
pub struct PeriodCurve {
    pub geodesic_length: f64,
    pub lambdas: Vec<f64>,
    pub periods: Vec<f64>,
    pub orbits: Vec<PeriodicOrbit>,
    pub fit: SymmetricFit,
}

impl PeriodCurve {
    pub fn first_derivative(&self) -> f64 {
        self.fit.first
    }

    pub fn second_derivative(&self) -> f64 {
        self.fit.second
    }
}

/// Symmetric grid `{0, ±s}` for the given positive steps.
pub fn symmetric_grid(steps: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0];
    for &s in steps {
        g.push(-s);
        g.push(s);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Continue `geodesic` to every `λ` in `grid` and fit `T'(0)`, `T''(0)`.
pub fn period_curve(
    group: &SurfaceGroup,
    field: &FieldFamily,
    geodesic: &ClosedGeodesic,
    grid: &[f64],
    cfg: &ContinuationConfig,
) -> Result<PeriodCurve> {
    let mut lambdas = grid.to_vec();
    if !lambdas.contains(&0.0) {
        lambdas.push(0.0);
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let results: Vec<_> = lambdas.par_iter().map(|&l| continue_orbit(group, field, geodesic, l, cfg)).collect();
    let failed: Vec<f64> = lambdas.iter().zip(&results).filter(|(_, r)| r.is_err()).map(|(l, _)| *l).collect();
    if !failed.is_empty() {
        return Err(Error::PartialCurve { failed });
    }
    let orbits: Vec<PeriodicOrbit> = results.into_iter().map(|r| r.expect("checked")).collect();
    let periods: Vec<f64> = orbits.iter().map(|o| o.period).collect();
    let fit = symmetric_fit(&lambdas, &periods)?;
    Ok(PeriodCurve { geodesic_length: geodesic.length, lambdas, periods, orbits, fit })
}

/// Energies `ℰ_λ = ∫_0^T |γ̄̇_λ|² dt` of the reparametrized orbits
/// `γ̄_λ(t) = γ_λ(t·T_λ/T)`.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyVariation {
    pub lambdas: Vec<f64>,
    pub energies: Vec<f64>,
    /// `|ℰ_λ - T_λ²/T| / ℰ_λ` per grid point.
    pub relation_defects: Vec<f64>,
    pub fit: SymmetricFit,
}

impl EnergyVariation {
    /// `½·d²ℰ/dλ²` at 0.
    pub fn half_second_derivative(&self) -> f64 {
        0.5 * self.fit.second
    }
}

/// Measure `ℰ_λ` by quadrature of the squared speed along each orbit of
/// `curve` and fit its second derivative.
pub fn energy_second_variation(
    group: &SurfaceGroup,
    field: &FieldFamily,
    curve: &PeriodCurve,
    cfg: &ContinuationConfig,
) -> Result<EnergyVariation> {
    let t0 = curve.geodesic_length;
    let rule = CompositeRule::new(0.0, t0, ENERGY_NODES / 8, 8);
    let energies: Vec<f64> = curve
        .orbits
        .par_iter()
        .map(|orbit| {
            let scale = orbit.period / t0;
            let stops: Vec<f64> = rule.nodes.iter().map(|&s| s * scale).collect();
            let traj = integrate_flow_at(group, field, orbit.lambda, &orbit.anchor, orbit.period, &stops, &cfg.integrator)?;
            let mut sum = 0.0;
            for (&s, &w) in stops.iter().zip(&rule.weights) {
                let k = traj.sample_at(s).ok_or_else(|| Error::Integration { t: s, reason: "missing sample".into() })?;
                let th = traj.states[k];
                sum += w * scale * scale * th.speed().powi(2);
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    let relation_defects = energies
        .iter()
        .zip(&curve.periods)
        .map(|(e, t)| (e - t * t / t0).abs() / e)
        .collect();
    let fit = symmetric_fit(&curve.lambdas, &energies)?;
    Ok(EnergyVariation { lambdas: curve.lambdas.clone(), energies, relation_defects, fit })
}
