use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::geometry::{LengthSpectrum, SurfaceGroup};
use crate::orbits::{continue_family, ContinuationConfig};
use crate::thermostat::FieldFamily;

const SAME_LENGTH: f64 = 1e-7;

/// Settings for the periodic-orbit entropy estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub max_word_len: usize,
    /// Geodesics longer than this are not traced.
    pub max_length: f64,
    /// Completeness cutoff, see [`LengthSpectrum::complete_up_to`].
    pub deficit: f64,
    pub continuation: ContinuationConfig,
}

impl SpectrumConfig {
    /// Word length `L` with `max_length = 1.35·L`, a little beyond where
    /// words of length `L` stop covering the spectrum on this surface.
    pub fn new(max_word_len: usize) -> Self {
        Self { max_word_len, max_length: 1.35 * max_word_len as f64, deficit: 0.1, continuation: ContinuationConfig::default() }
    }
}

/// Growth-rate estimate of the number of closed orbits at one `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub lambda: f64,
    pub h: f64,
    pub stderr: f64,
    /// Regression points and the period window they come from.
    pub points: usize,
    pub window: [f64; 2],
    pub orbits: usize,
    /// Words of orbits whose continuation failed.
    pub failed: Vec<String>,
    pub partial: bool,
}

/// Periods of the primitive closed orbits below the completeness cutoff,
/// per `λ`.
#[derive(Clone, Debug)]
pub struct PeriodTable {
    pub cutoff: f64,
    pub words: Vec<String>,
    pub lengths: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `periods[i][k]`: orbit `k` at `lambdas[i]`; `None` when continuation failed.
    pub periods: Vec<Vec<Option<f64>>>,
}

/// Trace the length spectrum and continue every orbit below the cutoff to
/// each `λ`. At `λ = 0` the periods are the trace lengths.
pub fn period_table(group: &SurfaceGroup, field: &FieldFamily, lambdas: &[f64], cfg: &SpectrumConfig) -> Result<PeriodTable> {
    let spectrum = LengthSpectrum::compute(group, cfg.max_word_len, cfg.max_length)?;
    let cutoff = spectrum.complete_up_to(cfg.deficit);
    let entries = &spectrum.entries[..spectrum.count(cutoff)];
    let nonzero: Vec<f64> = lambdas.iter().copied().filter(|&l| l != 0.0).collect();
    let per_orbit: Vec<Vec<Option<f64>>> = entries
        .par_iter()
        .map(|e| {
            let fam = if nonzero.is_empty() {
                Vec::new()
            } else {
                continue_family(group, field, &e.geodesic, &nonzero, &cfg.continuation)
            };
            let mut fam = fam.into_iter();
            lambdas
                .iter()
                .map(|&l| if l == 0.0 { Some(e.length()) } else { fam.next().expect("one per lambda").ok().map(|o| o.period) })
                .collect()
        })
        .collect();
    let periods = (0..lambdas.len()).map(|i| per_orbit.iter().map(|p| p[i]).collect()).collect();
    Ok(PeriodTable {
        cutoff,
        words: entries.iter().map(|e| e.geodesic.class.label()).collect(),
        lengths: entries.iter().map(|e| e.length()).collect(),
        lambdas: lambdas.to_vec(),
        periods,
    })
}

impl PeriodTable {
    pub fn estimate(&self, i: usize) -> Result<EntropyEstimate> {
        let mut est = estimate_from_periods(&self.lengths, &self.periods[i], self.cutoff)?;
        est.lambda = self.lambdas[i];
        est.failed = self.periods[i].iter().zip(&self.words).filter(|(p, _)| p.is_none()).map(|(_, w)| w.clone()).collect();
        Ok(est)
    }
}

/// Regress `log(N(T)·T)` on `T` over the upper half `[cutoff/2, cutoff]`.
/// Orbits sharing a length at `λ = 0` form one point at their mean period,
/// so the estimate moves continuously with the periods. The factor `h` in
/// `N(T) ~ e^{hT}/(hT)` only shifts the intercept.
pub fn estimate_from_periods(lengths: &[f64], periods: &[Option<f64>], cutoff: f64) -> Result<EntropyEstimate> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut start = 0;
    while start < lengths.len() {
        let mut end = start + 1;
        while end < lengths.len() && lengths[end] - lengths[start] < SAME_LENGTH {
            end += 1;
        }
        let known: Vec<f64> = periods[start..end].iter().flatten().copied().collect();
        let l = lengths[start];
        if !known.is_empty() && l >= 0.5 * cutoff && l <= cutoff {
            let t = known.iter().sum::<f64>() / known.len() as f64;
            xs.push(t);
            ys.push((end as f64 * t).ln());
        }
        start = end;
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("only {n} spectrum points in [{}, {cutoff}]", 0.5 * cutoff)));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let h = sxy / sxx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - h * (x - mx)).powi(2)).sum();
    Ok(EntropyEstimate {
        lambda: 0.0,
        h,
        stderr: (rss / (nf - 2.0) / sxx).sqrt(),
        points: n,
        window: [0.5 * cutoff, cutoff],
        orbits: lengths.len(),
        failed: Vec::new(),
        partial: periods.iter().any(Option::is_none),
    })
}

/// Entropy estimate at a single `λ`.
pub fn entropy_from_spectrum(group: &SurfaceGroup, field: &FieldFamily, lambda: f64, cfg: &SpectrumConfig) -> Result<EntropyEstimate> {
    period_table(group, field, &[lambda], cfg)?.estimate(0)
}

/// Quadratic fit `h(λ) ≈ c0 + c1·λ + c2·λ²` of spectrum estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyFit {
    pub lambdas: Vec<f64>,
    pub estimates: Vec<EntropyEstimate>,
    pub coefficients: [f64; 3],
    pub stderr: [f64; 3],
    /// Half-widths of the 95% confidence intervals (Student t).
    pub half_width: [f64; 3],
    pub partial: bool,
}

impl EntropyFit {
    /// Empirical `h''(0) = 2·c2`.
    pub fn second_derivative(&self) -> f64 {
        2.0 * self.coefficients[2]
    }

    /// Allowance for comparing `2·c2` with a bound: the confidence
    /// half-width of `2·c2` plus the relative bias of the estimator level
    /// `|c0 - h0|/h0` applied to `|2·c2|`.
    pub fn slack(&self, h0: f64) -> f64 {
        2.0 * self.half_width[2] + (self.coefficients[0] - h0).abs() / h0 * self.second_derivative().abs()
    }

    /// `bound - 2·c2`; nonnegative when the bound holds.
    pub fn gap(&self, bound: f64) -> f64 {
        bound - self.second_derivative()
    }
}

/// Least-squares quadratic with coefficient standard errors and 95%
/// half-widths; with no residual degrees of freedom the errors are infinite.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<([f64; 3], [f64; 3], [f64; 3])> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::InvalidArgument("quadratic fit needs at least 3 points".into()));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| xs[i].powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let xtx = x.transpose() * &x;
    let inv = xtx.try_inverse().ok_or_else(|| Error::InvalidArgument("degenerate grid".into()))?;
    let c = &inv * x.transpose() * &y;
    let dof = n - 3;
    let (stderr, half_width) = if dof == 0 {
        ([f64::INFINITY; 3], [f64::INFINITY; 3])
    } else {
        let rss = (&y - &x * &c).norm_squared();
        let s2 = rss / dof as f64;
        let t = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof").inverse_cdf(0.975);
        let se: [f64; 3] = std::array::from_fn(|j| (s2 * inv[(j, j)]).sqrt());
        (se, se.map(|s| t * s))
    };
    Ok(([c[0], c[1], c[2]], stderr, half_width))
}

/// Spectrum estimates over a symmetric `λ` grid and their quadratic fit.
pub fn entropy_curve(group: &SurfaceGroup, field: &FieldFamily, lambdas: &[f64], cfg: &SpectrumConfig) -> Result<EntropyFit> {
    for &l in lambdas {
        if !lambdas.iter().any(|&m| (m + l).abs() <= 1e-14) {
            return Err(Error::InvalidArgument(format!("lambda grid is not symmetric at {l}")));
        }
    }
    let table = period_table(group, field, lambdas, cfg)?;
    let estimates = (0..lambdas.len()).map(|i| table.estimate(i)).collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = estimates.iter().map(|e| e.h).collect();
    let (coefficients, stderr, half_width) = fit_quadratic(lambdas, &hs)?;
    Ok(EntropyFit {
        lambdas: lambdas.to_vec(),
        partial: estimates.iter().any(|e| e.partial),
        estimates,
        coefficients,
        stderr,
        half_width,
    })
}
