//! Entropy of the thermostat family near `λ = 0`.
//!
//! `A` and `B` are Liouville averages over the unit tangent bundle, which
//! for constant curvature carries the measure of maximal entropy of the
//! geodesic flow. The bound on `h''(0)` is `-h0·A²/B`. Independently,
//! `h(λ)` is estimated from the growth of closed-orbit periods.

mod bound;
mod sample;
mod spectrum;
#[cfg(test)]
mod tests;

pub use bound::{
    bound_report, compute_a, compute_b, fiber_oracle_a, polygon_integral, termwise_check, BoundReport, Estimate, Integrands,
    H0_CONSTANT_CURVATURE,
};
pub use sample::{sample_liouville, substream_rng, LiouvilleSample, Substream, SHARD};
pub use spectrum::{
    entropy_curve, entropy_from_spectrum, estimate_from_periods, fit_quadratic, period_table, EntropyEstimate, EntropyFit, PeriodTable,
    SpectrumConfig,
};
