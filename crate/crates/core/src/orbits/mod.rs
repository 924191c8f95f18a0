//! Periodic orbits of the thermostat continued from closed geodesics, their
//! period derivatives in `λ`, and the index form along closed geodesics.

mod continuation;
mod index;
mod period;

pub use continuation::{continue_family, continue_orbit, ContinuationConfig, PeriodicOrbit};
pub use index::{
    field_e, field_e_tangential, field_v, field_w, identity_suite, identity_suite_with, index_form, inequality_margins,
    random_trig_field, FrameValue, IndexReport, IntegrandVariant, PeriodicField,
};
pub use period::{
    energy_second_variation, period_curve, symmetric_fit, symmetric_grid, EnergyVariation, PeriodCurve, SymmetricFit,
};
