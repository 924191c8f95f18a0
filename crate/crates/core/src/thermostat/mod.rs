//! The perturbing field, the operators built from it and the twisted
//! symplectic structure preserved by the thermostat.

mod field;
mod structures;

pub use field::{default_bumps, Bump, FieldFamily, FieldJet};
pub use structures::{
    d_energy, energy_h, energy_form_residual, normal_of, residual_with, thermostat_f, twisted_omega, y_tilde, z_op,
    PhaseCotangentProbe,
};
