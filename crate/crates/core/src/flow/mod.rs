//! Integration of the thermostat flow, its Jacobi equation and its
//! coordinate linearisation, and the periodic forced Jacobi problem along
//! closed geodesics.

mod integrate;
mod jacobi;
mod ode;
mod systems;
mod wfield;

pub use integrate::{integrate_flow, integrate_flow_at, reversed, Crossing, IntegratorStats, Trajectory};
pub use jacobi::{integrate_jacobi, jacobi_fd_error, variational_flow, JacobiSolution, VariationalSolution};
pub use ode::IntegratorConfig;
pub use wfield::{frame_jet, geodesic_state, solve_periodic, solve_w, FrameJet, WField};
pub(crate) use jacobi::variational_from;
pub(crate) use systems::{lifted_derivative, Thermostat};

#[cfg(test)]
mod tests;
