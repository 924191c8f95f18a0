//! Gaussian thermostat flows on a compact hyperbolic surface.
//!
//! The crate models the genus-two Bolza surface as a quotient of the
//! Poincaré disk and provides:
//!
//! * [`geometry`]: metric, connection, curvature, isometries, the octagonal
//!   fundamental domain, conjugacy classes and closed geodesics;
//! * [`thermostat`]: the automorphic forcing field family `E_λ = λ·E'₀`, the
//!   operators `Ỹ` and `Z`, the twisted symplectic form and the thermostat
//!   vector field;
//! * [`flow`]: adaptive integration of the thermostat flow with deck
//!   unwrapping, the thermostat Jacobi equation, the coordinate variational
//!   equation and the periodic variational field `W`;
//! * [`orbits`]: periodic-orbit continuation in `λ`, period derivatives, the
//!   index form and its identities;
//! * [`entropy`]: Monte Carlo evaluation of the entropy second-derivative
//!   bound and a length-spectrum entropy estimator.

pub mod entropy;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod orbits;
pub mod quadrature;
pub mod thermostat;

pub use error::{Error, Result};
