use rand::Rng;

use super::field::FieldFamily;
use crate::geometry::{christoffel, inner, rotate_quarter, PhasePoint, C64};

/// `Ỹ_θ(u) = (⟨v,u⟩E_λ - ⟨E_λ,u⟩v)/|v|²`.
pub fn y_tilde(field: &FieldFamily, theta: &PhasePoint, lambda: f64, u: C64) -> C64 {
    let e = field.grad(theta.p) * lambda;
    skew(theta, e, u)
}

/// `Z_θ(u) = (⟨v,u⟩E'_0 - ⟨E'_0,u⟩v)/|v|²`, the `λ`-derivative of `Ỹ` at 0.
pub fn z_op(field: &FieldFamily, theta: &PhasePoint, u: C64) -> C64 {
    skew(theta, field.grad(theta.p), u)
}

fn skew(theta: &PhasePoint, e: C64, u: C64) -> C64 {
    let p = theta.p;
    let v = theta.v;
    (e * inner(p, v, u) - v * inner(p, e, u)) / inner(p, v, v)
}

/// `H(θ) = ½⟨v, v⟩`.
pub fn energy_h(theta: &PhasePoint) -> f64 {
    0.5 * inner(theta.p, theta.v, theta.v)
}

/// Horizontal and vertical parts of the thermostat field,
/// `(v, E_λ - ⟨E_λ,v⟩v/|v|²)`.
pub fn thermostat_f(field: &FieldFamily, lambda: f64, theta: &PhasePoint) -> (C64, C64) {
    (theta.v, y_tilde(field, theta, lambda, theta.v))
}

/// A tangent vector to `TM` at `θ`, split into horizontal and vertical
/// parts by the Levi-Civita connection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseCotangentProbe {
    pub theta: PhasePoint,
    pub horizontal: C64,
    pub vertical: C64,
}

impl PhaseCotangentProbe {
    /// From a coordinate tangent vector `(δp, δv)`.
    pub fn encode(theta: PhasePoint, dp: C64, dv: C64) -> Self {
        Self { theta, horizontal: dp, vertical: dv + christoffel(theta.p, dp, theta.v) }
    }

    /// Back to coordinates `(δp, δv)`.
    pub fn decode(&self) -> (C64, C64) {
        let dp = self.horizontal;
        (dp, self.vertical - christoffel(self.theta.p, dp, self.theta.v))
    }

    /// Random probe with coordinate entries uniform in `[-scale, scale]`.
    pub fn random<R: Rng>(theta: PhasePoint, scale: f64, rng: &mut R) -> Self {
        let mut c = || C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale));
        Self { theta, horizontal: c(), vertical: c() }
    }
}

/// `ω = ω₀ + κ` on two probes at the same base point.
pub fn twisted_omega(
    field: &FieldFamily,
    lambda: f64,
    theta: &PhasePoint,
    xi1: &PhaseCotangentProbe,
    xi2: &PhaseCotangentProbe,
) -> f64 {
    let p = theta.p;
    let omega0 = inner(p, xi1.horizontal, xi2.vertical) - inner(p, xi1.vertical, xi2.horizontal);
    let kappa = inner(p, y_tilde(field, theta, lambda, xi1.horizontal), xi2.horizontal);
    omega0 + kappa
}

/// `dH(ξ) = ⟨v, ξ_v⟩`.
pub fn d_energy(theta: &PhasePoint, xi: &PhaseCotangentProbe) -> f64 {
    inner(theta.p, theta.v, xi.vertical)
}

/// Largest `|dH(ξ) - ω(F(θ), ξ)|` over `samples` random probes.
pub fn energy_form_residual<R: Rng>(field: &FieldFamily, lambda: f64, theta: &PhasePoint, samples: usize, rng: &mut R) -> f64 {
    let (h, v) = thermostat_f(field, lambda, theta);
    residual_with(field, lambda, theta, h, v, samples, rng)
}

/// Same residual for an arbitrary candidate `F = (horizontal, vertical)`.
pub fn residual_with<R: Rng>(
    field: &FieldFamily,
    lambda: f64,
    theta: &PhasePoint,
    horizontal: C64,
    vertical: C64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let f = PhaseCotangentProbe { theta: *theta, horizontal, vertical };
    (0..samples)
        .map(|_| {
            let xi = PhaseCotangentProbe::random(*theta, 1.0, rng);
            (d_energy(theta, &xi) - twisted_omega(field, lambda, theta, &f, &xi)).abs()
        })
        .fold(0.0, f64::max)
}

/// The rotated velocity `v⊥`, used to build corrupted fields in checks.
pub fn normal_of(theta: &PhasePoint) -> C64 {
    rotate_quarter(theta.v)
}
