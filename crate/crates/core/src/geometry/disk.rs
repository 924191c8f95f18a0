use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A point of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint(C64);

impl SurfacePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        Self::from_complex(C64::new(x, y))
    }

    pub fn from_complex(z: C64) -> Result<Self> {
        if z.norm_sqr() < 1.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(Self(z))
        } else {
            Err(Error::OutsideDisk { x: z.re, y: z.im })
        }
    }

    pub fn origin() -> Self {
        Self(C64::new(0.0, 0.0))
    }

    pub fn x(&self) -> f64 {
        self.0.re
    }

    pub fn y(&self) -> f64 {
        self.0.im
    }

    pub fn z(&self) -> C64 {
        self.0
    }

    /// Hyperbolic distance to another point.
    pub fn distance(&self, other: &SurfacePoint) -> f64 {
        hyperbolic_distance(self.0, other.0)
    }
}

/// A tangent vector given by its coordinate components at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub base: SurfacePoint,
    pub u: C64,
}

impl Tangent {
    pub fn new(base: SurfacePoint, u1: f64, u2: f64) -> Self {
        Self { base, u: C64::new(u1, u2) }
    }

    pub fn norm(&self) -> f64 {
        metric_norm(self.base.z(), self.u)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

/// A point `θ = (p, v)` of the tangent bundle. On `SM` the velocity has unit
/// metric norm; the type itself does not enforce that so that formulas can be
/// exercised off the unit bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub p: C64,
    pub v: C64,
}

impl PhasePoint {
    pub fn new(p: C64, v: C64) -> Self {
        Self { p, v }
    }

    /// Unit-speed phase point at `p` heading in the coordinate direction `angle`.
    pub fn unit_at(p: C64, angle: f64) -> Self {
        let speed = 0.5 * (1.0 - p.norm_sqr());
        Self { p, v: C64::from_polar(speed, angle) }
    }

    pub fn speed(&self) -> f64 {
        metric_norm(self.p, self.v)
    }

    pub fn point(&self) -> Result<SurfacePoint> {
        SurfacePoint::from_complex(self.p)
    }

    /// Coordinate distance in `(x, y, v1, v2)`.
    pub fn coord_distance(&self, other: &PhasePoint) -> f64 {
        ((self.p - other.p).norm_sqr() + (self.v - other.v).norm_sqr()).sqrt()
    }
}

/// Conformal factor `2/(1-|z|²)`.
#[inline]
pub fn conformal_factor(z: C64) -> f64 {
    2.0 / (1.0 - z.norm_sqr())
}

/// Metric scale `(2/(1-|z|²))²` multiplying the Euclidean inner product.
#[inline]
pub fn metric_scale(z: C64) -> f64 {
    let c = conformal_factor(z);
    c * c
}

/// `g_p(u, w)` for coordinate components `u`, `w` at `p`.
pub fn metric_inner(p: &SurfacePoint, u: C64, w: C64) -> f64 {
    inner(p.z(), u, w)
}

#[inline]
pub(crate) fn inner(z: C64, u: C64, w: C64) -> f64 {
    metric_scale(z) * (u.re * w.re + u.im * w.im)
}

#[inline]
pub fn metric_norm(z: C64, u: C64) -> f64 {
    conformal_factor(z) * u.norm()
}

/// Rotation by `+π/2` in the tangent plane. The metric is conformal, so this
/// is also a metric rotation.
#[inline]
pub fn rotate_quarter(u: C64) -> C64 {
    C64::new(-u.im, u.re)
}

/// Christoffel contraction `Γ(p)(a, b)` of the Levi-Civita connection.
///
/// For `g = e^{2φ}|dz|²` with `φ = log(2/(1-|z|²))` the contraction is
/// `conj(∇φ)·a·b` in complex notation, i.e. `2·conj(z)·a·b/(1-|z|²)`.
#[inline]
pub fn christoffel(z: C64, a: C64, b: C64) -> C64 {
    2.0 * z.conj() * a * b / (1.0 - z.norm_sqr())
}

/// `DV/dt = dV/dt + Γ(p)(ṗ, V)` along a curve with state `(p, ṗ)`.
pub fn covariant_derivative(p: &SurfacePoint, p_dot: C64, field: C64, field_dot: C64) -> C64 {
    field_dot + christoffel(p.z(), p_dot, field)
}

/// Riemann tensor of the constant-curvature `-1` metric:
/// `R(u, w)z = ⟨w, z⟩u - ⟨u, z⟩w`.
///
/// With this sign convention the sectional curvature is
/// `⟨R(u, w)u, w⟩ / |u ∧ w|² = -1` and the Jacobi equation reads
/// `J̈ + R(γ̇, J)γ̇ = 0`.
pub fn curvature_r(p: &SurfacePoint, u: C64, w: C64, z: C64) -> C64 {
    let q = p.z();
    inner(q, w, z) * u - inner(q, u, z) * w
}

pub(crate) fn hyperbolic_distance(a: C64, b: C64) -> f64 {
    let d2 = (a - b).norm_sqr();
    let denom = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr());
    (1.0 + 2.0 * d2 / denom).acosh()
}

/// Map `z ↦ (z - p)/(1 - conj(p) z)`, sending `p` to the origin.
#[inline]
pub(crate) fn to_origin(p: C64, z: C64) -> C64 {
    (z - p) / (1.0 - p.conj() * z)
}

/// Inverse of [`to_origin`]: `z ↦ (z + p)/(1 + conj(p) z)`.
#[inline]
pub(crate) fn from_origin(p: C64, z: C64) -> C64 {
    (z + p) / (1.0 + p.conj() * z)
}

/// Closed-form geodesic flow of the disk.
///
/// The base point is moved to the origin by `to_origin`, where geodesics are
/// diameters `s ↦ tanh(s·|w|_g/2)·e^{iψ}`; the result is mapped back. The
/// speed is preserved, so unit inputs stay unit.
pub fn exact_geodesic_flow(theta: &PhasePoint, t: f64) -> PhasePoint {
    let p = theta.p;
    let q = 1.0 - p.norm_sqr();
    // d(to_origin)/dz at p is 1/(1-|p|²).
    let w = theta.v / q;
    let speed = 2.0 * w.norm();
    if speed == 0.0 {
        return *theta;
    }
    let dir = w / w.norm();
    let s = speed * t;
    let r = (0.5 * s).tanh();
    let z0 = dir * r;
    let dz0 = dir * (0.5 * speed * (1.0 - r * r));
    let denom = C64::new(1.0, 0.0) + p.conj() * z0;
    PhasePoint {
        p: from_origin(p, z0),
        v: dz0 * q / (denom * denom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> SurfacePoint {
        SurfacePoint::new(x, y).unwrap()
    }

    #[test]
    fn metric_inner_examples() {
        let o = pt(0.0, 0.0);
        assert_eq!(metric_inner(&o, C64::new(1.0, 0.0), C64::new(1.0, 0.0)), 4.0);
        assert_eq!(metric_inner(&o, C64::new(1.0, 0.0), C64::new(0.0, 1.0)), 0.0);
        // 4/(1-0.25)^2
        let v = metric_inner(&pt(0.5, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        assert_relative_eq!(v, 7.111_111_111_111_111, epsilon = 1e-12);
    }

    #[test]
    fn outside_disk_is_domain_error() {
        assert!(matches!(SurfacePoint::new(1.0, 0.0), Err(Error::OutsideDisk { .. })));
        assert!(SurfacePoint::new(0.8, 0.7).is_err());
        assert!(SurfacePoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn christoffel_vanishes_at_origin() {
        let d = covariant_derivative(&SurfacePoint::origin(), C64::new(0.3, -1.0), C64::new(2.0, 5.0), C64::new(0.0, 0.0));
        assert_eq!(d, C64::new(0.0, 0.0));
    }

    #[test]
    fn radial_geodesic_is_autoparallel() {
        // z(t) = tanh(t/2): ż = sech²(t/2)/2, z̈ = -tanh(t/2)sech²(t/2)/2
        for &t in &[0.1, 0.7, 1.5, 3.0] {
            let z = (0.5f64 * t).tanh();
            let sech2 = 1.0 - z * z;
            let zd = C64::new(0.5 * sech2, 0.0);
            let zdd = C64::new(-z * sech2 * 0.5, 0.0);
            let acc = covariant_derivative(&pt(z, 0.0), zd, zd, zdd);
            assert!(acc.norm() < 1e-14, "t={t} acc={acc}");
        }
    }

    #[test]
    fn curvature_examples() {
        let p = pt(0.2, -0.4);
        let s = 1.0 / conformal_factor(p.z());
        let u = C64::new(s, 0.0);
        let w = C64::new(0.0, s);
        assert!(curvature_r(&p, u, u, w).norm() < 1e-15);
        assert_relative_eq!(inner(p.z(), curvature_r(&p, u, w, u), w), -1.0, epsilon = 1e-12);
        let v = C64::new(0.13, 0.4);
        let e = C64::new(-0.7, 0.05);
        let lhs = inner(p.z(), curvature_r(&p, v, e, v), e);
        let rhs = -(inner(p.z(), e, e) * inner(p.z(), v, v) - inner(p.z(), v, e).powi(2));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn exact_flow_radial_example() {
        let th = PhasePoint::unit_at(C64::new(0.0, 0.0), 0.0);
        let out = exact_geodesic_flow(&th, 1.0);
        assert_relative_eq!(out.p.re, 0.5f64.tanh(), epsilon = 1e-15);
        assert!(out.p.im.abs() < 1e-15);
        assert_relative_eq!(out.speed(), 1.0, epsilon = 1e-14);
        assert!(out.v.re > 0.0 && out.v.im.abs() < 1e-15);
        assert_eq!(exact_geodesic_flow(&th, 0.0), th);
    }

    #[test]
    fn exact_flow_group_law_and_reversal() {
        let th = PhasePoint::unit_at(C64::new(0.31, -0.22), 2.1);
        let a = exact_geodesic_flow(&exact_geodesic_flow(&th, 0.8), 1.3);
        let b = exact_geodesic_flow(&th, 2.1);
        assert!(a.coord_distance(&b) < 1e-10);
        let back = exact_geodesic_flow(&exact_geodesic_flow(&th, 1.7), -1.7);
        assert!(back.coord_distance(&th) < 1e-12);
    }
}
