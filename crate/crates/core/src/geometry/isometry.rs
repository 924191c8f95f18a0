use super::disk::{PhasePoint, C64};

/// Orientation-preserving isometry `z ↦ (a z + b)/(conj(b) z + conj(a))` of
/// the disk, normalized so that `|a|² - |b|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    pub a: C64,
    pub b: C64,
}

impl Isometry {
    pub fn identity() -> Self {
        Self { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0) }
    }

    pub fn new(a: C64, b: C64) -> Self {
        Self { a, b }.renormalized()
    }

    /// Hyperbolic translation along the real axis by distance `length`.
    pub fn translation(length: f64) -> Self {
        let h = 0.5 * length;
        Self { a: C64::new(h.cosh(), 0.0), b: C64::new(h.sinh(), 0.0) }
    }

    /// Rotation about the origin by `angle`.
    pub fn rotation(angle: f64) -> Self {
        Self { a: C64::from_polar(1.0, 0.5 * angle), b: C64::new(0.0, 0.0) }
    }

    pub fn determinant(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn renormalized(self) -> Self {
        let det = self.determinant();
        let s = 1.0 / det.sqrt();
        Self { a: self.a * s, b: self.b * s }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        // [a b; b̄ ā]·[c d; d̄ c̄]
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        Isometry { a, b }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry { a: self.a.conj(), b: -self.b }
    }

    /// Matrix trace `a + conj(a)`.
    pub fn trace(&self) -> f64 {
        2.0 * self.a.re
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Complex derivative `1/(conj(b) z + conj(a))²`.
    pub fn derivative(&self, z: C64) -> C64 {
        let d = self.b.conj() * z + self.a.conj();
        1.0 / (d * d)
    }

    /// Second complex derivative `-2 conj(b)/(conj(b) z + conj(a))³`.
    pub fn second_derivative(&self, z: C64) -> C64 {
        let d = self.b.conj() * z + self.a.conj();
        -2.0 * self.b.conj() / (d * d * d)
    }

    /// Pushforward of a tangent vector at `z`.
    pub fn push(&self, z: C64, u: C64) -> C64 {
        self.derivative(z) * u
    }

    pub fn apply_phase(&self, theta: &PhasePoint) -> PhasePoint {
        PhasePoint { p: self.apply(theta.p), v: self.push(theta.p, theta.v) }
    }

    /// Distance from the identity in the matrix sense, modulo sign.
    pub fn distance_to_identity(&self) -> f64 {
        let plus = (self.a - 1.0).norm() + self.b.norm();
        let minus = (self.a + 1.0).norm() + self.b.norm();
        plus.min(minus)
    }

    /// Boundary fixed points `(repelling, attracting)` of a hyperbolic element.
    pub fn fixed_points(&self) -> Option<(C64, C64)> {
        if self.trace().abs() <= 2.0 {
            return None;
        }
        // conj(b) z² + (conj(a) - a) z - b = 0
        let qa = self.b.conj();
        let qb = self.a.conj() - self.a;
        let qc = -self.b;
        if qa.norm() < 1e-300 {
            return None;
        }
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let z1 = (-qb + disc) / (2.0 * qa);
        let z2 = (-qb - disc) / (2.0 * qa);
        // attracting fixed point has |f'(z)| < 1
        if self.derivative(z1).norm() < self.derivative(z2).norm() {
            Some((z2, z1))
        } else {
            Some((z1, z2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disk::inner;

    #[test]
    fn composition_and_inverse() {
        let g = Isometry::rotation(0.7).compose(&Isometry::translation(1.3));
        let id = g.compose(&g.inverse());
        assert!(id.distance_to_identity() < 1e-14);
        assert!((g.determinant() - 1.0).abs() < 1e-14);
        let z = C64::new(0.1, 0.3);
        let h = Isometry::translation(-0.4);
        let lhs = g.compose(&h).apply(z);
        let rhs = g.apply(h.apply(z));
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn pushforward_is_metric_preserving() {
        let g = Isometry::rotation(-2.0).compose(&Isometry::translation(2.2));
        let z = C64::new(-0.2, 0.45);
        let u = C64::new(0.3, -0.1);
        let w = C64::new(-0.05, 0.9);
        let gz = g.apply(z);
        let lhs = inner(gz, g.push(z, u), g.push(z, w));
        assert!((lhs - inner(z, u, w)).abs() < 1e-12);
    }

    #[test]
    fn second_derivative_matches_difference() {
        let g = Isometry::rotation(0.3).compose(&Isometry::translation(0.9));
        let z = C64::new(0.2, -0.1);
        let h = 1e-6;
        let fd = (g.derivative(z + h) - g.derivative(z - h)) / (2.0 * h);
        assert!((fd - g.second_derivative(z)).norm() < 1e-8);
    }

    #[test]
    fn translation_fixed_points() {
        let g = Isometry::translation(2.0);
        let (rep, att) = g.fixed_points().unwrap();
        assert!((att - 1.0).norm() < 1e-12);
        assert!((rep + 1.0).norm() < 1e-12);
        assert!(Isometry::rotation(1.0).fixed_points().is_none());
    }
}
