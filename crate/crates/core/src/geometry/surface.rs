use std::f64::consts::{FRAC_PI_4, PI};

use super::disk::{PhasePoint, C64};
use super::isometry::Isometry;
use crate::error::{Error, Result};

/// Points with `min_k s_k(z) >= -DOMAIN_TOLERANCE` count as inside the closed
/// fundamental polygon.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_REDUCTION_CAP: usize = 32;

/// A side of the fundamental polygon: an arc of the circle `|z - center| =
/// radius`, orthogonal to the unit circle. The polygon lies outside the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Side {
    pub center: C64,
    pub radius: f64,
    /// Endpoints of the arc (polygon vertices), counter-clockwise.
    pub start: C64,
    pub end: C64,
}

impl Side {
    /// Implicit function `|z - c|² - r²`, positive on the polygon side.
    #[inline]
    pub fn level(&self, z: C64) -> f64 {
        (z - self.center).norm_sqr() - self.radius * self.radius
    }

    /// Point on the arc at parameter `s ∈ [0, 1]` between the vertices.
    pub fn point_at(&self, s: f64) -> C64 {
        let a0 = (self.start - self.center).arg();
        let mut a1 = (self.end - self.center).arg();
        // take the short way round
        if a1 - a0 > PI {
            a1 -= 2.0 * PI;
        } else if a0 - a1 > PI {
            a1 += 2.0 * PI;
        }
        self.center + C64::from_polar(self.radius, a0 + s * (a1 - a0))
    }
}

/// Fuchsian group of the Bolza surface with its regular octagonal Dirichlet
/// domain centred at the origin.
///
/// Generator `j` (`0 ≤ j < 8`) is the translation by `ℓ` along the ray at
/// angle `j·π/4`, with `cosh(ℓ/2) = 1 + √2`. It maps side `j + 4` onto side
/// `j`; the inverse of generator `j` is generator `(j + 4) mod 8`.
#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    generators: Vec<Isometry>,
    sides: Vec<Side>,
    relation: Vec<u8>,
    reduction_cap: usize,
}

impl SurfaceGroup {
    /// The Bolza group. Construction runs the octagon check.
    pub fn bolza() -> Result<Self> {
        let half = (1.0 + 2f64.sqrt()).acosh();
        let t = Isometry::translation(2.0 * half);
        let generators = (0..8)
            .map(|j| {
                let r = Isometry::rotation(j as f64 * FRAC_PI_4);
                r.compose(&t).compose(&r.inverse())
            })
            .collect::<Vec<_>>();
        // side midpoints at Euclidean radius tanh(ℓ/4)
        let m = (0.5 * half).tanh();
        let c = (1.0 + m * m) / (2.0 * m);
        let r = (1.0 - m * m) / (2.0 * m);
        let centers: Vec<C64> = (0..8).map(|k| C64::from_polar(c, k as f64 * FRAC_PI_4)).collect();
        let sides = (0..8)
            .map(|k| {
                let prev = (k + 7) % 8;
                let next = (k + 1) % 8;
                Side {
                    center: centers[k],
                    radius: r,
                    start: circle_intersection(centers[prev], centers[k], r),
                    end: circle_intersection(centers[k], centers[next], r),
                }
            })
            .collect();
        // g0 g3 g6 g1 g4 g7 g2 g5 = ±1 (vertex cycle of the octagon)
        let relation = vec![0, 3, 6, 1, 4, 7, 2, 5];
        Self::from_parts(generators, sides, relation)
    }

    /// Build a group from explicit data and verify it.
    pub fn from_parts(generators: Vec<Isometry>, sides: Vec<Side>, relation: Vec<u8>) -> Result<Self> {
        let group = Self { generators, sides, relation, reduction_cap: DEFAULT_REDUCTION_CAP };
        group.check()?;
        Ok(group)
    }

    pub fn with_reduction_cap(mut self, cap: usize) -> Self {
        self.reduction_cap = cap;
        self
    }

    /// Relation word, side-pairing and hyperbolicity checks.
    pub fn check(&self) -> Result<()> {
        if self.generators.len() != 8 || self.sides.len() != 8 {
            return Err(Error::InvalidGroup("expected 8 generators and 8 sides".into()));
        }
        for (j, g) in self.generators.iter().enumerate() {
            if (g.determinant() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGroup(format!("generator {j} has determinant {}", g.determinant())));
            }
            if g.trace().abs() <= 2.0 {
                return Err(Error::InvalidGroup(format!("generator {j} is not hyperbolic")));
            }
            let inv = &self.generators[(j + 4) % 8];
            if g.compose(inv).distance_to_identity() > 1e-9 {
                return Err(Error::InvalidGroup(format!("generators {j} and {} are not inverse", (j + 4) % 8)));
            }
        }
        let rel = self.word_isometry(&self.relation);
        let defect = rel.distance_to_identity();
        if defect > 1e-9 {
            return Err(Error::InvalidGroup(format!("relation word product differs from ±1 by {defect:e}")));
        }
        for j in 0..8 {
            let from = &self.sides[(j + 4) % 8];
            let to = &self.sides[j];
            let g = &self.generators[j];
            for i in 0..=16 {
                let s = i as f64 / 16.0;
                let w = g.apply(from.point_at(s));
                let on_circle = to.level(w).abs();
                // orientation reverses along the paired side
                let target = to.point_at(1.0 - s);
                if on_circle > 1e-9 || (w - target).norm() > 1e-9 {
                    return Err(Error::InvalidGroup(format!(
                        "generator {j} does not map side {} onto side {j} (defect {:e})",
                        (j + 4) % 8,
                        (w - target).norm().max(on_circle)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn generator(&self, j: u8) -> &Isometry {
        &self.generators[j as usize]
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn relation(&self) -> &[u8] {
        &self.relation
    }

    pub fn inverse_letter(j: u8) -> u8 {
        (j + 4) % 8
    }

    /// Euclidean radius of the polygon vertices.
    pub fn vertex_radius(&self) -> f64 {
        self.sides.iter().map(|s| s.start.norm()).fold(0.0, f64::max)
    }

    /// Hyperbolic distance from the origin to the vertices.
    pub fn circumradius(&self) -> f64 {
        2.0 * self.vertex_radius().atanh()
    }

    /// Hyperbolic distance from the origin to the side midpoints.
    pub fn inradius(&self) -> f64 {
        let s = &self.sides[0];
        let m = s.center.norm() - s.radius;
        2.0 * m.atanh()
    }

    /// Product `g_{w[0]} ∘ g_{w[1]} ∘ … ∘ g_{w[n-1]}`.
    pub fn word_isometry(&self, word: &[u8]) -> Isometry {
        word.iter()
            .fold(Isometry::identity(), |acc, &j| acc.compose(&self.generators[j as usize]))
            .renormalized()
    }

    /// Isometry applied by a deck word returned from reduction, whose letters
    /// are listed in order of application.
    pub fn deck_isometry(&self, applied: &[u8]) -> Isometry {
        applied
            .iter()
            .fold(Isometry::identity(), |acc, &j| self.generators[j as usize].compose(&acc))
            .renormalized()
    }

    /// Smallest side level `min_k s_k(z)`; nonnegative inside the polygon.
    #[inline]
    pub fn domain_margin(&self, z: C64) -> f64 {
        self.sides.iter().map(|s| s.level(z)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, z: C64) -> bool {
        self.domain_margin(z) >= -DOMAIN_TOLERANCE
    }

    /// Greedy nearest-centre reduction of a point: repeatedly apply the
    /// generator bringing it closest to the origin. Returns the letters applied.
    pub fn reduce_point(&self, z: C64) -> Result<(C64, Vec<u8>)> {
        let mut z = z;
        let mut word = Vec::new();
        while !self.contains(z) {
            if word.len() >= self.reduction_cap {
                return Err(Error::ReductionFailed { cap: self.reduction_cap });
            }
            let (j, w) = self
                .generators
                .iter()
                .enumerate()
                .map(|(j, g)| (j, g.apply(z)))
                .min_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .expect("eight generators");
            if w.norm_sqr() >= z.norm_sqr() {
                // Dirichlet condition holds up to rounding
                break;
            }
            z = w;
            word.push(j as u8);
        }
        Ok((z, word))
    }

    /// Reduce a phase point into the closed fundamental polygon.
    pub fn reduce_to_domain(&self, theta: &PhasePoint) -> Result<(PhasePoint, Vec<u8>)> {
        let (_, word) = self.reduce_point(theta.p)?;
        let mut th = *theta;
        for &j in &word {
            th = self.generators[j as usize].apply_phase(&th);
        }
        Ok((th, word))
    }

    /// Undo a deck word returned by [`SurfaceGroup::reduce_to_domain`].
    pub fn unreduce(&self, theta: &PhasePoint, applied: &[u8]) -> PhasePoint {
        applied.iter().rev().fold(*theta, |th, &j| {
            self.generators[Self::inverse_letter(j) as usize].apply_phase(&th)
        })
    }
}

fn circle_intersection(c1: C64, c2: C64, r: f64) -> C64 {
    // equal radii: intersections lie on the perpendicular bisector
    let mid = 0.5 * (c1 + c2);
    let half = 0.5 * (c2 - c1).norm();
    let h = (r * r - half * half).sqrt();
    let dir = (c2 - c1) / (c2 - c1).norm();
    let perp = C64::new(-dir.im, dir.re);
    let p1 = mid + perp * h;
    let p2 = mid - perp * h;
    if p1.norm() < p2.norm() {
        p1
    } else {
        p2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disk::{exact_geodesic_flow, inner};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bolza_octagon_checks() {
        let g = SurfaceGroup::bolza().unwrap();
        assert!((g.vertex_radius() - 2f64.powf(-0.25)).abs() < 1e-12);
        for gen in g.generators() {
            assert!((gen.trace() - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
        }
        assert!(g.word_isometry(g.relation()).distance_to_identity() < 1e-9);
        assert!(g.contains(C64::new(0.0, 0.0)));
        assert!(!g.contains(C64::new(0.7, 0.0)));
    }

    #[test]
    fn corrupted_generator_fails_check() {
        let g = SurfaceGroup::bolza().unwrap();
        let mut gens = g.generators().to_vec();
        gens[1] = gens[1].compose(&Isometry::rotation(1e-3));
        gens[5] = gens[1].inverse();
        let err = SurfaceGroup::from_parts(gens, g.sides().to_vec(), g.relation().to_vec());
        assert!(matches!(err, Err(Error::InvalidGroup(_))));
    }

    #[test]
    fn reduce_is_identity_on_interior_points() {
        let g = SurfaceGroup::bolza().unwrap();
        let th = PhasePoint::unit_at(C64::new(0.2, -0.3), 0.4);
        let (r, w) = g.reduce_to_domain(&th).unwrap();
        assert_eq!(r, th);
        assert!(w.is_empty());
    }

    #[test]
    fn reduce_generator_image() {
        let g = SurfaceGroup::bolza().unwrap();
        let th = PhasePoint::unit_at(C64::new(0.1, 0.05), 1.0);
        let moved = g.generator(0).apply_phase(&th);
        let (r, w) = g.reduce_to_domain(&moved).unwrap();
        assert_eq!(w, vec![4]);
        assert!(r.coord_distance(&th) < 1e-12);
    }

    #[test]
    fn reduce_deep_points_round_trip() {
        let g = SurfaceGroup::bolza().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let th = PhasePoint::unit_at(C64::new(0.0, 0.0), rng.gen_range(0.0..6.3));
            let far = exact_geodesic_flow(&th, rng.gen_range(0.0..9.0));
            let (r, w) = g.reduce_to_domain(&far).unwrap();
            assert!(g.contains(r.p));
            let back = g.unreduce(&r, &w);
            let scale = 1.0 - far.p.norm_sqr();
            assert!((back.p - far.p).norm() < 1e-10, "{w:?}");
            assert!((back.v - far.v).norm() / scale < 1e-9);
            assert!((r.speed() - 1.0).abs() < 1e-10);
            let d = g.deck_isometry(&w);
            assert!((d.apply(far.p) - r.p).norm() < 1e-10);
        }
    }

    #[test]
    fn reduction_cap_is_reported() {
        let g = SurfaceGroup::bolza().unwrap().with_reduction_cap(2);
        let th = PhasePoint::unit_at(C64::new(0.0, 0.0), 0.3);
        let far = exact_geodesic_flow(&th, 14.0);
        assert!(matches!(g.reduce_to_domain(&far), Err(Error::ReductionFailed { cap: 2 })));
    }

    #[test]
    fn metric_invariance_over_group_ball() {
        let g = SurfaceGroup::bolza().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let len = rng.gen_range(1..4);
            let word: Vec<u8> = (0..len).map(|_| rng.gen_range(0..8)).collect();
            let gamma = g.word_isometry(&word);
            let z = C64::from_polar(rng.gen_range(0.0..0.8), rng.gen_range(0.0..6.3));
            let u = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let w = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let lhs = inner(gamma.apply(z), gamma.push(z, u), gamma.push(z, w));
            let rhs = inner(z, u, w);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }
}
