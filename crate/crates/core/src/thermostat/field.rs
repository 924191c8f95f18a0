use std::collections::HashSet;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, metric_norm, to_origin, Isometry, SurfaceGroup, SurfacePoint, Tangent, C64};

/// Images farther than this from the origin are never stored.
const KEEP_RADIUS: f64 = 8.0;

/// One bump `amplitude·b(d(p, center)/width)` of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(center: SurfacePoint, amplitude: f64, width: f64) -> Self {
        Self { x: center.x(), y: center.y(), amplitude, width }
    }

    pub fn center(&self) -> C64 {
        C64::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug)]
struct Image {
    q: C64,
    amplitude: f64,
    width: f64,
    /// Hyperbolic distance of `q` from the origin.
    radius: f64,
}

/// Profile `exp(-1/(1-s²))` on `|s| < 1` with its first two derivatives.
fn profile(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let m = 1.0 - s * s;
    let b = (-1.0 / m).exp();
    let d1 = b * (-2.0 * s / (m * m));
    let d2 = b * (6.0 * s.powi(4) - 2.0) / m.powi(4);
    (b, d1, d2)
}

/// Value, gradient and covariant derivative of a vector field at a point,
/// in coordinate components. `cov * x` is `∇_x E`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldJet {
    pub value: C64,
    pub cov: Matrix2<f64>,
}

impl FieldJet {
    pub fn zero() -> Self {
        Self { value: C64::new(0.0, 0.0), cov: Matrix2::zeros() }
    }

    /// `∇_x E` for a coordinate vector `x`.
    pub fn along(&self, x: C64) -> C64 {
        let r = self.cov * nalgebra::Vector2::new(x.re, x.im);
        C64::new(r[0], r[1])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { value: self.value * c, cov: self.cov * c }
    }
}

/// The perturbation family `E_λ = λ·E'_0` with `E'_0 = grad U` and `U` a
/// sum of bumps over group images of the centres.
#[derive(Clone, Debug)]
pub struct FieldFamily {
    bumps: Vec<Bump>,
    truncation: usize,
    images: Vec<Image>,
}

impl FieldFamily {
    /// Builds the image list from all group elements given by words of
    /// length at most `truncation`.
    pub fn new(group: &SurfaceGroup, bumps: Vec<Bump>, truncation: usize) -> Result<Self> {
        for b in &bumps {
            SurfacePoint::new(b.x, b.y)?;
            if !(b.width > 0.0 && b.width.is_finite() && b.amplitude.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad bump {b:?}")));
            }
        }
        let elements = group_ball(group, truncation);
        let mut images = Vec::new();
        for b in &bumps {
            if b.amplitude == 0.0 {
                continue;
            }
            for g in &elements {
                let q = g.apply(b.center());
                let radius = hyperbolic_distance(C64::new(0.0, 0.0), q);
                if radius <= KEEP_RADIUS {
                    images.push(Image { q, amplitude: b.amplitude, width: b.width, radius });
                }
            }
        }
        images.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        Ok(Self { bumps, truncation, images })
    }

    /// Three bumps of mixed sign inside the octagon, truncation 6.
    pub fn default_field(group: &SurfaceGroup) -> Self {
        Self::new(group, default_bumps(), 6).expect("default bumps are valid")
    }

    /// `E'_0 ≡ 0`.
    pub fn zero() -> Self {
        Self { bumps: Vec::new(), truncation: 0, images: Vec::new() }
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    /// Same field with all amplitudes multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.amplitude *= c;
        }
        for im in &mut out.images {
            im.amplitude *= c;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.images.is_empty()
    }

    fn nearby(&self, p: C64) -> impl Iterator<Item = (&Image, f64)> {
        let reach = hyperbolic_distance(C64::new(0.0, 0.0), p) + self.max_width();
        self.images
            .iter()
            .take_while(move |im| im.radius <= reach)
            .filter_map(move |im| {
                let d = hyperbolic_distance(p, im.q);
                (d < im.width).then_some((im, d))
            })
    }

    fn max_width(&self) -> f64 {
        self.bumps.iter().map(|b| b.width).fold(0.0, f64::max)
    }

    /// The potential `U(p)`.
    pub fn potential(&self, p: C64) -> f64 {
        self.nearby(p).map(|(im, d)| im.amplitude * profile(d / im.width).0).sum()
    }

    /// `E'_0(p) = grad U(p)` in coordinate components.
    pub fn grad(&self, p: C64) -> C64 {
        let mut out = C64::new(0.0, 0.0);
        for (im, d) in self.nearby(p) {
            if d < 1e-12 {
                continue;
            }
            let fd = im.amplitude * profile(d / im.width).1 / im.width;
            out += away_from(p, im.q) * fd;
        }
        out
    }

    /// `E'_0(p)` together with `X ↦ ∇_X E'_0`.
    pub fn jet(&self, p: C64) -> FieldJet {
        let mut jet = FieldJet::zero();
        let g = crate::geometry::metric_scale(p);
        for (im, d) in self.nearby(p) {
            let s = d / im.width;
            let (_, b1, b2) = profile(s);
            let f1 = im.amplitude * b1 / im.width;
            let f2 = im.amplitude * b2 / (im.width * im.width);
            if d < 1e-6 {
                // f'·coth d → f''(0) and the radial direction drops out
                jet.cov += Matrix2::identity() * f2;
                continue;
            }
            let e = away_from(p, im.q);
            jet.value += e * f1;
            let r = to_origin(p, im.q).norm();
            let coth = (1.0 + r * r) / (2.0 * r);
            // ⟨e, X⟩e = g·(e eᵀ)X in coordinates
            let ee = Matrix2::new(e.re * e.re, e.re * e.im, e.im * e.re, e.im * e.im) * g;
            jet.cov += ee * f2 + (Matrix2::identity() - ee) * (f1 * coth);
        }
        jet
    }

    /// `∇_x E'_0` at `p`.
    pub fn covariant_derivative(&self, p: C64, x: C64) -> C64 {
        self.jet(p).along(x)
    }

    pub fn eval_grad_potential(&self, p: &SurfacePoint) -> Tangent {
        Tangent { base: *p, u: self.grad(p.z()) }
    }

    /// `E_λ(p) = λ·E'_0(p)`.
    pub fn eval_e(&self, lambda: f64, p: &SurfacePoint) -> Tangent {
        Tangent { base: *p, u: self.grad(p.z()) * lambda }
    }

    /// Largest relative deviation `|E'_0(g·p) - dg·E'_0(p)| / |E'_0(p)|` over
    /// the generators and sample points, skipping points where the field is
    /// below `1e-8` of its largest sampled size.
    pub fn automorphy_defect(&self, group: &SurfaceGroup, samples: &[C64]) -> f64 {
        let sizes: Vec<f64> = samples.iter().map(|&p| metric_norm(p, self.grad(p))).collect();
        let scale = sizes.iter().copied().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for (&p, &size) in samples.iter().zip(&sizes) {
            if size <= 1e-8 * scale {
                continue;
            }
            for g in group.generators() {
                let gp = g.apply(p);
                let pushed = g.push(p, self.grad(p));
                let dev = metric_norm(gp, self.grad(gp) - pushed);
                worst = worst.max(dev / size);
            }
        }
        worst
    }

    /// Samples `E'_0` and fails when it vanishes everywhere while some
    /// amplitude is nonzero.
    pub fn check_nondegenerate(&self, samples: &[C64]) -> Result<f64> {
        let max = samples.iter().map(|&p| metric_norm(p, self.grad(p))).fold(0.0, f64::max);
        if self.bumps.iter().any(|b| b.amplitude != 0.0) && max == 0.0 {
            return Err(Error::DegenerateField { a: 0.0, stderr: 0.0 });
        }
        Ok(max)
    }
}

pub fn default_bumps() -> Vec<Bump> {
    vec![
        Bump { x: 0.0, y: 0.0, amplitude: 1.0, width: 1.2 },
        Bump { x: 0.35, y: 0.2, amplitude: -0.6, width: 0.9 },
        Bump { x: -0.3, y: 0.45, amplitude: 0.4, width: 0.8 },
    ]
}

/// Unit vector at `p` pointing away from `q` (gradient of `d(·, q)`).
fn away_from(p: C64, q: C64) -> C64 {
    let w = to_origin(p, q);
    -(w / w.norm()) * (0.5 * (1.0 - p.norm_sqr()))
}

/// Distinct group elements represented by words of length at most `len`.
fn group_ball(group: &SurfaceGroup, len: usize) -> Vec<Isometry> {
    // matrices of distinct elements differ by O(1); fix the overall sign
    let key = |g: &Isometry| {
        let s = if g.a.re > 0.0 || (g.a.re == 0.0 && g.a.im > 0.0) { 1.0 } else { -1.0 };
        [g.a.re, g.a.im, g.b.re, g.b.im].map(|x| (s * x * 1e6).round() as i64)
    };
    let mut seen = HashSet::new();
    let mut all = vec![Isometry::identity()];
    seen.insert(key(&all[0]));
    let mut frontier = all.clone();
    for _ in 0..len {
        let mut next = Vec::new();
        for g in &frontier {
            for h in group.generators() {
                let gh = g.compose(h).renormalized();
                if seen.insert(key(&gh)) {
                    next.push(gh);
                }
            }
        }
        all.extend_from_slice(&next);
        frontier = next;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::christoffel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn domain_samples(g: &SurfaceGroup, n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let z = C64::new(rng.gen_range(-0.85..0.85), rng.gen_range(-0.85..0.85));
            if g.contains(z) {
                out.push(z);
            }
        }
        out
    }

    #[test]
    fn profile_derivatives_match_differences() {
        for s in [-0.7, -0.2, 0.0, 0.3, 0.55, 0.9] {
            let h = 1e-6;
            let (_, d1, d2) = profile(s);
            let fd1 = (profile(s + h).0 - profile(s - h).0) / (2.0 * h);
            let fd2 = (profile(s + h).1 - profile(s - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8, "{s}");
            assert!((d2 - fd2).abs() < 1e-7, "{s}");
        }
        assert_eq!(profile(1.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gradient_matches_potential_differences() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        let h = 1e-5;
        for p in domain_samples(&g, 200, 3) {
            let ux = (f.potential(p + h) - f.potential(p - h)) / (2.0 * h);
            let uy = (f.potential(p + C64::new(0.0, h)) - f.potential(p - C64::new(0.0, h))) / (2.0 * h);
            let fd = C64::new(ux, uy) / crate::geometry::metric_scale(p);
            assert!((fd - f.grad(p)).norm() < 1e-6, "{p}");
        }
    }

    #[test]
    fn covariant_derivative_matches_differences() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in domain_samples(&g, 200, 4) {
            let x = C64::from_polar(1.0, rng.gen_range(0.0..6.3));
            let jet = f.jet(p);
            let fd = (f.grad(p + x * h) - f.grad(p - x * h)) / (2.0 * h) + christoffel(p, x, jet.value);
            assert!((fd - jet.along(x)).norm() < 1e-6 * (1.0 + fd.norm()), "{p}");
            assert!((jet.value - f.grad(p)).norm() < 1e-15);
        }
    }

    #[test]
    fn gradient_field_has_symmetric_covariant_derivative() {
        // ∇ grad U is the Hessian, self-adjoint for the metric
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        for p in domain_samples(&g, 100, 9) {
            let jet = f.jet(p);
            let (x, y) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0));
            let a = inner_p(p, jet.along(x), y);
            let b = inner_p(p, x, jet.along(y));
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    fn inner_p(p: C64, u: C64, w: C64) -> f64 {
        crate::geometry::inner(p, u, w)
    }

    #[test]
    fn centred_bump_is_critical_at_centre() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::new(&g, vec![Bump { x: 0.0, y: 0.0, amplitude: 1.0, width: 1.0 }], 6).unwrap();
        assert!(f.grad(C64::new(0.0, 0.0)).norm() < 1e-15);
        assert!(f.grad(C64::new(0.1, 0.0)).norm() > 1e-3);
    }

    #[test]
    fn compact_support() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::new(&g, vec![Bump { x: 0.0, y: 0.0, amplitude: 1.0, width: 0.2 }], 6).unwrap();
        // 0.3 in the disk is about 0.62 from the origin
        assert_eq!(f.grad(C64::new(0.3, 0.0)), C64::new(0.0, 0.0));
        assert_eq!(f.potential(C64::new(0.0, 0.3)), 0.0);
    }

    #[test]
    fn family_is_linear_in_lambda() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        for p in domain_samples(&g, 50, 2) {
            let sp = SurfacePoint::from_complex(p).unwrap();
            assert_eq!(f.eval_e(0.0, &sp).u, C64::new(0.0, 0.0));
            assert_eq!(f.eval_e(2.0, &sp).u, f.eval_e(1.0, &sp).u * 2.0);
        }
    }

    #[test]
    fn automorphic_within_tolerance() {
        let g = SurfaceGroup::bolza().unwrap();
        let samples = domain_samples(&g, 300, 7);
        let f6 = FieldFamily::default_field(&g);
        assert!(f6.automorphy_defect(&g, &samples) < 1e-6);
        // a longer truncation changes nothing near the polygon
        let f7 = FieldFamily::new(&g, default_bumps(), 7).unwrap();
        for &p in &samples {
            for gen in g.generators() {
                let q = gen.apply(p);
                assert!((f6.grad(q) - f7.grad(q)).norm() <= 1e-6 * f7.grad(q).norm().max(1e-12));
            }
        }
    }

    #[test]
    fn nonzero_amplitude_gives_nonzero_field() {
        let g = SurfaceGroup::bolza().unwrap();
        let samples = domain_samples(&g, 100, 1);
        assert!(FieldFamily::default_field(&g).check_nondegenerate(&samples).unwrap() > 0.1);
        assert_eq!(FieldFamily::zero().check_nondegenerate(&samples).unwrap(), 0.0);
    }

    #[test]
    fn scaling_amplitudes_scales_field() {
        let g = SurfaceGroup::bolza().unwrap();
        let f = FieldFamily::default_field(&g);
        let f2 = f.scaled(2.0);
        for p in domain_samples(&g, 50, 8) {
            assert!((f2.grad(p) - f.grad(p) * 2.0).norm() < 1e-14);
        }
    }
}
