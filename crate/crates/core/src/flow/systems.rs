use nalgebra::{Matrix2, Matrix4};

use crate::geometry::{christoffel, inner, rotate_quarter, Isometry, C64};
use crate::thermostat::{FieldFamily, FieldJet};

/// A flow on the disk whose first four state components are `(x, y, v1, v2)`.
pub(crate) trait FlowSystem<const N: usize> {
    fn rhs(&self, y: &[f64; N]) -> [f64; N];
    /// Carry the whole state through the deck isometry `g`.
    fn transport(&self, y: &mut [f64; N], g: &Isometry);
}

#[inline]
pub(crate) fn c(y: &[f64], i: usize) -> C64 {
    C64::new(y[i], y[i + 1])
}

#[inline]
pub(crate) fn put(y: &mut [f64], i: usize, z: C64) {
    y[i] = z.re;
    y[i + 1] = z.im;
}

/// Projection of the field orthogonally to `v`; the conformal factor cancels.
#[inline]
fn project(e: C64, v: C64) -> C64 {
    e - v * ((e * v.conj()).re / v.norm_sqr())
}

/// The thermostat `ṗ = v`, `Dv/dt = E_λ - ⟨E_λ,v⟩v/|v|²`.
pub(crate) struct Thermostat<'a> {
    pub field: &'a FieldFamily,
    pub lambda: f64,
}

impl Thermostat<'_> {
    pub fn accel(&self, z: C64, v: C64) -> C64 {
        let mut a = -christoffel(z, v, v);
        if self.lambda != 0.0 {
            a += project(self.field.grad(z) * self.lambda, v);
        }
        a
    }

    fn jet(&self, z: C64) -> FieldJet {
        if self.lambda == 0.0 {
            FieldJet::zero()
        } else {
            self.field.jet(z).scaled(self.lambda)
        }
    }

    fn transport_base(y: &mut [f64], g: &Isometry) -> (C64, C64) {
        let (z, v) = (c(y, 0), c(y, 2));
        put(y, 0, g.apply(z));
        put(y, 2, g.push(z, v));
        (z, v)
    }
}

impl FlowSystem<4> for Thermostat<'_> {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let (z, v) = (c(y, 0), c(y, 2));
        let a = self.accel(z, v);
        [v.re, v.im, a.re, a.im]
    }

    fn transport(&self, y: &mut [f64; 4], g: &Isometry) {
        Self::transport_base(y, g);
    }
}

/// Thermostat plus the Jacobi equation in a parallel frame `(e1, i·e1)`.
/// Layout: `z, v, e1, (J1, J2), (J̇1, J̇2)`.
pub(crate) struct JacobiSystem<'a>(pub Thermostat<'a>);

impl FlowSystem<10> for JacobiSystem<'_> {
    fn rhs(&self, y: &[f64; 10]) -> [f64; 10] {
        let th = &self.0;
        let (z, v, e1) = (c(y, 0), c(y, 2), c(y, 4));
        let e2 = rotate_quarter(e1);
        let jet = th.jet(z);
        let comps = |u: C64| (inner(z, u, e1), inner(z, u, e2));
        let (g1, g2) = comps(v);
        let (ee1, ee2) = comps(jet.value);
        let (j1, j2, d1, d2) = (y[6], y[7], y[8], y[9]);
        let (n1, n2) = comps(jet.along(e1 * j1 + e2 * j2));
        let s2 = g1 * g1 + g2 * g2;
        let jg = j1 * g1 + j2 * g2;
        let eg = ee1 * g1 + ee2 * g2;
        let ed = ee1 * d1 + ee2 * d2;
        let dg = d1 * g1 + d2 * g2;
        let ng = n1 * g1 + n2 * g2;
        // R(γ̇, J)γ̇ = ⟨J,γ̇⟩γ̇ - |γ̇|²J
        let r1 = jg * g1 - s2 * j1;
        let r2 = jg * g2 - s2 * j2;
        let coef = (ng + ed - 2.0 * dg * eg / s2) / s2;
        let dd1 = -r1 + n1 - coef * g1 - eg * d1 / s2;
        let dd2 = -r2 + n2 - coef * g2 - eg * d2 / s2;
        let a = th.accel(z, v);
        let de1 = -christoffel(z, v, e1);
        [v.re, v.im, a.re, a.im, de1.re, de1.im, d1, d2, dd1, dd2]
    }

    fn transport(&self, y: &mut [f64; 10], g: &Isometry) {
        let (z, _) = Thermostat::transport_base(y, g);
        let e1 = c(y, 4);
        put(y, 4, g.push(z, e1));
    }
}

/// Thermostat plus the coordinate linearisation `Φ̇ = DF·Φ` and
/// `d/dt log det Φ = tr DF`. Layout: `z, v, Φ (column-major 4×4), log det`.
pub(crate) struct VariationalSystem<'a>(pub Thermostat<'a>);

/// Real 2×2 matrix of `δ ↦ w·δ` for complex `w`.
fn cmul(w: C64) -> Matrix2<f64> {
    Matrix2::new(w.re, -w.im, w.im, w.re)
}

/// Real 2×2 matrix of `δ ↦ w·conj(δ)`.
fn cmul_conj(w: C64) -> Matrix2<f64> {
    Matrix2::new(w.re, w.im, w.im, -w.re)
}

impl VariationalSystem<'_> {
    /// Jacobian of `(z, v) ↦ (v, a(z, v))`.
    pub fn jacobian(&self, z: C64, v: C64) -> Matrix4<f64> {
        let th = &self.0;
        let q = 1.0 - z.norm_sqr();
        // Γ(z; v, v) = 2 z̄ v²/q
        let dgamma_dv = cmul(4.0 * z.conj() * v / q);
        let v2 = v * v;
        // ∂/∂z: 2 conj(δ) v²/q + 2 z̄ v² · 2Re(z̄ δ)/q²
        let re_zbar = nalgebra::RowVector2::new(z.re, z.im);
        let w = 4.0 * z.conj() * v2 / (q * q);
        let dgamma_dz = cmul_conj(2.0 * v2 / q) + nalgebra::Vector2::new(w.re, w.im) * re_zbar;
        let mut da_dz = -dgamma_dz;
        let mut da_dv = -dgamma_dv;
        if th.lambda != 0.0 {
            let jet = th.jet(z);
            let e = jet.value;
            let vn = v.norm_sqr();
            let ev = (e * v.conj()).re;
            // coordinate derivative of E: ∇_δE - Γ(δ, E)
            let de = jet.cov - cmul(2.0 * z.conj() * e / q);
            let vcol = nalgebra::Vector2::new(v.re, v.im);
            let vrow = vcol.transpose();
            // P = E - (⟨E,v⟩_e/|v|²) v
            da_dz += de - vcol * (vrow * de) / vn;
            let erow = nalgebra::RowVector2::new(e.re, e.im);
            let dp_dv = -(vcol * erow) / vn + (vcol * vrow) * (2.0 * ev / (vn * vn)) - Matrix2::identity() * (ev / vn);
            da_dv += dp_dv;
        }
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&Matrix2::identity());
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&da_dz);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&da_dv);
        m
    }
}

/// Derivative of the lifted isometry `(z, v) ↦ (g(z), g'(z)v)` at `(z, v)`.
pub(crate) fn lifted_derivative(g: &Isometry, z: C64, v: C64) -> Matrix4<f64> {
    let d1 = cmul(g.derivative(z));
    let d2 = cmul(g.second_derivative(z) * v);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&d1);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&d2);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&d1);
    m
}

impl FlowSystem<21> for VariationalSystem<'_> {
    fn rhs(&self, y: &[f64; 21]) -> [f64; 21] {
        let (z, v) = (c(y, 0), c(y, 2));
        let a = self.0.accel(z, v);
        let df = self.jacobian(z, v);
        let phi = Matrix4::from_column_slice(&y[4..20]);
        let dphi = df * phi;
        let mut out = [0.0; 21];
        out[..4].copy_from_slice(&[v.re, v.im, a.re, a.im]);
        out[4..20].copy_from_slice(dphi.as_slice());
        out[20] = df.trace();
        out
    }

    fn transport(&self, y: &mut [f64; 21], g: &Isometry) {
        let (z, v) = (c(y, 0), c(y, 2));
        let d = lifted_derivative(g, z, v);
        Thermostat::transport_base(y, g);
        let phi = d * Matrix4::from_column_slice(&y[4..20]);
        y[4..20].copy_from_slice(phi.as_slice());
        y[20] += 4.0 * g.derivative(z).norm().ln();
    }
}
