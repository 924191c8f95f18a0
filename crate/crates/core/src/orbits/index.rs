use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{frame_jet, geodesic_state, solve_w, FrameJet, WField};
use crate::geometry::{curvature_r, inner, rotate_quarter, ClosedGeodesic, SurfaceGroup, SurfacePoint};
use crate::quadrature::QuadratureConfig;
use crate::thermostat::FieldFamily;

/// Largest `|U(T) - U(0)|` accepted for a field along a closed geodesic.
const PERIODIC_TOL: f64 = 1e-9;

/// Components `(tangential, normal)` in the parallel frame `(γ̇, n)` of a
/// field along a closed geodesic, and of its covariant derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameValue {
    pub value: [f64; 2],
    pub deriv: [f64; 2],
}

/// A vector field along a closed geodesic, given by frame components.
pub trait PeriodicField {
    fn at(&self, t: f64) -> Result<FrameValue>;
}

impl<F: Fn(f64) -> Result<FrameValue>> PeriodicField for F {
    fn at(&self, t: f64) -> Result<FrameValue> {
        self(t)
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `E'_0` along the geodesic.
pub fn field_e(j: &FrameJet) -> FrameValue {
    FrameValue { value: [j.tangential, j.normal], deriv: [j.d_tangential, j.d_normal] }
}

/// `⟨E'_0, γ̇⟩γ̇`.
pub fn field_e_tangential(j: &FrameJet) -> FrameValue {
    FrameValue { value: [j.tangential, 0.0], deriv: [j.d_tangential, 0.0] }
}

/// `V = E'_0 - ⟨E'_0, γ̇⟩γ̇`.
pub fn field_v(j: &FrameJet) -> FrameValue {
    FrameValue { value: [0.0, j.normal], deriv: [0.0, j.d_normal] }
}

/// `W + c·γ̇`.
pub fn field_w(w: &WField, c: f64, t: f64) -> FrameValue {
    FrameValue { value: [c, w.normal(t)], deriv: [0.0, w.normal_dot(t)] }
}

/// `∫ ⟨U̇, V̇⟩ - ⟨R(γ̇, U)γ̇, V⟩ dt` over one period.
pub fn index_form(
    group: &SurfaceGroup,
    geodesic: &ClosedGeodesic,
    u: &dyn PeriodicField,
    v: &dyn PeriodicField,
    quad: &QuadratureConfig,
) -> Result<f64> {
    for f in [u, v] {
        let (a, b) = (f.at(0.0)?, f.at(geodesic.length)?);
        let mismatch = (a.value[0] - b.value[0]).hypot(a.value[1] - b.value[1]);
        if !(mismatch <= PERIODIC_TOL) {
            return Err(Error::Aperiodic { mismatch });
        }
    }
    let mut failure = None;
    let val = quad.integrate(0.0, geodesic.length, |t| match index_integrand(group, geodesic, u, v, t) {
        Ok(x) => x,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(val),
    }
}

fn index_integrand(
    group: &SurfaceGroup,
    geodesic: &ClosedGeodesic,
    u: &dyn PeriodicField,
    v: &dyn PeriodicField,
    t: f64,
) -> Result<f64> {
    let (a, b) = (u.at(t)?, v.at(t)?);
    let th = geodesic_state(group, geodesic, t)?;
    let n = rotate_quarter(th.v);
    let uc = th.v * a.value[0] + n * a.value[1];
    let vc = th.v * b.value[0] + n * b.value[1];
    let p = SurfacePoint::from_complex(th.p)?;
    Ok(dot(a.deriv, b.deriv) - inner(th.p, curvature_r(&p, th.v, uc, th.v), vc))
}

/// Random trigonometric polynomial field with `modes` harmonics and
/// coefficients uniform in `[-1, 1]`.
pub fn random_trig_field<R: Rng>(period: f64, modes: usize, rng: &mut R) -> impl PeriodicField {
    let coeffs: Vec<[f64; 4]> = (0..=modes).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    move |t: f64| {
        let mut out = FrameValue::default();
        for (k, c) in coeffs.iter().enumerate() {
            let w = std::f64::consts::TAU * k as f64 / period;
            let (s, co) = (w * t).sin_cos();
            for i in 0..2 {
                let (a, b) = (c[2 * i], c[2 * i + 1]);
                out.value[i] += a * co + b * s;
                out.deriv[i] += w * (b * co - a * s);
            }
        }
        Ok(out)
    }
}

/// Which integrand on the right of the `I(W, V)` identity is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrandVariant {
    /// `-|E'_0|² + ⟨∇_{γ̇}E'_0, γ̇⟩²`.
    #[serde(rename = "a")]
    GradientAlongVelocity,
    /// `-|E'_0|² + ⟨E'_0, γ̇⟩²`.
    #[serde(rename = "b")]
    FieldAlongVelocity,
}

impl IntegrandVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::GradientAlongVelocity => "a",
            Self::FieldAlongVelocity => "b",
        }
    }
}

/// Index-form values along one closed geodesic and the residuals of the
/// identities relating them to direct integrals of the field.
#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub word: String,
    pub period: f64,
    pub i_e_e: f64,
    pub i_e_et: f64,
    pub i_et_et: f64,
    pub i_v_v: f64,
    pub i_w_e: f64,
    pub i_w_et: f64,
    pub i_w_v: f64,
    pub i_w_w: f64,
    /// `∫ |∇E|² - ⟨R(γ̇,E)γ̇,E⟩`.
    pub int_grad_sq_curv: f64,
    /// `∫ ⟨∇E, γ̇⟩²`.
    pub int_grad_tangential_sq: f64,
    /// `∫ |∇E|² - ⟨∇E,γ̇⟩² - ⟨R(γ̇,E)γ̇,E⟩`, the per-orbit `B`.
    pub b_gamma: f64,
    pub int_e_sq: f64,
    /// `∫ ⟨E, γ̇⟩²`.
    pub int_e_tangential_sq: f64,
    /// `|I(E,E) - ∫ |∇E|² - ⟨R(γ̇,E)γ̇,E⟩|`.
    pub residual_ee: f64,
    /// `|I(E,⟨E,γ̇⟩γ̇) - ∫ ⟨∇E,γ̇⟩²|`.
    pub residual_e_et: f64,
    pub residual_et_et: f64,
    /// `|I(V,V) - b_gamma|`.
    pub residual_vv: f64,
    /// `I(W, ⟨E,γ̇⟩γ̇)`, which should vanish.
    pub residual_w_et: f64,
    /// `I(W,V)` against the integrand with `⟨∇_{γ̇}E,γ̇⟩²`.
    pub residual_wv_gradient: f64,
    /// `I(W,V)` against the integrand with `⟨E,γ̇⟩²`.
    pub residual_wv_field: f64,
    pub variant: IntegrandVariant,
    pub w_residual: f64,
}

impl IndexReport {
    pub fn identity_residual(&self) -> f64 {
        [self.residual_ee, self.residual_e_et, self.residual_et_et, self.residual_vv].into_iter().fold(0.0, f64::max)
    }

    /// Per-orbit `A` for the given integrand variant:
    /// `∫ |E|² - ⟨∇E,γ̇⟩²` or `∫ |E|² - ⟨E,γ̇⟩²`.
    pub fn a_gamma(&self, variant: IntegrandVariant) -> f64 {
        match variant {
            IntegrandVariant::GradientAlongVelocity => self.int_e_sq - self.int_grad_tangential_sq,
            IntegrandVariant::FieldAlongVelocity => self.int_e_sq - self.int_e_tangential_sq,
        }
    }

    /// Maximizer `A_γ/B_γ` of `2x·A_γ - x²·B_γ`; 0 when the field vanishes
    /// along the orbit.
    pub fn x_star(&self) -> f64 {
        if self.b_gamma == 0.0 {
            0.0
        } else {
            self.a_gamma(self.variant) / self.b_gamma
        }
    }
}

const SUITE_TERMS: usize = 13;

/// Evaluate the index-form identities along `geodesic` with `W` from
/// [`solve_w`].
pub fn identity_suite(
    group: &SurfaceGroup,
    field: &FieldFamily,
    geodesic: &ClosedGeodesic,
    quad: &QuadratureConfig,
) -> Result<IndexReport> {
    let w = solve_w(group, field, geodesic)?;
    identity_suite_with(group, field, geodesic, &w, quad)
}

pub fn identity_suite_with(
    group: &SurfaceGroup,
    field: &FieldFamily,
    geodesic: &ClosedGeodesic,
    w: &WField,
    quad: &QuadratureConfig,
) -> Result<IndexReport> {
    let mut failure = None;
    let sums = quad.integrate_many(0.0, geodesic.length, SUITE_TERMS, |t| {
        suite_terms(group, field, geodesic, w, t).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            vec![0.0; SUITE_TERMS]
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let [i_e_e, i_e_et, i_et_et, i_v_v, i_w_e, i_w_et, i_w_v, i_w_w, grad_sq, curv, grad_t_sq, e_sq, e_t_sq] =
        sums[..]
    else {
        unreachable!()
    };
    let int_grad_sq_curv = grad_sq - curv;
    let b_gamma = grad_sq - grad_t_sq - curv;
    let var_a = -e_sq + grad_t_sq;
    let var_b = -e_sq + e_t_sq;
    let (residual_wv_gradient, residual_wv_field) = ((i_w_v - var_a).abs(), (i_w_v - var_b).abs());
    let variant = if residual_wv_gradient < residual_wv_field {
        IntegrandVariant::GradientAlongVelocity
    } else {
        IntegrandVariant::FieldAlongVelocity
    };
    Ok(IndexReport {
        word: geodesic.class.label(),
        period: geodesic.length,
        i_e_e,
        i_e_et,
        i_et_et,
        i_v_v,
        i_w_e,
        i_w_et,
        i_w_v,
        i_w_w,
        int_grad_sq_curv,
        int_grad_tangential_sq: grad_t_sq,
        b_gamma,
        int_e_sq: e_sq,
        int_e_tangential_sq: e_t_sq,
        residual_ee: (i_e_e - int_grad_sq_curv).abs(),
        residual_e_et: (i_e_et - grad_t_sq).abs(),
        residual_et_et: (i_et_et - grad_t_sq).abs(),
        residual_vv: (i_v_v - b_gamma).abs(),
        residual_w_et: i_w_et.abs(),
        residual_wv_gradient,
        residual_wv_field,
        variant,
        w_residual: w.residual,
    })
}

/// Index-form integrands from frame components, then the printed integrands
/// from coordinate vectors at the reduced point.
fn suite_terms(group: &SurfaceGroup, field: &FieldFamily, geodesic: &ClosedGeodesic, w: &WField, t: f64) -> Result<Vec<f64>> {
    let jet = frame_jet(group, field, geodesic, t)?;
    let (e, et, v, ww) = (field_e(&jet), field_e_tangential(&jet), field_v(&jet), field_w(w, 0.0, t));
    // in the K = -1 frame ⟨R(γ̇,U)γ̇,V⟩ = -u_n v_n
    let idx = |a: &FrameValue, b: &FrameValue| dot(a.deriv, b.deriv) + a.value[1] * b.value[1];
    let th = geodesic_state(group, geodesic, t)?;
    let p = SurfacePoint::from_complex(th.p)?;
    let full = field.jet(th.p);
    let grad = full.along(th.v);
    let speed_sq = inner(th.p, th.v, th.v);
    let curv = inner(th.p, curvature_r(&p, th.v, full.value, th.v), full.value);
    Ok(vec![
        idx(&e, &e),
        idx(&e, &et),
        idx(&et, &et),
        idx(&v, &v),
        idx(&ww, &e),
        idx(&ww, &et),
        idx(&ww, &v),
        idx(&ww, &ww),
        inner(th.p, grad, grad),
        curv,
        inner(th.p, grad, th.v).powi(2) / speed_sq,
        inner(th.p, full.value, full.value),
        inner(th.p, full.value, th.v).powi(2) / speed_sq,
    ])
}

/// `LHS - (2x·A_γ - x²·B_γ)` for each `x`, with `LHS` the measured `T''(0)`.
pub fn inequality_margins(report: &IndexReport, second_derivative: f64, xs: &[f64]) -> Vec<f64> {
    let a = report.a_gamma(report.variant);
    let b = report.b_gamma;
    xs.iter().map(|&x| second_derivative - (2.0 * x * a - x * x * b)).collect()
}
