//! Poincaré-disk model of the Bolza surface.
//!
//! The disk carries the metric `g = (2/(1-|z|²))² |dz|²` of constant
//! curvature `-1`. Points and tangent vectors are stored as complex numbers;
//! tangent components are the coordinate components `(u1, u2) = u1 + i·u2`.

mod classes;
mod disk;
mod isometry;
mod spectrum;
mod surface;

pub use classes::{canonical_word, enumerate_classes, enumerate_classes_within, geodesic_from_class, word_label, Chord, ClosedGeodesic, ConjugacyClass, Word};
pub use disk::{
    christoffel, conformal_factor, covariant_derivative, curvature_r, exact_geodesic_flow,
    metric_inner, metric_norm, metric_scale, rotate_quarter, PhasePoint, SurfacePoint, Tangent,
    C64,
};
pub use isometry::Isometry;
pub(crate) use disk::{hyperbolic_distance, inner, to_origin};
pub use spectrum::{LengthSpectrum, SpectrumEntry};
pub use surface::{Side, SurfaceGroup, DEFAULT_REDUCTION_CAP, DOMAIN_TOLERANCE};
