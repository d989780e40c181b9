//! Curvature identities for harmonic 2-forms on Riemannian 4-manifolds,
//! checked numerically: Taylor jets, metric charts, 2-form calculus,
//! pointwise verifiers and discrete Hodge theory on the 4-torus.
//!
//! Everything except the lattice solver is generic over [`Real`]; the
//! aliases below fix the scalar.

pub mod canonical;
pub mod expr;
pub mod forms;
pub mod geometry;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod scalar;
pub mod verify;

pub use scalar::Real;

/// Third-order jets in double precision.
pub type Jet = jet::Jet3<f64>;
/// Third-order jets in single precision.
pub type Jet32 = jet::Jet3<f32>;
pub type Chart = geometry::MetricChart<f64>;
pub type Chart32 = geometry::MetricChart<f32>;
pub type Geometry = geometry::LocalGeometry<f64>;
pub type Geometry32 = geometry::LocalGeometry<f32>;
pub type Slate = geometry::CurvatureSlate<f64>;
pub type TwoForm = forms::TwoFormPoint<f64>;
pub type TwoForm32 = forms::TwoFormPoint<f32>;
pub type Adapted = canonical::AdaptedFrame<f64>;
