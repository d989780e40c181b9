//! Coordinate charts with analytic metrics and the curvature they carry.
//!
//! Curvature sign dictionary used everywhere in this crate:
//!
//! * `R(X,Y) = -∇_X∇_Y + ∇_Y∇_X + ∇_[X,Y]` and `R_ijkl = ⟨R(e_i,e_j)e_k, e_l⟩`,
//!   so that `sec(e_i, e_j) = R_ijij` is positive on round spheres and
//!   `Ric_ij = Σ_k R_kikj`.
//! * `Δ_fun u = tr Hess u` (non-positive spectrum).
//! * `Δ_Hodge = dδ + δd = -Δ_fun` on functions.

mod local;
mod normal;
mod presets;

pub use local::{CurvatureSlate, Frame, FrameChoice, LocalGeometry, Riemann};
pub use normal::{normal_chart, normal_map, QuadraticMap};
pub use presets::{cp2_complex_structure, preset, PresetId, PRESET_NAMES};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::jet::{Jet3, JetError};
use crate::linalg::Mat4;
use crate::scalar::Real;

/// Coordinates as jets (the seed of every differentiation).
pub type JetPoint<T> = [Jet3<T>; 4];
/// Metric components as jets.
pub type MetricJet<T> = Mat4<Jet3<T>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{context}: {source} at point {point:?}")]
    Jet {
        context: &'static str,
        source: JetError,
        point: [f64; 4],
    },
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: [f64; 4] },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: [f64; 4] },
    #[error("basis is not orthonormal (Gram deviation {deviation:e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("degenerate plane")]
    DegeneratePlane,
    #[error("non-finite value in {what} at {point:?}")]
    NonFinite { what: &'static str, point: [f64; 4] },
    #[error("invalid parameter: {what}")]
    InvalidParameter { what: String },
    #[error("point {point:?} outside the chart domain")]
    OutsideDomain { point: [f64; 4] },
}

pub fn point_f64<T: Real>(p: &[T; 4]) -> [f64; 4] {
    std::array::from_fn(|i| p[i].as_f64())
}

/// A metric given as a function of (jet-valued) coordinates.
pub trait MetricField<T: Real>: Send + Sync + fmt::Debug {
    fn metric(&self, x: &JetPoint<T>) -> Result<MetricJet<T>, GeometryError>;
}

/// A scalar function of (jet-valued) coordinates.
pub trait ScalarField<T: Real>: Send + Sync + fmt::Debug {
    fn value(&self, x: &JetPoint<T>) -> Result<Jet3<T>, GeometryError>;
}

/// A coordinate change `x = x(y)` with its Jacobian `J^i_a = ∂x^i/∂y^a`.
pub trait CoordinateMap<T: Real>: Send + Sync + fmt::Debug {
    fn apply(&self, y: &JetPoint<T>) -> (JetPoint<T>, Mat4<Jet3<T>>);
}

/// Metric with components given by expressions in `x1..x4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMetric {
    components: [[Expr; 4]; 4],
}

impl ExprMetric {
    /// Uses the upper triangle of `components` (the lower is mirrored).
    pub fn new(components: [[Expr; 4]; 4]) -> Self {
        let mut c = components;
        for i in 0..4 {
            for j in 0..i {
                c[i][j] = c[j][i].clone();
            }
        }
        Self { components: c }
    }

    pub fn diagonal(d: [Expr; 4]) -> Self {
        let zero = || Expr::num(0.0);
        let mut c: [[Expr; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| zero()));
        for (i, e) in d.into_iter().enumerate() {
            c[i][i] = e;
        }
        Self { components: c }
    }

    pub fn components(&self) -> &[[Expr; 4]; 4] {
        &self.components
    }
}

impl<T: Real> MetricField<T> for ExprMetric {
    fn metric(&self, x: &JetPoint<T>) -> Result<MetricJet<T>, GeometryError> {
        let mut g = [[Jet3::zero(); 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = self.components[i][j].eval(x)?;
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }
}

/// Scalar field from an expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprScalar(pub Expr);

impl<T: Real> ScalarField<T> for ExprScalar {
    fn value(&self, x: &JetPoint<T>) -> Result<Jet3<T>, GeometryError> {
        Ok(self.0.eval(x)?)
    }
}

/// `g' = e^{2f} g`.
#[derive(Debug, Clone)]
pub struct ConformalMetric<T: Real> {
    pub base: Arc<dyn MetricField<T>>,
    pub factor: Arc<dyn ScalarField<T>>,
}

impl<T: Real> MetricField<T> for ConformalMetric<T> {
    fn metric(&self, x: &JetPoint<T>) -> Result<MetricJet<T>, GeometryError> {
        let g = self.base.metric(x)?;
        let w = (self.factor.value(x)? * T::lit(2.0)).exp();
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| g[i][j] * w)))
    }
}

/// Pull-back `g'_ab(y) = g_ij(x(y)) J^i_a J^j_b`.
#[derive(Debug, Clone)]
pub struct PulledBackMetric<T: Real> {
    pub base: Arc<dyn MetricField<T>>,
    pub map: Arc<dyn CoordinateMap<T>>,
}

impl<T: Real> MetricField<T> for PulledBackMetric<T> {
    fn metric(&self, y: &JetPoint<T>) -> Result<MetricJet<T>, GeometryError> {
        let (x, jac) = self.map.apply(y);
        let g = self.base.metric(&x)?;
        let mut out = [[Jet3::zero(); 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let mut s = Jet3::zero();
                for i in 0..4 {
                    let mut gi = Jet3::zero();
                    for j in 0..4 {
                        gi += g[i][j] * jac[j][b];
                    }
                    s += jac[i][a] * gi;
                }
                out[a][b] = s;
                out[b][a] = s;
            }
        }
        Ok(out)
    }
}

/// A coordinate box with a metric and an orientation flag.
#[derive(Debug, Clone)]
pub struct MetricChart<T: Real> {
    pub name: String,
    /// Open coordinate intervals `(lo, hi)` per axis.
    pub domain: [[f64; 2]; 4],
    /// `+1` when the ordered coordinate frame is positively oriented.
    pub orientation: i8,
    metric: Arc<dyn MetricField<T>>,
}

impl<T: Real> MetricChart<T> {
    pub fn new(
        name: impl Into<String>,
        domain: [[f64; 2]; 4],
        orientation: i8,
        metric: Arc<dyn MetricField<T>>,
    ) -> Self {
        assert!(orientation == 1 || orientation == -1);
        Self { name: name.into(), domain, orientation, metric }
    }

    pub fn from_exprs(
        name: impl Into<String>,
        domain: [[f64; 2]; 4],
        orientation: i8,
        components: [[Expr; 4]; 4],
    ) -> Self {
        Self::new(name, domain, orientation, Arc::new(ExprMetric::new(components)))
    }

    pub fn metric_field(&self) -> &Arc<dyn MetricField<T>> {
        &self.metric
    }

    /// `e^{2f} g` on the same box.
    pub fn conformal(&self, factor: Arc<dyn ScalarField<T>>, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            domain: self.domain,
            orientation: self.orientation,
            metric: Arc::new(ConformalMetric { base: self.metric.clone(), factor }),
        }
    }

    pub fn metric_jet(&self, p: &[T; 4]) -> Result<MetricJet<T>, GeometryError> {
        self.metric.metric(&Jet3::lift_point(p))
    }

    pub fn metric_at(&self, p: &[T; 4]) -> Result<Mat4<T>, GeometryError> {
        let x: JetPoint<T> = std::array::from_fn(|i| Jet3::constant(p[i]));
        let g = self.metric.metric(&x)?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value())))
    }

    pub fn contains(&self, p: &[T; 4]) -> bool {
        (0..4).all(|i| {
            let x = p[i].as_f64();
            x > self.domain[i][0] && x < self.domain[i][1]
        })
    }

    /// The domain shrunk by `margin` (a fraction of each interval) on both ends.
    pub fn sampling_box(&self, margin: f64) -> [[f64; 2]; 4] {
        std::array::from_fn(|i| {
            let [lo, hi] = self.domain[i];
            let w = hi - lo;
            [lo + margin * w, hi - margin * w]
        })
    }
}
