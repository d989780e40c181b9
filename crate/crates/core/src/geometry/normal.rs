use std::sync::Arc;

use super::local::gram_deviation;
use super::{CoordinateMap, GeometryError, JetPoint, LocalGeometry, MetricChart, PulledBackMetric};
use crate::jet::Jet3;
use crate::linalg::{self, Mat4, Vec4};
use crate::scalar::Real;

/// `x(y) = p + B y − ½ Γ(p)(B y, B y)`.
#[derive(Debug, Clone)]
pub struct QuadraticMap<T> {
    pub p: [T; 4],
    /// `b[i][a]`: coordinate component i of basis vector a.
    pub b: Mat4<T>,
    /// `Γ^i_jk(p)`.
    pub gamma: [[[T; 4]; 4]; 4],
}

impl<T: Real> CoordinateMap<T> for QuadraticMap<T> {
    fn apply(&self, y: &JetPoint<T>) -> (JetPoint<T>, Mat4<Jet3<T>>) {
        let v: [Jet3<T>; 4] =
            std::array::from_fn(|i| (0..4).map(|a| y[a] * self.b[i][a]).sum());
        let half = T::lit(0.5);
        let mut x = [Jet3::zero(); 4];
        let mut jac = [[Jet3::zero(); 4]; 4];
        for i in 0..4 {
            // w_j = Γ^i_jk v^k
            let w: [Jet3<T>; 4] =
                std::array::from_fn(|j| (0..4).map(|k| v[k] * self.gamma[i][j][k]).sum());
            let quad: Jet3<T> = (0..4).map(|j| v[j] * w[j]).sum();
            x[i] = v[i] - quad * half + self.p[i];
            for a in 0..4 {
                let mut s = Jet3::constant(self.b[i][a]);
                for j in 0..4 {
                    s -= w[j] * self.b[j][a];
                }
                jac[i][a] = s;
            }
        }
        (x, jac)
    }
}

impl<T: Real> QuadraticMap<T> {
    /// The pulled-back chart on a box small enough to stay inside `base`.
    pub fn chart(&self, base: &MetricChart<T>) -> MetricChart<T> {
        let dist = (0..4)
            .map(|i| {
                let x = self.p[i].as_f64();
                (x - base.domain[i][0]).min(base.domain[i][1] - x)
            })
            .fold(f64::INFINITY, f64::min);
        let spread = (0..4)
            .map(|i| (0..4).map(|a| self.b[i][a].abs().as_f64()).sum::<f64>())
            .fold(0.0, f64::max);
        let r = 0.25 * dist / spread.max(1e-300);
        let cols: [Vec4<T>; 4] = std::array::from_fn(|a| std::array::from_fn(|i| self.b[i][a]));
        let orientation = if (linalg::det_columns(&cols) > T::zero()) == (base.orientation > 0) {
            1
        } else {
            -1
        };
        MetricChart::new(
            format!("normal({})", base.name),
            [[-r, r]; 4],
            orientation,
            Arc::new(PulledBackMetric { base: base.metric_field().clone(), map: Arc::new(self.clone()) }),
        )
    }
}

/// The quadratic coordinate map of a normal chart at `p` with frame `basis`.
pub fn normal_map<T: Real>(
    chart: &MetricChart<T>,
    p: [T; 4],
    basis: &[Vec4<T>; 4],
) -> Result<QuadraticMap<T>, GeometryError> {
    let geo = LocalGeometry::at(chart, p)?;
    let dev = gram_deviation(&geo.metric(), basis);
    if !(dev <= 1e-8) {
        return Err(GeometryError::NonOrthonormalBasis { deviation: dev });
    }
    let b: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|a| basis[a][i]));
    Ok(QuadraticMap { p, b, gamma: geo.christoffel() })
}

/// Chart around `p` whose coordinate frame at the origin is `basis` and whose
/// Christoffel symbols vanish there.
pub fn normal_chart<T: Real>(
    chart: &MetricChart<T>,
    p: [T; 4],
    basis: &[Vec4<T>; 4],
) -> Result<MetricChart<T>, GeometryError> {
    Ok(normal_map(chart, p, basis)?.chart(chart))
}
