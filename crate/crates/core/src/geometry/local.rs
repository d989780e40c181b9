use super::{point_f64, GeometryError, MetricChart, MetricJet};
use crate::jet::Jet3;
use crate::linalg::{self, Mat4, Vec4};
use crate::scalar::Real;

/// Rank-4 array indexed `[i][j][k][l]`.
pub type Riemann<T> = [[[[T; 4]; 4]; 4]; 4];

/// Orthonormal frame: `e[a]` holds the coordinate components of the a-th vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T> {
    pub e: [Vec4<T>; 4],
    /// Whether the frame is positively oriented for the chart orientation.
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameChoice<T> {
    CoordinateGramSchmidt,
    Supplied([Vec4<T>; 4]),
}

/// Metric, inverse metric and Christoffel symbols as jets around one point.
///
/// Valid jet orders: `g` and `g⁻¹` to 3, `Γ` to 2.
#[derive(Debug, Clone)]
pub struct LocalGeometry<T: Real> {
    pub point: [T; 4],
    pub orientation: i8,
    pub g: MetricJet<T>,
    pub ginv: MetricJet<T>,
    pub sqrt_det: Jet3<T>,
    /// `gamma[i][j][k] = Γ^i_jk`.
    pub gamma: [[[Jet3<T>; 4]; 4]; 4],
}

impl<T: Real> LocalGeometry<T> {
    pub fn at(chart: &MetricChart<T>, p: [T; 4]) -> Result<Self, GeometryError> {
        let pf = point_f64(&p);
        if !chart.contains(&p) {
            return Err(GeometryError::OutsideDomain { point: pf });
        }
        let g = chart.metric_jet(&p)?;
        if !g.iter().flatten().all(Jet3::is_finite) {
            return Err(GeometryError::NonFinite { what: "metric", point: pf });
        }
        let gv: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value()));
        if linalg::cholesky(&gv).is_none() {
            return Err(GeometryError::NotPositiveDefinite { point: pf });
        }
        let (ginv, det) = linalg::invert_generic::<T, Jet3<T>>(&g)
            .map_err(|_| GeometryError::SingularMetric { point: pf })?;
        let sqrt_det = det.sqrt().map_err(|source| GeometryError::Jet {
            context: "sqrt det g",
            source,
            point: pf,
        })?;
        // dg[l][j][k] = ∂_l g_jk
        let dg: [[[Jet3<T>; 4]; 4]; 4] =
            std::array::from_fn(|l| std::array::from_fn(|j| std::array::from_fn(|k| g[j][k].partial(l))));
        let half = T::lit(0.5);
        let mut lower = [[[Jet3::zero(); 4]; 4]; 4];
        for l in 0..4 {
            for j in 0..4 {
                for k in j..4 {
                    let v = (dg[j][l][k] + dg[k][j][l] - dg[l][j][k]) * half;
                    lower[l][j][k] = v;
                    lower[l][k][j] = v;
                }
            }
        }
        let mut gamma = [[[Jet3::zero(); 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in j..4 {
                    let v: Jet3<T> = (0..4).map(|l| ginv[i][l] * lower[l][j][k]).sum();
                    gamma[i][j][k] = v;
                    gamma[i][k][j] = v;
                }
            }
        }
        Ok(Self { point: p, orientation: chart.orientation, g, ginv, sqrt_det, gamma })
    }

    pub fn metric(&self) -> Mat4<T> {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value()))
    }

    pub fn metric_inverse(&self) -> Mat4<T> {
        std::array::from_fn(|i| std::array::from_fn(|j| self.ginv[i][j].value()))
    }

    /// `Γ^i_jk` at the point.
    pub fn christoffel(&self) -> [[[T; 4]; 4]; 4] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| self.gamma[i][j][k].value()))
        })
    }

    /// Coordinate components `P_abcd = ⟨R(∂_a,∂_b)∂_c, ∂_d⟩` in the crate's sign
    /// convention (positive sectional curvature on spheres).
    pub fn riemann_coordinates(&self) -> Riemann<T> {
        let gm = self.gamma;
        // up[d][c][a][b] = R^d_{cab} of the textbook operator ∇_a∇_b − ∇_b∇_a
        let mut up = [[[[T::zero(); 4]; 4]; 4]; 4];
        for d in 0..4 {
            for c in 0..4 {
                for a in 0..4 {
                    for b in (a + 1)..4 {
                        let mut v = gm[d][b][c].d1(a) - gm[d][a][c].d1(b);
                        for e in 0..4 {
                            v += gm[d][a][e].value() * gm[e][b][c].value()
                                - gm[d][b][e].value() * gm[e][a][c].value();
                        }
                        up[d][c][a][b] = v;
                        up[d][c][b][a] = -v;
                    }
                }
            }
        }
        let g = self.metric();
        let mut out = [[[[T::zero(); 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        out[a][b][c][d] = (0..4).map(|e| g[c][e] * up[e][d][a][b]).sum();
                    }
                }
            }
        }
        out
    }

    pub fn frame(&self, choice: FrameChoice<T>) -> Result<Frame<T>, GeometryError> {
        let g = self.metric();
        match choice {
            FrameChoice::CoordinateGramSchmidt => {
                let basis = linalg::identity::<T>();
                let mut e = linalg::gram_schmidt(&g, &basis)
                    .ok_or(GeometryError::NotPositiveDefinite { point: point_f64(&self.point) })?;
                if self.orientation < 0 {
                    e[3] = e[3].map(|v| -v);
                }
                Ok(Frame { e, positive: true })
            }
            FrameChoice::Supplied(e) => {
                let dev = gram_deviation(&g, &e);
                if !(dev <= 1e-8) {
                    return Err(GeometryError::NonOrthonormalBasis { deviation: dev });
                }
                let d = linalg::det_columns(&e);
                let positive = (d > T::zero()) == (self.orientation > 0);
                Ok(Frame { e, positive })
            }
        }
    }

    pub fn slate(&self, choice: FrameChoice<T>) -> Result<CurvatureSlate<T>, GeometryError> {
        let frame = self.frame(choice)?;
        let r = to_frame(&self.riemann_coordinates(), &frame.e);
        let r = if r.iter().flatten().flatten().flatten().all(|v| v.is_finite()) {
            r
        } else {
            return Err(GeometryError::NonFinite { what: "curvature", point: point_f64(&self.point) });
        };
        Ok(CurvatureSlate::from_components(self.point, frame, r))
    }

    /// `Δ_fun u = g^{ab}(∂_a∂_b u − Γ^c_ab ∂_c u)` at the point; `u` needs
    /// valid jet order 2.
    pub fn laplacian(&self, u: &Jet3<T>) -> T {
        let mut s = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                let gab = self.ginv[a][b].value();
                if gab == T::zero() {
                    continue;
                }
                let mut h = u.d2(a, b);
                for c in 0..4 {
                    h -= self.gamma[c][a][b].value() * u.d1(c);
                }
                s += gab * h;
            }
        }
        s
    }

    /// `⟨∇u, ∇v⟩ = g^{ab} ∂_a u ∂_b v`.
    pub fn gradient_inner(&self, u: &Jet3<T>, v: &Jet3<T>) -> T {
        let mut s = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                s += self.ginv[a][b].value() * u.d1(a) * v.d1(b);
            }
        }
        s
    }
}

/// Max |⟨e_a, e_b⟩ − δ_ab|.
pub(crate) fn gram_deviation<T: Real>(g: &Mat4<T>, e: &[Vec4<T>; 4]) -> f64 {
    let mut dev = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { T::one() } else { T::zero() };
            let v = (linalg::bilinear(g, &e[a], &e[b]) - want).abs().as_f64();
            dev = if v.is_nan() { f64::NAN } else { dev.max(v) };
        }
    }
    dev
}

/// Contracts every index of a covariant 4-tensor with the vectors `e[A]`.
pub(crate) fn to_frame<T: Real>(p: &Riemann<T>, e: &[Vec4<T>; 4]) -> Riemann<T> {
    let mut a = *p;
    for slot in 0..4 {
        let mut b = [[[[T::zero(); 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let idx = [i, j, k, l];
                        let mut s = T::zero();
                        for m in 0..4 {
                            let mut src = idx;
                            src[slot] = m;
                            s += e[idx[slot]][m] * a[src[0]][src[1]][src[2]][src[3]];
                        }
                        b[i][j][k][l] = s;
                    }
                }
            }
        }
        a = b;
    }
    a
}

/// Curvature at a point in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSlate<T> {
    pub point: [T; 4],
    pub frame: Frame<T>,
    /// `r[i][j][k][l] = R_ijkl = ⟨R(e_i,e_j)e_k, e_l⟩`.
    pub r: Riemann<T>,
    pub ric: Mat4<T>,
    pub scal: T,
}

impl<T: Real> CurvatureSlate<T> {
    pub fn from_components(point: [T; 4], frame: Frame<T>, r: Riemann<T>) -> Self {
        let ric: Mat4<T> =
            std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| r[k][i][k][j]).sum()));
        let scal = (0..4).map(|i| ric[i][i]).sum();
        Self { point, frame, r, ric, scal }
    }

    /// `R(x, y, z, w) = Σ R_ijkl x_i y_j z_k w_l` for frame-component vectors.
    pub fn eval(&self, x: &Vec4<T>, y: &Vec4<T>, z: &Vec4<T>, w: &Vec4<T>) -> T {
        let mut s = T::zero();
        for i in 0..4 {
            if x[i] == T::zero() {
                continue;
            }
            for j in 0..4 {
                if y[j] == T::zero() {
                    continue;
                }
                for k in 0..4 {
                    let xyz = x[i] * y[j] * z[k];
                    for l in 0..4 {
                        s += xyz * self.r[i][j][k][l] * w[l];
                    }
                }
            }
        }
        s
    }

    /// Sectional curvature of `span(u, v)` (frame components).
    pub fn sectional(&self, u: &Vec4<T>, v: &Vec4<T>) -> Result<T, GeometryError> {
        let uu = linalg::dot(u, u);
        let vv = linalg::dot(v, v);
        let uv = linalg::dot(u, v);
        let area = uu * vv - uv * uv;
        if !(area > T::epsilon().sqrt() * uu * vv) {
            return Err(GeometryError::DegeneratePlane);
        }
        Ok(self.eval(u, v, u, v) / area)
    }

    /// The slate expressed in the frame whose vectors have components `q[A]`
    /// in the current frame.
    pub fn rotated(&self, q: &[Vec4<T>; 4]) -> Self {
        let r = to_frame(&self.r, q);
        let e: [Vec4<T>; 4] = std::array::from_fn(|a| {
            std::array::from_fn(|i| (0..4).map(|b| q[a][b] * self.frame.e[b][i]).sum())
        });
        let positive = (linalg::det_columns(q) > T::zero()) == self.frame.positive;
        Self::from_components(self.point, Frame { e, positive }, r)
    }

    /// Max deviation from the pair symmetries.
    pub fn symmetry_defect(&self) -> T {
        let r = &self.r;
        let mut m = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let v = r[i][j][k][l];
                        m = m
                            .max((v + r[j][i][k][l]).abs())
                            .max((v + r[i][j][l][k]).abs())
                            .max((v - r[k][l][i][j]).abs());
                    }
                }
            }
        }
        m
    }

    /// Max |R_ijkl + R_iklj + R_iljk|.
    pub fn bianchi_defect(&self) -> T {
        let r = &self.r;
        let mut m = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        m = m.max((r[i][j][k][l] + r[i][k][l][j] + r[i][l][j][k]).abs());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.r.iter().flatten().flatten().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
