use super::{FormField, TwoFormPoint, PAIRS};
use crate::geometry::{point_f64, CurvatureSlate, Frame, GeometryError, LocalGeometry};
use crate::jet::Jet3;
use crate::linalg::Mat4;
use crate::scalar::Real;

/// Full antisymmetric coordinate components `φ(∂_i, ∂_j)` as jets.
pub type FormJets<T> = [[Jet3<T>; 4]; 4];
/// Full antisymmetric 3-form components `ψ(∂_i, ∂_j, ∂_k)`.
pub type ThreeFormJets<T> = [[[Jet3<T>; 4]; 4]; 4];

pub fn d0<T: Real>(u: &Jet3<T>) -> [Jet3<T>; 4] {
    std::array::from_fn(|i| u.partial(i))
}

/// `(dα)_ij = ∂_i α_j − ∂_j α_i`.
pub fn d1<T: Real>(a: &[Jet3<T>; 4]) -> FormJets<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j].partial(i) - a[i].partial(j)))
}

/// `(dφ)_ijk = ∂_i φ_jk + ∂_j φ_ki + ∂_k φ_ij`.
pub fn d2<T: Real>(phi: &FormJets<T>) -> ThreeFormJets<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                phi[j][k].partial(i) + phi[k][i].partial(j) + phi[i][j].partial(k)
            })
        })
    })
}

fn values<T: Real>(m: &FormJets<T>) -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()))
}

/// Covariant 2-tensor in the frame: `T_AB = e_A^i e_B^j T_ij`.
fn tensor_to_frame<T: Real>(m: &Mat4<T>, frame: &Frame<T>) -> TwoFormPoint<T> {
    let e = &frame.e;
    TwoFormPoint {
        f: PAIRS.map(|(a, b)| {
            let mut s = T::zero();
            for i in 0..4 {
                for j in 0..4 {
                    s += e[a][i] * e[b][j] * m[i][j];
                }
            }
            s
        }),
    }
}

/// A 2-form field evaluated as jets around one point.
#[derive(Debug, Clone)]
pub struct FormAtPoint<'a, T: Real> {
    pub geo: &'a LocalGeometry<T>,
    pub phi: FormJets<T>,
    /// `nabla[k][i][j] = (∇_k φ)_ij`, valid to jet order 2.
    pub nabla: [FormJets<T>; 4],
}

impl<'a, T: Real> FormAtPoint<'a, T> {
    pub fn new(geo: &'a LocalGeometry<T>, field: &dyn FormField<T>) -> Result<Self, GeometryError> {
        let x = Jet3::lift_point(&geo.point);
        let c = field.components(&x)?;
        if !c.iter().all(Jet3::is_finite) {
            return Err(GeometryError::NonFinite { what: "form components", point: point_f64(&geo.point) });
        }
        let mut phi = [[Jet3::zero(); 4]; 4];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            phi[i][j] = c[k];
            phi[j][i] = -c[k];
        }
        Ok(Self::from_jets(geo, phi))
    }

    pub fn from_jets(geo: &'a LocalGeometry<T>, phi: FormJets<T>) -> Self {
        let gm = &geo.gamma;
        let nabla = std::array::from_fn(|k| {
            let mut n = [[Jet3::zero(); 4]; 4];
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let mut v = phi[i][j].partial(k);
                    for l in 0..4 {
                        v -= gm[l][k][i] * phi[l][j] + gm[l][k][j] * phi[i][l];
                    }
                    n[i][j] = v;
                    n[j][i] = -v;
                }
            }
            n
        });
        Self { geo, phi, nabla }
    }

    pub fn value(&self) -> Mat4<T> {
        values(&self.phi)
    }

    /// Components in an orthonormal frame.
    pub fn in_frame(&self, frame: &Frame<T>) -> TwoFormPoint<T> {
        tensor_to_frame(&self.value(), frame)
    }

    /// `∇_{e_K} φ` in the frame, one 2-form per `K`.
    pub fn nabla_in_frame(&self, frame: &Frame<T>) -> [TwoFormPoint<T>; 4] {
        std::array::from_fn(|kk| {
            let m: Mat4<T> = std::array::from_fn(|i| {
                std::array::from_fn(|j| (0..4).map(|a| frame.e[kk][a] * self.nabla[a][i][j].value()).sum())
            });
            tensor_to_frame(&m, frame)
        })
    }

    /// `|∇φ|²`.
    pub fn nabla_norm2(&self, frame: &Frame<T>) -> T {
        self.nabla_in_frame(frame).iter().map(|v| v.norm2()).sum()
    }

    /// `|φ|²` as a jet.
    pub fn norm2_jet(&self) -> Jet3<T> {
        let gi = &self.geo.ginv;
        // n = g⁻¹ φ g⁻¹
        let m: FormJets<T> = std::array::from_fn(|i| {
            std::array::from_fn(|l| (0..4).map(|k| gi[i][k] * self.phi[k][l]).sum())
        });
        let mut s = Jet3::zero();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let n: Jet3<T> = (0..4).map(|l| m[i][l] * gi[l][j]).sum();
                s += n * self.phi[i][j];
            }
        }
        s * T::lit(0.5)
    }

    /// `∗(φ∧φ)` as a jet.
    pub fn wedge_square_jet(&self) -> Jet3<T> {
        let p = &self.phi;
        let w = p[0][1] * p[2][3] - p[0][2] * p[1][3] + p[0][3] * p[1][2];
        let o = T::lit(2.0 * self.geo.orientation as f64);
        // sqrt det g is bounded away from zero by the positivity check
        w.checked_div(&self.geo.sqrt_det).expect("positive volume") * o
    }

    /// `(F, G)` as jets.
    pub fn f_g_jets(&self) -> (Jet3<T>, Jet3<T>) {
        let n = self.norm2_jet();
        let w = self.wedge_square_jet();
        (n + w, n - w)
    }

    /// `|d|φ||² = |d|φ|²|² / (4|φ|²)`; `None` where `|φ|² ≤ threshold²`.
    pub fn d_norm_norm2(&self, threshold: T) -> Option<T> {
        let n = self.norm2_jet();
        if !(n.value() > threshold * threshold) {
            return None;
        }
        Some(self.geo.gradient_inner(&n, &n) / (T::lit(4.0) * n.value()))
    }

    /// `(δφ)_j = −g^{ki} (∇_k φ)_ij`.
    pub fn codifferential(&self) -> [Jet3<T>; 4] {
        let gi = &self.geo.ginv;
        std::array::from_fn(|j| {
            let mut s = Jet3::zero();
            for k in 0..4 {
                for i in 0..4 {
                    s -= gi[k][i] * self.nabla[k][i][j];
                }
            }
            s
        })
    }

    pub fn exterior(&self) -> ThreeFormJets<T> {
        d2(&self.phi)
    }

    /// `(dδ + δd) φ` in coordinates (point values).
    pub fn hodge_laplacian(&self) -> Mat4<T> {
        let dd = values(&d1(&self.codifferential()));
        let psi = self.exterior();
        let gm = self.geo.christoffel();
        let gi = self.geo.metric_inverse();
        let pv: [[[T; 4]; 4]; 4] =
            std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| psi[a][b][c].value())));
        let mut out = dd;
        for i in 0..4 {
            for j in (i + 1)..4 {
                // (δψ)_ij = −g^{kl} (∇_k ψ)_lij
                let mut s = T::zero();
                for k in 0..4 {
                    for l in 0..4 {
                        let gkl = gi[k][l];
                        if gkl == T::zero() {
                            continue;
                        }
                        let mut v = psi[l][i][j].d1(k);
                        for m in 0..4 {
                            v -= gm[m][k][l] * pv[m][i][j]
                                + gm[m][k][i] * pv[l][m][j]
                                + gm[m][k][j] * pv[l][i][m];
                        }
                        s -= gkl * v;
                    }
                }
                out[i][j] += s;
                out[j][i] = -out[i][j];
            }
        }
        out
    }

    /// `Σ_a ∇²_{e_a e_a} φ` in coordinates (point values).
    pub fn rough_laplacian(&self) -> Mat4<T> {
        let gm = self.geo.christoffel();
        let gi = self.geo.metric_inverse();
        let nv: [Mat4<T>; 4] = std::array::from_fn(|k| values(&self.nabla[k]));
        let mut out = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let mut s = T::zero();
                for a in 0..4 {
                    for b in 0..4 {
                        let gab = gi[a][b];
                        if gab == T::zero() {
                            continue;
                        }
                        let mut v = self.nabla[b][i][j].d1(a);
                        for c in 0..4 {
                            v -= gm[c][a][b] * nv[c][i][j]
                                + gm[c][a][i] * nv[b][c][j]
                                + gm[c][a][j] * nv[b][i][c];
                        }
                        s += gab * v;
                    }
                }
                out[i][j] = s;
                out[j][i] = -s;
            }
        }
        out
    }

    /// Both sides of `−(dδ + δd)φ = Σ∇²_{e_i e_i}φ − C(φ)` in the slate frame.
    pub fn weitzenboeck(&self, slate: &CurvatureSlate<T>) -> WeitzenboeckTerms<T> {
        let frame = &slate.frame;
        let hodge = tensor_to_frame(&self.hodge_laplacian(), frame);
        let rough = tensor_to_frame(&self.rough_laplacian(), frame);
        let action = curvature_action(slate, &self.in_frame(frame));
        let residual = (-hodge - rough + action).max_abs();
        let scale = hodge.max_abs().max(rough.max_abs()).max(action.max_abs());
        WeitzenboeckTerms { hodge, rough, action, residual, scale }
    }
}

/// Terms of the Weitzenböck identity at one point, in an orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeitzenboeckTerms<T> {
    /// `(dδ + δd)φ`.
    pub hodge: TwoFormPoint<T>,
    /// `Σ ∇²_{e_i e_i} φ`.
    pub rough: TwoFormPoint<T>,
    /// Curvature action `C(φ) = Σ ω^i ∧ i(e_j) R(e_i, e_j) φ`.
    pub action: TwoFormPoint<T>,
    pub residual: T,
    pub scale: T,
}

impl<T: Real> WeitzenboeckTerms<T> {
    pub fn relative(&self) -> T {
        self.residual / self.scale.max(T::lit(1e-12))
    }
}

/// `C(φ)` from the frame curvature; equals `p(n−p) φ = 4φ` on the unit 4-sphere.
pub fn curvature_action<T: Real>(slate: &CurvatureSlate<T>, phi: &TwoFormPoint<T>) -> TwoFormPoint<T> {
    let r = &slate.r;
    let p = phi.to_skew();
    // s[i][j][c][d] = ⟨R_std(e_i, e_j) e_c, e_d⟩ = −R_ijcd
    let s = |i: usize, j: usize, c: usize, d: usize| -r[i][j][c][d];
    // (ψ_ij)_cd = Σ_m S_ijcm φ_md + S_ijdm φ_cm
    let psi = |i: usize, j: usize, c: usize, d: usize| -> T {
        (0..4).map(|m| s(i, j, c, m) * p[m][d] + s(i, j, d, m) * p[c][m]).sum()
    };
    TwoFormPoint {
        f: PAIRS.map(|(c, d)| (0..4).map(|j| psi(c, j, j, d) - psi(d, j, j, c)).sum()),
    }
}
