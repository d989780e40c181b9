use std::sync::Arc;

use serde::Serialize;

use super::complex::{assemble, GridComplex};
use super::eigen::{harmonic_kernel_with, project, EigenSettings, HarmonicBasis};
use super::GridError;
use crate::expr::Expr;
use crate::forms::FormField;
use crate::geometry::{point_f64, GeometryError, JetPoint, MetricChart};
use crate::jet::Jet3;
use crate::verify::{verify_fg_product, AnalyticScenario, Tolerances, VerifyError};

/// A 2-cochain read as a 2-form sampled at the cell centres
/// `h·(v + ½(1,1,1,1))`. Derivatives come from centred differences, so every
/// quantity built from it is accurate to `O(h²)` and no better.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteField {
    pub n: usize,
    pub h: f64,
    /// Order of the truncation error of values and derivatives in `h`.
    pub accuracy_order: u32,
    /// Coordinate components at each cell centre, pair order.
    pub centers: Vec<[f64; 6]>,
    #[serde(skip)]
    cx: Arc<GridComplex>,
}

/// Interprets a 2-cochain (face integrals) as a sampled form.
pub fn discrete_field_export(cx: &Arc<GridComplex>, cochain: &[f64]) -> DiscreteField {
    let nv = cx.vertices();
    let h2 = cx.h * cx.h;
    let centers = (0..nv)
        .map(|v| {
            std::array::from_fn(|t| {
                let (k, l) = crate::forms::PAIRS[5 - t];
                // the four faces of this type around the centre
                let w1 = cx.shift(v, k, true);
                let w2 = cx.shift(v, l, true);
                let w3 = cx.shift(w1, l, true);
                let base = t * nv;
                0.25 * (cochain[base + v] + cochain[base + w1] + cochain[base + w2] + cochain[base + w3]) / h2
            })
        })
        .collect();
    DiscreteField { n: cx.n, h: cx.h, accuracy_order: 2, centers, cx: cx.clone() }
}

impl DiscreteField {
    /// Cell centres in vertex order.
    pub fn points(&self) -> Vec<[f64; 4]> {
        (0..self.centers.len())
            .map(|v| {
                let c = self.cx.coords(v);
                std::array::from_fn(|i| self.h * (c[i] as f64 + 0.5))
            })
            .collect()
    }

    fn cell(&self, p: [f64; 4]) -> Option<usize> {
        let mut c = [0usize; 4];
        for i in 0..4 {
            let s = p[i] / self.h - 0.5;
            let r = s.round();
            if (s - r).abs() > 1e-6 {
                return None;
            }
            c[i] = r.rem_euclid(self.n as f64) as usize;
        }
        Some(self.cx.vertex(c))
    }

    /// Value, centred first differences and second differences at cell `v`.
    fn taylor(&self, v: usize, t: usize) -> (f64, [f64; 4], [[f64; 4]; 4]) {
        let f = |w: usize| self.centers[w][t];
        let cx = &self.cx;
        let h = self.h;
        let f0 = f(v);
        let mut g = [0.0; 4];
        let mut hs = [[0.0; 4]; 4];
        for a in 0..4 {
            let (p, m) = (cx.shift(v, a, true), cx.shift(v, a, false));
            g[a] = (f(p) - f(m)) / (2.0 * h);
            hs[a][a] = (f(p) - 2.0 * f0 + f(m)) / (h * h);
            for b in 0..a {
                let pp = cx.shift(p, b, true);
                let pm = cx.shift(p, b, false);
                let mp = cx.shift(m, b, true);
                let mm = cx.shift(m, b, false);
                let v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
                hs[a][b] = v;
                hs[b][a] = v;
            }
        }
        (f0, g, hs)
    }
}

impl FormField<f64> for DiscreteField {
    /// Only defined at cell centres; the quadratic Taylor polynomial there is
    /// composed with the incoming coordinate jets.
    fn components(&self, x: &JetPoint<f64>) -> Result<[Jet3<f64>; 6], GeometryError> {
        let p = point_f64(&x.map(|c| c.value()));
        let v = self.cell(p).ok_or(GeometryError::InvalidParameter {
            what: format!("lattice field sampled off the cell centres at {p:?}"),
        })?;
        let dx: [Jet3<f64>; 4] = std::array::from_fn(|i| x[i] - p[i]);
        Ok(std::array::from_fn(|t| {
            let (f0, g, hs) = self.taylor(v, t);
            let mut out = Jet3::constant(f0);
            for a in 0..4 {
                out += dx[a] * g[a];
                for b in 0..4 {
                    out += dx[a] * dx[b] * (0.5 * hs[a][b]);
                }
            }
            out
        }))
    }
}

/// Scenario on the lattice points of `field`, with the analytic metric `g`
/// for the geometry and tolerances loosened to the discretization error
/// `C·h²`.
pub fn lattice_scenario(id: impl Into<String>, g: &[[Expr; 4]; 4], field: DiscreteField, c: f64) -> AnalyticScenario {
    let two_pi = 2.0 * std::f64::consts::PI;
    let chart = MetricChart::from_exprs("lattice_t4", [[0.0, two_pi]; 4], 1, g.clone());
    let h2 = field.h * field.h;
    let points = field.points();
    let mut sc = AnalyticScenario::new(id, chart, Arc::new(field));
    sc.fixed_points = Some(Arc::new(points));
    let t = &mut sc.tolerances;
    let loose = c * h2;
    *t = Tolerances {
        harmonic: loose,
        component_bochner: loose,
        adapted_frame: loose,
        f_g: loose,
        fg_product: loose,
        bochner_norm: loose,
        kato_refined: loose,
        kato_classical: loose,
        schwarz: loose,
        ..*t
    };
    sc
}

/// A discrete harmonic representative together with everything it came from.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    pub complex: Arc<GridComplex>,
    pub basis: HarmonicBasis,
    /// Coordinate components of the constant form whose class is represented.
    pub class: [f64; 6],
    pub cochain: Vec<f64>,
    pub scenario: AnalyticScenario,
}

/// Assembles, extracts the kernel (expecting dimension 6) and projects the
/// constant form `class` onto it; `c` scales the lattice tolerances.
pub fn harmonic_field(
    id: &str,
    g: &[[Expr; 4]; 4],
    n: usize,
    class: [f64; 6],
    c: f64,
    settings: &EigenSettings,
) -> Result<HarmonicField, GridError> {
    let cx = Arc::new(assemble(g, n)?);
    let basis = harmonic_kernel_with(&cx, Some(6), settings)?;
    let cochain = project(&cx, &basis, &cx.constant_cochain(class));
    let scenario = lattice_scenario(format!("{id}@n={n}"), g, discrete_field_export(&cx, &cochain), c);
    Ok(HarmonicField { complex: cx, basis, class, cochain, scenario })
}

/// Lattice norms of the pointwise residual of the `Δ(FG)` identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteResidual {
    pub n: usize,
    pub h: f64,
    pub points: usize,
    /// Root mean square over the lattice (the discrete `L²` norm up to volume).
    pub rms: f64,
    pub max_abs: f64,
    pub max_relative: f64,
}

pub fn discrete_fg_residual(field: &HarmonicField) -> Result<DiscreteResidual, VerifyError> {
    let r = verify_fg_product(&field.scenario)?;
    let m = r.samples.len().max(1) as f64;
    Ok(DiscreteResidual {
        n: field.complex.n,
        h: field.complex.h,
        points: r.samples.len(),
        rms: (r.samples.iter().map(|s| s.abs_residual * s.abs_residual).sum::<f64>() / m).sqrt(),
        max_abs: r.max_abs_residual,
        max_relative: r.max_rel_residual,
    })
}
