//! Pointwise residual checks of the Bochner identities for harmonic 2-forms
//! and of the Kato / conformal-change chain, on analytic (chart, form) pairs.
//!
//! Every verifier is a pure function of the scenario and a sample point; the
//! point loop runs in parallel and results are merged in sample order.

mod bochner;
mod integral;
mod kato;
mod report;

pub use bochner::{verify_adapted_bochner, verify_component_bochner, verify_fg_product, verify_weitzenboeck};
pub use integral::{gauss_legendre, integral_identity_check, integral_identity_lattice, IntegralReport};
pub use kato::{
    conformal_by_norm, kato_scan, ksweep, verify_conformal_chain, HalfLogNorm, HistogramBin, KatoSample, KatoScan,
    KsweepReport, KsweepRow,
};
pub use report::{
    Conventions, Exclusion, PointOutcome, Residual, ResidualStats, SampleRow, VerificationReport,
    CONVENTIONS_VERSION, RESIDUAL_FLOOR,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::halton_points;
use crate::forms::{FormAtPoint, FormField, TwoFormPoint};
use crate::geometry::{Frame, GeometryError, MetricChart};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("form is not harmonic at {point:?}: |Δφ| = {measured:e} exceeds the gate {gate:e}")]
    NotHarmonic { measured: f64, gate: f64, point: [f64; 4] },
    #[error("normal chart at {point:?} has |Γ'(p)| = {gamma:e} above {limit:e}")]
    NormalChart { gamma: f64, limit: f64, point: [f64; 4] },
    #[error("|φ|^{k} is not representable at {point:?}")]
    Underflow { k: f64, point: [f64; 4] },
    #[error("empty scan: {0}")]
    EmptyScan(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Low-discrepancy sampling of a chart box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub count: usize,
    /// Fraction of each coordinate interval cut off at both ends.
    pub margin: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { count: 30, margin: 0.05, seed: 1 }
    }
}

impl Sampling {
    pub fn points(&self, chart: &MetricChart<f64>) -> Vec<[f64; 4]> {
        halton_points(&chart.sampling_box(self.margin), self.count, self.seed)
    }
}

/// Pass thresholds (relative residuals unless noted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub weitzenboeck: f64,
    /// Component form of the Bochner formula in a normal chart.
    pub component_bochner: f64,
    /// Laplacians of `λ₁, λ₂` in the adapted normal chart.
    pub adapted_frame: f64,
    /// Laplacians of `F` and `G`.
    pub f_g: f64,
    /// Laplacian of `FG`.
    pub fg_product: f64,
    /// `2(−Δf − |df|²)|φ|²` against `|φ|` and `d|φ|` for `e^{2f} = |φ|^k`.
    pub log_factor: f64,
    /// `½Δ|φ|² − ⟨φ, Δφ⟩ = |∇φ|² + ⟨C(φ), φ⟩`, in `g` and in `g'`.
    pub bochner_norm: f64,
    /// Conformal change of the function Laplacian on `|φ|^{2−2k}`.
    pub conformal_laplacian: f64,
    /// `|∇φ|² + (3k²/2 − 3k)|d|φ||² = |φ|^{3k}|∇'φ|'²`.
    pub refined_kato: f64,
    /// Absolute slack on `ρ ≥ 1`.
    pub kato_classical: f64,
    /// Absolute slack on `ρ ≥ 3/2`.
    pub kato_refined: f64,
    /// Slack on the Schwarz combination, relative to its terms.
    pub schwarz: f64,
    /// `|Δφ| < harmonic · (|∇φ| + |φ|)`.
    pub harmonic: f64,
    /// Largest `|Γ'|` accepted at the centre of a normal chart.
    pub normal_gamma: f64,
    /// Points with `|φ|` below this fraction of the sampled maximum are excluded.
    pub zero_norm: f64,
    /// Points with `|d|φ||` below this fraction of the sampled maximum `|φ|`
    /// carry no Kato ratio.
    pub parallel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            weitzenboeck: 1e-7,
            component_bochner: 1e-7,
            adapted_frame: 1e-6,
            f_g: 1e-6,
            fg_product: 1e-6,
            log_factor: 1e-6,
            bochner_norm: 1e-6,
            conformal_laplacian: 1e-6,
            refined_kato: 1e-5,
            kato_classical: 1e-9,
            kato_refined: 1e-6,
            schwarz: 1e-9,
            harmonic: 1e-7,
            normal_gamma: 1e-9,
            zero_norm: 1e-8,
            parallel: 1e-7,
        }
    }
}

/// A chart with a 2-form field on it.
#[derive(Debug, Clone)]
pub struct AnalyticScenario {
    pub id: String,
    pub chart: MetricChart<f64>,
    pub form: Arc<dyn FormField<f64>>,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    /// Evaluation points used instead of `sampling` (lattice data).
    pub fixed_points: Option<Arc<Vec<[f64; 4]>>>,
}

impl AnalyticScenario {
    pub fn new(id: impl Into<String>, chart: MetricChart<f64>, form: Arc<dyn FormField<f64>>) -> Self {
        Self {
            id: id.into(),
            chart,
            form,
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            fixed_points: None,
        }
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.sampling.count = count;
        self
    }

    pub fn points(&self) -> Vec<[f64; 4]> {
        match &self.fixed_points {
            Some(p) => p.as_ref().clone(),
            None => self.sampling.points(&self.chart),
        }
    }
}

/// Runs `f` at every sample point in parallel, keeping sample order; the first
/// error in sample order wins.
pub(crate) fn per_point<R, F>(points: &[[f64; 4]], f: F) -> Result<Vec<R>, VerifyError>
where
    R: Send,
    F: Fn([f64; 4]) -> Result<R, VerifyError> + Sync,
{
    points.par_iter().map(|p| f(*p)).collect::<Vec<_>>().into_iter().collect()
}

/// `(dδ + δd)φ` in the frame, measured against the harmonicity gate.
pub(crate) fn harmonic_gate(at: &FormAtPoint<'_, f64>, frame: &Frame<f64>, tol: f64) -> Result<(), VerifyError> {
    let hodge = TwoFormPoint::from_skew(&at.hodge_laplacian());
    // frame components of a coordinate tensor
    let h = rotate_to_frame(&hodge, frame).max_abs();
    let scale = at.nabla_norm2(frame).sqrt() + at.in_frame(frame).norm2().sqrt();
    let gate = tol * scale.max(RESIDUAL_FLOOR);
    if h.is_nan() || h > gate {
        return Err(VerifyError::NotHarmonic { measured: h, gate, point: at.geo.point });
    }
    Ok(())
}

fn rotate_to_frame(coord: &TwoFormPoint<f64>, frame: &Frame<f64>) -> TwoFormPoint<f64> {
    let m = coord.to_skew();
    TwoFormPoint::new(crate::forms::PAIRS.map(|(a, b)| {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += frame.e[a][i] * frame.e[b][j] * m[i][j];
            }
        }
        s
    }))
}

/// Largest `|φ|` over the sample, for relative thresholds.
pub(crate) fn max_norm(sc: &AnalyticScenario, points: &[[f64; 4]]) -> Result<f64, VerifyError> {
    let norms = per_point(points, |p| {
        let geo = crate::geometry::LocalGeometry::at(&sc.chart, p)?;
        let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
        Ok(at.norm2_jet().value().max(0.0).sqrt())
    })?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}
