use serde::Serialize;

use super::bochner::fg_point;
use super::{harmonic_gate, max_norm, per_point, AnalyticScenario, VerifyError};
use crate::forms::FormAtPoint;
use crate::geometry::{FrameChoice, LocalGeometry};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(z) and P_n'(z) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Integrals behind the vanishing argument on a closed manifold:
/// `∫Δ(FG) = ∫8KFG + ∫(G|∇φ₊|² + F|∇φ₋|² + 2⟨∇F,∇G⟩)` and `∫Δ(FG) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport {
    pub scenario: String,
    /// `"quadrature"` (analytic chart) or `"grid"` (lattice export).
    pub mode: String,
    /// Nodes per axis, or lattice points per axis.
    pub resolution: usize,
    pub h: Option<f64>,
    pub volume: f64,
    /// `∫Δ(FG) dv`.
    pub laplacian: f64,
    /// `∫8KFG dv`.
    pub curvature: f64,
    /// `∫(G|∇φ₊|² + F|∇φ₋|² + 2⟨∇F,∇G⟩) dv`.
    pub remainder: f64,
    /// `|∫Δ(FG) − ∫8KFG − ∫remainder|`.
    pub decomposition_defect: f64,
    /// `∫` of the absolute values of the terms; the yardstick for the above.
    pub scale: f64,
    pub min_f: f64,
    pub min_g: f64,
    /// Change of `∫Δ(FG)` against the half resolution.
    pub refinement_change: Option<f64>,
    /// `|∫Δ(FG)| / h²` on grids.
    pub constant: Option<f64>,
    pub passed: bool,
    pub notes: Vec<String>,
}

struct Sums {
    vol: f64,
    lap: f64,
    curv: f64,
    rem: f64,
    scale: f64,
    min_f: f64,
    min_g: f64,
}

fn quadrature(sc: &AnalyticScenario, n: usize) -> Result<Sums, VerifyError> {
    let (pts, wts) = gauss_grid(sc, n);
    sums(sc, &pts, &wts)
}

fn gauss_grid(sc: &AnalyticScenario, n: usize) -> (Vec<[f64; 4]>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let dom = sc.chart.domain;
    let mut nodes = Vec::with_capacity(n.pow(4));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let idx = [a, b, c, d];
                    let p: [f64; 4] = std::array::from_fn(|i| {
                        let [lo, hi] = dom[i];
                        0.5 * (lo + hi) + 0.5 * (hi - lo) * x[idx[i]]
                    });
                    let wt: f64 = (0..4).map(|i| 0.5 * (dom[i][1] - dom[i][0]) * w[idx[i]]).product();
                    nodes.push((p, wt));
                }
            }
        }
    }
    nodes.into_iter().unzip()
}

fn sums(sc: &AnalyticScenario, pts: &[[f64; 4]], wts: &[f64]) -> Result<Sums, VerifyError> {
    let par = sc.tolerances.parallel * max_norm(sc, pts)?;
    let vals = per_point(pts, |p| {
        let geo = LocalGeometry::at(&sc.chart, p)?;
        let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
        let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
        harmonic_gate(&at, &slate.frame, sc.tolerances.harmonic)?;
        let q = fg_point(&at, &slate, par);
        let curv = 8.0 * q.term.k * q.f * q.g;
        let rem = q.g * q.plus + q.f * q.minus + 2.0 * q.grad_fg;
        let size = q.lap_fg.abs() + curv.abs() + (q.g * q.plus).abs() + (q.f * q.minus).abs() + 2.0 * q.grad_fg.abs()
            // |φ|² = (F + G)/2; keeps the yardstick honest when every term vanishes
            + q.curv_scale * 0.5 * (q.f + q.g);
        Ok([geo.sqrt_det.value(), q.lap_fg, curv, rem, size, q.f, q.g])
    })?;
    let mut s = Sums { vol: 0.0, lap: 0.0, curv: 0.0, rem: 0.0, scale: 0.0, min_f: f64::INFINITY, min_g: f64::INFINITY };
    for (wt, v) in wts.iter().zip(vals) {
        let dv = wt * v[0];
        s.vol += dv;
        s.lap += dv * v[1];
        s.curv += dv * v[2];
        s.rem += dv * v[3];
        s.scale += dv * v[4];
        s.min_f = s.min_f.min(v[5]);
        s.min_g = s.min_g.min(v[6]);
    }
    Ok(s)
}

/// Tensor Gauss–Legendre quadrature over the whole chart box with `nodes`
/// points per axis (and again with half as many, to expose slow convergence
/// near the chart boundary). Meaningful when the chart covers a closed
/// manifold up to a null set.
pub fn integral_identity_check(sc: &AnalyticScenario, nodes: usize) -> Result<IntegralReport, VerifyError> {
    if nodes < 2 {
        return Err(VerifyError::Invalid("need at least two quadrature nodes per axis".into()));
    }
    let fine = quadrature(sc, nodes)?;
    let coarse = quadrature(sc, nodes / 2)?;
    let defect = (fine.lap - fine.curv - fine.rem).abs();
    let scale = fine.scale.max(super::RESIDUAL_FLOOR);
    let change = (fine.lap - coarse.lap).abs();
    let mut notes = Vec::new();
    // the pointwise identity must integrate exactly; the Green formula only
    // up to quadrature error, which the refinement change estimates
    let identity_ok = defect <= 1e-8 * scale;
    let green_ok = fine.lap.abs() <= 1e-6 * scale + 10.0 * change;
    if !green_ok {
        notes.push(format!(
            "integral of the Laplacian {:e} not explained by quadrature error {:e}",
            fine.lap, change
        ));
    }
    if fine.curv.abs() <= 1e-12 * scale && fine.min_f > 0.0 && fine.min_g > 0.0 {
        notes.push("integral of 8KFG vanishes while F, G > 0: no contradiction, both b2+ and b2- may be positive".into());
    } else if fine.curv > 0.0 && fine.rem >= 0.0 {
        notes.push("integral of 8KFG is positive with nonnegative remainder: the Green formula forces FG = 0".into());
    }
    Ok(IntegralReport {
        scenario: sc.id.clone(),
        mode: "quadrature".into(),
        resolution: nodes,
        h: None,
        volume: fine.vol,
        laplacian: fine.lap,
        curvature: fine.curv,
        remainder: fine.rem,
        decomposition_defect: defect,
        scale: fine.scale,
        min_f: fine.min_f,
        min_g: fine.min_g,
        refinement_change: Some(change),
        constant: None,
        passed: identity_ok && green_ok,
        notes,
    })
}

/// Lattice version: the rectangle rule over the scenario's fixed points (cell
/// centres with spacing `h`). The pointwise identity holds only to the
/// discretization error, so both the Green integral and the decomposition
/// defect are held to `c·h²·scale`, and `C = max(|∫Δ(FG)|, defect)/(h²·scale)`
/// is reported.
pub fn integral_identity_lattice(sc: &AnalyticScenario, h: f64, c: f64) -> Result<IntegralReport, VerifyError> {
    let pts = sc.points();
    let wts = vec![h.powi(4); pts.len()];
    let s = sums(sc, &pts, &wts)?;
    let defect = (s.lap - s.curv - s.rem).abs();
    let scale = s.scale.max(super::RESIDUAL_FLOOR);
    let constant = s.lap.abs().max(defect) / (h * h * scale);
    let mut notes = Vec::new();
    if s.curv > 0.0 && s.rem >= 0.0 {
        notes.push("integral of 8KFG is positive with nonnegative remainder: the Green formula forces FG = 0".into());
    }
    Ok(IntegralReport {
        scenario: sc.id.clone(),
        mode: "grid".into(),
        resolution: pts.len(),
        h: Some(h),
        volume: s.vol,
        laplacian: s.lap,
        curvature: s.curv,
        remainder: s.rem,
        decomposition_defect: defect,
        scale: s.scale,
        min_f: s.min_f,
        min_g: s.min_g,
        refinement_change: None,
        constant: Some(constant),
        passed: constant <= c,
        notes,
    })
}
