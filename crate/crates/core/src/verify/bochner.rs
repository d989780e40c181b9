use std::sync::Arc;

use super::{harmonic_gate, per_point, AnalyticScenario, PointOutcome, Residual, SampleRow, VerificationReport, VerifyError};
use crate::canonical::{canonicalize, curvature_term_k, AdaptedFrame, CurvatureTerm};
use crate::forms::{FormAtPoint, PulledBackForm};
use crate::geometry::{normal_map, CurvatureSlate, FrameChoice, LocalGeometry};
use crate::linalg::Vec4;

/// `−(dδ + δd)φ = Σ∇²_{e_i e_i}φ − C(φ)` with both sides from separate code
/// paths; no harmonicity needed.
pub fn verify_weitzenboeck(sc: &AnalyticScenario) -> Result<VerificationReport, VerifyError> {
    let tol = sc.tolerances.weitzenboeck;
    let out = per_point(&sc.points(), |p| {
        let geo = LocalGeometry::at(&sc.chart, p)?;
        let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
        let w = FormAtPoint::new(&geo, sc.form.as_ref())?.weitzenboeck(&slate);
        Ok(PointOutcome::Checked {
            row: SampleRow { point: p, ..Default::default() },
            residuals: vec![Residual { name: "weitzenboeck", abs: w.residual, scale: w.scale, tolerance: tol }],
        })
    })?;
    Ok(VerificationReport::collect("weitzenboeck", &sc.id, out))
}

/// Geometry and form pulled back to the normal chart at `p` built on `basis`.
struct NormalPicture {
    geo: LocalGeometry<f64>,
    form: PulledBackForm<f64>,
}

fn normal_picture(sc: &AnalyticScenario, p: [f64; 4], basis: &[Vec4<f64>; 4]) -> Result<NormalPicture, VerifyError> {
    let map = Arc::new(normal_map(&sc.chart, p, basis)?);
    let chart = map.chart(&sc.chart);
    let geo = LocalGeometry::at(&chart, [0.0; 4])?;
    let gamma = geo.christoffel().iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(gamma <= sc.tolerances.normal_gamma) {
        return Err(VerifyError::NormalChart { gamma, limit: sc.tolerances.normal_gamma, point: p });
    }
    Ok(NormalPicture { geo, form: PulledBackForm { base: sc.form.clone(), map } })
}

/// `Σ_a ∂_a² φ(E_k, E_l)` at the chart centre for the frame
/// `E_k = ∂_k + c^m_k |y|² ∂_m`, `c^m_k = −⅛ Σ_a ∂_aΓ^m_ak`, which is
/// orthonormal and parallel at the centre and has `Σ_a ∇_a∇_a E_k = 0` there.
/// Returns the value and the size of the frame correction.
fn frame_laplacian(at: &FormAtPoint<'_, f64>, k: usize, l: usize) -> (f64, f64) {
    let geo = at.geo;
    let c = |m: usize, k: usize| -0.125 * (0..4).map(|a| geo.gamma[m][a][k].d1(a)).sum::<f64>();
    let phi = at.value();
    let corr: f64 = (0..4).map(|m| c(m, k) * phi[m][l] + c(m, l) * phi[k][m]).sum::<f64>() * 8.0;
    (geo.laplacian(&at.phi[k][l]) + corr, corr.abs())
}

/// `Δφ_kl = Σ_p (Ric_kp φ_pl + Ric_lp φ_kp) − 2 Σ_{p,q} R_kplq φ_pq`, the
/// left side from the pulled-back form in a normal chart, the right side from
/// the curvature of the original chart in the same frame.
pub fn verify_component_bochner(sc: &AnalyticScenario) -> Result<VerificationReport, VerifyError> {
    let tol = sc.tolerances.component_bochner;
    let out = per_point(&sc.points(), |p| {
        let geo = LocalGeometry::at(&sc.chart, p)?;
        let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
        let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
        harmonic_gate(&at, &slate.frame, sc.tolerances.harmonic)?;
        let np = normal_picture(sc, p, &slate.frame.e)?;
        let nat = FormAtPoint::new(&np.geo, &np.form)?;
        // components in the full-sum convention are half the pairings
        let phi = at.in_frame(&slate.frame).to_skew().map(|r| r.map(|v| 0.5 * v));
        let r_max = slate.r.iter().flatten().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let natural = r_max * phi.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut residuals = Vec::with_capacity(6);
        for (k, l) in crate::forms::PAIRS {
            let (lap, _) = frame_laplacian(&nat, k, l);
            let lhs = 0.5 * lap;
            let mut ric = 0.0;
            let mut ric_size = 0.0;
            for q in 0..4 {
                let (a, b) = (slate.ric[k][q] * phi[q][l], slate.ric[l][q] * phi[k][q]);
                ric += a + b;
                ric_size += a.abs() + b.abs();
            }
            let mut rr = 0.0;
            let mut rr_size = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    let t = 2.0 * slate.r[k][a][l][b] * phi[a][b];
                    rr += t;
                    rr_size += t.abs();
                }
            }
            residuals.push(Residual::new("component_bochner", lhs, ric - rr, &[ric_size, rr_size, natural], tol));
        }
        Ok(PointOutcome::Checked { row: SampleRow { point: p, ..Default::default() }, residuals })
    })?;
    Ok(VerificationReport::collect("component_bochner", &sc.id, out))
}

/// Everything the `F`/`G` identities need at one point.
pub(super) struct FgPoint {
    pub(super) f: f64,
    pub(super) g: f64,
    pub(super) lap_f: f64,
    pub(super) lap_g: f64,
    pub(super) lap_fg: f64,
    pub(super) grad_fg: f64,
    pub(super) grad_f: f64,
    pub(super) grad_g: f64,
    pub(super) plus: f64,
    pub(super) minus: f64,
    pub(super) nabla2: f64,
    pub(super) dnorm2: Option<f64>,
    /// `max|R_ijkl| · |φ|²`, the size curvature terms have when nothing cancels.
    pub(super) curv_scale: f64,
    pub(super) term: CurvatureTerm<f64>,
    pub(super) adapted: AdaptedFrame<f64>,
}

pub(super) fn fg_point<'a>(at: &FormAtPoint<'a, f64>, slate: &CurvatureSlate<f64>, parallel: f64) -> FgPoint {
    let geo = at.geo;
    let (fj, gj) = at.f_g_jets();
    let nab = at.nabla_in_frame(&slate.frame);
    let plus = nab.iter().map(|v| (*v + v.star()).norm2()).sum();
    let minus = nab.iter().map(|v| (*v - v.star()).norm2()).sum();
    let phi = at.in_frame(&slate.frame);
    let adapted = canonicalize(&phi);
    let nabla2 = nab.iter().map(|v| v.norm2()).sum::<f64>();
    let dnorm2 = at.d_norm_norm2(1e-150).filter(|d| d.sqrt() > parallel);
    FgPoint {
        f: fj.value(),
        g: gj.value(),
        lap_f: geo.laplacian(&fj),
        lap_g: geo.laplacian(&gj),
        lap_fg: geo.laplacian(&(fj * gj)),
        grad_fg: geo.gradient_inner(&fj, &gj),
        grad_f: geo.gradient_inner(&fj, &fj).max(0.0).sqrt(),
        grad_g: geo.gradient_inner(&gj, &gj).max(0.0).sqrt(),
        plus,
        minus,
        nabla2,
        dnorm2,
        curv_scale: slate.max_abs() * at.norm2_jet().value().abs(),
        term: curvature_term_k(slate, &adapted),
        adapted,
    }
}

fn fg_row(p: [f64; 4], q: &FgPoint) -> SampleRow {
    SampleRow {
        point: p,
        rho: q.dnorm2.map(|d| q.nabla2 / d),
        k: Some(q.term.k),
        r1234: Some(q.term.r1234),
        f: Some(q.f),
        g: Some(q.g),
        degeneracy: Some(q.adapted.degeneracy.label()),
        ..Default::default()
    }
}

fn f_side(q: &FgPoint, tol: f64) -> Residual {
    let (k, r) = (q.term.k, q.term.r1234);
    Residual::new("laplacian_f", q.lap_f, q.plus + 4.0 * (k - r) * q.f, &[q.plus, 4.0 * k * q.f, 4.0 * r * q.f, q.curv_scale], tol)
}

fn g_side(q: &FgPoint, tol: f64) -> Residual {
    let (k, r) = (q.term.k, q.term.r1234);
    Residual::new("laplacian_g", q.lap_g, q.minus + 4.0 * (k + r) * q.g, &[q.minus, 4.0 * k * q.g, 4.0 * r * q.g, q.curv_scale], tol)
}

/// Fraction of the sampled maximum `|φ|` below which `d|φ|` counts as zero.
fn parallel_threshold(sc: &AnalyticScenario, points: &[[f64; 4]]) -> Result<f64, VerifyError> {
    Ok(sc.tolerances.parallel * super::max_norm(sc, points)?.max(1e-300))
}

/// `Δλ₁ = 2(Kλ₁ − R₁₂₃₄λ₂)`, `Δλ₂ = 2(Kλ₂ − R₁₂₃₄λ₁)` in the normal chart
/// built on the adapted basis, and
/// `ΔF = |∇φ₊|² + 4(K − R₁₂₃₄)F`, `ΔG = |∇φ₋|² + 4(K + R₁₂₃₄)G` with `F`, `G`
/// as functions on the original chart.
///
/// `K − R₁₂₃₄` depends only on the direction of `φ₊` (and `K + R₁₂₃₄` only on
/// `φ₋`), so both sides are checked at degenerate points too; the label is
/// kept in the sample rows.
pub fn verify_adapted_bochner(sc: &AnalyticScenario) -> Result<VerificationReport, VerifyError> {
    let tol = &sc.tolerances;
    let points = sc.points();
    let par = parallel_threshold(sc, &points)?;
    let out = per_point(&points, |p| {
        let geo = LocalGeometry::at(&sc.chart, p)?;
        let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
        let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
        harmonic_gate(&at, &slate.frame, tol.harmonic)?;
        let q = fg_point(&at, &slate, par);
        let mut residuals = vec![f_side(&q, tol.f_g), g_side(&q, tol.f_g)];

        // adapted basis in coordinates
        let e = &slate.frame.e;
        let basis: [Vec4<f64>; 4] = std::array::from_fn(|a| {
            std::array::from_fn(|i| (0..4).map(|b| q.adapted.basis[a][b] * e[b][i]).sum())
        });
        let np = normal_picture(sc, p, &basis)?;
        let nat = FormAtPoint::new(&np.geo, &np.form)?;
        let (k, r) = (q.term.k, q.term.r1234);
        let f1 = nat.phi[0][1].value();
        let f2 = nat.phi[2][3].value();
        let lam_scale = slate.max_abs() * (f1.abs() + f2.abs());
        let (l1, _) = frame_laplacian(&nat, 0, 1);
        let (l2, _) = frame_laplacian(&nat, 2, 3);
        residuals.push(Residual::new(
            "adapted_f1",
            l1,
            2.0 * (k * f1 - r * f2),
            &[2.0 * k * f1, 2.0 * r * f2, lam_scale],
            tol.adapted_frame,
        ));
        residuals.push(Residual::new(
            "adapted_f2",
            l2,
            2.0 * (k * f2 - r * f1),
            &[2.0 * k * f2, 2.0 * r * f1, lam_scale],
            tol.adapted_frame,
        ));
        Ok(PointOutcome::Checked { row: fg_row(p, &q), residuals })
    })?;
    let mut rep = VerificationReport::collect("adapted_bochner", &sc.id, out);
    let degenerate = rep.samples.iter().filter(|s| s.degeneracy.is_some_and(|d| d != "none")).count();
    rep.summary.insert("degenerate_points".into(), degenerate as f64);
    Ok(rep)
}

/// `Δ(FG) = 8KFG + G|∇φ₊|² + F|∇φ₋|² + 2⟨∇F, ∇G⟩`, plus the Schwarz
/// combination `G|∇φ₊|² + F|∇φ₋|² + 2⟨∇F,∇G⟩ ≥ 2|∇F||∇G| + 2⟨∇F,∇G⟩ ≥ 0`
/// at points where `|∇φ|² ≥ 2|d|φ||²`.
pub fn verify_fg_product(sc: &AnalyticScenario) -> Result<VerificationReport, VerifyError> {
    let tol = &sc.tolerances;
    let points = sc.points();
    let par = parallel_threshold(sc, &points)?;
    let per = per_point(&points, |p| {
        let geo = LocalGeometry::at(&sc.chart, p)?;
        let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
        let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
        harmonic_gate(&at, &slate.frame, tol.harmonic)?;
        let q = fg_point(&at, &slate, par);
        let k = q.term.k;
        let kfg = 8.0 * k * q.f * q.g;
        let gp = q.g * q.plus;
        let fm = q.f * q.minus;
        let cross = 2.0 * q.grad_fg;
        let main = Residual::new("laplacian_fg", q.lap_fg, kfg + gp + fm + cross, &[kfg, gp, fm, cross, q.curv_scale * q.curv_scale / slate.max_abs().max(1e-300)], tol.fg_product);
        // the product rule ties this residual to the two single ones
        let rf = f_side(&q, tol.f_g);
        let rg = g_side(&q, tol.f_g);
        let excess = (main.abs - q.g.abs() * rf.abs - q.f.abs() * rg.abs) / main.scale.max(super::RESIDUAL_FLOOR);
        // Schwarz combination. Its premise is the constant-2 Kato inequality for
        // φ₊ and φ₋ separately; with |φ₊|² = 2F that reads F|∇φ₊|² ≥ |∇F|².
        let premise = q.f * q.plus >= q.grad_f * q.grad_f && q.g * q.minus >= q.grad_g * q.grad_g;
        let schwarz = premise.then(|| {
            let lhs = gp + fm + cross;
            let mid = 2.0 * q.grad_f * q.grad_g + cross;
            let scale = gp.abs() + fm.abs() + cross.abs() + 1e-300;
            ((lhs - mid) / scale).min(mid / scale)
        });
        Ok((
            PointOutcome::Checked { row: fg_row(p, &q), residuals: vec![main] },
            excess,
            schwarz,
        ))
    })?;
    let mut excess_max = f64::NEG_INFINITY;
    let mut schwarz_min = f64::INFINITY;
    let mut schwarz_points = 0usize;
    let mut outcomes = Vec::with_capacity(per.len());
    for (o, e, s) in per {
        excess_max = excess_max.max(e);
        if let Some(s) = s {
            schwarz_points += 1;
            schwarz_min = schwarz_min.min(s);
        }
        outcomes.push(o);
    }
    let mut rep = VerificationReport::collect("fg_product", &sc.id, outcomes);
    rep.summary.insert("product_rule_excess".into(), excess_max);
    rep.summary.insert("schwarz_points".into(), schwarz_points as f64);
    if schwarz_points > 0 {
        rep.summary.insert("schwarz_min".into(), schwarz_min);
        if schwarz_min < -tol.schwarz {
            rep.fail(format!("Schwarz combination negative ({schwarz_min:e}) at a point where both rho(phi+) and rho(phi-) are >= 2"));
        }
    } else {
        rep.note("no point has rho >= 2 for both phi+ and phi-; Schwarz combination not exercised");
    }
    Ok(rep)
}

