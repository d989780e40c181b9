use std::sync::Arc;

use serde::Serialize;

use super::{
    harmonic_gate, max_norm, per_point, AnalyticScenario, Exclusion, PointOutcome, Residual, SampleRow,
    VerificationReport, VerifyError,
};
use crate::forms::{curvature_action, FormAtPoint, FormField, TwoFormPoint, PAIRS};
use crate::geometry::{
    point_f64, FrameChoice, GeometryError, JetPoint, LocalGeometry, MetricChart, MetricField, ScalarField,
};
use crate::jet::{Jet3, JetError};
use crate::linalg::invert_generic;
use crate::scalar::Real;

/// `f = (k/2) log|φ|`, i.e. `e^{2f} = |φ|^k`, with `|φ|` taken in `metric`.
#[derive(Debug, Clone)]
pub struct HalfLogNorm<T: Real> {
    pub metric: Arc<dyn MetricField<T>>,
    pub form: Arc<dyn FormField<T>>,
    pub k: T,
}

impl<T: Real> ScalarField<T> for HalfLogNorm<T> {
    fn value(&self, x: &JetPoint<T>) -> Result<Jet3<T>, GeometryError> {
        let at = std::array::from_fn(|i| x[i].value());
        let err = |context, source| GeometryError::Jet { context, source, point: point_f64(&at) };
        let g = self.metric.metric(x)?;
        let (gi, _) = invert_generic::<T, Jet3<T>>(&g).map_err(|e| err("inverse metric", e))?;
        let c = self.form.components(x)?;
        let mut phi = [[Jet3::zero(); 4]; 4];
        for (n, &(i, j)) in PAIRS.iter().enumerate() {
            phi[i][j] = c[n];
            phi[j][i] = -c[n];
        }
        // |φ|² = ½ g^{ik} g^{jl} φ_ij φ_kl
        let mut s = Jet3::zero();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let mut t = Jet3::zero();
                for k in 0..4 {
                    for l in 0..4 {
                        if k != l {
                            t += gi[j][l] * phi[k][l] * gi[i][k];
                        }
                    }
                }
                s += t * phi[i][j];
            }
        }
        let s = s * T::lit(0.5);
        Ok(s.ln().map_err(|e| err("log of |φ|²", e))? * (self.k * T::lit(0.25)))
    }
}

/// One point of a Kato scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatoSample {
    pub point: [f64; 4],
    /// `|∇φ|²`.
    pub nabla2: f64,
    /// `|d|φ||²`.
    pub dnorm2: f64,
    /// `|∇φ|² / |d|φ||²`.
    pub rho: f64,
    /// Conformal exponent, when the sample belongs to a sweep.
    pub k: Option<f64>,
    /// `e^{2f} = |φ|^k` at the point.
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

const BIN_EDGES: [f64; 11] = [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0, f64::INFINITY];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KatoScan {
    pub scenario: String,
    pub sampled: usize,
    pub excluded: Vec<Exclusion>,
    pub min_rho: Option<f64>,
    /// `ρ ≥ 1` (up to slack) at every valid point.
    pub classical_holds: bool,
    /// `ρ ≥ 3/2` (up to slack) at every valid point; a failure means a bug.
    pub refined_holds: bool,
    /// Share of valid points with `ρ < 2`. Reported, never asserted.
    pub fraction_below_two: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    pub status: String,
    pub samples: Vec<KatoSample>,
}

impl KatoScan {
    pub fn passed(&self) -> bool {
        self.classical_holds && self.refined_holds
    }
}

struct KatoPoint {
    nabla2: f64,
    dnorm2: Option<f64>,
}

enum Screen<T> {
    Keep(T),
    Drop(Exclusion),
}

/// `|∇φ|²`, `|d|φ||²` and the harmonicity gate at one point.
fn kato_point(sc: &AnalyticScenario, p: [f64; 4], zero: f64, parallel: f64) -> Result<Screen<KatoPoint>, VerifyError> {
    let geo = LocalGeometry::at(&sc.chart, p)?;
    let fr = geo.frame(FrameChoice::CoordinateGramSchmidt)?;
    let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
    harmonic_gate(&at, &fr, sc.tolerances.harmonic)?;
    let Some(d) = at.d_norm_norm2(zero) else {
        return Ok(Screen::Drop(Exclusion { point: p, reason: "zero-norm".into() }));
    };
    let nabla2 = at.nabla_norm2(&fr);
    Ok(Screen::Keep(KatoPoint { nabla2, dnorm2: (d.sqrt() > parallel).then_some(d) }))
}

/// Ratio `ρ = |∇φ|²/|d|φ||²` over the sample; points where `φ` or `d|φ|`
/// vanishes carry no ratio and are listed as excluded.
pub fn kato_scan(sc: &AnalyticScenario) -> Result<KatoScan, VerifyError> {
    let tol = &sc.tolerances;
    let points = sc.points();
    let maxn = max_norm(sc, &points)?;
    let zero = tol.zero_norm * maxn;
    let parallel = tol.parallel * maxn;
    let per = per_point(&points, |p| kato_point(sc, p, zero, parallel))?;
    let mut scan = KatoScan {
        scenario: sc.id.clone(),
        sampled: points.len(),
        excluded: Vec::new(),
        min_rho: None,
        classical_holds: true,
        refined_holds: true,
        fraction_below_two: None,
        histogram: Vec::new(),
        status: String::new(),
        samples: Vec::new(),
    };
    let mut parallel_count = 0;
    for (p, s) in points.iter().zip(per) {
        match s {
            Screen::Drop(e) => scan.excluded.push(e),
            Screen::Keep(KatoPoint { dnorm2: None, .. }) => {
                parallel_count += 1;
                scan.excluded.push(Exclusion { point: *p, reason: "parallel-degenerate".into() });
            }
            Screen::Keep(KatoPoint { nabla2, dnorm2: Some(d) }) => scan.samples.push(KatoSample {
                point: *p,
                nabla2,
                dnorm2: d,
                rho: nabla2 / d,
                k: None,
                factor: None,
            }),
        }
    }
    if scan.samples.is_empty() {
        scan.status = if parallel_count == points.len() {
            "all points parallel-degenerate".into()
        } else {
            "no valid samples".into()
        };
        return Ok(scan);
    }
    let rhos: Vec<f64> = scan.samples.iter().map(|s| s.rho).collect();
    let min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    scan.min_rho = Some(min);
    scan.classical_holds = rhos.iter().all(|r| *r >= 1.0 - tol.kato_classical);
    scan.refined_holds = rhos.iter().all(|r| *r >= 1.5 - tol.kato_refined);
    let below = rhos.iter().filter(|r| **r < 2.0).count();
    scan.fraction_below_two = Some(below as f64 / rhos.len() as f64);
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(BIN_EDGES);
    scan.histogram = edges
        .windows(2)
        .map(|w| HistogramBin { lo: w[0], hi: w[1], count: rhos.iter().filter(|r| **r >= w[0] && **r < w[1]).count() })
        .collect();
    scan.status = if below == 0 {
        format!("min rho = {min:.6} >= 2 on this sample")
    } else {
        format!("min rho = {min:.6}; {below} of {} points below 2", rhos.len())
    };
    Ok(scan)
}

fn jet_err(context: &'static str, p: [f64; 4]) -> impl Fn(JetError) -> VerifyError {
    move |source| VerifyError::Geometry(GeometryError::Jet { context, source, point: p })
}

/// `e^{2f} g` with `e^{2f} = |φ|^k`.
pub fn conformal_by_norm(sc: &AnalyticScenario, k: f64) -> MetricChart<f64> {
    let f = HalfLogNorm { metric: sc.chart.metric_field().clone(), form: sc.form.clone(), k };
    sc.chart.conformal(Arc::new(f), format!("{}*|phi|^{k}", sc.chart.name))
}

/// `½Δ|φ|² − ⟨φ, Δφ⟩ = |∇φ|² + ⟨C(φ), φ⟩` in the given chart, `Δφ = −(dδ+δd)φ`.
fn bochner_norm(geo: &LocalGeometry<f64>, form: &dyn FormField<f64>, name: &'static str, tol: f64) -> Result<Residual, VerifyError> {
    let slate = geo.slate(FrameChoice::CoordinateGramSchmidt)?;
    let at = FormAtPoint::new(geo, form)?;
    let fr = &slate.frame;
    let phi = at.in_frame(fr);
    let hodge = rotate(&TwoFormPoint::from_skew(&at.hodge_laplacian()), &fr.e);
    let lap_n2 = 0.5 * geo.laplacian(&at.norm2_jet());
    let pairing = -phi.inner(&hodge);
    let nab2 = at.nabla_norm2(fr);
    let curv = curvature_action(&slate, &phi).inner(&phi);
    let natural = slate.max_abs() * phi.norm2();
    Ok(Residual::new(name, lap_n2 - pairing, nab2 + curv, &[lap_n2, pairing, nab2, curv, natural], tol))
}

fn rotate(coord: &TwoFormPoint<f64>, e: &[[f64; 4]; 4]) -> TwoFormPoint<f64> {
    let m = coord.to_skew();
    TwoFormPoint::new(PAIRS.map(|(a, b)| {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += e[a][i] * e[b][j] * m[i][j];
            }
        }
        s
    }))
}

struct ChainPoint {
    residuals: Vec<Residual>,
    /// Left side of the refined Kato identity, and the same over `|d|φ||²`.
    lhs: f64,
    lhs_scale: f64,
    ratio: Option<f64>,
    rho: Option<f64>,
    factor: f64,
}

fn chain_point(
    sc: &AnalyticScenario,
    conf: &MetricChart<f64>,
    p: [f64; 4],
    k: f64,
    zero: f64,
    parallel: f64,
) -> Result<Screen<ChainPoint>, VerifyError> {
    let tol = &sc.tolerances;
    let geo = LocalGeometry::at(&sc.chart, p)?;
    let fr = geo.frame(FrameChoice::CoordinateGramSchmidt)?;
    let at = FormAtPoint::new(&geo, sc.form.as_ref())?;
    harmonic_gate(&at, &fr, tol.harmonic)?;
    let n2 = at.norm2_jet();
    let nrm = n2.value().max(0.0).sqrt();
    if !(nrm > zero) {
        return Ok(Screen::Drop(Exclusion { point: p, reason: "zero-norm".into() }));
    }
    let pk = nrm.powf(k);
    let p3k = nrm.powf(3.0 * k);
    if !(pk.is_finite() && pk > 0.0 && p3k.is_finite() && p3k > 0.0 && (1.0 / p3k).is_finite()) {
        return Err(VerifyError::Underflow { k, point: p });
    }

    // the primed geometry, through the same pipeline
    let geo_c = LocalGeometry::at(conf, p)?;
    let fr_c = geo_c.frame(FrameChoice::CoordinateGramSchmidt)?;
    let at_c = FormAtPoint::new(&geo_c, sc.form.as_ref())?;
    harmonic_gate(&at_c, &fr_c, tol.harmonic)?;

    let norm = n2.sqrt().map_err(jet_err("|φ|", p))?;
    let f = n2.ln().map_err(jet_err("log |φ|²", p))? * (0.25 * k);
    let lap_f = geo.laplacian(&f);
    let df2 = geo.gradient_inner(&f, &f);
    let lap_norm = geo.laplacian(&norm);
    let dn2 = geo.gradient_inner(&norm, &norm);
    let n2v = n2.value();
    let mut residuals = Vec::with_capacity(5);

    let a = -2.0 * lap_f * n2v;
    let b = -2.0 * df2 * n2v;
    let c = -k * nrm * lap_norm;
    let d = (k - 0.5 * k * k) * dn2;
    residuals.push(Residual::new("log_factor", a + b, c + d, &[a, b, c, d], tol.log_factor));

    residuals.push(bochner_norm(&geo, sc.form.as_ref(), "bochner_norm", tol.bochner_norm)?);
    residuals.push(bochner_norm(&geo_c, sc.form.as_ref(), "bochner_norm_conformal", tol.bochner_norm)?);

    let u = n2.powf(1.0 - k).map_err(jet_err("|φ|^(2-2k)", p))?;
    let lhs = geo_c.laplacian(&u);
    let a = geo.laplacian(&u) / pk;
    let b = 2.0 * (k - k * k) * dn2 / p3k;
    residuals.push(Residual::new("conformal_laplacian", lhs, a + b, &[a, b], tol.conformal_laplacian));

    let nab2 = at.nabla_norm2(&fr);
    let shift = (1.5 * k * k - 3.0 * k) * dn2;
    let rhs = p3k * at_c.nabla_norm2(&fr_c);
    let lhs = nab2 + shift;
    let refined = Residual::new("refined_kato", lhs, rhs, &[nab2, shift], tol.refined_kato);
    let lhs_scale = refined.scale;
    residuals.push(refined);

    let has_ratio = dn2.sqrt() > parallel;
    Ok(Screen::Keep(ChainPoint {
        residuals,
        lhs,
        lhs_scale,
        ratio: has_ratio.then(|| lhs / dn2),
        rho: has_ratio.then(|| nab2 / dn2),
        factor: pk,
    }))
}

fn run_chain(sc: &AnalyticScenario, k: f64) -> Result<Vec<Screen<ChainPoint>>, VerifyError> {
    if !k.is_finite() {
        return Err(VerifyError::Invalid(format!("conformal exponent {k}")));
    }
    let points = sc.points();
    let maxn = max_norm(sc, &points)?;
    let conf = conformal_by_norm(sc, k);
    let zero = sc.tolerances.zero_norm * maxn;
    let parallel = sc.tolerances.parallel * maxn;
    per_point(&points, |p| chain_point(sc, &conf, p, k, zero, parallel))
}

/// The conformal-change chain for `g' = |φ|^k g`: the log-factor identity,
/// the norm Bochner formula in `g` and `g'`, the conformal change of the
/// function Laplacian on `|φ|^{2−2k}`, and the refined Kato identity
/// `|∇φ|² + (3k²/2 − 3k)|d|φ||² = |φ|^{3k}|∇'φ|'²`.
pub fn verify_conformal_chain(sc: &AnalyticScenario, k: f64) -> Result<VerificationReport, VerifyError> {
    let per = run_chain(sc, k)?;
    let mut lhs_min = f64::INFINITY;
    let mut ratio_min = f64::INFINITY;
    let mut factor = [f64::INFINITY, f64::NEG_INFINITY];
    let outcomes = per
        .into_iter()
        .zip(sc.points())
        .map(|(s, p)| match s {
            Screen::Drop(e) => PointOutcome::Excluded(e),
            Screen::Keep(c) => {
                lhs_min = lhs_min.min(c.lhs / c.lhs_scale.max(super::RESIDUAL_FLOOR));
                if let Some(r) = c.ratio {
                    ratio_min = ratio_min.min(r);
                }
                factor = [factor[0].min(c.factor), factor[1].max(c.factor)];
                PointOutcome::Checked { row: SampleRow { point: p, rho: c.rho, ..Default::default() }, residuals: c.residuals }
            }
        })
        .collect();
    let mut rep = VerificationReport::collect("conformal_chain", &sc.id, outcomes);
    rep.summary.insert("k".into(), k);
    if rep.included > 0 {
        rep.summary.insert("refined_kato_lhs_min_relative".into(), lhs_min);
        rep.summary.insert("factor_min".into(), factor[0]);
        rep.summary.insert("factor_max".into(), factor[1]);
        if lhs_min < -sc.tolerances.refined_kato {
            rep.fail(format!("refined Kato left side negative ({lhs_min:e} relative)"));
        }
    }
    if ratio_min.is_finite() {
        rep.summary.insert("refined_kato_ratio_min".into(), ratio_min);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsweepRow {
    pub k: f64,
    /// Minimum over the sample of `(|∇φ|² + (3k²/2 − 3k)|d|φ||²) / |d|φ||²`.
    pub min_ratio: f64,
    /// `(3/2)(1 − k)²`, the value the ratio cannot go below when `ρ ≥ 3/2`.
    pub lower_bound: f64,
    /// Largest relative residual of the refined Kato identity.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsweepReport {
    pub scenario: String,
    pub rows: Vec<KsweepRow>,
    /// Whether `min_ratio` increases along the rows with `k ≥ 1`.
    pub monotone_from_one: bool,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// The refined Kato identity for each exponent in `ks`.
pub fn ksweep(sc: &AnalyticScenario, ks: &[f64]) -> Result<KsweepReport, VerifyError> {
    let mut rows = Vec::with_capacity(ks.len());
    let mut notes = Vec::new();
    let mut passed = true;
    for &k in ks {
        let per = run_chain(sc, k)?;
        let mut row = KsweepRow { k, min_ratio: f64::INFINITY, lower_bound: 1.5 * (1.0 - k).powi(2), residual: 0.0, points: 0 };
        for s in per {
            if let Screen::Keep(c) = s {
                let r = c.residuals.iter().find(|r| r.name == "refined_kato").expect("always pushed");
                row.residual = super::report::nan_max(row.residual, r.relative());
                if let Some(q) = c.ratio {
                    row.min_ratio = row.min_ratio.min(q);
                    row.points += 1;
                }
            }
        }
        if row.points == 0 {
            return Err(VerifyError::EmptyScan("no point with d|φ| ≠ 0".into()));
        }
        if !(row.residual <= sc.tolerances.refined_kato) {
            passed = false;
            notes.push(format!("k = {k}: refined Kato residual {:e}", row.residual));
        }
        let slack = sc.tolerances.kato_refined * (1.0 + k * k);
        if row.min_ratio < row.lower_bound - slack {
            passed = false;
            notes.push(format!("k = {k}: ratio {} below (3/2)(1-k)^2", row.min_ratio));
        }
        rows.push(row);
    }
    let mut tail: Vec<&KsweepRow> = rows.iter().filter(|r| r.k >= 1.0).collect();
    tail.sort_by(|a, b| a.k.total_cmp(&b.k));
    let monotone_from_one = tail.windows(2).all(|w| w[1].min_ratio >= w[0].min_ratio);
    Ok(KsweepReport { scenario: sc.id.clone(), rows, monotone_from_one, passed, notes })
}
