use std::collections::BTreeMap;

use serde::Serialize;

/// Version tag of the sign conventions below; bump when any of them changes.
pub const CONVENTIONS_VERSION: &str = "curv4-signs-1";

/// Relative residuals are taken against the largest constituent term (for the
/// curvature identities this includes the generic size `max|R|·|φ|^p` of the
/// curvature terms, so that parallel forms do not divide roundoff by
/// roundoff), never below this floor.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub version: &'static str,
    pub curvature: &'static str,
    pub laplacian_functions: &'static str,
    pub laplacian_forms: &'static str,
    pub hodge_star: &'static str,
    pub components: &'static str,
    /// Order of the Taylor jets every derivative is read from.
    pub jet_order: usize,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            version: CONVENTIONS_VERSION,
            curvature: "R_ijkl = <R(e_i,e_j)e_k,e_l> with R(X,Y) = -[nabla_X,nabla_Y] + nabla_[X,Y]; sec = R_ijij",
            laplacian_functions: "tr Hess (non-positive spectrum)",
            laplacian_forms: "-(d delta + delta d), so that harmonic means zero for either sign",
            hodge_star: "oriented orthonormal frame, *e12 = e34, *e13 = -e24, *e14 = e23",
            components: "phi = sum_{i<j} phi_ij dx^i^dx^j; frame components phi_kl = phi(e_k,e_l)/2 in full-sum identities",
            jet_order: crate::jet::ORDER,
        }
    }
}

/// A sample point left out of a report and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub point: [f64; 4],
    pub reason: String,
}

/// Worst residual of one identity over the included points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub max_rel: f64,
    pub tolerance: f64,
    pub points: usize,
    pub passed: bool,
}

/// One included point.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleRow {
    pub point: [f64; 4],
    /// Largest relative residual over the identities checked here.
    pub residual: f64,
    pub abs_residual: f64,
    pub rho: Option<f64>,
    pub k: Option<f64>,
    pub r1234: Option<f64>,
    pub f: Option<f64>,
    pub g: Option<f64>,
    pub degeneracy: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: String,
    pub scenario: String,
    pub sampled: usize,
    pub included: usize,
    pub excluded: Vec<Exclusion>,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub passed: bool,
    /// Per-identity breakdown, keyed by identity name.
    pub identities: BTreeMap<String, ResidualStats>,
    /// Extra scalars a verifier wants on record (minima, counts, flags as 0/1).
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub conventions: Conventions,
    pub samples: Vec<SampleRow>,
}

/// Residual of one identity at one point: `lhs - rhs` measured against the
/// magnitudes of the terms it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub name: &'static str,
    pub abs: f64,
    pub scale: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn new(name: &'static str, lhs: f64, rhs: f64, terms: &[f64], tolerance: f64) -> Self {
        let scale = terms.iter().fold(lhs.abs().max(rhs.abs()), |m, t| m.max(t.abs()));
        Self { name, abs: (lhs - rhs).abs(), scale, tolerance }
    }

    pub fn relative(&self) -> f64 {
        self.abs / self.scale.max(RESIDUAL_FLOOR)
    }
}

/// Outcome of a verifier at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Checked { row: SampleRow, residuals: Vec<Residual> },
    Excluded(Exclusion),
}

impl VerificationReport {
    /// Merges per-point outcomes in sample order.
    pub fn collect(identity: &str, scenario: &str, outcomes: Vec<PointOutcome>) -> Self {
        let mut rep = Self {
            identity: identity.to_string(),
            scenario: scenario.to_string(),
            sampled: outcomes.len(),
            included: 0,
            excluded: Vec::new(),
            max_abs_residual: 0.0,
            max_rel_residual: 0.0,
            passed: true,
            identities: BTreeMap::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
            conventions: Conventions::default(),
            samples: Vec::new(),
        };
        for o in outcomes {
            match o {
                PointOutcome::Excluded(e) => rep.excluded.push(e),
                PointOutcome::Checked { mut row, residuals } => {
                    rep.included += 1;
                    row.residual = 0.0;
                    row.abs_residual = 0.0;
                    for r in &residuals {
                        let rel = r.relative();
                        row.residual = nan_max(row.residual, rel);
                        row.abs_residual = nan_max(row.abs_residual, r.abs);
                        let s = rep.identities.entry(r.name.to_string()).or_insert(ResidualStats {
                            max_abs: 0.0,
                            max_rel: 0.0,
                            tolerance: r.tolerance,
                            points: 0,
                            passed: true,
                        });
                        s.max_abs = nan_max(s.max_abs, r.abs);
                        s.max_rel = nan_max(s.max_rel, rel);
                        s.points += 1;
                        s.passed = s.max_rel <= s.tolerance;
                    }
                    rep.max_abs_residual = nan_max(rep.max_abs_residual, row.abs_residual);
                    rep.max_rel_residual = nan_max(rep.max_rel_residual, row.residual);
                    rep.samples.push(row);
                }
            }
        }
        rep.passed = rep.identities.values().all(|s| s.passed);
        rep
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Marks the report failed (for checks that are not residuals).
    pub fn fail(&mut self, s: impl Into<String>) {
        self.passed = false;
        self.notes.push(s.into());
    }
}

/// `max` that lets a NaN win, so a broken residual cannot hide.
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
