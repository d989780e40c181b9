//! Scenario-driven front end for `curv4-core`: reads a scenario file, runs
//! one verifier, kato scan or lattice computation, and renders `report.json`
//! and `samples.csv`.

pub mod output;
pub mod scenario;

use curv4_core::canonical::global_curvature_stats;
use curv4_core::geometry::{GeometryError, PresetId, PRESET_NAMES};
use curv4_core::grid::{
    assemble, definiteness_report, discrete_fg_residual, harmonic_field, harmonic_kernel_with, DefinitenessReport,
    DiscreteResidual, GridError, HarmonicBasis,
};
use curv4_core::verify::{
    integral_identity_check, integral_identity_lattice, kato_scan, ksweep, verify_adapted_bochner,
    verify_component_bochner, verify_conformal_chain, verify_fg_product, verify_weitzenboeck, Conventions,
    IntegralReport, Tolerances, VerificationReport, VerifyError, RESIDUAL_FLOOR,
};
use serde::Serialize;
use thiserror::Error;

use output::{Cell, Table};
pub use scenario::{Scenario, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Every error is a problem with the input or with what it asks for;
    /// identity violations are reported, not raised.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Pointwise identities available under `verify`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    /// `Δφ` against the rough Laplacian plus the curvature action.
    Weitzenboeck,
    /// The Bochner formula in components in a normal chart.
    ComponentBochner,
    /// Laplacians of `λ₁, λ₂` and of `F, G` in the adapted frame.
    AdaptedFrame,
    /// `Δ(FG)` with its Schwarz combination.
    FgProduct,
    /// The Kato / conformal-change chain for `g' = |φ|^k g`.
    Conformal { k: f64 },
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::Weitzenboeck => "weitzenboeck",
            Identity::ComponentBochner => "component-bochner",
            Identity::AdaptedFrame => "adapted-frame",
            Identity::FgProduct => "fg-product",
            Identity::Conformal { .. } => "conformal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Curvature,
    Verify(Identity),
    KatoScan,
    Ksweep { ks: Vec<f64> },
    GridHarmonic,
    GridDefiniteness,
    Integral,
}

impl Command {
    pub fn label(&self) -> String {
        match self {
            Command::Curvature => "curvature".into(),
            Command::Verify(Identity::Conformal { k }) => format!("verify conformal --k {k}"),
            Command::Verify(id) => format!("verify {}", id.name()),
            Command::KatoScan => "kato scan".into(),
            Command::Ksweep { ks } => {
                format!("kato ksweep --k {}", ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
            }
            Command::GridHarmonic => "grid harmonic".into(),
            Command::GridDefiniteness => "grid definiteness".into(),
            Command::Integral => "integral".into(),
        }
    }
}

/// Rendered results of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub report_json: Vec<u8>,
    pub samples_csv: Vec<u8>,
    /// One-line human summary.
    pub summary: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: String,
    scenario_id: &'a str,
    /// The scenario as read, for auditing.
    scenario: &'a serde_json::Value,
    conventions: Conventions,
    residual_floor: f64,
    tolerances: Tolerances,
    passed: bool,
    result: T,
}

/// `HarmonicBasis` without the kernel vectors.
#[derive(Serialize)]
struct BasisSummary {
    n: usize,
    h: f64,
    kernel_dim: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    cluster_max: f64,
    first_positive: Option<f64>,
    gap_ratio: f64,
    operator_norm: f64,
    outer_iterations: usize,
    cg_iterations: usize,
    star: Vec<f64>,
    star_eigenvalues: Vec<f64>,
}

impl From<&HarmonicBasis> for BasisSummary {
    fn from(b: &HarmonicBasis) -> Self {
        BasisSummary {
            n: b.n,
            h: b.h,
            kernel_dim: b.kernel_dim,
            eigenvalues: b.eigenvalues.clone(),
            residuals: b.residuals.clone(),
            cluster_max: b.cluster_max,
            first_positive: b.first_positive,
            gap_ratio: b.gap_ratio,
            operator_norm: b.operator_norm,
            outer_iterations: b.outer_iterations,
            cg_iterations: b.cg_iterations,
            star: b.star.clone(),
            star_eigenvalues: b.star_eigenvalues.clone(),
        }
    }
}

#[derive(Serialize)]
struct GridHarmonicResult {
    diagonal_metric: bool,
    class: [f64; 6],
    lattice_constant: f64,
    basis: BasisSummary,
    definiteness: DefinitenessReport,
    residual: DiscreteResidual,
    fg_product: VerificationReport,
}

#[derive(Serialize)]
struct GridDefinitenessResult {
    diagonal_metric: bool,
    basis: BasisSummary,
    definiteness: DefinitenessReport,
}

/// Column layout shared by all pointwise reports.
pub const SAMPLE_COLUMNS: [&str; 12] =
    ["x1", "x2", "x3", "x4", "residual", "abs_residual", "rho", "K", "R1234", "F", "G", "degeneracy"];

fn point_cells(p: [f64; 4]) -> Vec<Cell> {
    p.iter().map(|&x| Cell::Num(x)).collect()
}

fn sample_table(r: &VerificationReport) -> Table {
    let mut t = Table::new(&SAMPLE_COLUMNS);
    for s in &r.samples {
        let mut row = point_cells(s.point);
        row.extend([
            s.residual.into(),
            s.abs_residual.into(),
            s.rho.into(),
            s.k.into(),
            s.r1234.into(),
            s.f.into(),
            s.g.into(),
            s.degeneracy.map_or(Cell::Empty, Cell::from),
        ]);
        t.push(row);
    }
    t
}

/// Lists the manifold presets with their coordinate boxes.
pub fn presets_listing() -> String {
    let examples = [
        PresetId::FlatT4,
        PresetId::RoundS4 { r: 1.0 },
        PresetId::ProductS2S2 { r1: 1.0, r2: 1.0 },
        PresetId::Cp2FubiniStudy,
    ];
    let mut out = String::new();
    for id in &examples {
        let d = id.domain();
        let boxes: Vec<String> = d.iter().map(|[a, b]| format!("({a:.4}, {b:.4})")).collect();
        out.push_str(&format!("{:<28} {}\n", id.to_string(), boxes.join(" x ")));
    }
    out.push_str(&format!("{:<28} e^(2f) times the base metric on the base box\n", "conformal(base, f)"));
    out.push_str(&format!("\nnames: {}\n", PRESET_NAMES.join(", ")));
    out.push_str("form presets: kaehler, factor_volumes, constant, random\n");
    out
}

/// Runs `cmd` on scenario text; `origin` (usually the path) locates errors.
pub fn run(cmd: &Command, text: &str, origin: &str) -> Result<Outcome, CliError> {
    let sc = Scenario::from_json(text, origin)?;
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    let mut tolerances = sc.tolerances;

    macro_rules! finish {
        ($passed:expr, $result:expr, $table:expr, $summary:expr) => {{
            let passed: bool = $passed;
            let env = Envelope {
                schema_version: SCHEMA_VERSION,
                command: cmd.label(),
                scenario_id: &sc.id,
                scenario: &raw,
                conventions: Conventions::default(),
                residual_floor: RESIDUAL_FLOOR,
                tolerances,
                passed,
                result: $result,
            };
            let report_json = output::to_json(&env).map_err(|e| CliError::Input(format!("serializing report: {e}")))?;
            let samples_csv = $table.to_csv().map_err(|e| CliError::Input(format!("writing csv: {e}")))?;
            Ok(Outcome { passed, report_json, samples_csv, summary: $summary })
        }};
    }

    match cmd {
        Command::Curvature => {
            let chart = sc.chart()?;
            let s = sc.sampling;
            let g = global_curvature_stats(&chart, s.count, s.margin, s.seed)?;
            let mut t = Table::new(&["x1", "x2", "x3", "x4", "sec_min", "sec_max", "biorthogonal_min", "scalar", "certified"]);
            for c in &g.samples {
                let mut row = point_cells(c.point);
                row.extend([c.sec_min.into(), c.sec_max.into(), c.biorthogonal_min.into(), c.scalar.into(), c.certified.into()]);
                t.push(row);
            }
            let summary = format!(
                "sec in [{:.9}, {:.9}], biorthogonal min {:.9} over {} points",
                g.k_min, g.sec_max, g.biorthogonal_min, g.points
            );
            let passed = g.k_min.is_finite() && g.sec_max.is_finite();
            finish!(passed, &g, t, summary)
        }
        Command::Verify(id) => {
            let a = sc.analytic()?;
            let r = match *id {
                Identity::Weitzenboeck => verify_weitzenboeck(&a)?,
                Identity::ComponentBochner => verify_component_bochner(&a)?,
                Identity::AdaptedFrame => verify_adapted_bochner(&a)?,
                Identity::FgProduct => verify_fg_product(&a)?,
                Identity::Conformal { k } => verify_conformal_chain(&a, k)?,
            };
            let summary = format!(
                "{}: max relative residual {:.3e} over {} points ({} excluded)",
                r.identity,
                r.max_rel_residual,
                r.included,
                r.excluded.len()
            );
            finish!(r.passed, &r, sample_table(&r), summary)
        }
        Command::KatoScan => {
            let r = kato_scan(&sc.analytic()?)?;
            let mut t = Table::new(&SAMPLE_COLUMNS);
            for s in &r.samples {
                let mut row = point_cells(s.point);
                row.extend([Cell::Empty, Cell::Empty, s.rho.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                t.push(row);
            }
            let summary = match r.min_rho {
                Some(m) => format!("min rho {m:.9} over {} points; {}", r.samples.len(), r.status),
                None => format!("no point with d|phi| != 0; {}", r.status),
            };
            finish!(r.passed(), &r, t, summary)
        }
        Command::Ksweep { ks } => {
            let r = ksweep(&sc.analytic()?, ks)?;
            let mut t = Table::new(&["k", "min_ratio", "lower_bound", "residual", "points"]);
            for row in &r.rows {
                t.push(vec![row.k.into(), row.min_ratio.into(), row.lower_bound.into(), row.residual.into(), row.points.into()]);
            }
            let summary = format!("{} rows, monotone from k = 1: {}", r.rows.len(), r.monotone_from_one);
            finish!(r.passed, &r, t, summary)
        }
        Command::GridHarmonic => {
            let spec = sc.grid()?.clone();
            let g = sc.grid_metric()?;
            let field = harmonic_field(&sc.id, &g, spec.n, spec.class, spec.lattice_constant, &spec.eigen)?;
            tolerances = field.scenario.tolerances;
            let definiteness = definiteness_report(&field.basis)?;
            let residual = discrete_fg_residual(&field)?;
            let fg = verify_fg_product(&field.scenario)?;
            let table = sample_table(&fg);
            let summary = format!(
                "n = {}: kernel dim {}, b2 = ({}, {}), fg residual rms {:.3e}, max {:.3e}",
                spec.n, field.basis.kernel_dim, definiteness.b2_plus, definiteness.b2_minus, residual.rms, residual.max_abs
            );
            let result = GridHarmonicResult {
                diagonal_metric: field.complex.diagonal_metric,
                class: spec.class,
                lattice_constant: spec.lattice_constant,
                basis: (&field.basis).into(),
                definiteness,
                residual,
                fg_product: fg,
            };
            finish!(result.fg_product.passed, result, table, summary)
        }
        Command::GridDefiniteness => {
            let spec = sc.grid()?.clone();
            let cx = assemble(&sc.grid_metric()?, spec.n)?;
            let basis = harmonic_kernel_with(&cx, None, &spec.eigen)?;
            let definiteness = definiteness_report(&basis)?;
            let mut t = Table::new(&["index", "laplace_eigenvalue", "star_eigenvalue"]);
            for (i, l) in basis.eigenvalues.iter().enumerate() {
                t.push(vec![i.into(), (*l).into(), basis.star_eigenvalues.get(i).copied().into()]);
            }
            let summary = format!(
                "n = {}: b2+ = {}, b2- = {}, signature {}, definite {}",
                spec.n, definiteness.b2_plus, definiteness.b2_minus, definiteness.signature, definiteness.definite
            );
            let result = GridDefinitenessResult { diagonal_metric: cx.diagonal_metric, basis: (&basis).into(), definiteness };
            finish!(true, result, t, summary)
        }
        Command::Integral => {
            let r: IntegralReport = match &sc.grid {
                Some(spec) => {
                    let g = sc.grid_metric()?;
                    let field = harmonic_field(&sc.id, &g, spec.n, spec.class, spec.lattice_constant, &spec.eigen)?;
                    tolerances = field.scenario.tolerances;
                    integral_identity_lattice(&field.scenario, field.complex.h, spec.lattice_constant)?
                }
                None => integral_identity_check(&sc.analytic()?, sc.quadrature_nodes)?,
            };
            let mut t = Table::new(&["laplacian", "curvature", "remainder", "decomposition_defect", "scale", "constant"]);
            t.push(vec![
                r.laplacian.into(),
                r.curvature.into(),
                r.remainder.into(),
                r.decomposition_defect.into(),
                r.scale.into(),
                r.constant.into(),
            ]);
            let summary = format!(
                "integral of the Laplacian {:.3e} (scale {:.3e}), decomposition defect {:.3e}",
                r.laplacian, r.scale, r.decomposition_defect
            );
            finish!(r.passed, &r, t, summary)
        }
    }
}

/// Caps the global thread pool, as `CURV4_THREADS` does for the binary.
pub fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    Ok(())
}
