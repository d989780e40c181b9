use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{ExprMetric, ExprScalar, GeometryError, MetricChart};
use crate::expr::{BinOp, Expr, Func};
use crate::linalg::Mat4;
use crate::scalar::Real;

/// Named metrics with documented coordinate boxes.
///
/// * `FlatT4`: `δ` on `(0, 2π)⁴`.
/// * `RoundS4 { r }`: `4r⁴/(r² + |x|²)² δ` on `(−2r, 2r)⁴`.
/// * `ProductS2S2 { r1, r2 }`: polar charts `(θ₁, φ₁, θ₂, φ₂)` on
///   `(0, π) × (0, 2π) × (0, π) × (0, 2π)`.
/// * `Cp2FubiniStudy`: affine chart `z = (x1 + i x2, x3 + i x4)` on `(−1.5, 1.5)⁴`,
///   holomorphic sectional curvature 4.
/// * `Conformal { base, f }`: `e^{2f}` times the base metric on the base box.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetId {
    FlatT4,
    RoundS4 { r: f64 },
    ProductS2S2 { r1: f64, r2: f64 },
    Cp2FubiniStudy,
    Conformal { base: Box<PresetId>, f: Expr },
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetId::FlatT4 => write!(f, "flat_t4"),
            PresetId::RoundS4 { r } => write!(f, "round_s4({r:?})"),
            PresetId::ProductS2S2 { r1, r2 } => write!(f, "product_s2s2({r1:?}, {r2:?})"),
            PresetId::Cp2FubiniStudy => write!(f, "cp2_fubini_study"),
            PresetId::Conformal { base, f: e } => write!(f, "conformal({base}, {e})"),
        }
    }
}

impl FromStr for PresetId {
    type Err = GeometryError;

    /// Accepts the [`Display`](fmt::Display) form: `flat_t4`, `round_s4(r)`,
    /// `product_s2s2(r1, r2)`, `cp2_fubini_study`, `conformal(base, f)`.
    /// Omitted radii default to 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |what: String| GeometryError::InvalidParameter { what };
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| bad(format!("preset `{s}`: missing closing parenthesis")))?;
                (s[..i].trim(), Some(split_top_level(inner)))
            }
            None => (s, None),
        };
        let radii = |want: usize| -> Result<Vec<f64>, GeometryError> {
            match &args {
                None => Ok(vec![1.0; want]),
                Some(a) if a.len() == want => a
                    .iter()
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("preset `{s}`: `{}` is not a number", t.trim()))))
                    .collect(),
                Some(a) => Err(bad(format!("preset `{name}` takes {want} argument(s), got {}", a.len()))),
            }
        };
        let id = match name {
            "flat_t4" => {
                radii(0)?;
                PresetId::FlatT4
            }
            "cp2_fubini_study" => {
                radii(0)?;
                PresetId::Cp2FubiniStudy
            }
            "round_s4" => PresetId::RoundS4 { r: radii(1)?[0] },
            "product_s2s2" => {
                let r = radii(2)?;
                PresetId::ProductS2S2 { r1: r[0], r2: r[1] }
            }
            "conformal" => {
                let a = args.ok_or_else(|| bad("conformal(base, f) needs arguments".into()))?;
                if a.len() != 2 {
                    return Err(bad(format!("conformal(base, f) takes 2 arguments, got {}", a.len())));
                }
                let f = crate::expr::parse(a[1]).map_err(|e| bad(format!("conformal factor: {e}")))?;
                PresetId::Conformal { base: Box::new(a[0].parse()?), f }
            }
            other => return Err(bad(format!("unknown preset `{other}`; known: {}", PRESET_NAMES.join(", ")))),
        };
        id.validate()?;
        Ok(id)
    }
}

/// Names accepted by [`PresetId::from_str`].
pub const PRESET_NAMES: [&str; 5] = ["flat_t4", "round_s4", "product_s2s2", "cp2_fubini_study", "conformal"];

fn split_top_level(s: &str) -> Vec<&str> {
    if s.trim().is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn num(v: f64) -> Expr {
    Expr::num(v)
}

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn pow(a: Expr, k: f64) -> Expr {
    Expr::bin(BinOp::Pow, a, num(k))
}

fn zeros() -> [[Expr; 4]; 4] {
    std::array::from_fn(|_| std::array::from_fn(|_| num(0.0)))
}

fn check_positive(what: &str, v: f64) -> Result<(), GeometryError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter { what: format!("{what} = {v} must be positive") })
    }
}

impl PresetId {
    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            PresetId::RoundS4 { r } => check_positive("r", *r),
            PresetId::ProductS2S2 { r1, r2 } => {
                check_positive("r1", *r1)?;
                check_positive("r2", *r2)
            }
            PresetId::Conformal { base, .. } => base.validate(),
            PresetId::FlatT4 | PresetId::Cp2FubiniStudy => Ok(()),
        }
    }

    pub fn domain(&self) -> [[f64; 2]; 4] {
        match self {
            PresetId::FlatT4 => [[0.0, 2.0 * PI]; 4],
            PresetId::RoundS4 { r } => [[-2.0 * r, 2.0 * r]; 4],
            PresetId::ProductS2S2 { .. } => [[0.0, PI], [0.0, 2.0 * PI], [0.0, PI], [0.0, 2.0 * PI]],
            PresetId::Cp2FubiniStudy => [[-1.5, 1.5]; 4],
            PresetId::Conformal { base, .. } => base.domain(),
        }
    }

    /// Metric components as expressions (upper and lower triangle filled).
    pub fn metric_exprs(&self) -> [[Expr; 4]; 4] {
        match self {
            PresetId::FlatT4 => {
                let mut g = zeros();
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = num(1.0);
                }
                g
            }
            PresetId::RoundS4 { r } => {
                let r2 = r * r;
                let rho = x(0) * x(0) + x(1) * x(1) + x(2) * x(2) + x(3) * x(3);
                let c = num(4.0 * r2 * r2) / pow(num(r2) + rho, 2.0);
                let mut g = zeros();
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = c.clone();
                }
                g
            }
            PresetId::ProductS2S2 { r1, r2 } => {
                let mut g = zeros();
                g[0][0] = num(r1 * r1);
                g[1][1] = num(r1 * r1) * pow(Expr::call(Func::Sin, x(0)), 2.0);
                g[2][2] = num(r2 * r2);
                g[3][3] = num(r2 * r2) * pow(Expr::call(Func::Sin, x(2)), 2.0);
                g
            }
            PresetId::Cp2FubiniStudy => {
                // g_ij = ((1+ρ²)δ_ij − P_i P_j − Q_i Q_j) / (1+ρ²)², P = x, Q = J-rotated x
                let s = num(1.0) + x(0) * x(0) + x(1) * x(1) + x(2) * x(2) + x(3) * x(3);
                let p: [Expr; 4] = std::array::from_fn(x);
                let q = [-x(1), x(0), -x(3), x(2)];
                let den = pow(s.clone(), 2.0);
                let mut g = zeros();
                for i in 0..4 {
                    for j in i..4 {
                        let mut n = -(p[i].clone() * p[j].clone()) - q[i].clone() * q[j].clone();
                        if i == j {
                            n = s.clone() + n;
                        }
                        let e = n / den.clone();
                        g[i][j] = e.clone();
                        g[j][i] = e;
                    }
                }
                g
            }
            PresetId::Conformal { base, f } => {
                let w = Expr::call(Func::Exp, num(2.0) * f.clone());
                let g = base.metric_exprs();
                std::array::from_fn(|i| std::array::from_fn(|j| w.clone() * g[i][j].clone()))
            }
        }
    }
}

/// Builds the chart for a preset.
pub fn preset<T: Real>(id: &PresetId) -> Result<MetricChart<T>, GeometryError> {
    id.validate()?;
    match id {
        PresetId::Conformal { base, f } => {
            let b = preset::<T>(base)?;
            Ok(b.conformal(Arc::new(ExprScalar(f.clone())), id.to_string()))
        }
        _ => Ok(MetricChart::new(
            id.to_string(),
            id.domain(),
            1,
            Arc::new(ExprMetric::new(id.metric_exprs())),
        )),
    }
}

/// Complex structure of the CP² affine chart: `J ∂1 = ∂2`, `J ∂3 = ∂4`.
/// `j[i][k]` is component i of `J ∂_k`.
pub fn cp2_complex_structure<T: Real>() -> Mat4<T> {
    let mut j = [[T::zero(); 4]; 4];
    j[1][0] = T::one();
    j[0][1] = -T::one();
    j[3][2] = T::one();
    j[2][3] = -T::one();
    j
}
