//! Scenario files: strict JSON describing a manifold, a 2-form and how to
//! sample them. Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use curv4_core::expr::{parse, Expr, Func};
use curv4_core::forms::{kaehler_form_exprs, random_analytic_form, ExprForm, FormField, PAIRS};
use curv4_core::geometry::{cp2_complex_structure, preset, ExprMetric, ExprScalar, MetricChart, PresetId};
use curv4_core::grid::EigenSettings;
use curv4_core::verify::{AnalyticScenario, Sampling, Tolerances};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    pub manifold: ManifoldSpec,
    /// `f` in `e^{2f} g`.
    #[serde(default)]
    pub conformal_factor: Option<ExprSrc>,
    #[serde(default)]
    pub form: Option<FormSpec>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Overrides of individual thresholds; the rest keep their defaults.
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Gauss–Legendre nodes per axis for the integral check.
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

fn default_nodes() -> usize {
    12
}

/// An expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprSrc {
    pub src: String,
    pub expr: Expr,
}

impl<'de> Deserialize<'de> for ExprSrc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        let expr = parse(&src).map_err(|e| de::Error::custom(format!("in expression `{src}`: {e}")))?;
        Ok(ExprSrc { src, expr })
    }
}

#[derive(Debug, Clone)]
pub enum ManifoldSpec {
    Preset(PresetId),
    Inline(Box<InlineManifold>),
}

/// A metric given by its components on an explicit coordinate box.
#[derive(Debug, Clone)]
pub struct InlineManifold {
    pub name: String,
    pub metric: [[Expr; 4]; 4],
    pub domain: [[f64; 2]; 4],
    pub orientation: i8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInline {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    metric: Option<[[ExprSrc; 4]; 4]>,
    #[serde(default)]
    diagonal: Option<[ExprSrc; 4]>,
    domain: [[f64; 2]; 4],
    #[serde(default = "default_orientation")]
    orientation: i8,
}

fn default_orientation() -> i8 {
    1
}

fn metric_from(full: Option<[[ExprSrc; 4]; 4]>, diagonal: Option<[ExprSrc; 4]>) -> Result<Option<[[Expr; 4]; 4]>, String> {
    match (full, diagonal) {
        (Some(_), Some(_)) => Err("give either `metric` or `diagonal`, not both".into()),
        (None, None) => Ok(None),
        (None, Some(d)) => Ok(Some(ExprMetric::diagonal(d.map(|e| e.expr)).components().clone())),
        (Some(m), None) => {
            for i in 0..4 {
                for j in 0..i {
                    if m[i][j].expr != m[j][i].expr {
                        return Err(format!(
                            "metric is not symmetric: g{}{} = `{}` but g{}{} = `{}`",
                            i + 1,
                            j + 1,
                            m[i][j].src,
                            j + 1,
                            i + 1,
                            m[j][i].src
                        ));
                    }
                }
            }
            Ok(Some(m.map(|r| r.map(|e| e.expr))))
        }
    }
}

impl TryFrom<RawInline> for InlineManifold {
    type Error = String;

    fn try_from(r: RawInline) -> Result<Self, String> {
        let metric = metric_from(r.metric, r.diagonal)?.ok_or("inline manifold needs `metric` or `diagonal`")?;
        if r.orientation != 1 && r.orientation != -1 {
            return Err(format!("orientation must be 1 or -1, got {}", r.orientation));
        }
        for (i, [lo, hi]) in r.domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(format!("domain interval {} is empty: ({lo}, {hi})", i + 1));
            }
        }
        Ok(InlineManifold { name: r.name.unwrap_or_else(|| "inline".into()), metric, domain: r.domain, orientation: r.orientation })
    }
}

impl<'de> Deserialize<'de> for ManifoldSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ManifoldSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a preset name such as \"flat_t4\" or an object with `metric`/`diagonal` and `domain`")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ManifoldSpec, E> {
                v.parse().map(ManifoldSpec::Preset).map_err(E::custom)
            }

            fn visit_map<A: MapAccess<'de>>(self, m: A) -> Result<ManifoldSpec, A::Error> {
                let raw = RawInline::deserialize(de::value::MapAccessDeserializer::new(m))?;
                InlineManifold::try_from(raw).map(|m| ManifoldSpec::Inline(Box::new(m))).map_err(de::Error::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// The 2-form of a scenario.
///
/// As a bare string: `"kaehler"`, `"factor_volumes"` (weights 1, 1) or
/// `"constant"` (`dx1∧dx2`). As an object: `{"preset": ..., "weights" | "values" | "seed": ...}`
/// or `{"components": {"12": "...", ...}}` with omitted components zero.
#[derive(Debug, Clone)]
pub enum FormSpec {
    /// `g(J·, ·)` for the standard complex structure; flat or CP² bases.
    Kaehler,
    /// `w1·vol(S²₁) + w2·vol(S²₂)` on a product of spheres, `w1 e12 + w2 e34` on the torus.
    FactorVolumes { weights: [f64; 2] },
    Constant { values: [f64; 6] },
    /// Random analytic field (not harmonic).
    Random { seed: u64 },
    Components(Box<[Expr; 6]>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    weights: Option<[f64; 2]>,
    #[serde(default)]
    values: Option<[f64; 6]>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    components: Option<BTreeMap<String, ExprSrc>>,
}

fn form_preset(name: &str, r: &RawForm) -> Result<FormSpec, String> {
    let extra = |allowed: &str| {
        let given: Vec<&str> = [
            ("weights", r.weights.is_some()),
            ("values", r.values.is_some()),
            ("seed", r.seed.is_some()),
            ("components", r.components.is_some()),
        ]
        .into_iter()
        .filter(|(k, set)| *set && *k != allowed)
        .map(|(k, _)| k)
        .collect();
        if given.is_empty() {
            Ok(())
        } else {
            Err(format!("form preset `{name}` does not take {}", given.join(", ")))
        }
    };
    match name {
        "kaehler" => extra("").map(|_| FormSpec::Kaehler),
        "factor_volumes" => extra("weights").map(|_| FormSpec::FactorVolumes { weights: r.weights.unwrap_or([1.0, 1.0]) }),
        "constant" => {
            extra("values").map(|_| FormSpec::Constant { values: r.values.unwrap_or([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]) })
        }
        "random" => extra("seed").map(|_| FormSpec::Random { seed: r.seed.unwrap_or(1) }),
        other => Err(format!("unknown form preset `{other}`; known: kaehler, factor_volumes, constant, random")),
    }
}

impl TryFrom<RawForm> for FormSpec {
    type Error = String;

    fn try_from(r: RawForm) -> Result<Self, String> {
        match (&r.preset, &r.components) {
            (Some(p), _) => form_preset(p, &r),
            (None, Some(c)) => {
                if r.weights.is_some() || r.values.is_some() || r.seed.is_some() {
                    return Err("`components` cannot be combined with preset parameters".into());
                }
                let mut out: [Expr; 6] = std::array::from_fn(|_| Expr::num(0.0));
                for (key, e) in c {
                    let t = PAIRS
                        .iter()
                        .position(|(a, b)| format!("{}{}", a + 1, b + 1) == *key)
                        .ok_or_else(|| format!("unknown component `{key}`; use 12, 13, 14, 23, 24, 34"))?;
                    out[t] = e.expr.clone();
                }
                Ok(FormSpec::Components(Box::new(out)))
            }
            (None, None) => Err("form object needs `preset` or `components`".into()),
        }
    }
}

impl<'de> Deserialize<'de> for FormSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = FormSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a form preset name or an object with `preset` or `components`")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<FormSpec, E> {
                let empty = RawForm { preset: None, weights: None, values: None, seed: None, components: None };
                form_preset(v, &empty).map_err(E::custom)
            }

            fn visit_map<A: MapAccess<'de>>(self, m: A) -> Result<FormSpec, A::Error> {
                let raw = RawForm::deserialize(de::value::MapAccessDeserializer::new(m))?;
                FormSpec::try_from(raw).map_err(de::Error::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Lattice settings on `(0, 2π)⁴`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub n: usize,
    /// Periodic metric for the lattice; defaults to the scenario metric.
    pub metric: Option<[[Expr; 4]; 4]>,
    /// Constant form whose cohomology class is projected (pair order).
    pub class: [f64; 6],
    /// `C` in the lattice tolerance `C·h²`.
    pub lattice_constant: f64,
    pub eigen: EigenSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
    #[serde(default)]
    metric: Option<[[ExprSrc; 4]; 4]>,
    #[serde(default)]
    diagonal: Option<[ExprSrc; 4]>,
    #[serde(default)]
    class: Option<[f64; 6]>,
    #[serde(default)]
    lattice_constant: Option<f64>,
    #[serde(default)]
    eigen: EigenSettings,
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RawGrid::deserialize(d)?;
        if r.n < 2 {
            return Err(de::Error::custom(format!("grid.n must be at least 2, got {}", r.n)));
        }
        let c = r.lattice_constant.unwrap_or(1.0);
        if !(c > 0.0) {
            return Err(de::Error::custom(format!("grid.lattice_constant must be positive, got {c}")));
        }
        Ok(GridSpec {
            n: r.n,
            metric: metric_from(r.metric, r.diagonal).map_err(de::Error::custom)?,
            class: r.class.unwrap_or([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            lattice_constant: c,
            eigen: r.eigen,
        })
    }
}

impl Scenario {
    /// Parses and validates scenario text; `origin` names it in messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let sc: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        if sc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "{origin}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                sc.schema_version
            )));
        }
        if sc.sampling.count < 1 {
            return Err(CliError::Input(format!("{origin}: sampling.count must be at least 1")));
        }
        if !(0.0..0.5).contains(&sc.sampling.margin) {
            return Err(CliError::Input(format!("{origin}: sampling.margin must lie in [0, 0.5)")));
        }
        Ok(sc)
    }

    fn preset_id(&self) -> Option<PresetId> {
        match (&self.manifold, &self.conformal_factor) {
            (ManifoldSpec::Preset(id), None) => Some(id.clone()),
            (ManifoldSpec::Preset(id), Some(f)) => Some(PresetId::Conformal { base: Box::new(id.clone()), f: f.expr.clone() }),
            (ManifoldSpec::Inline(_), _) => None,
        }
    }

    pub fn chart(&self) -> Result<MetricChart<f64>, CliError> {
        if let Some(id) = self.preset_id() {
            return Ok(preset(&id)?);
        }
        let ManifoldSpec::Inline(m) = &self.manifold else { unreachable!() };
        let base = MetricChart::from_exprs(m.name.clone(), m.domain, m.orientation, m.metric.clone());
        Ok(match &self.conformal_factor {
            Some(f) => base.conformal(Arc::new(ExprScalar(f.expr.clone())), format!("conformal({}, {})", m.name, f.src)),
            None => base,
        })
    }

    /// Metric components including the conformal factor.
    pub fn metric_exprs(&self) -> [[Expr; 4]; 4] {
        if let Some(id) = self.preset_id() {
            return id.metric_exprs();
        }
        let ManifoldSpec::Inline(m) = &self.manifold else { unreachable!() };
        match &self.conformal_factor {
            Some(f) => {
                let w = Expr::call(Func::Exp, Expr::num(2.0) * f.expr.clone());
                m.metric.clone().map(|r| r.map(|e| w.clone() * e))
            }
            None => m.metric.clone(),
        }
    }

    pub fn form_field(&self) -> Result<Arc<dyn FormField<f64>>, CliError> {
        let spec = self.form.as_ref().ok_or_else(|| CliError::Input("this command needs a `form`".into()))?;
        // harmonic 2-forms are conformally invariant in dimension four, so the
        // presets only look at the base metric
        let base = match &self.manifold {
            ManifoldSpec::Preset(id) => Some(id),
            ManifoldSpec::Inline(_) => None,
        };
        let unsupported = |what: &str| {
            CliError::Input(format!(
                "form `{what}` is defined on {} only, not on {}",
                if what == "kaehler" { "flat_t4 and cp2_fubini_study" } else { "flat_t4 and product_s2s2" },
                base.map_or("an inline metric".to_string(), |b| b.to_string())
            ))
        };
        let form = match spec {
            FormSpec::Kaehler => match base {
                Some(id @ (PresetId::Cp2FubiniStudy | PresetId::FlatT4)) => {
                    ExprForm::new(kaehler_form_exprs(&id.metric_exprs(), &cp2_complex_structure()))
                }
                _ => return Err(unsupported("kaehler")),
            },
            FormSpec::FactorVolumes { weights: [w1, w2] } => match base {
                Some(PresetId::FlatT4) => ExprForm::constant([*w1, 0.0, 0.0, 0.0, 0.0, *w2]),
                Some(PresetId::ProductS2S2 { r1, r2 }) => {
                    let vol = |w: f64, r: f64, axis: usize| Expr::num(w * r * r) * Expr::call(Func::Sin, Expr::var(axis));
                    let z = || Expr::num(0.0);
                    ExprForm::new([vol(*w1, *r1, 0), z(), z(), z(), z(), vol(*w2, *r2, 2)])
                }
                _ => return Err(unsupported("factor_volumes")),
            },
            FormSpec::Constant { values } => ExprForm::constant(*values),
            FormSpec::Random { seed } => random_analytic_form(&mut ChaCha8Rng::seed_from_u64(*seed)),
            FormSpec::Components(c) => ExprForm::new((**c).clone()),
        };
        Ok(Arc::new(form))
    }

    pub fn analytic(&self) -> Result<AnalyticScenario, CliError> {
        let mut sc = AnalyticScenario::new(self.id.clone(), self.chart()?, self.form_field()?).with_sampling(self.sampling);
        sc.tolerances = self.tolerances;
        Ok(sc)
    }

    pub fn grid(&self) -> Result<&GridSpec, CliError> {
        self.grid.as_ref().ok_or_else(|| CliError::Input("this command needs a `grid` section".into()))
    }

    /// The lattice metric: `grid.metric` if given, else the scenario metric.
    pub fn grid_metric(&self) -> Result<[[Expr; 4]; 4], CliError> {
        Ok(self.grid()?.metric.clone().unwrap_or_else(|| self.metric_exprs()))
    }
}
