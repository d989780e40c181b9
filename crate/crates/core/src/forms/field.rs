use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::PAIRS;
use crate::expr::{Expr, Func};
use crate::geometry::{CoordinateMap, GeometryError, JetPoint};
use crate::jet::Jet3;
use crate::linalg::Mat4;
use crate::scalar::Real;

/// A 2-form given by coordinate components `φ = Σ_{i<j} φ_ij dx^i∧dx^j`.
pub trait FormField<T: Real>: Send + Sync + fmt::Debug {
    /// Components in [`PAIRS`] order.
    fn components(&self, x: &JetPoint<T>) -> Result<[Jet3<T>; 6], GeometryError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprForm {
    pub components: [Expr; 6],
}

impl ExprForm {
    pub fn new(components: [Expr; 6]) -> Self {
        Self { components }
    }

    pub fn constant(c: [f64; 6]) -> Self {
        Self { components: c.map(Expr::num) }
    }
}

impl<T: Real> FormField<T> for ExprForm {
    fn components(&self, x: &JetPoint<T>) -> Result<[Jet3<T>; 6], GeometryError> {
        let mut out = [Jet3::zero(); 6];
        for (k, e) in self.components.iter().enumerate() {
            out[k] = e.eval(x)?;
        }
        Ok(out)
    }
}

/// Pull-back of a form through a coordinate map.
#[derive(Debug, Clone)]
pub struct PulledBackForm<T: Real> {
    pub base: Arc<dyn FormField<T>>,
    pub map: Arc<dyn CoordinateMap<T>>,
}

impl<T: Real> FormField<T> for PulledBackForm<T> {
    fn components(&self, y: &JetPoint<T>) -> Result<[Jet3<T>; 6], GeometryError> {
        let (x, jac) = self.map.apply(y);
        let c = self.base.components(&x)?;
        let mut full = [[Jet3::zero(); 4]; 4];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            full[i][j] = c[k];
            full[j][i] = -c[k];
        }
        let mut out = [Jet3::zero(); 6];
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            let mut s = Jet3::zero();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        s += full[i][j] * jac[i][a] * jac[j][b];
                    }
                }
            }
            out[k] = s;
        }
        Ok(out)
    }
}

/// `ω(X, Y) = g(J X, Y)` for a constant complex structure `j` (`j[i][k]` is
/// component i of `J ∂_k`) and metric expressions `g`.
pub fn kaehler_form_exprs(g: &[[Expr; 4]; 4], j: &Mat4<f64>) -> [Expr; 6] {
    PAIRS.map(|(a, b)| {
        let mut acc: Option<Expr> = None;
        for m in 0..4 {
            let c = j[m][a];
            if c == 0.0 {
                continue;
            }
            let term = if c == 1.0 {
                g[m][b].clone()
            } else if c == -1.0 {
                -g[m][b].clone()
            } else {
                Expr::num(c) * g[m][b].clone()
            };
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.unwrap_or(Expr::num(0.0))
    })
}

/// A random smooth 2-form: per component, a quadratic polynomial plus one
/// trigonometric term, with coefficients of order one.
pub fn random_analytic_form<R: Rng>(rng: &mut R) -> ExprForm {
    let mut coef = |s: f64| Expr::num((rng.gen_range(-1.0..1.0) * s * 1e3).round() / 1e3);
    let comps: [Expr; 6] = std::array::from_fn(|_| {
        let mut e = coef(1.0);
        for i in 0..4 {
            e = e + coef(0.5) * Expr::var(i);
        }
        for i in 0..4 {
            for j in i..4 {
                e = e + coef(0.25) * Expr::var(i) * Expr::var(j);
            }
        }
        let inner = coef(1.0) * Expr::var(0) + coef(1.0) * Expr::var(2) + coef(1.0);
        e + coef(0.5) * Expr::call(Func::Sin, inner)
    });
    ExprForm::new(comps)
}
