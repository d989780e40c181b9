//! 2-forms in dimension four: pointwise algebra, fields, and calculus.
//!
//! Pointwise components are stored in an orthonormal frame as
//! `φ = Σ_{i<j} f_ij ω^i∧ω^j` with `{ω^i∧ω^j}_{i<j}` orthonormal, so
//! `|φ|² = Σ_{i<j} f_ij²`. The split is `φ± = φ ± ∗φ`, `F = ½|φ₊|²`,
//! `G = ½|φ₋|²`.

mod calculus;
mod field;

pub use calculus::{
    curvature_action, d0, d1, d2, FormAtPoint, FormJets, ThreeFormJets, WeitzenboeckTerms,
};
pub use field::{
    kaehler_form_exprs, random_analytic_form, ExprForm, FormField, PulledBackForm,
};

use std::ops::{Add, Mul, Neg, Sub};

use crate::linalg::{Mat4, Vec4};
use crate::scalar::Real;

/// Index pairs in storage order: 12, 13, 14, 23, 24, 34 (zero-based).
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Storage slot of the pair `(i, j)`, `i < j`.
pub fn pair_index(i: usize, j: usize) -> usize {
    PAIRS.iter().position(|&p| p == (i, j)).expect("i < j < 4")
}

/// Pair labels as used in scenario files.
pub const PAIR_LABELS: [&str; 6] = ["12", "13", "14", "23", "24", "34"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoFormPoint<T> {
    pub f: [T; 6],
}

impl<T: Real> TwoFormPoint<T> {
    pub fn zero() -> Self {
        Self { f: [T::zero(); 6] }
    }

    pub fn new(f: [T; 6]) -> Self {
        Self { f }
    }

    /// From an antisymmetric matrix of tensor components `φ(e_i, e_j)`.
    pub fn from_skew(m: &Mat4<T>) -> Self {
        Self { f: PAIRS.map(|(i, j)| m[i][j]) }
    }

    pub fn to_skew(&self) -> Mat4<T> {
        let mut m = [[T::zero(); 4]; 4];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            m[i][j] = self.f[k];
            m[j][i] = -self.f[k];
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.f[pair_index(i, j)],
            std::cmp::Ordering::Greater => -self.f[pair_index(j, i)],
            std::cmp::Ordering::Equal => T::zero(),
        }
    }

    /// Hodge star in a positively oriented orthonormal frame.
    pub fn star(&self) -> Self {
        let [a, b, c, d, e, f] = self.f;
        Self { f: [f, -e, d, c, -b, a] }
    }

    pub fn inner(&self, other: &Self) -> T {
        (0..6).map(|k| self.f[k] * other.f[k]).sum()
    }

    pub fn norm2(&self) -> T {
        self.inner(self)
    }

    /// `∗(φ∧φ)`.
    pub fn wedge_square(&self) -> T {
        let [a, b, c, d, e, f] = self.f;
        T::lit(2.0) * (a * f - b * e + c * d)
    }

    pub fn sd_split(&self) -> SdSplit<T> {
        let s = self.star();
        let plus = *self + s;
        let minus = *self - s;
        let half = T::lit(0.5);
        let f = half * plus.norm2();
        let g = half * minus.norm2();
        let n = self.norm2();
        let w = self.wedge_square();
        let wedge_defect = (f - (n + w)).abs().max((g - (n - w)).abs());
        SdSplit { plus, minus, f, g, wedge_defect }
    }

    /// Components in the frame whose vectors have components `q[A]` in the
    /// current frame.
    pub fn rotated(&self, q: &[Vec4<T>; 4]) -> Self {
        let m = self.to_skew();
        Self {
            f: PAIRS.map(|(a, b)| {
                let mut s = T::zero();
                for i in 0..4 {
                    for j in 0..4 {
                        s += q[a][i] * q[b][j] * m[i][j];
                    }
                }
                s
            }),
        }
    }

    pub fn max_abs(&self) -> T {
        self.f.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T: Real> Add for TwoFormPoint<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { f: std::array::from_fn(|k| self.f[k] + o.f[k]) }
    }
}

impl<T: Real> Sub for TwoFormPoint<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { f: std::array::from_fn(|k| self.f[k] - o.f[k]) }
    }
}

impl<T: Real> Neg for TwoFormPoint<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { f: self.f.map(|v| -v) }
    }
}

impl<T: Real> Mul<T> for TwoFormPoint<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self { f: self.f.map(|v| v * k) }
    }
}

/// Self-dual / anti-self-dual split with `F`, `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdSplit<T> {
    pub plus: TwoFormPoint<T>,
    pub minus: TwoFormPoint<T>,
    pub f: T,
    pub g: T,
    /// Disagreement between the norm and wedge expressions of `F`, `G`.
    pub wedge_defect: T,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_examples() {
        let e12 = TwoFormPoint::new([1.0f64, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(e12.star().f, [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let e13 = TwoFormPoint::new([0.0f64, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(e13.star().get(1, 3), -1.0);
        assert_eq!(e13.star().get(3, 1), 1.0);
    }

    /// `φ ∧ ∗ψ = ⟨φ, ψ⟩ vol`, with the wedge of 2-forms computed from the
    /// permutation sign of the four indices.
    #[test]
    fn star_matches_volume_pairing() {
        fn perm_sign(p: [usize; 4]) -> f64 {
            let mut s = 1.0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if p[i] > p[j] {
                        s = -s;
                    }
                }
            }
            s
        }
        for a in 0..6 {
            for b in 0..6 {
                let mut phi = TwoFormPoint::<f64>::zero();
                phi.f[a] = 1.0;
                let mut psi = TwoFormPoint::<f64>::zero();
                psi.f[b] = 1.0;
                let s = psi.star();
                let mut wedge = 0.0;
                for (k, &(i, j)) in PAIRS.iter().enumerate() {
                    for (l, &(m, n)) in PAIRS.iter().enumerate() {
                        let idx = [i, j, m, n];
                        let mut sorted = idx;
                        sorted.sort();
                        if sorted == [0, 1, 2, 3] {
                            wedge += phi.f[k] * s.f[l] * perm_sign(idx);
                        }
                    }
                }
                assert_eq!(wedge, phi.inner(&psi), "{a} {b}");
            }
        }
    }

    #[test]
    fn split_examples() {
        let (l1, l2) = (1.7f64, -0.4);
        let phi = TwoFormPoint::new([l1, 0.0, 0.0, 0.0, 0.0, l2]);
        let s = phi.sd_split();
        assert!((s.f - (l1 + l2).powi(2)).abs() < 1e-14);
        assert!((s.g - (l1 - l2).powi(2)).abs() < 1e-14);
        let e12 = TwoFormPoint::new([1.0f64, 0.0, 0.0, 0.0, 0.0, 0.0]).sd_split();
        assert_eq!((e12.f, e12.g), (1.0, 1.0));
        let sd = TwoFormPoint::new([1.0f64, 2.0, 3.0, 3.0, -2.0, 1.0]);
        assert_eq!(sd.star(), sd);
        assert_eq!(sd.sd_split().g, 0.0);
    }
}
