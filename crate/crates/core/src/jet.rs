//! Truncated Taylor arithmetic in four variables up to total order three.
//!
//! A [`Jet3`] stores the *raw Taylor coefficients* `c_α = ∂^α f(p) / α!` for
//! every multi-index `|α| ≤ 3` (35 slots). With that normalization a product
//! of jets is plain truncated polynomial convolution. Every accessor that
//! hands out a derivative value multiplies by `α!`; the raw coefficients are
//! only exposed through [`Jet3::taylor_coefficient`].
//!
//! Differentiating a jet with [`Jet3::partial`] loses one order: the result is
//! exact through order two and its order-three slots are zero. Callers that
//! chain derivatives track how many orders remain valid.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

use crate::scalar::Real;

/// Number of independent variables.
pub const VARS: usize = 4;
/// Maximal total order.
pub const ORDER: usize = 3;
/// Number of multi-indices with `|α| ≤ 3` in four variables.
pub const SLOTS: usize = 35;

/// Failure of a jet operation whose point value lies outside the domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("{op} undefined at argument value {value}")]
    Domain { op: &'static str, value: f64 },
}

struct Tables {
    exps: [[u8; VARS]; SLOTS],
    // exponent tuple (each entry 0..=3) packed base 4 -> slot, u8::MAX if |α| > 3
    lookup: [u8; 256],
    // (a, b, a+b) for all slot pairs with |a| + |b| <= 3
    products: Vec<(u8, u8, u8)>,
    // products restricted to factors without constant term
    nil_products: Vec<(u8, u8, u8)>,
    factorial: [f64; SLOTS],
    degree: [u8; SLOTS],
}

fn pack(e: &[u8; VARS]) -> usize {
    e.iter().fold(0usize, |acc, &x| acc * 4 + x as usize)
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exps = Vec::with_capacity(SLOTS);
        // graded order: degree, then lexicographic in sorted axis tuples
        exps.push([0u8; VARS]);
        for i in 0..VARS {
            let mut e = [0u8; VARS];
            e[i] += 1;
            exps.push(e);
        }
        for i in 0..VARS {
            for j in i..VARS {
                let mut e = [0u8; VARS];
                e[i] += 1;
                e[j] += 1;
                exps.push(e);
            }
        }
        for i in 0..VARS {
            for j in i..VARS {
                for k in j..VARS {
                    let mut e = [0u8; VARS];
                    e[i] += 1;
                    e[j] += 1;
                    e[k] += 1;
                    exps.push(e);
                }
            }
        }
        assert_eq!(exps.len(), SLOTS);
        let mut lookup = [u8::MAX; 256];
        let mut factorial = [1.0; SLOTS];
        let mut degree = [0u8; SLOTS];
        for (s, e) in exps.iter().enumerate() {
            lookup[pack(e)] = s as u8;
            factorial[s] = e
                .iter()
                .map(|&k| (1..=k as u32).product::<u32>() as f64)
                .product();
            degree[s] = e.iter().sum();
        }
        let mut products = Vec::new();
        for a in 0..SLOTS {
            for b in 0..SLOTS {
                if degree[a] + degree[b] <= ORDER as u8 {
                    let mut e = [0u8; VARS];
                    for v in 0..VARS {
                        e[v] = exps[a][v] + exps[b][v];
                    }
                    products.push((a as u8, b as u8, lookup[pack(&e)]));
                }
            }
        }
        let nil_products = products
            .iter()
            .copied()
            .filter(|&(a, b, _)| a != 0 && b != 0)
            .collect();
        Tables {
            exps: exps.try_into().unwrap(),
            lookup,
            products,
            nil_products,
            factorial,
            degree,
        }
    })
}

fn slot_of(e: &[u8; VARS]) -> Option<usize> {
    if e.iter().map(|&x| x as usize).sum::<usize>() > ORDER {
        return None;
    }
    Some(tables().lookup[pack(e)] as usize)
}

/// Slot index of the multi-index obtained by counting the listed axes.
pub fn slot(axes: &[usize]) -> usize {
    let mut e = [0u8; VARS];
    for &a in axes {
        e[a] += 1;
    }
    slot_of(&e).expect("multi-index order exceeds 3")
}

/// Exponent tuple of a slot.
pub fn exponents(slot: usize) -> [u8; VARS] {
    tables().exps[slot]
}

/// `α!` for the multi-index stored in `slot`.
pub fn factorial(slot: usize) -> f64 {
    tables().factorial[slot]
}

/// A value together with all partial derivatives up to order three.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet3<T> {
    c: [T; SLOTS],
}

impl<T: Real> Default for Jet3<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> fmt::Debug for Jet3<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<_> = (0..SLOTS)
            .filter(|&s| self.c[s] != T::zero())
            .map(|s| (exponents(s), self.c[s]))
            .collect();
        f.debug_struct("Jet3").field("taylor", &nz).finish()
    }
}

impl<T: Real> Jet3<T> {
    pub fn zero() -> Self {
        Self { c: [T::zero(); SLOTS] }
    }

    pub fn constant(v: T) -> Self {
        let mut j = Self::zero();
        j.c[0] = v;
        j
    }

    /// Jet of the coordinate function `x_i` at `x0`.
    pub fn lift_variable(i: usize, x0: T) -> Self {
        assert!(i < VARS, "axis index {i} out of range");
        let mut j = Self::constant(x0);
        j.c[1 + i] = T::one();
        j
    }

    /// Lifts a point to the four coordinate jets.
    pub fn lift_point(p: &[T; VARS]) -> [Self; VARS] {
        std::array::from_fn(|i| Self::lift_variable(i, p[i]))
    }

    pub fn from_taylor(c: [T; SLOTS]) -> Self {
        Self { c }
    }

    #[inline]
    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Raw Taylor coefficient `∂^α f / α!` in the given slot.
    #[inline]
    pub fn taylor_coefficient(&self, slot: usize) -> T {
        self.c[slot]
    }

    pub fn taylor(&self) -> &[T; SLOTS] {
        &self.c
    }

    /// Derivative value `∂^α f` where `α` counts the listed axes.
    pub fn derivative(&self, axes: &[usize]) -> T {
        let s = slot(axes);
        self.c[s] * T::lit(factorial(s))
    }

    /// First partial derivative value.
    #[inline]
    pub fn d1(&self, i: usize) -> T {
        self.c[1 + i]
    }

    /// Second partial derivative value.
    pub fn d2(&self, i: usize, j: usize) -> T {
        self.derivative(&[i, j])
    }

    pub fn gradient(&self) -> [T; VARS] {
        std::array::from_fn(|i| self.d1(i))
    }

    /// The jet of `∂f/∂x_i`; exact through order two.
    pub fn partial(&self, i: usize) -> Self {
        let t = tables();
        let mut out = Self::zero();
        for s in 0..SLOTS {
            if t.degree[s] as usize >= ORDER {
                continue;
            }
            let mut e = t.exps[s];
            e[i] += 1;
            let up = t.lookup[pack(&e)] as usize;
            out.c[s] = self.c[up] * T::lit(e[i] as f64);
        }
        out
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let t = tables();
        let mut out = *self;
        for s in 0..SLOTS {
            if t.degree[s] as usize > order {
                out.c[s] = T::zero();
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// Evaluates the truncated Taylor polynomial at `p + dx`.
    pub fn eval_offset(&self, dx: &[T; VARS]) -> T {
        let t = tables();
        let mut acc = T::zero();
        for s in 0..SLOTS {
            let mut term = self.c[s];
            for v in 0..VARS {
                for _ in 0..t.exps[s][v] {
                    term *= dx[v];
                }
            }
            acc += term;
        }
        acc
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        out.c.iter_mut().for_each(|x| *x *= k);
        out
    }

    fn nilpotent_mul(a: &Self, b: &Self) -> Self {
        let mut out = Self::zero();
        for &(i, j, k) in &tables().nil_products {
            out.c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        out
    }

    /// `f(a)` given `f, f', f'', f'''` at `a.value()`.
    pub fn compose(&self, d: [T; 4]) -> Self {
        let mut t = *self;
        t.c[0] = T::zero();
        let t2 = Self::nilpotent_mul(&t, &t);
        let t3 = Self::nilpotent_mul(&t2, &t);
        let half = T::lit(0.5);
        let sixth = T::lit(1.0 / 6.0);
        let mut out = t.scale(d[1]) + t2.scale(d[2] * half) + t3.scale(d[3] * sixth);
        out.c[0] = d[0];
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let a = self.value();
        if !(a > T::zero()) {
            return Err(JetError::Domain { op: "log", value: a.as_f64() });
        }
        let r = a.recip();
        Ok(self.compose([a.ln(), r, -r * r, T::lit(2.0) * r * r * r]))
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let a = self.value();
        if !(a > T::zero()) {
            return Err(JetError::Domain { op: "sqrt", value: a.as_f64() });
        }
        let s = a.sqrt();
        let d1 = T::lit(0.5) / s;
        let d2 = -T::lit(0.25) / (a * s);
        let d3 = T::lit(0.375) / (a * a * s);
        Ok(self.compose([s, d1, d2, d3]))
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let a = self.value();
        if a == T::zero() || !a.is_finite() {
            return Err(JetError::DivisionByZero);
        }
        let r = a.recip();
        let r2 = r * r;
        Ok(self.compose([r, -r2, T::lit(2.0) * r2 * r, T::lit(-6.0) * r2 * r2]))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, JetError> {
        Ok(*self * rhs.recip()?)
    }

    /// Integer power by repeated truncated multiplication (valid for any base).
    pub fn powi(&self, n: i32) -> Result<Self, JetError> {
        let mut base = *self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(T::one());
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    /// Real power. Integral exponents accept any base; otherwise the base
    /// value must be positive.
    pub fn powf(&self, r: T) -> Result<Self, JetError> {
        if r.fract() == T::zero() && r.abs() <= T::lit(i32::MAX as f64) {
            return self.powi(r.to_i32().unwrap());
        }
        let a = self.value();
        if !(a > T::zero()) {
            return Err(JetError::Domain { op: "pow", value: a.as_f64() });
        }
        let one = T::one();
        let two = T::lit(2.0);
        let p0 = a.powf(r);
        let d1 = r * a.powf(r - one);
        let d2 = r * (r - one) * a.powf(r - two);
        let d3 = r * (r - one) * (r - two) * a.powf(r - T::lit(3.0));
        Ok(self.compose([p0, d1, d2, d3]))
    }
}

impl<T: Real> Add for Jet3<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real> AddAssign for Jet3<T> {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += *b;
        }
    }
}

impl<T: Real> Sub for Jet3<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Real> SubAssign for Jet3<T> {
    fn sub_assign(&mut self, rhs: Self) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= *b;
        }
    }
}

impl<T: Real> Neg for Jet3<T> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.c.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

impl<T: Real> Mul for Jet3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for &(i, j, k) in &tables().products {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl<T: Real> MulAssign for Jet3<T> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<T: Real> Add<T> for Jet3<T> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl<T: Real> Sub<T> for Jet3<T> {
    type Output = Self;
    fn sub(mut self, rhs: T) -> Self {
        self.c[0] -= rhs;
        self
    }
}

impl<T: Real> Mul<T> for Jet3<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Real> std::iter::Sum for Jet3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}
