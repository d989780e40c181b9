use std::ops::{Add, Mul, Neg, Sub};

use super::ast::{BinOp, Expr, Func};
use super::ExprError;
use crate::jet::{Jet3, JetError};
use crate::scalar::Real;

/// Scalars an expression can be evaluated over.
pub trait Numeric<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_real(v: T) -> Self;
    fn real_value(&self) -> T;
    fn try_div(&self, rhs: &Self) -> Result<Self, JetError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn try_ln(&self) -> Result<Self, JetError>;
    fn try_sqrt(&self) -> Result<Self, JetError>;
    fn try_powf(&self, r: T) -> Result<Self, JetError>;
}

impl<T: Real> Numeric<T> for T {
    fn from_real(v: T) -> Self {
        v
    }
    fn real_value(&self) -> T {
        *self
    }
    fn try_div(&self, rhs: &Self) -> Result<Self, JetError> {
        if *rhs == T::zero() {
            Err(JetError::DivisionByZero)
        } else {
            Ok(*self / *rhs)
        }
    }
    fn sin(&self) -> Self {
        num_traits::Float::sin(*self)
    }
    fn cos(&self) -> Self {
        num_traits::Float::cos(*self)
    }
    fn exp(&self) -> Self {
        num_traits::Float::exp(*self)
    }
    fn try_ln(&self) -> Result<Self, JetError> {
        if *self > T::zero() {
            Ok(num_traits::Float::ln(*self))
        } else {
            Err(JetError::Domain { op: "log", value: self.as_f64() })
        }
    }
    fn try_sqrt(&self) -> Result<Self, JetError> {
        if *self > T::zero() {
            Ok(num_traits::Float::sqrt(*self))
        } else if *self == T::zero() {
            // the jet form rejects 0; plain reals keep sqrt(0) = 0
            Ok(T::zero())
        } else {
            Err(JetError::Domain { op: "sqrt", value: self.as_f64() })
        }
    }
    fn try_powf(&self, r: T) -> Result<Self, JetError> {
        if r.fract() == T::zero() && r.abs() <= T::lit(i32::MAX as f64) {
            let n = r.to_i32().unwrap();
            if n < 0 && *self == T::zero() {
                return Err(JetError::DivisionByZero);
            }
            return Ok(self.powi(n));
        }
        if *self > T::zero() {
            Ok(num_traits::Float::powf(*self, r))
        } else {
            Err(JetError::Domain { op: "pow", value: self.as_f64() })
        }
    }
}

impl<T: Real> Numeric<T> for Jet3<T> {
    fn from_real(v: T) -> Self {
        Jet3::constant(v)
    }
    fn real_value(&self) -> T {
        self.value()
    }
    fn try_div(&self, rhs: &Self) -> Result<Self, JetError> {
        self.checked_div(rhs)
    }
    fn sin(&self) -> Self {
        Jet3::sin(self)
    }
    fn cos(&self) -> Self {
        Jet3::cos(self)
    }
    fn exp(&self) -> Self {
        Jet3::exp(self)
    }
    fn try_ln(&self) -> Result<Self, JetError> {
        self.ln()
    }
    fn try_sqrt(&self) -> Result<Self, JetError> {
        self.sqrt()
    }
    fn try_powf(&self, r: T) -> Result<Self, JetError> {
        self.powf(r)
    }
}

impl Expr {
    /// Evaluates with the coordinates `x1..x4` bound to `point`.
    pub fn eval<T: Real, N: Numeric<T>>(&self, point: &[N; 4]) -> Result<N, ExprError> {
        let located = |e: JetError, node: &Expr| {
            let op = match e {
                JetError::DivisionByZero => "division",
                JetError::Domain { op, .. } => op,
            };
            ExprError::Domain {
                op,
                subexpr: node.to_string(),
                point: std::array::from_fn(|i| point[i].real_value().as_f64()),
            }
        };
        Ok(match self {
            Expr::Num(v) => N::from_real(T::lit(*v)),
            Expr::Pi => N::from_real(T::PI()),
            Expr::Var(i) => point[*i],
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Call(f, a) => {
                let x = a.eval(point)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.try_ln().map_err(|e| located(e, self))?,
                    Func::Sqrt => x.try_sqrt().map_err(|e| located(e, self))?,
                }
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval(point)?;
                match op {
                    BinOp::Add => x + b.eval(point)?,
                    BinOp::Sub => x - b.eval(point)?,
                    BinOp::Mul => x * b.eval(point)?,
                    BinOp::Div => x.try_div(&b.eval(point)?).map_err(|e| located(e, self))?,
                    BinOp::Pow if b.is_constant() => {
                        let r: T = b.eval::<T, T>(&[T::zero(); 4])?;
                        x.try_powf(r).map_err(|e| located(e, self))?
                    }
                    BinOp::Pow => {
                        if !(x.real_value() > T::zero()) {
                            return Err(located(
                                JetError::Domain { op: "pow", value: x.real_value().as_f64() },
                                self,
                            ));
                        }
                        let y = b.eval(point)?;
                        (y * x.try_ln().map_err(|e| located(e, self))?).exp()
                    }
                }
            }
        })
    }

    /// Real-valued evaluation.
    pub fn eval_real<T: Real>(&self, p: &[T; 4]) -> Result<T, ExprError> {
        self.eval::<T, T>(p)
    }

    /// Jet of the expression at `p`.
    pub fn eval_jet<T: Real>(&self, p: &[T; 4]) -> Result<Jet3<T>, ExprError> {
        self.eval::<T, Jet3<T>>(&Jet3::lift_point(p))
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn product_jet() {
        let j = parse("x1*x2").unwrap().eval_jet(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.d1(0), 2.0);
        assert_eq!(j.d1(1), 1.0);
        assert_eq!(j.d2(0, 1), 1.0);
    }

    #[test]
    fn exp_jet_pure_derivatives() {
        let j = parse("exp(x3)").unwrap().eval_jet(&[0.0f64; 4]).unwrap();
        for axes in [&[2usize][..], &[2, 2], &[2, 2, 2]] {
            assert!((j.derivative(axes) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn division_by_zero_is_located() {
        let err = parse("1/x1").unwrap().eval_jet(&[0.0f64; 4]).unwrap_err();
        match err {
            crate::expr::ExprError::Domain { op, subexpr, point } => {
                assert_eq!(op, "division");
                assert_eq!(subexpr, "(1.0 / x1)");
                assert_eq!(point, [0.0; 4]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn right_associative_power_value() {
        assert_eq!(parse("2 ^ 3 ^ 2").unwrap().eval_real(&[0.0f64; 4]).unwrap(), 512.0);
    }

    #[test]
    fn pow_domain_rules() {
        let p = [-2.0f64, 0.5, 0.0, 0.0];
        assert_eq!(parse("x1^3").unwrap().eval_real(&p).unwrap(), -8.0);
        assert!(parse("x1^0.5").unwrap().eval_real(&p).is_err());
        assert!(parse("x1^x2").unwrap().eval_real(&p).is_err());
        let v = parse("x2^x2").unwrap().eval_jet(&p).unwrap();
        assert!((v.value() - 0.5f64.powf(0.5)).abs() < 1e-15);
        // d/dx x^x = x^x (ln x + 1)
        assert!((v.d1(1) - 0.5f64.powf(0.5) * (0.5f64.ln() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn negative_base_integer_power_jet() {
        let j = parse("x1^(-2)").unwrap().eval_jet(&[-2.0f64, 0.0, 0.0, 0.0]).unwrap();
        assert!((j.value() - 0.25).abs() < 1e-15);
        // d/dx x^-2 = -2 x^-3 = 0.25 at x = -2
        assert!((j.d1(0) - 0.25).abs() < 1e-15);
    }
}
