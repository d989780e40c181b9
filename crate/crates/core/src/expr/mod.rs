//! A small arithmetic expression language for metric components, conformal
//! factors and 2-form components.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?        right-associative
//! exponent := '-' exponent | power
//! atom   := number | 'pi' | x1..x4 | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt
//! ```
//!
//! Angles are radians. Expressions evaluate over any [`Numeric`] scalar, in
//! particular plain reals and [`Jet3`](crate::jet::Jet3).

mod ast;
mod eval;
mod parser;

pub use ast::{BinOp, Expr, Func};
pub use eval::Numeric;
pub use parser::parse;

use thiserror::Error;

/// Errors raised while parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {expected:?}")]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("empty expression")]
    Empty,
    #[error("{op} domain error in `{subexpr}` at point {point:?}")]
    Domain {
        op: &'static str,
        subexpr: String,
        point: [f64; 4],
    },
}
