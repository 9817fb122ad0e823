//! Exact symbolic kernel: polynomials and rational functions over the
//! rationals, parsing and printing, elimination tools, and the numeric
//! expression layer with forward-mode derivatives.

mod elim;
pub(crate) mod gcd;
mod numeric;
mod parse;
pub(crate) mod poly;
mod ratfunc;
mod taylor;

use thiserror::Error;

pub use elim::{associated, reassemble, resultant, squarefree, strip_factor, trial_divide};
pub use gcd::{gcd, to_int_primitive};
pub use numeric::{Jet, NumExpr};
pub use parse::{parse, parse_numeric, parse_poly};
pub use poly::{Poly, VarSet};
pub use ratfunc::RatExpr;
pub use taylor::{Layout, Taylor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("division by zero at {pos}")]
    DivisionByZero { pos: usize },
    #[error("sqrt is not allowed in symbolic mode (at {pos})")]
    SqrtInSymbolic { pos: usize },
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("domain error in {expr}: {msg}")]
    Domain { expr: String, msg: String },
    #[error("input has degree zero in {0}")]
    DegreeZero(String),
    #[error("zero polynomial where a nonzero one is required")]
    ZeroInput,
    #[error("division by the zero polynomial")]
    ZeroDivisor,
}
