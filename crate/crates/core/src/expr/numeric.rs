//! Numeric expression trees, evaluated in floating point with forward-mode
//! derivatives.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Float;

use super::taylor::{Layout, Taylor};
use super::ExprError;
use crate::field::{q_to_f64, Q};

/// Expression tree; unlike [`RatExpr`](super::RatExpr) it admits `sqrt`.
#[derive(Clone, Debug, PartialEq)]
pub enum NumExpr {
    Const(Q),
    Var(String),
    Add(Box<NumExpr>, Box<NumExpr>),
    Sub(Box<NumExpr>, Box<NumExpr>),
    Mul(Box<NumExpr>, Box<NumExpr>),
    Div(Box<NumExpr>, Box<NumExpr>),
    Neg(Box<NumExpr>),
    Pow(Box<NumExpr>, i32),
    Sqrt(Box<NumExpr>),
}

/// Value and low-order partial derivatives at a point.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    pub value: T,
    /// First partials in the order of the requested variables.
    pub grad: Vec<T>,
    /// Second partials, `hess[i][j]`.
    pub hess: Vec<Vec<T>>,
}

impl NumExpr {
    pub fn var(name: &str) -> Self {
        NumExpr::Var(name.to_string())
    }

    pub fn int(n: i64) -> Self {
        NumExpr::Const(Q::from_integer(n.into()))
    }

    /// Names of the variables in the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            NumExpr::Const(_) => {}
            NumExpr::Var(v) => out.push(v.clone()),
            NumExpr::Add(a, b) | NumExpr::Sub(a, b) | NumExpr::Mul(a, b) | NumExpr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            NumExpr::Neg(a) | NumExpr::Pow(a, _) | NumExpr::Sqrt(a) => a.collect_vars(out),
        }
    }

    /// Replaces variables by subtrees.
    pub fn substitute(&self, map: &HashMap<String, NumExpr>) -> NumExpr {
        let rec = |e: &NumExpr| Box::new(e.substitute(map));
        match self {
            NumExpr::Const(_) => self.clone(),
            NumExpr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            NumExpr::Add(a, b) => NumExpr::Add(rec(a), rec(b)),
            NumExpr::Sub(a, b) => NumExpr::Sub(rec(a), rec(b)),
            NumExpr::Mul(a, b) => NumExpr::Mul(rec(a), rec(b)),
            NumExpr::Div(a, b) => NumExpr::Div(rec(a), rec(b)),
            NumExpr::Neg(a) => NumExpr::Neg(rec(a)),
            NumExpr::Pow(a, e) => NumExpr::Pow(rec(a), *e),
            NumExpr::Sqrt(a) => NumExpr::Sqrt(rec(a)),
        }
    }

    /// Evaluates as a Taylor series; `vars[i]` is expanded as the i-th series
    /// variable, every other name must be bound in `consts`.
    pub fn eval_series<T: Float>(
        &self,
        lay: &Arc<Layout>,
        vars: &[(&str, T)],
        consts: &HashMap<String, T>,
    ) -> Result<Taylor<T>, ExprError> {
        let cst = |v: T| Taylor::constant(lay, v);
        Ok(match self {
            NumExpr::Const(c) => cst(T::from(q_to_f64(c)).unwrap()),
            NumExpr::Var(v) => {
                if let Some(i) = vars.iter().position(|(n, _)| n == v) {
                    Taylor::variable(lay, i, vars[i].1)
                } else if let Some(&x) = consts.get(v) {
                    cst(x)
                } else {
                    return Err(ExprError::UnboundVariable(v.clone()));
                }
            }
            NumExpr::Add(a, b) => a.eval_series(lay, vars, consts)? + b.eval_series(lay, vars, consts)?,
            NumExpr::Sub(a, b) => a.eval_series(lay, vars, consts)? - b.eval_series(lay, vars, consts)?,
            NumExpr::Mul(a, b) => a.eval_series(lay, vars, consts)? * b.eval_series(lay, vars, consts)?,
            NumExpr::Div(a, b) => {
                let d = b.eval_series(lay, vars, consts)?;
                if d.value().is_zero() || !d.value().is_finite() {
                    return Err(self.domain(b, "division by zero"));
                }
                a.eval_series(lay, vars, consts)? / d
            }
            NumExpr::Neg(a) => -a.eval_series(lay, vars, consts)?,
            NumExpr::Pow(a, e) => {
                let b = a.eval_series(lay, vars, consts)?;
                if *e < 0 && b.value().is_zero() {
                    return Err(self.domain(a, "negative power of zero"));
                }
                b.powi(*e)
            }
            NumExpr::Sqrt(a) => {
                let b = a.eval_series(lay, vars, consts)?;
                let v = b.value();
                if v < T::zero() || (v.is_zero() && lay.order() > 0) {
                    return Err(self.domain(a, "sqrt of a non-positive value"));
                }
                b.sqrt()
            }
        })
    }

    fn domain(&self, _at: &NumExpr, msg: &str) -> ExprError {
        ExprError::Domain { expr: self.to_string(), msg: msg.to_string() }
    }

    /// Plain evaluation.
    pub fn eval<T: Float>(&self, point: &HashMap<String, T>) -> Result<T, ExprError> {
        let lay = Layout::new(0, 0);
        Ok(self.eval_series(&lay, &[], point)?.value())
    }

    /// Value, gradient and Hessian with respect to `wrt` at `point`.
    pub fn eval_numeric<T: Float>(
        &self,
        point: &HashMap<String, T>,
        wrt: &[&str],
        order: usize,
    ) -> Result<Jet<T>, ExprError> {
        let lay = Layout::new(wrt.len(), order.min(2));
        let mut vars = Vec::with_capacity(wrt.len());
        for &w in wrt {
            let v = *point.get(w).ok_or_else(|| ExprError::UnboundVariable(w.to_string()))?;
            vars.push((w, v));
        }
        let t = self.eval_series(&lay, &vars, point)?;
        let n = wrt.len();
        let unit = |i: usize, j: Option<usize>| {
            let mut m = vec![0u8; n];
            m[i] += 1;
            if let Some(j) = j {
                m[j] += 1;
            }
            m
        };
        let grad = if order >= 1 { (0..n).map(|i| t.derivative(&unit(i, None))).collect() } else { vec![] };
        let hess = if order >= 2 {
            (0..n).map(|i| (0..n).map(|j| t.derivative(&unit(i, Some(j)))).collect()).collect()
        } else {
            vec![]
        };
        Ok(Jet { value: t.value(), grad, hess })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_numeric;

    fn pt(x: f64, y: f64) -> HashMap<String, f64> {
        HashMap::from([("x".to_string(), x), ("y".to_string(), y)])
    }

    #[test]
    fn value_and_gradient() {
        let e = parse_numeric("x^2 + y").unwrap();
        let j = e.eval_numeric(&pt(2.0, 3.0), &["x", "y"], 2).unwrap();
        assert_eq!(j.value, 7.0);
        assert_eq!(j.grad, vec![4.0, 1.0]);
        assert_eq!(j.hess[0][0], 2.0);
    }

    #[test]
    fn square_root_value() {
        let e = parse_numeric("sqrt(y^2 - 2*x)").unwrap();
        let v = e.eval(&pt(-1.0, 1.0)).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse_numeric("sqrt(y - 2)").unwrap();
        match e.eval(&pt(0.0, 1.0)) {
            Err(ExprError::Domain { expr, .. }) => assert_eq!(expr, "sqrt(y - 2)"),
            other => panic!("{other:?}"),
        }
        let e = parse_numeric("1/(x - y)").unwrap();
        assert!(matches!(e.eval(&pt(1.0, 1.0)), Err(ExprError::Domain { .. })));
        assert!(matches!(e.eval(&HashMap::<String, f64>::new()), Err(ExprError::UnboundVariable(_))));
    }
}
