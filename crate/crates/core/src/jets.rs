//! Calculus on the jet alphabet of three straight-line slope fields.
//!
//! The variables are `x`, `y` and the y-derivatives `B, B_y, B_yy, ...` of the
//! slopes `B` in `{P, Q, R}`. Each slope satisfies `B_x + B*B_y = 0`, so
//! x-derivatives are never variables: the total x-derivative sends
//! `B_y^k` to `-D_y^k(B*B_y)`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::RatExpr;

/// A rational function over the jet alphabet.
pub type JetExpr = RatExpr;

pub const BASES: [char; 3] = ['P', 'Q', 'R'];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("identity set is cyclic at {0}")]
    Cyclic(String),
    #[error("{0} does not occur in the expression")]
    NotPresent(String),
    #[error("expression is not linear in {0}")]
    NotLinear(String),
    #[error("residual of {name} does not vanish: {residual}")]
    Inconsistent { name: String, residual: String },
}

/// Name of `B` differentiated `k` times in y.
pub fn jet_var(base: char, k: usize) -> String {
    if k == 0 {
        base.to_string()
    } else {
        format!("{base}_{}", "y".repeat(k))
    }
}

/// Splits a jet variable name into base and order.
pub fn parse_jet_var(name: &str) -> Option<(char, usize)> {
    let mut chars = name.chars();
    let b = chars.next()?;
    if !BASES.contains(&b) {
        return None;
    }
    let rest = chars.as_str();
    if rest.is_empty() {
        return Some((b, 0));
    }
    let ys = rest.strip_prefix('_')?;
    if ys.is_empty() || !ys.chars().all(|c| c == 'y') {
        return None;
    }
    Some((b, ys.len()))
}

/// Highest y-order of each base present.
pub fn jet_order(e: &JetExpr) -> BTreeMap<char, usize> {
    let mut out = BTreeMap::new();
    for n in e.vars().names() {
        if let Some((b, k)) = parse_jet_var(n) {
            let slot = out.entry(b).or_insert(0);
            *slot = (*slot).max(k);
        }
    }
    out
}

/// Total derivative in y.
pub fn total_dy(e: &JetExpr) -> JetExpr {
    e.apply_derivation(|n| {
        if n == "y" {
            Some(RatExpr::one())
        } else {
            parse_jet_var(n).map(|(b, k)| RatExpr::var(&jet_var(b, k + 1)))
        }
    })
}

/// `D_x(B_y^k) = -D_y^k(B*B_y) = -sum_j C(k,j) B_j B_(k+1-j)`.
fn dx_image(b: char, k: usize) -> RatExpr {
    let mut acc = RatExpr::zero();
    let mut binom: i64 = 1;
    for j in 0..=k {
        let t = RatExpr::var(&jet_var(b, j)) * RatExpr::var(&jet_var(b, k + 1 - j));
        acc = acc + t.scale(&crate::field::q(binom, 1));
        binom = binom * (k - j) as i64 / (j + 1) as i64;
    }
    -acc
}

/// Total derivative in x under the Euler reduction.
pub fn total_dx(e: &JetExpr) -> JetExpr {
    e.apply_derivation(|n| {
        if n == "x" {
            Some(RatExpr::one())
        } else {
            parse_jet_var(n).map(|(b, k)| dx_image(b, k))
        }
    })
}

/// `lhs = rhs`, with `lhs` a single jet variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedIdentity {
    pub name: String,
    pub lhs: String,
    pub rhs: JetExpr,
    pub provenance: Vec<String>,
}

#[derive(Serialize)]
struct IdentityRecord<'a> {
    name: &'a str,
    lhs: &'a str,
    rhs: String,
    provenance: &'a [String],
}

/// JSON transcript `[{name, lhs, rhs, provenance}]`.
pub fn transcript_json(ids: &[DerivedIdentity]) -> String {
    let recs: Vec<IdentityRecord> = ids
        .iter()
        .map(|d| IdentityRecord { name: &d.name, lhs: &d.lhs, rhs: d.rhs.to_string(), provenance: &d.provenance })
        .collect();
    serde_json::to_string_pretty(&recs).expect("serializable")
}

/// The rewrite `var -> rhs` for `var` itself or a y-prolongation of a solved variable.
fn rule_for(name: &str, ids: &[DerivedIdentity]) -> Option<JetExpr> {
    if let Some(d) = ids.iter().find(|d| d.lhs == name) {
        return Some(d.rhs.clone());
    }
    let (b, k) = parse_jet_var(name)?;
    // prolong the closest lower-order identity of the same base
    let (k0, d) = ids
        .iter()
        .filter_map(|d| parse_jet_var(&d.lhs).filter(|&(b0, k0)| b0 == b && k0 < k).map(|(_, k0)| (k0, d)))
        .max_by_key(|(k0, _)| *k0)?;
    let mut r = d.rhs.clone();
    for _ in k0..k {
        r = total_dy(&r);
    }
    Some(r)
}

/// Rejects identity sets whose rewrites can feed back into themselves
/// without lowering the jet order.
fn check_acyclic(ids: &[DerivedIdentity]) -> Result<(), JetError> {
    // edge lhs -> reducible variable of equal or higher order in its rhs
    fn visit(v: &str, ids: &[DerivedIdentity], stack: &mut Vec<String>) -> Result<(), JetError> {
        if stack.iter().any(|s| s == v) {
            return Err(JetError::Cyclic(v.to_string()));
        }
        let Some(d) = ids.iter().find(|d| d.lhs == v) else {
            return Ok(());
        };
        let k = parse_jet_var(v).map_or(0, |(_, k)| k);
        stack.push(v.to_string());
        for n in d.rhs.vars().names() {
            if let Some((_, kn)) = parse_jet_var(n) {
                if kn >= k && rule_for(n, ids).is_some() {
                    visit(n, ids, stack)?;
                }
            }
        }
        stack.pop();
        Ok(())
    }
    for d in ids {
        visit(&d.lhs, ids, &mut Vec::new())?;
    }
    Ok(())
}

/// Normal form of `e` modulo solved identities (and their y-prolongations),
/// always eliminating the highest-order reducible variable first.
pub fn reduce_modulo(e: &JetExpr, ids: &[DerivedIdentity]) -> Result<JetExpr, JetError> {
    check_acyclic(ids)?;
    let mut cur = e.clone();
    let mut steps = 0usize;
    loop {
        let mut best: Option<(usize, String)> = None;
        for n in cur.vars().names() {
            let Some((_, k)) = parse_jet_var(n) else { continue };
            if rule_for(n, ids).is_none() {
                continue;
            }
            if best.as_ref().is_none_or(|(bk, bn)| (k, n.as_str()) > (*bk, bn.as_str())) {
                best = Some((k, n.clone()));
            }
        }
        let Some((_, v)) = best else {
            return Ok(cur);
        };
        let rhs = rule_for(&v, ids).unwrap();
        if rhs.contains(&v) {
            return Err(JetError::Cyclic(v));
        }
        cur = cur.substitute(&v, &rhs);
        steps += 1;
        if steps > 10_000 {
            return Err(JetError::Cyclic(v));
        }
    }
}

/// Solves `e = 0` for `var`, which must occur linearly in the numerator.
pub fn solve_linear(e: &JetExpr, var: &str) -> Result<JetExpr, JetError> {
    if !e.contains(var) {
        return Err(JetError::NotPresent(var.to_string()));
    }
    let n = RatExpr::from_poly(e.num().clone());
    let a = n.diff(var);
    if a.contains(var) {
        return Err(JetError::NotLinear(var.to_string()));
    }
    let b = n.substitute(var, &RatExpr::zero());
    Ok(-(b / a))
}

/// Highest-order jet variable of an expression (ties broken lexicographically).
pub fn leading_jet_var(e: &JetExpr) -> Option<String> {
    e.vars()
        .names()
        .iter()
        .filter_map(|n| parse_jet_var(n).map(|(_, k)| (k, n.clone())))
        .max()
        .map(|(_, n)| n)
}

/// Steps of the collinear-focal-points derivation.
pub fn lemma1_pipeline() -> Result<Vec<DerivedIdentity>, JetError> {
    let v = |s: &str| RatExpr::var(s);
    let (p, q, r) = (v("P"), v("Q"), v("R"));
    let (py, qy, ry) = (v("P_y"), v("Q_y"), v("R_y"));
    let mut ids: Vec<DerivedIdentity> = Vec::new();

    // (i) the collinearity constraint solved for R_y
    let delta = &py * &(&q - &r) + &qy * &(&r - &p) + &ry * &(&p - &q);
    let rhs = solve_linear(&delta, "R_y")?;
    ids.push(DerivedIdentity { name: "R_y".into(), lhs: "R_y".into(), rhs, provenance: vec![] });

    // (ii) R_xy from the Euler equation against D_x of (i)
    let res = total_dx(&v("R_y")) - total_dx(&ids[0].rhs);
    let res = reduce_modulo(&res, &ids)?;
    ids.push(solved_step("Q_yy", &res, &ids)?);

    // (iii) D_x of (ii)
    let res = total_dx(&v("Q_yy")) - total_dx(&v("P_yy"));
    let res = reduce_modulo(&res, &ids)?;
    ids.push(solved_step("P_yyy", &res, &ids)?);

    // (iv) D_x of (iii)
    let res = total_dx(&v("P_yyy")) - total_dx(&ids[2].rhs);
    let res = reduce_modulo(&res, &ids)?;
    ids.push(vanishing_step("P_yy", &res, &ids)?);
    Ok(ids)
}

fn solved_step(name: &str, residual: &JetExpr, prior: &[DerivedIdentity]) -> Result<DerivedIdentity, JetError> {
    let var = leading_jet_var(residual).ok_or_else(|| JetError::NotPresent(name.into()))?;
    if var != name {
        return Err(JetError::Inconsistent { name: name.into(), residual: residual.to_string() });
    }
    let rhs = solve_linear(residual, &var)?;
    Ok(DerivedIdentity {
        name: name.into(),
        lhs: var,
        rhs,
        provenance: prior.iter().map(|d| d.name.clone()).collect(),
    })
}

/// The residual's numerator must be a power of `var` times a factor free of it;
/// the identity is then `var = 0`.
fn vanishing_step(var: &str, residual: &JetExpr, prior: &[DerivedIdentity]) -> Result<DerivedIdentity, JetError> {
    let num = residual.num();
    let x = crate::expr::Poly::var(var);
    let (rest, k) = crate::expr::strip_factor(num, &x);
    if k == 0 || rest.vars().index(var).is_some() {
        return Err(JetError::Inconsistent { name: var.into(), residual: residual.to_string() });
    }
    Ok(DerivedIdentity {
        name: var.into(),
        lhs: var.into(),
        rhs: RatExpr::zero(),
        provenance: prior.iter().map(|d| d.name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn e(s: &str) -> RatExpr {
        parse(s).unwrap()
    }

    #[test]
    fn vertical_derivative() {
        assert_eq!(total_dy(&e("P")), e("P_y"));
        assert_eq!(total_dy(&e("x*Q_y")), e("x*Q_yy"));
        assert_eq!(total_dy(&e("P*P_y")), e("P_y^2 + P*P_yy"));
    }

    #[test]
    fn horizontal_derivative() {
        assert_eq!(total_dx(&e("P")), e("-P*P_y"));
        assert_eq!(total_dx(&e("P_y")), e("-P_y^2 - P*P_yy"));
        assert_eq!(total_dx(&e("x")), e("1"));
        assert_eq!(total_dx(&e("P_yy")), e("-3*P_y*P_yy - P*P_yyy"));
    }

    #[test]
    fn names() {
        assert_eq!(parse_jet_var("P_yyy"), Some(('P', 3)));
        assert_eq!(parse_jet_var("R"), Some(('R', 0)));
        assert_eq!(parse_jet_var("P_x"), None);
        assert_eq!(parse_jet_var("x"), None);
    }

    #[test]
    fn reduction_examples() {
        let id = |l: &str, r: &str| DerivedIdentity { name: l.into(), lhs: l.into(), rhs: e(r), provenance: vec![] };
        assert!(reduce_modulo(&e("P_yy"), &[id("P_yy", "0")]).unwrap().is_zero());
        let ri = id("R_y", "((R-Q)*P_y + (P-R)*Q_y)/(P-Q)");
        assert_eq!(reduce_modulo(&e("R_y*(P-Q)"), &[ri.clone()]).unwrap(), e("(R-Q)*P_y + (P-R)*Q_y"));
        assert!(reduce_modulo(&(e("R_y") - ri.rhs.clone()), &[ri]).unwrap().is_zero());
        let cyc = [id("Q_yy", "P_yy"), id("P_yy", "Q_yy")];
        assert!(matches!(reduce_modulo(&e("P_yy"), &cyc), Err(JetError::Cyclic(_))));
    }

    #[test]
    fn pipeline_runs() {
        let ids = lemma1_pipeline().unwrap();
        let want = [
            ("R_y", "((R-Q)*P_y + (P-R)*Q_y)/(P-Q)"),
            ("Q_yy", "P_yy"),
            ("P_yyy", "3*P_yy*(P_y-Q_y)/(Q-P)"),
            ("P_yy", "0"),
        ];
        assert_eq!(ids.len(), want.len());
        for (d, (l, r)) in ids.iter().zip(want) {
            assert_eq!(d.lhs, l);
            assert_eq!(d.rhs, e(r));
        }
    }
}
