//! Elimination and factor tools: resultants, square-free decomposition and
//! trial division.

use num_traits::{One, Signed};

use super::gcd::{from_upoly, gcd, int_to_q, to_int_primitive, to_upoly, uresultant};
use super::poly::Poly;
use super::ExprError;
use crate::field::Q;

/// Sylvester resultant of `p` and `q` with respect to `var`.
pub fn resultant(p: &Poly<Q>, q: &Poly<Q>, var: &str) -> Result<Poly<Q>, ExprError> {
    let (p, q) = Poly::unify(p, q);
    let k = p.vars().index(var).ok_or_else(|| ExprError::DegreeZero(var.to_string()))?;
    let (dp, dq) = (p.degree_in(k), q.degree_in(k));
    if dp == 0 || dq == 0 {
        return Err(ExprError::DegreeZero(var.to_string()));
    }
    let (cp, zp) = to_int_primitive(&p);
    let (cq, zq) = to_int_primitive(&q);
    let r = uresultant(&to_upoly(&zp, k), &to_upoly(&zq, k));
    let scale = num_traits::pow(cp, dq as usize) * num_traits::pow(cq, dp as usize);
    Ok(int_to_q(&r).scale(&scale).pruned())
}

/// Content of `p` with respect to variable index `k` (a polynomial free of it).
fn content_in(p: &Poly<Q>, k: usize) -> Poly<Q> {
    let mut g = Poly::zero(p.vars().clone());
    for c in p.coefficients_in(k) {
        if c.is_zero() {
            continue;
        }
        g = if g.is_zero() { c.monic() } else { gcd(&g, &c) };
        if g.is_constant() {
            break;
        }
    }
    g.aligned(p.vars())
}

fn normalize_factor(f: Poly<Q>) -> Poly<Q> {
    let (_, z) = to_int_primitive(&f);
    int_to_q(&z).pruned()
}

/// Square-free decomposition: `p = const * prod f_i^m_i` with pairwise coprime,
/// square-free `f_i` (primitive with positive leading coefficient), one entry
/// per multiplicity, sorted by multiplicity.
pub fn squarefree(p: &Poly<Q>) -> Result<Vec<(Poly<Q>, u32)>, ExprError> {
    if p.is_zero() {
        return Err(ExprError::ZeroInput);
    }
    let mut out: Vec<(Poly<Q>, u32)> = Vec::new();
    sqf_rec(p, &mut out);
    out.sort_by_key(|(_, m)| *m);
    Ok(out)
}

fn push_factor(out: &mut Vec<(Poly<Q>, u32)>, f: Poly<Q>, m: u32) {
    if f.is_constant() {
        return;
    }
    let f = normalize_factor(f);
    if let Some(slot) = out.iter_mut().find(|(_, k)| *k == m) {
        slot.0 = normalize_factor(slot.0.mul(&f));
    } else {
        out.push((f, m));
    }
}

fn sqf_rec(p: &Poly<Q>, out: &mut Vec<(Poly<Q>, u32)>) {
    if p.is_constant() {
        return;
    }
    // monomial part
    let m = p.monomial_content();
    let p = if m.iter().any(|&e| e > 0) {
        for (k, &e) in m.iter().enumerate() {
            if e > 0 {
                let mut ex = vec![0u16; m.len()];
                ex[k] = 1;
                push_factor(out, Poly::monomial(p.vars().clone(), &ex, Q::one()), e as u32);
            }
        }
        p.div_monomial(&m)
    } else {
        p.clone()
    };
    if p.is_constant() {
        return;
    }
    let k = p.used_vars()[0];
    let c = content_in(&p, k);
    let pp = if c.is_constant() { p.clone() } else { p.div_exact(&c).expect("content divides") };
    if !c.is_constant() {
        sqf_rec(&c, out);
    }
    // Yun's algorithm in variable k
    let d = pp.derivative(k);
    let a0 = gcd(&pp, &d).aligned(pp.vars());
    let mut b = pp.div_exact(&a0).unwrap();
    let c1 = d.div_exact(&a0).unwrap();
    let mut dd = c1.sub(&b.derivative(k));
    let mut i = 1;
    while !b.is_constant() {
        let a = gcd(&b, &dd).aligned(b.vars());
        let nb = b.div_exact(&a).unwrap();
        let nc = dd.div_exact(&a).unwrap();
        dd = nc.sub(&nb.derivative(k));
        push_factor(out, a, i);
        b = nb;
        i += 1;
    }
}

/// Exact division `p / f`; `Ok(None)` when `f` does not divide `p`.
pub fn trial_divide(p: &Poly<Q>, f: &Poly<Q>) -> Result<Option<Poly<Q>>, ExprError> {
    if f.is_zero() {
        return Err(ExprError::ZeroDivisor);
    }
    Ok(p.div_exact(f).map(|q| q.pruned()))
}

/// Divides out every power of `f` from `p`; returns the quotient and the exponent.
pub fn strip_factor(p: &Poly<Q>, f: &Poly<Q>) -> (Poly<Q>, u32) {
    let mut cur = p.clone();
    let mut k = 0;
    if f.is_constant() || p.is_zero() {
        return (cur, 0);
    }
    while let Some(q) = cur.div_exact(f) {
        cur = q;
        k += 1;
    }
    (cur.pruned(), k)
}

/// Reassembles a square-free decomposition (used by tests and checks).
pub fn reassemble(factors: &[(Poly<Q>, u32)]) -> Poly<Q> {
    let mut acc = Poly::one(super::poly::VarSet::empty());
    for (f, m) in factors {
        acc = acc.mul(&f.pow(*m));
    }
    acc
}

/// Whether `a` and `b` agree up to a nonzero rational factor.
pub fn associated(a: &Poly<Q>, b: &Poly<Q>) -> bool {
    if a.is_zero() || b.is_zero() {
        return a.is_zero() && b.is_zero();
    }
    let (_, za) = to_int_primitive(a);
    let (_, zb) = to_int_primitive(b);
    int_to_q(&za) == int_to_q(&zb)
}

#[allow(dead_code)]
fn sign_positive(p: &Poly<Q>) -> bool {
    p.leading_coeff().is_some_and(|c| c.is_positive())
}

#[allow(dead_code)]
fn rebuild(p: &Poly<Q>, k: usize) -> Poly<Q> {
    from_upoly(p.vars(), k, &to_upoly(p, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    fn p(s: &str) -> Poly<Q> {
        parse_poly(s).unwrap()
    }

    #[test]
    fn resultant_examples() {
        assert!(resultant(&p("x^2 - 1"), &p("x - 1"), "x").unwrap().is_zero());
        assert_eq!(resultant(&p("x^2 + 1"), &p("x - 2"), "x").unwrap(), p("5"));
        assert!(matches!(resultant(&p("y"), &p("x - 2"), "x"), Err(ExprError::DegreeZero(_))));
    }

    #[test]
    fn squarefree_examples() {
        let f = squarefree(&p("(x - 1)^2*(x + 2)")).unwrap();
        assert_eq!(f, vec![(p("x + 2"), 1), (p("x - 1"), 2)]);
        let f = squarefree(&p("x^2 + 1")).unwrap();
        assert_eq!(f, vec![(p("x^2 + 1"), 1)]);
    }

    #[test]
    fn squarefree_multivariate_reassembles() {
        let src = p("3*y^2*(x*y - 1)^3*(x + y)^2*(y + 2)");
        let f = squarefree(&src).unwrap();
        assert!(associated(&reassemble(&f), &src));
        assert_eq!(f.iter().map(|(_, m)| *m).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn trial_division() {
        assert_eq!(trial_divide(&p("x^2 - 1"), &p("x - 1")).unwrap(), Some(p("x + 1")));
        assert_eq!(trial_divide(&p("x^2 + 1"), &p("x - 1")).unwrap(), None);
        assert!(trial_divide(&p("x"), &p("0")).is_err());
    }
}
