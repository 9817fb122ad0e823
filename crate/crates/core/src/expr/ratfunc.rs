//! Canonical rational functions over the rationals.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{Poly, VarSet};
use crate::field::{q_to_f64, Field, Ring, Q};

/// Exact rational function `num / den` in canonical form: the parts are
/// coprime and the denominator's leading coefficient (grevlex) is one.
#[derive(Clone)]
pub struct RatExpr {
    num: Poly<Q>,
    den: Poly<Q>,
}

impl PartialEq for RatExpr {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

impl fmt::Debug for RatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn prune_pair(num: Poly<Q>, den: Poly<Q>) -> (Poly<Q>, Poly<Q>) {
    let (a, b) = Poly::unify(&num, &den);
    let mut used = a.used_vars();
    for k in b.used_vars() {
        if !used.contains(&k) {
            used.push(k);
        }
    }
    if used.len() == a.vars().len() {
        return (a, b);
    }
    let vars = VarSet::new(used.iter().map(|&k| a.vars().names()[k].clone()));
    (a.pruned().aligned(&vars), b.pruned().aligned(&vars))
}

impl RatExpr {
    /// Builds `num / den` and reduces it. Panics on a zero denominator.
    pub fn new(num: Poly<Q>, den: Poly<Q>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let g = gcd(&num, &den);
        if g.is_one() {
            Self::normalized(num, den)
        } else {
            let n = num.div_exact(&g).expect("gcd divides numerator");
            let d = den.div_exact(&g).expect("gcd divides denominator");
            Self::normalized(n, d)
        }
    }

    /// Reduces `num / (f1 * f2 * ...)`, cancelling against one factor at a time.
    pub fn from_factored(mut num: Poly<Q>, factors: &[Poly<Q>]) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let mut den = Poly::one(num.vars().clone());
        for f in factors {
            assert!(!f.is_zero(), "zero denominator factor");
            if f.is_constant() {
                den = den.mul(f);
                continue;
            }
            let g = gcd(&num, f);
            if g.is_one() {
                den = den.mul(f);
            } else {
                num = num.div_exact(&g).expect("gcd divides numerator");
                den = den.mul(&f.div_exact(&g).expect("gcd divides factor"));
            }
        }
        Self::normalized(num, den)
    }

    /// Assumes coprime parts; fixes the denominator normalization.
    fn normalized(num: Poly<Q>, den: Poly<Q>) -> Self {
        let (num, den) = prune_pair(num, den);
        let lc = den.leading_coeff().expect("nonzero denominator").clone();
        if lc.is_one() {
            RatExpr { num, den }
        } else {
            let inv = lc.inv();
            RatExpr { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn from_poly(p: Poly<Q>) -> Self {
        let one = Poly::one(p.vars().clone());
        Self::normalized(p, one)
    }

    pub fn zero() -> Self {
        RatExpr { num: Poly::zero(VarSet::empty()), den: Poly::one(VarSet::empty()) }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        RatExpr { num: Poly::constant(VarSet::empty(), c), den: Poly::one(VarSet::empty()) }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Q::from_i64(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::constant(crate::field::q(n, d))
    }

    pub fn var(name: &str) -> Self {
        Self::from_poly(Poly::var(name))
    }

    pub fn num(&self) -> &Poly<Q> {
        &self.num
    }

    pub fn den(&self) -> &Poly<Q> {
        &self.den
    }

    pub fn vars(&self) -> &VarSet {
        self.num.vars()
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars().names().to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars().index(name).is_some()
    }

    /// Total number of stored terms in both parts.
    pub fn size(&self) -> usize {
        self.num.nterms() + self.den.nterms()
    }

    pub fn neg(&self) -> Self {
        RatExpr { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatExpr { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.add_sub(o, false)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add_sub(o, true)
    }

    fn add_sub(&self, o: &Self, minus: bool) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if minus { o.neg() } else { o.clone() };
        }
        let comb = |a: &Poly<Q>, b: &Poly<Q>| if minus { a.sub(b) } else { a.add(b) };
        if self.den.is_one() && o.den.is_one() {
            return Self::from_poly(comb(&self.num, &o.num));
        }
        if self.den == o.den {
            let n = comb(&self.num, &o.num);
            return Self::new(n, self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        if g.is_one() {
            // coprime denominators: the sum is already reduced
            let n = comb(&self.num.mul(&o.den), &o.num.mul(&self.den));
            if n.is_zero() {
                return Self::zero();
            }
            return Self::normalized(n, self.den.mul(&o.den));
        }
        let d1 = self.den.div_exact(&g).unwrap();
        let d2 = o.den.div_exact(&g).unwrap();
        let n = comb(&self.num.mul(&d2), &o.num.mul(&d1));
        if n.is_zero() {
            return Self::zero();
        }
        let h = gcd(&n, &g);
        if h.is_one() {
            Self::normalized(n, d1.mul(&d2).mul(&g))
        } else {
            let n = n.div_exact(&h).unwrap();
            let g = g.div_exact(&h).unwrap();
            Self::normalized(n, d1.mul(&d2).mul(&g))
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        if self.den.is_one() && o.den.is_one() {
            return Self::from_poly(self.num.mul(&o.num));
        }
        let (n1, d2) = cancel(&self.num, &o.den);
        let (n2, d1) = cancel(&o.num, &self.den);
        Self::normalized(n1.mul(&n2), d1.mul(&d2))
    }

    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        Self::normalized(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.inv())
    }

    pub fn pow(&self, e: i32) -> Self {
        if e < 0 {
            return self.inv().pow(-e);
        }
        let e = e as u32;
        RatExpr { num: self.num.pow(e), den: self.den.pow(e) }
    }

    /// Partial derivative.
    pub fn diff(&self, name: &str) -> Self {
        let Some(k) = self.vars().index(name) else {
            return Self::zero();
        };
        let dn = self.num.derivative(k);
        if self.den.is_one() {
            return Self::from_poly(dn);
        }
        let dd = self.den.derivative(k);
        let n = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::from_factored(n, &[self.den.clone(), self.den.clone()])
    }

    /// Applies the derivation sending each variable `v` to `image(v)`
    /// (variables mapped to `None` are constants).
    pub fn apply_derivation<F>(&self, image: F) -> Self
    where
        F: Fn(&str) -> Option<RatExpr>,
    {
        let names = self.vars().names().to_vec();
        let mut imgs: Vec<(usize, RatExpr)> = Vec::new();
        for (k, n) in names.iter().enumerate() {
            if let Some(r) = image(n) {
                if !r.is_zero() {
                    imgs.push((k, r));
                }
            }
        }
        if imgs.is_empty() {
            return Self::zero();
        }
        // common denominator of the images
        let mut l = Poly::one(VarSet::empty());
        for (_, r) in &imgs {
            if !r.den.is_one() {
                let g = gcd(&l, &r.den);
                l = l.mul(&r.den.div_exact(&g).unwrap());
            }
        }
        let apply = |p: &Poly<Q>| -> Poly<Q> {
            let mut acc = Poly::zero(VarSet::empty());
            for (k, r) in &imgs {
                let dp = p.derivative(*k);
                if dp.is_zero() {
                    continue;
                }
                let scale = l.div_exact(&r.den).unwrap();
                acc = acc.add(&dp.mul(&r.num.mul(&scale)));
            }
            acc
        };
        let dn = apply(&self.num);
        if self.den.is_one() {
            return Self::from_factored(dn, &[l]);
        }
        let dd = apply(&self.den);
        let n = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::from_factored(n, &[self.den.clone(), self.den.clone(), l])
    }

    /// Replaces a variable by a rational function. Panics if the
    /// denominator vanishes identically after substitution.
    pub fn substitute(&self, name: &str, value: &RatExpr) -> Self {
        self.try_substitute(name, value).expect("substitution annihilates the denominator")
    }

    /// Like [`substitute`](Self::substitute), but `None` when the denominator vanishes.
    pub fn try_substitute(&self, name: &str, value: &RatExpr) -> Option<Self> {
        let Some(_) = self.vars().index(name) else {
            return Some(self.clone());
        };
        if value.den.is_one() {
            let n = self.num.substitute(name, &value.num);
            let d = self.den.substitute(name, &value.num);
            if d.is_zero() {
                return None;
            }
            return Some(Self::new(n, d));
        }
        let (n, dn) = subst_homogeneous(&self.num, name, value);
        let (d, dd) = subst_homogeneous(&self.den, name, value);
        if d.is_zero() {
            return None;
        }
        let b = &value.den;
        Some(if dn >= dd {
            Self::new(n, d.mul(&b.pow(dn - dd)))
        } else {
            Self::new(n.mul(&b.pow(dd - dn)), d)
        })
    }

    /// Simultaneous substitution; the images may mention the substituted names.
    pub fn substitute_all(&self, map: &[(&str, RatExpr)]) -> Self {
        let clash = map.iter().any(|(_, v)| map.iter().any(|(n, _)| v.contains(n)));
        if !clash {
            let mut out = self.clone();
            for (n, v) in map {
                out = out.substitute(n, v);
            }
            return out;
        }
        let tmp: Vec<String> = (0..map.len()).map(|i| format!("__subst{i}")).collect();
        let mut out = self.clone();
        for (i, (n, _)) in map.iter().enumerate() {
            out = out.substitute(n, &RatExpr::var(&tmp[i]));
        }
        for (i, (_, v)) in map.iter().enumerate() {
            out = out.substitute(&tmp[i], v);
        }
        out
    }

    /// Exact evaluation; `None` when a variable is unbound or the denominator vanishes.
    pub fn eval_q(&self, point: &HashMap<String, Q>) -> Option<Q> {
        let vals: Option<Vec<Q>> = self.vars().names().iter().map(|n| point.get(n).cloned()).collect();
        let vals = vals?;
        let d = self.den.eval(&vals);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(&vals) / d)
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, point: &HashMap<String, f64>) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.vars().names().iter().map(|n| point.get(n).copied()).collect();
        let vals = vals?;
        let n = self.num.map_coeffs(q_to_f64);
        let d = self.den.map_coeffs(q_to_f64);
        Some(n.eval(&vals) / d.eval(&vals))
    }

    /// Multiplies out to a polynomial numerator (the denominator is dropped).
    pub fn numerator_poly(&self) -> Poly<Q> {
        self.num.clone()
    }
}

/// Returns `(a / g, b / g)` with `g = gcd(a, b)`.
fn cancel(a: &Poly<Q>, b: &Poly<Q>) -> (Poly<Q>, Poly<Q>) {
    if b.is_one() || a.is_constant() || b.is_constant() {
        return (a.clone(), b.clone());
    }
    let g = gcd(a, b);
    if g.is_one() {
        (a.clone(), b.clone())
    } else {
        (a.div_exact(&g).unwrap(), b.div_exact(&g).unwrap())
    }
}

/// `p(name = a/b) = result / b^deg`, returning `(result, deg)`.
fn subst_homogeneous(p: &Poly<Q>, name: &str, value: &RatExpr) -> (Poly<Q>, u32) {
    let Some(k) = p.vars().index(name) else {
        return (p.clone(), 0);
    };
    let parts = p.coefficients_in(k);
    let deg = parts.len().saturating_sub(1) as u32;
    let (a, b) = (&value.num, &value.den);
    // sum c_i a^i b^(deg-i), Horner-like with powers of b
    let mut apow = vec![Poly::one(a.vars().clone())];
    for i in 1..parts.len() {
        let next = apow[i - 1].mul(a);
        apow.push(next);
    }
    let mut bpow = vec![Poly::one(b.vars().clone())];
    for i in 1..parts.len() {
        let next = bpow[i - 1].mul(b);
        bpow.push(next);
    }
    let mut acc = Poly::zero(VarSet::empty());
    for (i, c) in parts.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let c = c.pruned();
        acc = acc.add(&c.mul(&apow[i]).mul(&bpow[deg as usize - i]));
    }
    (acc, deg)
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&RatExpr> for &RatExpr {
            type Output = RatExpr;
            fn $m(self, o: &RatExpr) -> RatExpr {
                RatExpr::$f(self, o)
            }
        }
        impl $tr<RatExpr> for RatExpr {
            type Output = RatExpr;
            fn $m(self, o: RatExpr) -> RatExpr {
                RatExpr::$f(&self, &o)
            }
        }
        impl $tr<&RatExpr> for RatExpr {
            type Output = RatExpr;
            fn $m(self, o: &RatExpr) -> RatExpr {
                RatExpr::$f(&self, o)
            }
        }
        impl $tr<RatExpr> for &RatExpr {
            type Output = RatExpr;
            fn $m(self, o: RatExpr) -> RatExpr {
                RatExpr::$f(self, &o)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for RatExpr {
    type Output = RatExpr;
    fn neg(self) -> RatExpr {
        RatExpr::neg(&self)
    }
}

impl Neg for &RatExpr {
    type Output = RatExpr;
    fn neg(self) -> RatExpr {
        RatExpr::neg(self)
    }
}

impl From<Poly<Q>> for RatExpr {
    fn from(p: Poly<Q>) -> Self {
        RatExpr::from_poly(p)
    }
}

impl From<i64> for RatExpr {
    fn from(n: i64) -> Self {
        RatExpr::int(n)
    }
}

impl Default for RatExpr {
    fn default() -> Self {
        RatExpr::zero()
    }
}
