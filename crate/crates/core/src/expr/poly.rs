//! Sparse multivariate polynomials.
//!
//! A polynomial lives over a [`VarSet`], an ordered list of variable names
//! (byte-wise lexicographic order). Terms are kept sorted in descending graded
//! reverse lexicographic order. Each exponent vector is stored flat with its
//! total degree in slot 0, so monomial comparison and multiplication are plain
//! slice operations.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::field::{ExactDiv, Field, Ring};

/// Ordered, deduplicated set of variable names.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct VarSet(Arc<Vec<String>>);

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        VarSet(Arc::new(v))
    }

    pub fn empty() -> Self {
        VarSet(Arc::new(Vec::new()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.0.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    pub fn same(&self, other: &VarSet) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }

    /// Sorted union plus, for each input, the position of its variables in the union.
    pub fn union(&self, other: &VarSet) -> (VarSet, Vec<usize>, Vec<usize>) {
        if self.same(other) {
            let id: Vec<usize> = (0..self.len()).collect();
            return (self.clone(), id.clone(), id);
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        let mut ma = Vec::with_capacity(a.len());
        let mut mb = Vec::with_capacity(b.len());
        while i < a.len() || j < b.len() {
            let ord = if i == a.len() {
                Ordering::Greater
            } else if j == b.len() {
                Ordering::Less
            } else {
                a[i].cmp(&b[j])
            };
            match ord {
                Ordering::Less => {
                    ma.push(merged.len());
                    merged.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    mb.push(merged.len());
                    merged.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    ma.push(merged.len());
                    mb.push(merged.len());
                    merged.push(a[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        (VarSet(Arc::new(merged)), ma, mb)
    }

    pub fn with(&self, name: &str) -> VarSet {
        if self.index(name).is_some() {
            return self.clone();
        }
        self.union(&VarSet::new([name])).0
    }

    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        self.0.iter().all(|n| other.index(n).is_some())
    }
}

/// Graded reverse lexicographic comparison of two flat exponent records
/// (slot 0 holds the total degree).
#[inline]
pub(crate) fn grevlex(a: &[u16], b: &[u16]) -> Ordering {
    match a[0].cmp(&b[0]) {
        Ordering::Equal => {}
        o => return o,
    }
    for k in (1..a.len()).rev() {
        if a[k] != b[k] {
            return b[k].cmp(&a[k]);
        }
    }
    Ordering::Equal
}

/// Sparse polynomial with coefficients in `C`.
#[derive(Clone)]
pub struct Poly<C> {
    vars: VarSet,
    // stride = vars.len() + 1, slot 0 = total degree
    exps: Vec<u16>,
    coeffs: Vec<C>,
}

impl<C: Ring> PartialEq for Poly<C> {
    fn eq(&self, other: &Self) -> bool {
        if self.coeffs.len() != other.coeffs.len() {
            return false;
        }
        if self.vars.same(&other.vars) {
            return self.exps == other.exps && self.coeffs == other.coeffs;
        }
        let (a, b) = (self.pruned(), other.pruned());
        a.vars.same(&b.vars) && a.exps == b.exps && a.coeffs == b.coeffs
    }
}

impl<C: Ring> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly{:?}[", self.vars)?;
        for (i, (e, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}*{:?}", c, e)?;
        }
        write!(f, "]")
    }
}

impl<C: Ring> Poly<C> {
    pub fn zero(vars: VarSet) -> Self {
        Poly { vars, exps: Vec::new(), coeffs: Vec::new() }
    }

    pub fn constant(vars: VarSet, c: C) -> Self {
        let mut p = Poly::zero(vars);
        if !c.is_zero() {
            let n = p.stride();
            p.exps.resize(n, 0);
            p.coeffs.push(c);
        }
        p
    }

    pub fn one(vars: VarSet) -> Self {
        Self::constant(vars, C::one())
    }

    pub fn from_i64(vars: VarSet, n: i64) -> Self {
        Self::constant(vars, C::from_i64(n))
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn var(name: &str) -> Self {
        let vars = VarSet::new([name]);
        Poly { vars, exps: vec![1, 1], coeffs: vec![C::one()] }
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs in any order;
    /// exponent vectors are indexed like `vars` (without the degree slot).
    pub fn from_terms(vars: VarSet, terms: Vec<(Vec<u16>, C)>) -> Self {
        let n = vars.len();
        let mut recs: Vec<(Vec<u16>, C)> = terms
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| {
                assert_eq!(e.len(), n, "exponent vector length mismatch");
                let d: u16 = e.iter().sum();
                let mut r = Vec::with_capacity(n + 1);
                r.push(d);
                r.extend_from_slice(&e);
                (r, c)
            })
            .collect();
        recs.sort_by(|a, b| grevlex(&b.0, &a.0));
        let mut p: Poly<C> = Poly::zero(vars);
        for (e, c) in recs {
            let len = p.coeffs.len();
            if len > 0 && p.exp_rec(len - 1) == e.as_slice() {
                p.coeffs[len - 1] += &c;
                if p.coeffs[len - 1].is_zero() {
                    p.coeffs.pop();
                    let s = p.stride();
                    p.exps.truncate(p.exps.len() - s);
                }
            } else {
                p.exps.extend_from_slice(&e);
                p.coeffs.push(c);
            }
        }
        p
    }

    /// Monomial `c * prod(vars[i]^e[i])`.
    pub fn monomial(vars: VarSet, e: &[u16], c: C) -> Self {
        Self::from_terms(vars, vec![(e.to_vec(), c)])
    }

    #[inline]
    pub(crate) fn stride(&self) -> usize {
        self.vars.len() + 1
    }

    #[inline]
    pub(crate) fn exp_rec(&self, i: usize) -> &[u16] {
        let s = self.stride();
        &self.exps[i * s..(i + 1) * s]
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn nterms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty() || (self.coeffs.len() == 1 && self.exps[0] == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.exps[0] == 0 && self.coeffs[0].is_one()
    }

    /// Constant term value, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<C> {
        if self.is_zero() {
            Some(C::zero())
        } else if self.is_constant() {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Iterates over `(exponents, coefficient)` in descending grevlex order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u16], &C)> + '_ {
        let s = self.stride();
        self.coeffs.iter().enumerate().map(move |(i, c)| (&self.exps[i * s + 1..(i + 1) * s], c))
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn total_degree(&self) -> u32 {
        // first term has maximal total degree
        if self.is_zero() {
            0
        } else {
            self.exps[0] as u32
        }
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        let s = self.stride();
        (0..self.nterms()).map(|i| self.exps[i * s + 1 + var] as u32).max().unwrap_or(0)
    }

    pub fn degree_in_name(&self, name: &str) -> u32 {
        self.vars.index(name).map_or(0, |i| self.degree_in(i))
    }

    pub fn min_degree_in(&self, var: usize) -> u32 {
        let s = self.stride();
        (0..self.nterms()).map(|i| self.exps[i * s + 1 + var] as u32).min().unwrap_or(0)
    }

    pub fn leading_coeff(&self) -> Option<&C> {
        self.coeffs.first()
    }

    pub fn leading_exponents(&self) -> Option<&[u16]> {
        if self.is_zero() {
            None
        } else {
            Some(&self.exp_rec(0)[1..])
        }
    }

    /// Names of variables that actually occur.
    pub fn used_vars(&self) -> Vec<usize> {
        let n = self.vars.len();
        let s = n + 1;
        let mut used = vec![false; n];
        for i in 0..self.nterms() {
            for (k, u) in used.iter_mut().enumerate() {
                if self.exps[i * s + 1 + k] != 0 {
                    *u = true;
                }
            }
        }
        used.iter().enumerate().filter(|(_, &u)| u).map(|(k, _)| k).collect()
    }

    pub fn used_var_names(&self) -> Vec<String> {
        self.used_vars().into_iter().map(|k| self.vars.names()[k].clone()).collect()
    }

    /// Drops variables that do not occur.
    pub fn pruned(&self) -> Self {
        let used = self.used_vars();
        if used.len() == self.vars.len() {
            return self.clone();
        }
        let vars = VarSet::new(used.iter().map(|&k| self.vars.names()[k].clone()));
        self.restrict_to(vars, &used)
    }

    fn restrict_to(&self, vars: VarSet, keep: &[usize]) -> Self {
        let s = self.stride();
        let mut exps = Vec::with_capacity(self.nterms() * (keep.len() + 1));
        for i in 0..self.nterms() {
            exps.push(self.exps[i * s]);
            for &k in keep {
                exps.push(self.exps[i * s + 1 + k]);
            }
        }
        Poly { vars, exps, coeffs: self.coeffs.clone() }
    }

    /// Re-expresses the polynomial over a superset of its variables.
    /// Inserting zero columns does not change grevlex order, so no re-sort.
    pub fn aligned(&self, target: &VarSet) -> Self {
        if self.vars.same(target) {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .names()
            .iter()
            .map(|n| target.index(n).unwrap_or_else(|| panic!("variable {n} missing from target set")))
            .collect();
        let ns = target.len() + 1;
        let s = self.stride();
        let mut exps = vec![0u16; self.nterms() * ns];
        for i in 0..self.nterms() {
            exps[i * ns] = self.exps[i * s];
            for (k, &m) in map.iter().enumerate() {
                exps[i * ns + 1 + m] = self.exps[i * s + 1 + k];
            }
        }
        Poly { vars: target.clone(), exps, coeffs: self.coeffs.clone() }
    }

    /// Brings two polynomials onto a common variable set.
    pub fn unify(a: &Self, b: &Self) -> (Self, Self) {
        if a.vars.same(&b.vars) {
            return (a.clone(), b.clone());
        }
        let (u, _, _) = a.vars.union(&b.vars);
        (a.aligned(&u), b.aligned(&u))
    }

    fn with_same_vars<F: FnOnce(&Self, &Self) -> Self>(&self, other: &Self, f: F) -> Self {
        if self.vars.same(&other.vars) {
            f(self, other)
        } else {
            let (a, b) = Self::unify(self, other);
            f(&a, &b)
        }
    }

    pub(crate) fn merge(a: &Self, b: &Self, negate_b: bool) -> Self {
        let s = a.stride();
        let mut out = Poly {
            vars: a.vars.clone(),
            exps: Vec::with_capacity(a.exps.len() + b.exps.len()),
            coeffs: Vec::with_capacity(a.nterms() + b.nterms()),
        };
        let (mut i, mut j) = (0, 0);
        while i < a.nterms() && j < b.nterms() {
            let ea = &a.exps[i * s..(i + 1) * s];
            let eb = &b.exps[j * s..(j + 1) * s];
            match grevlex(ea, eb) {
                Ordering::Greater => {
                    out.exps.extend_from_slice(ea);
                    out.coeffs.push(a.coeffs[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.exps.extend_from_slice(eb);
                    out.coeffs.push(if negate_b { -b.coeffs[j].clone() } else { b.coeffs[j].clone() });
                    j += 1;
                }
                Ordering::Equal => {
                    let mut c = a.coeffs[i].clone();
                    if negate_b {
                        c -= &b.coeffs[j];
                    } else {
                        c += &b.coeffs[j];
                    }
                    if !c.is_zero() {
                        out.exps.extend_from_slice(ea);
                        out.coeffs.push(c);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        while i < a.nterms() {
            out.exps.extend_from_slice(&a.exps[i * s..(i + 1) * s]);
            out.coeffs.push(a.coeffs[i].clone());
            i += 1;
        }
        while j < b.nterms() {
            out.exps.extend_from_slice(&b.exps[j * s..(j + 1) * s]);
            out.coeffs.push(if negate_b { -b.coeffs[j].clone() } else { b.coeffs[j].clone() });
            j += 1;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.with_same_vars(other, |a, b| Self::merge(a, b, false))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.with_same_vars(other, |a, b| Self::merge(a, b, true))
    }

    pub fn neg(&self) -> Self {
        Poly {
            vars: self.vars.clone(),
            exps: self.exps.clone(),
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Poly::zero(self.vars.clone());
        }
        Poly {
            vars: self.vars.clone(),
            exps: self.exps.clone(),
            coeffs: self.coeffs.iter().map(|x| x.mul_ref(c)).collect(),
        }
    }

    /// Multiplies by the monomial `c * x^e` where `e` is a full record (degree slot first).
    pub(crate) fn mul_term_rec(&self, e: &[u16], c: &C) -> Self {
        let s = self.stride();
        let mut exps = self.exps.clone();
        for i in 0..self.nterms() {
            for k in 0..s {
                exps[i * s + k] += e[k];
            }
        }
        let coeffs = self.coeffs.iter().map(|x| x.mul_ref(c)).collect();
        Poly { vars: self.vars.clone(), exps, coeffs }
    }

    pub fn mul_monomial(&self, e: &[u16], c: &C) -> Self {
        let mut rec = Vec::with_capacity(e.len() + 1);
        rec.push(e.iter().sum());
        rec.extend_from_slice(e);
        self.mul_term_rec(&rec, c)
    }

    fn mul_range(a: &Self, lo: usize, hi: usize, b: &Self) -> Self {
        if hi - lo == 1 {
            return b.mul_term_rec(a.exp_rec(lo), &a.coeffs[lo]);
        }
        let mid = (lo + hi) / 2;
        let l = Self::mul_range(a, lo, mid, b);
        let r = Self::mul_range(a, mid, hi, b);
        Self::merge(&l, &r, false)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.with_same_vars(other, |a, b| {
            if a.is_zero() || b.is_zero() {
                return Poly::zero(a.vars.clone());
            }
            let (small, big) = if a.nterms() <= b.nterms() { (a, b) } else { (b, a) };
            Self::mul_range(small, 0, small.nterms(), big)
        })
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Poly::one(self.vars.clone());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Partial derivative with respect to variable index `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let s = self.stride();
        let mut out = Poly::zero(self.vars.clone());
        for i in 0..self.nterms() {
            let e = self.exps[i * s + 1 + var];
            if e == 0 {
                continue;
            }
            let mut rec = self.exps[i * s..(i + 1) * s].to_vec();
            rec[0] -= 1;
            rec[1 + var] -= 1;
            out.exps.extend_from_slice(&rec);
            out.coeffs.push(self.coeffs[i].mul_ref(&C::from_i64(e as i64)));
        }
        // Lowering one exponent by one preserves grevlex order among the survivors.
        out
    }

    pub fn derivative_by_name(&self, name: &str) -> Self {
        match self.vars.index(name) {
            Some(k) => self.derivative(k),
            None => Poly::zero(self.vars.clone()),
        }
    }

    /// Evaluates with every variable bound (`values` indexed like `vars`).
    pub fn eval(&self, values: &[C]) -> C {
        let mut acc = C::zero();
        for (e, c) in self.terms() {
            let mut t = c.clone();
            for (k, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t *= &values[k];
                }
            }
            acc += &t;
        }
        acc
    }

    /// Coefficients with respect to variable `var`: `result[d]` multiplies `var^d`.
    /// The coefficients keep the full variable set (with zero exponent in `var`).
    pub fn coefficients_in(&self, var: usize) -> Vec<Self> {
        let s = self.stride();
        let deg = self.degree_in(var) as usize;
        let mut parts: Vec<Poly<C>> = (0..=deg).map(|_| Poly::zero(self.vars.clone())).collect();
        if self.is_zero() {
            return vec![];
        }
        for i in 0..self.nterms() {
            let d = self.exps[i * s + 1 + var] as usize;
            let mut rec = self.exps[i * s..(i + 1) * s].to_vec();
            rec[0] -= d as u16;
            rec[1 + var] = 0;
            parts[d].exps.extend_from_slice(&rec);
            parts[d].coeffs.push(self.coeffs[i].clone());
        }
        // Removing a variable's exponent can reorder terms; restore order.
        for p in parts.iter_mut() {
            p.resort();
        }
        parts
    }

    /// Inverse of [`coefficients_in`].
    pub fn from_coefficients_in(vars: &VarSet, var: usize, parts: &[Self]) -> Self {
        let mut e = vec![0u16; vars.len()];
        let mut acc = Poly::zero(vars.clone());
        for (d, p) in parts.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            e[var] = d as u16;
            let p = p.aligned(vars);
            acc = acc.add(&p.mul_monomial(&e, &C::one()));
        }
        acc
    }

    fn resort(&mut self) {
        let s = self.stride();
        let n = self.nterms();
        if n < 2 {
            return;
        }
        let sorted = (1..n).all(|i| grevlex(&self.exps[(i - 1) * s..i * s], &self.exps[i * s..(i + 1) * s]) == Ordering::Greater);
        if sorted {
            return;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| grevlex(&self.exps[b * s..(b + 1) * s], &self.exps[a * s..(a + 1) * s]));
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut coeffs: Vec<C> = Vec::with_capacity(n);
        for &i in &idx {
            let rec = &self.exps[i * s..(i + 1) * s];
            let len = coeffs.len();
            if len > 0 && &exps[(len - 1) * s..len * s] == rec {
                coeffs[len - 1] += &self.coeffs[i];
                if coeffs[len - 1].is_zero() {
                    coeffs.pop();
                    exps.truncate((len - 1) * s);
                }
            } else {
                exps.extend_from_slice(rec);
                coeffs.push(self.coeffs[i].clone());
            }
        }
        self.exps = exps;
        self.coeffs = coeffs;
    }

    /// Replaces variable `var` by the polynomial `value` (which may use other variables).
    pub fn substitute(&self, name: &str, value: &Self) -> Self {
        let Some(var) = self.vars.index(name) else {
            return self.clone();
        };
        let parts = self.coefficients_in(var);
        // Horner in `value`
        let (u, _, _) = self.vars.union(value.vars());
        let v = value.aligned(&u);
        let mut acc = Poly::zero(u.clone());
        for p in parts.iter().rev() {
            acc = acc.mul(&v).add(&p.aligned(&u));
        }
        acc
    }

    /// Substitutes a constant for a variable.
    pub fn eval_var(&self, name: &str, value: &C) -> Self {
        let Some(var) = self.vars.index(name) else {
            return self.clone();
        };
        let s = self.stride();
        let mut terms = Vec::with_capacity(self.nterms());
        let mut pw: Vec<C> = vec![C::one()];
        for i in 0..self.nterms() {
            let d = self.exps[i * s + 1 + var] as usize;
            while pw.len() <= d {
                let last = pw.last().unwrap().mul_ref(value);
                pw.push(last);
            }
            let mut e: Vec<u16> = self.exps[i * s + 1..(i + 1) * s].to_vec();
            e[var] = 0;
            terms.push((e, self.coeffs[i].mul_ref(&pw[d])));
        }
        Poly::from_terms(self.vars.clone(), terms)
    }

    /// Maps coefficients into another ring, dropping terms that become zero.
    pub fn map_coeffs<D: Ring, F: Fn(&C) -> D>(&self, f: F) -> Poly<D> {
        let s = self.stride();
        let mut out = Poly { vars: self.vars.clone(), exps: Vec::new(), coeffs: Vec::new() };
        for i in 0..self.nterms() {
            let c = f(&self.coeffs[i]);
            if !c.is_zero() {
                out.exps.extend_from_slice(&self.exps[i * s..(i + 1) * s]);
                out.coeffs.push(c);
            }
        }
        out
    }

    /// Largest exponent vector dividing every term.
    pub fn monomial_content(&self) -> Vec<u16> {
        let n = self.vars.len();
        let mut m = vec![u16::MAX; n];
        for (e, _) in self.terms() {
            for k in 0..n {
                m[k] = m[k].min(e[k]);
            }
        }
        if self.is_zero() {
            m.iter_mut().for_each(|x| *x = 0);
        }
        m
    }

    /// Divides by a monomial that is known to divide every term.
    pub fn div_monomial(&self, e: &[u16]) -> Self {
        let s = self.stride();
        let d: u16 = e.iter().sum();
        let mut exps = self.exps.clone();
        for i in 0..self.nterms() {
            exps[i * s] -= d;
            for k in 0..e.len() {
                exps[i * s + 1 + k] -= e[k];
            }
        }
        Poly { vars: self.vars.clone(), exps, coeffs: self.coeffs.clone() }
    }

    /// Whether the leading record `a` divides `b` (flat records).
    #[inline]
    pub(crate) fn rec_divides(a: &[u16], b: &[u16]) -> bool {
        a.iter().zip(b).skip(1).all(|(x, y)| x <= y)
    }

    pub(crate) fn rec_quotient(b: &[u16], a: &[u16]) -> Vec<u16> {
        b.iter().zip(a).map(|(y, x)| y - x).collect()
    }

    pub(crate) fn leading_rec(&self) -> &[u16] {
        self.exp_rec(0)
    }

    pub(crate) fn raw_parts(&self) -> (&[u16], &[C]) {
        (&self.exps, &self.coeffs)
    }

    pub(crate) fn from_raw(vars: VarSet, exps: Vec<u16>, coeffs: Vec<C>) -> Self {
        Poly { vars, exps, coeffs }
    }

    /// Keeps only the leading term.
    pub fn leading_term(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let s = self.stride();
        Poly { vars: self.vars.clone(), exps: self.exps[..s].to_vec(), coeffs: vec![self.coeffs[0].clone()] }
    }
}

impl<C: Field> Poly<C> {
    /// Scales so the leading coefficient is one.
    pub fn monic(&self) -> Self {
        match self.leading_coeff() {
            None => self.clone(),
            Some(lc) if lc.is_one() => self.clone(),
            Some(lc) => self.scale(&lc.inv()),
        }
    }

}

impl<C: ExactDiv> Poly<C> {
    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return Some(Poly::zero(self.vars.clone()));
        }
        let (num, den) = Self::unify(self, d);
        if let Some(c) = den.as_constant() {
            let mut out = Poly::zero(num.vars.clone());
            for (k, x) in num.coeffs.iter().enumerate() {
                let qc = x.try_div(&c)?;
                out.exps.extend_from_slice(num.exp_rec(k));
                out.coeffs.push(qc);
            }
            return Some(out);
        }
        if den.nterms() == 1 {
            let lrec = den.leading_rec().to_vec();
            if !(0..num.nterms()).all(|i| Self::rec_divides(&lrec, num.exp_rec(i))) {
                return None;
            }
            let mut q = num.div_monomial(&lrec[1..]);
            for c in q.coeffs.iter_mut() {
                *c = c.try_div(&den.coeffs[0])?;
            }
            return Some(q);
        }
        let mut rem = num;
        let lrec = den.leading_rec().to_vec();
        let s = den.stride();
        let mut qexps = Vec::new();
        let mut qcoeffs = Vec::new();
        // The tail of the divisor, used for the rank-1 updates.
        let tail = Poly { vars: den.vars.clone(), exps: den.exps[s..].to_vec(), coeffs: den.coeffs[1..].to_vec() };
        while !rem.is_zero() {
            let r0 = rem.exp_rec(0);
            if !Self::rec_divides(&lrec, r0) {
                return None;
            }
            let qe = Self::rec_quotient(r0, &lrec);
            let qc = rem.coeffs[0].try_div(&den.coeffs[0])?;
            // drop the leading term (it cancels exactly), subtract qc*x^qe*tail
            let rest = Poly { vars: rem.vars.clone(), exps: rem.exps[s..].to_vec(), coeffs: rem.coeffs[1..].to_vec() };
            let t = tail.mul_term_rec(&qe, &qc);
            rem = Self::merge(&rest, &t, true);
            qexps.extend_from_slice(&qe);
            qcoeffs.push(qc);
        }
        Some(Poly { vars: den.vars.clone(), exps: qexps, coeffs: qcoeffs })
    }

    pub fn divides(&self, p: &Self) -> bool {
        p.div_exact(self).is_some()
    }
}
