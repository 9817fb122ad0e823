//! Polynomial ideals over the rationals: reduced Gröbner bases (grevlex,
//! Buchberger with sugar selection) and the Krull dimension of the quotient.
//! The engine itself runs over any field; a prime field gives a fast check.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::poly::grevlex;

fn grevlex_exps(a: &[u16], b: &[u16]) -> std::cmp::Ordering {
    let deg = |e: &[u16]| e.iter().map(|&x| x as u32).sum::<u32>();
    deg(a).cmp(&deg(b)).then_with(|| b.iter().rev().cmp(a.iter().rev()))
}
use crate::expr::{parse_poly, ExprError, Poly, VarSet};
use crate::field::{q_to_zp, Field, Zp, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdealError {
    #[error("an ideal needs at least one generator")]
    Empty,
    #[error("zero generator")]
    ZeroGenerator,
    #[error("generator uses variables outside {0:?}")]
    ForeignVariable(Vec<String>),
    #[error("resource ceiling exceeded: {what} reached {value}")]
    Ceiling { what: &'static str, value: u64 },
    #[error("input generator {0} does not reduce to zero modulo the basis")]
    Membership(usize),
    #[error("malformed ideal JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A finitely generated ideal in `Q[vars]`, ordered by grevlex on `vars`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyIdeal {
    vars: VarSet,
    generators: Vec<Poly<Q>>,
}

#[derive(Serialize, Deserialize)]
struct IdealJson {
    variables: Vec<String>,
    order: String,
    generators: Vec<String>,
}

impl PolyIdeal {
    pub fn new(vars: VarSet, generators: Vec<Poly<Q>>) -> Result<Self, IdealError> {
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            if g.is_zero() {
                return Err(IdealError::ZeroGenerator);
            }
            let p = g.pruned();
            if !p.vars().is_subset_of(&vars) {
                return Err(IdealError::ForeignVariable(vars.names().to_vec()));
            }
            gens.push(p.aligned(&vars));
        }
        Ok(PolyIdeal { vars, generators: gens })
    }

    /// Parses generator strings over the given variable order.
    pub fn parse(vars: &[&str], generators: &[&str]) -> Result<Self, IdealError> {
        let gens = generators.iter().map(|g| parse_poly(g)).collect::<Result<Vec<_>, _>>()?;
        Self::new(VarSet::new(vars.iter().copied()), gens)
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn generators(&self) -> &[Poly<Q>] {
        &self.generators
    }

    /// The ideal generated by these generators and `extra`.
    pub fn extended(&self, extra: impl IntoIterator<Item = Poly<Q>>) -> Result<Self, IdealError> {
        let mut gens = self.generators.clone();
        gens.extend(extra.into_iter().filter(|p| !p.is_zero()));
        Self::new(self.vars.clone(), gens)
    }

    pub fn to_json(&self) -> String {
        let j = IdealJson {
            variables: self.vars.names().to_vec(),
            order: "grevlex".into(),
            generators: self.generators.iter().map(|g| g.to_string()).collect(),
        };
        serde_json::to_string(&j).expect("ideal serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IdealError> {
        let j: IdealJson = serde_json::from_str(text).map_err(|e| IdealError::Json(e.to_string()))?;
        if j.order != "grevlex" {
            return Err(IdealError::Json(format!("unsupported order {}", j.order)));
        }
        let vars: Vec<&str> = j.variables.iter().map(String::as_str).collect();
        let gens: Vec<&str> = j.generators.iter().map(String::as_str).collect();
        Self::parse(&vars, &gens)
    }
}

/// Resource ceilings for a basis computation.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_pairs: u64,
    pub max_terms: usize,
    pub time: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_pairs: 200_000, max_terms: 500_000, time: None }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GroebnerStats {
    pub pairs_reduced: u64,
    pub zero_reductions: u64,
    pub pairs_pruned: u64,
}

/// A reduced Gröbner basis, monic, sorted by increasing leading monomial.
#[derive(Debug, Clone)]
pub struct GroebnerBasis {
    vars: VarSet,
    polys: Vec<Poly<Q>>,
    pub stats: GroebnerStats,
}

struct Entry<C> {
    poly: Poly<C>,
    sugar: u32,
}

struct Pair {
    i: usize,
    j: usize,
    lcm: Vec<u16>,
    sugar: u32,
}

fn lcm_rec(a: &[u16], b: &[u16]) -> Vec<u16> {
    let mut out: Vec<u16> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
    out[0] = out[1..].iter().sum();
    out
}

fn coprime(a: &[u16], b: &[u16]) -> bool {
    a[1..].iter().zip(&b[1..]).all(|(x, y)| *x == 0 || *y == 0)
}

fn divides(a: &[u16], b: &[u16]) -> bool {
    Poly::<Q>::rec_divides(a, b)
}

fn split_lead<C: Field>(p: &Poly<C>) -> (Vec<u16>, C, Poly<C>) {
    let (exps, coeffs) = p.raw_parts();
    let s = p.vars().len() + 1;
    (
        exps[..s].to_vec(),
        coeffs[0].clone(),
        Poly::from_raw(p.vars().clone(), exps[s..].to_vec(), coeffs[1..].to_vec()),
    )
}

/// Full normal form of `p` modulo monic `basis`; returns the remainder and
/// the sugar of the result given the sugar of `p`.
fn normal_form<C: Field>(p: &Poly<C>, sugar: u32, basis: &[&Entry<C>], limits: &Limits, start: Instant) -> Result<(Poly<C>, u32), IdealError> {
    let vars = p.vars().clone();
    let mut rem = p.clone();
    let mut sugar = sugar;
    let (mut out_e, mut out_c): (Vec<u16>, Vec<C>) = (Vec::new(), Vec::new());
    let tails: Vec<(Vec<u16>, Poly<C>)> = basis
        .iter()
        .map(|e| {
            let (lead, _, tail) = split_lead(&e.poly);
            (lead, tail)
        })
        .collect();
    while !rem.is_zero() {
        if rem.nterms() > limits.max_terms {
            return Err(IdealError::Ceiling { what: "terms", value: rem.nterms() as u64 });
        }
        check_time(limits, start)?;
        let (lead, c, rest) = split_lead(&rem);
        match tails.iter().position(|(l, _)| divides(l, &lead)) {
            Some(k) => {
                let qe = Poly::<C>::rec_quotient(&lead, &tails[k].0);
                sugar = sugar.max(basis[k].sugar + qe[0] as u32);
                rem = Poly::merge(&rest, &tails[k].1.mul_term_rec(&qe, &c), true);
            }
            None => {
                out_e.extend_from_slice(&lead);
                out_c.push(c);
                rem = rest;
            }
        }
    }
    Ok((Poly::from_raw(vars, out_e, out_c), sugar))
}

fn check_time(limits: &Limits, start: Instant) -> Result<(), IdealError> {
    match limits.time {
        Some(t) if start.elapsed() > t => Err(IdealError::Ceiling { what: "milliseconds", value: start.elapsed().as_millis() as u64 }),
        _ => Ok(()),
    }
}

/// Normal form of `p` modulo a list of polynomials (no sugar bookkeeping).
pub fn reduce(p: &Poly<Q>, basis: &[Poly<Q>]) -> Poly<Q> {
    if p.is_zero() || basis.is_empty() {
        return p.clone();
    }
    let vars = basis[0].vars().clone();
    let entries: Vec<Entry<Q>> = basis.iter().map(|g| Entry { poly: g.aligned(&vars).monic(), sugar: 0 }).collect();
    let refs: Vec<&Entry<Q>> = entries.iter().collect();
    let limits = Limits { max_terms: usize::MAX, ..Limits::default() };
    normal_form(&p.pruned().aligned(&vars), 0, &refs, &limits, Instant::now()).expect("unbounded reduction").0
}

/// Buchberger's algorithm with sugar selection, the product criterion and
/// the Gebauer–Möller chain criterion, over any coefficient field. Returns
/// the reduced monic basis sorted by increasing leading monomial.
pub fn groebner_polys<C: Field>(generators: &[Poly<C>], limits: &Limits) -> Result<(Vec<Poly<C>>, GroebnerStats), IdealError> {
    let Some(first) = generators.first() else {
        return Err(IdealError::Empty);
    };
    let vars = first.vars().clone();
    let start = Instant::now();
    let mut stats = GroebnerStats::default();
    let mut store: Vec<Entry<C>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut pairs: Vec<Pair> = Vec::new();

    let mut inputs: Vec<Poly<C>> = generators.iter().filter(|g| !g.is_zero()).map(|g| g.aligned(&vars).monic()).collect();
    inputs.sort_by(|a, b| grevlex(a.leading_rec(), b.leading_rec()));
    inputs.dedup();
    for g in inputs {
        let sugar = g.total_degree();
        let refs: Vec<&Entry<C>> = active.iter().map(|&k| &store[k]).collect();
        let (h, sugar) = normal_form(&g, sugar, &refs, limits, start)?;
        if h.is_zero() {
            continue;
        }
        insert(&mut store, &mut active, &mut pairs, h.monic(), sugar, &mut stats);
    }

    while !pairs.is_empty() {
        if stats.pairs_reduced >= limits.max_pairs {
            return Err(IdealError::Ceiling { what: "pairs", value: stats.pairs_reduced });
        }
        check_time(limits, start)?;
        if active.len() == 1 && store[active[0]].poly.is_constant() {
            break;
        }
        let best = (0..pairs.len())
            .min_by(|&a, &b| {
                let (p, q) = (&pairs[a], &pairs[b]);
                p.sugar.cmp(&q.sugar).then_with(|| grevlex(&p.lcm, &q.lcm)).then_with(|| (p.i, p.j).cmp(&(q.i, q.j)))
            })
            .expect("nonempty");
        let pair = pairs.swap_remove(best);
        stats.pairs_reduced += 1;
        let s = spoly(&store[pair.i].poly, &store[pair.j].poly, &pair.lcm);
        let refs: Vec<&Entry<C>> = active.iter().map(|&k| &store[k]).collect();
        let (h, sugar) = normal_form(&s, pair.sugar, &refs, limits, start)?;
        if h.is_zero() {
            stats.zero_reductions += 1;
            continue;
        }
        insert(&mut store, &mut active, &mut pairs, h.monic(), sugar, &mut stats);
    }
    Ok((interreduce(&store, &active, &vars, limits)?, stats))
}

/// Reduced Gröbner basis of `ideal`; every input generator is checked to
/// reduce to zero modulo the result.
pub fn groebner(ideal: &PolyIdeal, limits: &Limits) -> Result<GroebnerBasis, IdealError> {
    let (basis, stats) = groebner_polys(&ideal.generators, limits)?;
    let out = GroebnerBasis { vars: ideal.vars.clone(), polys: basis, stats };
    for (k, g) in ideal.generators.iter().enumerate() {
        if !out.reduce(g).is_zero() {
            return Err(IdealError::Membership(k));
        }
    }
    Ok(out)
}

/// The basis of `ideal` modulo the prime `2^61 - 1`, or `None` when some
/// coefficient has a denominator divisible by it.
pub fn groebner_mod_p(ideal: &PolyIdeal, limits: &Limits) -> Result<Option<(Vec<Poly<Zp>>, GroebnerStats)>, IdealError> {
    let mut gens = Vec::with_capacity(ideal.generators.len());
    for g in &ideal.generators {
        if g.terms().any(|(_, c)| q_to_zp(c).is_none()) {
            return Ok(None);
        }
        gens.push(g.map_coeffs(|c| q_to_zp(c).expect("checked")));
    }
    groebner_polys(&gens, limits).map(Some)
}

fn spoly<C: Field>(f: &Poly<C>, g: &Poly<C>, lcm: &[u16]) -> Poly<C> {
    let (fl, _, ft) = split_lead(f);
    let (gl, _, gt) = split_lead(g);
    let one = C::one();
    let a = ft.mul_term_rec(&Poly::<C>::rec_quotient(lcm, &fl), &one);
    let b = gt.mul_term_rec(&Poly::<C>::rec_quotient(lcm, &gl), &one);
    Poly::merge(&a, &b, true)
}

fn insert<C: Field>(
    store: &mut Vec<Entry<C>>,
    active: &mut Vec<usize>,
    pairs: &mut Vec<Pair>,
    h: Poly<C>,
    sugar: u32,
    stats: &mut GroebnerStats,
) {
    let hl = h.leading_rec().to_vec();
    let hi = store.len();
    store.push(Entry { poly: h, sugar });
    let lead = |k: usize| store[k].poly.leading_rec().to_vec();

    // new pairs (h, g), pruned by the chain criterion among themselves
    let cand: Vec<(usize, Vec<u16>)> = active.iter().map(|&g| (g, lcm_rec(&hl, &lead(g)))).collect();
    let mut keep: Vec<(usize, Vec<u16>)> = Vec::new();
    for (idx, (g, l)) in cand.iter().enumerate() {
        if coprime(&hl, &lead(*g)) {
            keep.push((*g, l.clone()));
            continue;
        }
        let dominated = cand[idx + 1..].iter().any(|(_, m)| divides(m, l)) || keep.iter().any(|(_, m)| divides(m, l));
        if dominated {
            stats.pairs_pruned += 1;
        } else {
            keep.push((*g, l.clone()));
        }
    }
    let mut fresh = Vec::new();
    for (g, l) in keep {
        if coprime(&hl, &lead(g)) {
            stats.pairs_pruned += 1;
            continue;
        }
        let sg = &store[g];
        let gl = lead(g);
        let s = (sugar + l[0] as u32 - hl[0] as u32).max(sg.sugar + l[0] as u32 - gl[0] as u32);
        fresh.push(Pair { i: g, j: hi, lcm: l, sugar: s });
    }
    // old pairs made redundant by h
    let before = pairs.len();
    pairs.retain(|p| {
        if !divides(&hl, &p.lcm) {
            return true;
        }
        let li = lcm_rec(&lead(p.i), &hl);
        let lj = lcm_rec(&lead(p.j), &hl);
        li == p.lcm || lj == p.lcm
    });
    stats.pairs_pruned += (before - pairs.len()) as u64;
    pairs.extend(fresh);
    active.retain(|&g| !divides(&hl, store[g].poly.leading_rec()));
    active.push(hi);
}

fn interreduce<C: Field>(store: &[Entry<C>], active: &[usize], vars: &VarSet, limits: &Limits) -> Result<Vec<Poly<C>>, IdealError> {
    let mut lead: Vec<&Entry<C>> = active.iter().map(|&k| &store[k]).collect();
    lead.sort_by(|a, b| grevlex(a.poly.leading_rec(), b.poly.leading_rec()));
    let mut minimal: Vec<&Entry<C>> = Vec::new();
    for e in lead {
        if !minimal.iter().any(|m| divides(m.poly.leading_rec(), e.poly.leading_rec())) {
            minimal.push(e);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for (k, e) in minimal.iter().enumerate() {
        let others: Vec<&Entry<C>> = minimal.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| *x).collect();
        let (lt, c, tail) = split_lead(&e.poly);
        let (nf, _) = normal_form(&tail, 0, &others, limits, Instant::now())?;
        let head = Poly::from_raw(vars.clone(), lt, vec![c]);
        out.push(Poly::merge(&head, &nf, false).monic());
    }
    Ok(out)
}

impl GroebnerBasis {
    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn polys(&self) -> &[Poly<Q>] {
        &self.polys
    }

    pub fn is_unit(&self) -> bool {
        self.polys.iter().any(|p| p.is_constant() && !p.is_zero())
    }

    /// Normal form modulo the basis.
    pub fn reduce(&self, p: &Poly<Q>) -> Poly<Q> {
        let refs: Vec<Entry<Q>> = self.polys.iter().map(|g| Entry { poly: g.clone(), sugar: 0 }).collect();
        let refs: Vec<&Entry<Q>> = refs.iter().collect();
        let limits = Limits { max_terms: usize::MAX, ..Limits::default() };
        normal_form(&p.pruned().aligned(&self.vars), 0, &refs, &limits, Instant::now()).expect("unbounded reduction").0
    }

    pub fn contains(&self, p: &Poly<Q>) -> bool {
        self.reduce(p).is_zero()
    }

    pub fn leading_exponents(&self) -> Vec<Vec<u16>> {
        self.polys.iter().map(|p| p.leading_exponents().expect("nonzero").to_vec()).collect()
    }

    /// Krull dimension of the quotient ring, with `-1` for the unit ideal.
    pub fn dimension(&self) -> i64 {
        self.independent_set().map_or(-1, |s| s.len() as i64)
    }

    /// A largest set of variables no leading monomial lives in entirely,
    /// or `None` for the unit ideal.
    pub fn independent_set(&self) -> Option<Vec<String>> {
        if self.is_unit() {
            return None;
        }
        let n = self.vars.len();
        let supports: Vec<Vec<usize>> = self
            .leading_exponents()
            .iter()
            .map(|e| e.iter().enumerate().filter(|(_, &x)| x > 0).map(|(k, _)| k).collect())
            .collect();
        let mut best: Vec<usize> = Vec::new();
        let mut cur: Vec<bool> = vec![false; n];
        max_independent(0, &supports, &mut cur, 0, &mut best);
        Some(best.into_iter().map(|k| self.vars.names()[k].clone()).collect())
    }

    /// Monomials outside the leading-term ideal, when there are finitely many.
    pub fn standard_monomials(&self) -> Option<Vec<Vec<u16>>> {
        if self.is_unit() {
            return Some(Vec::new());
        }
        let n = self.vars.len();
        let lts = self.leading_exponents();
        let mut bound = vec![u16::MAX; n];
        for e in &lts {
            let support: Vec<usize> = (0..n).filter(|&k| e[k] > 0).collect();
            if let [k] = support[..] {
                bound[k] = bound[k].min(e[k]);
            }
        }
        if bound.contains(&u16::MAX) {
            return None;
        }
        let mut out = Vec::new();
        let mut e = vec![0u16; n];
        loop {
            if !lts.iter().any(|l| l.iter().zip(&e).all(|(a, b)| a <= b)) {
                out.push(e.clone());
            }
            let mut k = 0;
            loop {
                if k == n {
                    out.sort_by(|a, b| grevlex_exps(a, b));
                    return Some(out);
                }
                e[k] += 1;
                if e[k] < bound[k] {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
        }
    }

    /// Number of distinct real points of a zero-dimensional ideal: the real
    /// eigenvalues of multiplication by a fixed generic linear form. `None`
    /// if the ideal is not zero-dimensional.
    pub fn real_point_count(&self) -> Option<usize> {
        let std = self.standard_monomials()?;
        let m = std.len();
        if m == 0 {
            return Some(0);
        }
        let n = self.vars.len();
        // a fixed form with small distinct integer weights
        let weights: Vec<i64> = (0..n as i64).map(|k| 3 + 7 * k - (k * k) % 5).collect();
        let mut mat = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (col, mono) in std.iter().enumerate() {
            let mut terms = Vec::new();
            for (k, w) in weights.iter().enumerate() {
                let mut e = mono.clone();
                e[k] += 1;
                terms.push((e, Q::from_integer((*w).into())));
            }
            let nf = self.reduce(&Poly::from_terms(self.vars.clone(), terms));
            for (e, c) in nf.terms() {
                let row = std.iter().position(|s| s.as_slice() == e).expect("normal forms are standard");
                mat[(row, col)] = crate::field::q_to_f64(c);
            }
        }
        let eig = mat.complex_eigenvalues();
        let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut reals: Vec<f64> = eig.iter().filter(|z| z.im.abs() <= 1e-9 * scale).map(|z| z.re).collect();
        reals.sort_by(f64::total_cmp);
        reals.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * scale);
        Some(reals.len())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.polys.iter().map(|p| p.to_string()).collect()
    }
}

fn max_independent(k: usize, supports: &[Vec<usize>], cur: &mut Vec<bool>, size: usize, best: &mut Vec<usize>) {
    let n = cur.len();
    if size + (n - k) <= best.len() {
        return;
    }
    if k == n {
        *best = (0..n).filter(|&i| cur[i]).collect();
        return;
    }
    cur[k] = true;
    // a leading monomial fully inside the set makes it dependent
    let ok = supports.iter().all(|s| !s.contains(&k) || s.iter().any(|&i| !cur[i]));
    if ok {
        max_independent(k + 1, supports, cur, size + 1, best);
    }
    cur[k] = false;
    max_independent(k + 1, supports, cur, size, best);
}

/// Dimension of `ideal`, computing its basis under `limits`.
pub fn dimension(ideal: &PolyIdeal, limits: &Limits) -> Result<i64, IdealError> {
    Ok(groebner(ideal, limits)?.dimension())
}

/// Monic leading coefficient normalization used by callers comparing bases.
pub fn monic_eq(a: &Poly<Q>, b: &Poly<Q>) -> bool {
    let (a, b) = Poly::unify(a, b);
    a.monic() == b.monic()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(vars: &[&str], gens: &[&str]) -> i64 {
        dimension(&PolyIdeal::parse(vars, gens).unwrap(), &Limits::default()).unwrap()
    }

    #[test]
    fn small_dimensions() {
        assert_eq!(dim(&["x", "y"], &["x", "y"]), 0);
        assert_eq!(dim(&["x", "y"], &["x^2+y^2-1"]), 1);
        assert_eq!(dim(&["x", "y"], &["x*y-1", "x"]), -1);
        assert_eq!(dim(&["x", "y"], &["1"]), -1);
    }
}
