//! Multivariate polynomial gcd over the rationals.
//!
//! Inputs are cleared to primitive integer polynomials. Variables occurring in
//! only one argument are eliminated by splitting into coefficients, a modular
//! image screen detects variables the gcd cannot depend on, and the remaining
//! cases go through the heuristic (evaluation/interpolation) gcd with a
//! subresultant remainder sequence as the fallback.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::poly::{Poly, VarSet};
use crate::field::{bigint_to_zp, ExactDiv, Field, Ring, Zp, Q};

pub(crate) type ZPoly = Poly<BigInt>;

/// Splits `p` as `content * P` with `P` a primitive integer polynomial whose
/// leading coefficient is positive.
pub fn to_int_primitive(p: &Poly<Q>) -> (Q, ZPoly) {
    if p.is_zero() {
        return (Q::zero(), Poly::zero(p.vars().clone()));
    }
    let mut l = BigInt::one();
    for c in p.coeffs() {
        l = l.lcm(c.denom());
    }
    let ints: Vec<BigInt> = p.coeffs().iter().map(|c| c.numer() * (&l / c.denom())).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    if ints[0].is_negative() {
        g = -g;
    }
    let (exps, _) = p.raw_parts();
    let coeffs: Vec<BigInt> = ints.iter().map(|c| c / &g).collect();
    let zp = Poly::from_raw(p.vars().clone(), exps.to_vec(), coeffs);
    (Q::new(g, l), zp)
}

pub fn int_to_q(p: &ZPoly) -> Poly<Q> {
    p.map_coeffs(|c| Q::from_integer(c.clone()))
}

fn int_content(p: &ZPoly) -> BigInt {
    let mut g = BigInt::zero();
    for c in p.coeffs() {
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn int_primitive(p: &ZPoly) -> ZPoly {
    if p.is_zero() {
        return p.clone();
    }
    let mut g = int_content(p);
    if p.coeffs()[0].is_negative() {
        g = -g;
    }
    if g.is_one() {
        p.clone()
    } else {
        p.map_coeffs(|c| c / &g)
    }
}

fn positive_lc(p: ZPoly) -> ZPoly {
    if !p.is_zero() && p.coeffs()[0].is_negative() {
        p.neg()
    } else {
        p
    }
}

/// Monic gcd of two rational polynomials (`gcd(0, 0) = 0`).
pub fn gcd(a: &Poly<Q>, b: &Poly<Q>) -> Poly<Q> {
    let (a, b) = Poly::unify(a, b);
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one(a.vars().clone());
    }
    let (_, za) = to_int_primitive(&a);
    let (_, zb) = to_int_primitive(&b);
    let g = gcd_prim(&za, &zb);
    int_to_q(&g).monic()
}

/// gcd of integer polynomials, returned with positive leading coefficient.
pub(crate) fn gcd_z(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_zero() {
        return positive_lc(b.clone());
    }
    if b.is_zero() {
        return positive_lc(a.clone());
    }
    let ca = int_content(a);
    let cb = int_content(b);
    let c = ca.gcd(&cb);
    let pa = a.map_coeffs(|x| x / &ca);
    let pb = b.map_coeffs(|x| x / &cb);
    let g = gcd_prim(&positive_lc(pa), &positive_lc(pb));
    if c.is_one() {
        g
    } else {
        g.map_coeffs(|x| x * &c)
    }
}

fn gcd_list(mut polys: Vec<ZPoly>) -> ZPoly {
    polys.retain(|p| !p.is_zero());
    polys.sort_by_key(|p| (p.total_degree(), p.nterms()));
    let mut it = polys.into_iter();
    let Some(mut g) = it.next() else {
        panic!("gcd of an empty list");
    };
    g = positive_lc(g);
    for p in it {
        if g.is_constant() {
            break;
        }
        g = gcd_z(&g, &p);
    }
    if g.is_constant() {
        let vars = g.vars().clone();
        // contents were divided out by the callers; a constant gcd means 1
        return Poly::one(vars);
    }
    g
}

/// Groups the terms of `p` by their exponents on `vars`; returns the
/// coefficient polynomials (which no longer involve those variables).
fn split_coefficients(p: &ZPoly, vars: &[usize]) -> Vec<ZPoly> {
    let mut groups: std::collections::BTreeMap<Vec<u16>, Vec<(Vec<u16>, BigInt)>> = Default::default();
    for (e, c) in p.terms() {
        let key: Vec<u16> = vars.iter().map(|&k| e[k]).collect();
        let mut rest = e.to_vec();
        for &k in vars {
            rest[k] = 0;
        }
        groups.entry(key).or_default().push((rest, c.clone()));
    }
    groups.into_values().map(|terms| Poly::from_terms(p.vars().clone(), terms)).collect()
}

fn common_shape(a: &ZPoly, b: &ZPoly) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let ua = a.used_vars();
    let ub = b.used_vars();
    let only_a: Vec<usize> = ua.iter().copied().filter(|k| !ub.contains(k)).collect();
    let only_b: Vec<usize> = ub.iter().copied().filter(|k| !ua.contains(k)).collect();
    let common: Vec<usize> = ua.iter().copied().filter(|k| ub.contains(k)).collect();
    (only_a, only_b, common)
}

/// gcd of primitive integer polynomials with positive leading coefficients.
fn gcd_prim(a: &ZPoly, b: &ZPoly) -> ZPoly {
    let vars = a.vars().clone();
    if a.is_constant() || b.is_constant() {
        return Poly::one(vars);
    }
    if a == b {
        return a.clone();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    if ma.iter().any(|&x| x > 0) || mb.iter().any(|&x| x > 0) {
        let m: Vec<u16> = ma.iter().zip(&mb).map(|(x, y)| *x.min(y)).collect();
        let g = gcd_prim(&a.div_monomial(&ma), &b.div_monomial(&mb));
        return g.mul_monomial(&m, &BigInt::one());
    }
    let (only_a, only_b, common) = common_shape(a, b);
    if common.is_empty() {
        return Poly::one(vars);
    }
    if !only_a.is_empty() || !only_b.is_empty() {
        let mut list = Vec::new();
        if only_a.is_empty() {
            list.push(a.clone());
        } else {
            list.extend(split_coefficients(a, &only_a));
        }
        if only_b.is_empty() {
            list.push(b.clone());
        } else {
            list.extend(split_coefficients(b, &only_b));
        }
        return gcd_list(list);
    }

    // Modular screen: the gcd degree in v is at most the degree of the gcd of
    // images taken at points where the leading coefficients in v survive.
    let mut rng = SplitMix(0x9E37_79B9_7F4A_7C15 ^ (a.nterms() as u64) << 20 ^ b.nterms() as u64);
    let mut bounds = Vec::with_capacity(common.len());
    for &v in &common {
        match modular_gcd_degree(a, b, v, &mut rng) {
            Some(0) => {
                let mut list = split_coefficients(a, &[v]);
                list.extend(split_coefficients(b, &[v]));
                return gcd_list(list);
            }
            Some(d) => bounds.push((v, d)),
            None => bounds.push((v, a.degree_in(v).min(b.degree_in(v)))),
        }
    }

    // One argument dividing the other is the common case in rational arithmetic.
    if bounds.iter().all(|&(v, d)| d == b.degree_in(v)) {
        if a.div_exact(b).is_some() {
            return b.clone();
        }
    }
    if bounds.iter().all(|&(v, d)| d == a.degree_in(v)) {
        if b.div_exact(a).is_some() {
            return a.clone();
        }
    }

    let mut order = common.clone();
    order.sort_by_key(|&v| a.degree_in(v).max(b.degree_in(v)));
    if let Some((h, _, _)) = heu_gcd(a, b, &order, 0) {
        return positive_lc(h);
    }
    let main = bounds.iter().min_by_key(|&&(v, d)| (d, a.degree_in(v) + b.degree_in(v))).unwrap().0;
    positive_lc(prs_gcd(a, b, main))
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    fn zp(&mut self) -> Zp {
        Zp::new(self.next())
    }
}

fn univariate_image(p: &ZPoly, v: usize, point: &[Zp]) -> Vec<Zp> {
    let deg = p.degree_in(v) as usize;
    let mut out = vec![Zp::zero(); deg + 1];
    for (e, c) in p.terms() {
        let mut t = bigint_to_zp(c);
        for (k, &x) in e.iter().enumerate() {
            if k != v && x > 0 {
                t = t * point[k].pow(x as u64);
            }
        }
        out[e[v] as usize] += &t;
    }
    out
}

fn trim(p: &mut Vec<Zp>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// Dense univariate gcd over Zp; returns the degree (`None` for gcd(0,0)).
pub(crate) fn zp_univariate_gcd(mut a: Vec<Zp>, mut b: Vec<Zp>) -> Vec<Zp> {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        // a mod b
        let lb_inv = b.last().unwrap().inv();
        let db = b.len() - 1;
        while a.len() > db && !a.is_empty() {
            let da = a.len() - 1;
            let f = *a.last().unwrap() * lb_inv;
            for i in 0..=db {
                let t = f * b[i];
                a[da - db + i] -= &t;
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a
}

fn modular_gcd_degree(a: &ZPoly, b: &ZPoly, v: usize, rng: &mut SplitMix) -> Option<u32> {
    let n = a.vars().len();
    for _ in 0..3 {
        let point: Vec<Zp> = (0..n).map(|_| rng.zp()).collect();
        let ia = univariate_image(a, v, &point);
        let ib = univariate_image(b, v, &point);
        if ia.last().is_none_or(|c| c.is_zero()) || ib.last().is_none_or(|c| c.is_zero()) {
            continue;
        }
        let g = zp_univariate_gcd(ia, ib);
        return Some(g.len().saturating_sub(1) as u32);
    }
    None
}

fn max_norm(p: &ZPoly) -> BigInt {
    p.coeffs().iter().map(|c| c.abs()).max().unwrap_or_default()
}

/// Coefficient of the lexicographically largest term with respect to `vars`.
fn ground_lc(p: &ZPoly, vars: &[usize]) -> BigInt {
    let mut best: Option<(Vec<u16>, &BigInt)> = None;
    for (e, c) in p.terms() {
        let key: Vec<u16> = vars.iter().map(|&k| e[k]).collect();
        if best.as_ref().is_none_or(|(bk, _)| key > *bk) {
            best = Some((key, c));
        }
    }
    best.map(|(_, c)| c.clone()).unwrap_or_default()
}

const HEU_MAX_BITS: u64 = 400_000;

/// Heuristic gcd: evaluate the first variable at a large integer, recurse,
/// reconstruct by symmetric base-x expansion and verify by division.
fn heu_gcd(f: &ZPoly, g: &ZPoly, vars: &[usize], depth: usize) -> Option<(ZPoly, ZPoly, ZPoly)> {
    let vs = f.vars().clone();
    if vars.is_empty() {
        let a = f.as_constant()?;
        let b = g.as_constant()?;
        let h = a.gcd(&b);
        if h.is_zero() {
            return None;
        }
        let cff = &a / &h;
        let cfg = &b / &h;
        return Some((Poly::constant(vs.clone(), h), Poly::constant(vs.clone(), cff), Poly::constant(vs, cfg)));
    }
    if f.is_zero() || g.is_zero() {
        return None;
    }
    let cf = int_content(f);
    let cg = int_content(g);
    let c = cf.gcd(&cg);
    let f = f.map_coeffs(|x| x / &c);
    let g = g.map_coeffs(|x| x / &c);
    let fnorm = max_norm(&f);
    let gnorm = max_norm(&g);
    if fnorm.bits().max(gnorm.bits()) > HEU_MAX_BITS {
        return None;
    }
    let b: BigInt = BigInt::from(2) * fnorm.clone().min(gnorm.clone()) + 29;
    let flc = ground_lc(&f, vars).abs();
    let glc = ground_lc(&g, vars).abs();
    let lower: BigInt = BigInt::from(2) * (&fnorm / flc).min(&gnorm / glc) + 4;
    let cap: BigInt = BigInt::from(99) * b.sqrt();
    let mut x: BigInt = b.min(cap).max(lower);
    let v = vars[0];
    let rest = &vars[1..];
    let vname = vs.names()[v].clone();
    for _ in 0..6 {
        let ff = f.eval_var(&vname, &x);
        let gg = g.eval_var(&vname, &x);
        if !ff.is_zero() && !gg.is_zero() {
            if let Some((h, cff, cfg)) = heu_gcd(&ff, &gg, rest, depth + 1) {
                let h = int_primitive(&interpolate(&h, &x, v));
                if !h.is_zero() {
                    if let (Some(qf), Some(qg)) = (f.div_exact(&h), g.div_exact(&h)) {
                        return Some((scale_int(&h, &c), qf, qg));
                    }
                }
                let cff = interpolate(&cff, &x, v);
                if !cff.is_zero() {
                    if let Some(h) = f.div_exact(&cff) {
                        if let Some(qg) = g.div_exact(&h) {
                            return Some((scale_int(&h, &c), cff, qg));
                        }
                    }
                }
                let cfg = interpolate(&cfg, &x, v);
                if !cfg.is_zero() {
                    if let Some(h) = g.div_exact(&cfg) {
                        if let Some(qf) = f.div_exact(&h) {
                            return Some((scale_int(&h, &c), qf, cfg));
                        }
                    }
                }
            }
        }
        // x <- 73794 * x * x^(1/4) / 27011
        x = BigInt::from(73794) * &x * x.sqrt().sqrt() / 27011;
    }
    None
}

fn scale_int(p: &ZPoly, c: &BigInt) -> ZPoly {
    if c.is_one() {
        p.clone()
    } else {
        p.map_coeffs(|x| x * c)
    }
}

fn symmetric_mod(c: &BigInt, x: &BigInt) -> BigInt {
    let mut r = c.mod_floor(x);
    let half = x >> 1;
    if r > half {
        r -= x;
    }
    r
}

fn interpolate(h: &ZPoly, x: &BigInt, v: usize) -> ZPoly {
    let vars = h.vars().clone();
    let mut out = Poly::zero(vars.clone());
    let mut h = h.clone();
    let mut i: u16 = 0;
    let mut e = vec![0u16; vars.len()];
    while !h.is_zero() {
        let g = h.map_coeffs(|c| symmetric_mod(c, x));
        e[v] = i;
        out = out.add(&g.mul_monomial(&e, &BigInt::one()));
        h = h.sub(&g).map_coeffs(|c| c / x);
        i += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// Univariate views over a coefficient domain and subresultant sequences.

/// Dense univariate polynomial in a distinguished variable; entry `i`
/// multiplies `v^i`. Trailing entries are nonzero.
pub(crate) type Upoly<C> = Vec<Poly<C>>;

pub(crate) fn to_upoly<C: Ring>(p: &Poly<C>, v: usize) -> Upoly<C> {
    p.coefficients_in(v)
}

pub(crate) fn from_upoly<C: Ring>(vars: &VarSet, v: usize, u: &Upoly<C>) -> Poly<C> {
    Poly::from_coefficients_in(vars, v, u)
}

fn udeg<C: Ring>(u: &Upoly<C>) -> Option<usize> {
    if u.is_empty() {
        None
    } else {
        Some(u.len() - 1)
    }
}

fn utrim<C: Ring>(u: &mut Upoly<C>) {
    while u.last().is_some_and(|c| c.is_zero()) {
        u.pop();
    }
}

/// Pseudo-remainder `lc(g)^(deg f - deg g + 1) f mod g`.
pub(crate) fn uprem<C: Ring>(f: &Upoly<C>, g: &Upoly<C>) -> Upoly<C> {
    let dg = udeg(g).expect("prem by zero");
    let Some(df) = udeg(f) else {
        return Vec::new();
    };
    if df < dg {
        return f.clone();
    }
    let mut n = df - dg + 1;
    let lcg = g[dg].clone();
    let mut r = f.clone();
    while let Some(dr) = udeg(&r) {
        if dr < dg {
            break;
        }
        let lcr = r[dr].clone();
        let j = dr - dg;
        for c in r.iter_mut() {
            *c = c.mul(&lcg);
        }
        for i in 0..=dg {
            let t = g[i].mul(&lcr);
            r[i + j] = r[i + j].sub(&t);
        }
        utrim(&mut r);
        n -= 1;
    }
    if n > 0 {
        let m = lcg.pow(n as u32);
        for c in r.iter_mut() {
            *c = c.mul(&m);
        }
    }
    r
}

fn uexquo<C: ExactDiv>(u: &Upoly<C>, d: &Poly<C>) -> Upoly<C> {
    u.iter()
        .map(|c| c.div_exact(d).expect("inexact division in subresultant sequence"))
        .collect()
}

/// Subresultant remainder sequence of `f`, `g` (deg f >= deg g >= 0) and the
/// final scalar subresultant. Returns `(sequence, last_scalar)`.
pub(crate) fn subresultants<C: ExactDiv>(f: &Upoly<C>, g: &Upoly<C>) -> (Vec<Upoly<C>>, Poly<C>) {
    let n = udeg(f).expect("nonzero");
    let m = udeg(g).expect("nonzero");
    assert!(n >= m);
    let vars = f[0].vars().clone();
    let one = Poly::<C>::one(vars);
    let mut seq = vec![f.clone(), g.clone()];
    let mut d = n - m;
    let b = if (d + 1) % 2 == 0 { one.clone() } else { one.neg() };
    let mut h = uprem(f, g);
    h = h.iter().map(|c| c.mul(&b)).collect();
    let mut lc = g[m].clone();
    let mut c = lc.pow(d as u32);
    let mut s_last = c.clone();
    c = c.neg();
    let (mut fcur, mut gcur) = (f.clone(), g.clone());
    let _ = &fcur;
    let mut mcur = m;
    while let Some(k) = udeg(&h) {
        seq.push(h.clone());
        fcur = gcur;
        gcur = h;
        d = mcur - k;
        mcur = k;
        let b = lc.neg().mul(&c.pow(d as u32));
        h = uprem(&fcur, &gcur);
        h = uexquo(&h, &b);
        lc = gcur[k].clone();
        if d > 1 {
            let qd = c.pow((d - 1) as u32);
            c = lc.neg().pow(d as u32).div_exact(&qd).expect("inexact subresultant scalar");
        } else {
            c = lc.neg();
        }
        s_last = c.neg();
    }
    (seq, s_last)
}

/// Resultant of two univariate views (sign convention of the Sylvester matrix).
pub(crate) fn uresultant<C: ExactDiv>(f: &Upoly<C>, g: &Upoly<C>) -> Poly<C> {
    let (df, dg) = (udeg(f).unwrap(), udeg(g).unwrap());
    if df < dg {
        let r = uresultant(g, f);
        return if (df * dg) % 2 == 1 { r.neg() } else { r };
    }
    if dg == 0 {
        return g[0].pow(df as u32);
    }
    let (seq, s) = subresultants(f, g);
    let last = seq.last().unwrap();
    if udeg(last).unwrap() > 0 {
        Poly::zero(f[0].vars().clone())
    } else {
        s
    }
}

fn ucontent(u: &Upoly<BigInt>) -> ZPoly {
    gcd_list(u.iter().filter(|c| !c.is_zero()).cloned().collect())
}

fn prs_gcd(a: &ZPoly, b: &ZPoly, v: usize) -> ZPoly {
    let vars = a.vars().clone();
    let ua = to_upoly(a, v);
    let ub = to_upoly(b, v);
    let ca = ucontent(&ua);
    let cb = ucontent(&ub);
    let c = gcd_z(&ca, &cb);
    let pa: Upoly<BigInt> = uexquo(&ua, &ca);
    let pb: Upoly<BigInt> = uexquo(&ub, &cb);
    let (f, g) = if pa.len() >= pb.len() { (pa, pb) } else { (pb, pa) };
    let (seq, _) = subresultants(&f, &g);
    let last = seq.last().unwrap().clone();
    let g = if last.len() == 1 {
        Poly::one(vars.clone())
    } else {
        let cl = ucontent(&last);
        from_upoly(&vars, v, &uexquo(&last, &cl))
    };
    int_primitive(&g.mul(&c))
}

#[allow(dead_code)]
fn sign_of(p: &ZPoly) -> Sign {
    p.coeffs().first().map_or(Sign::NoSign, |c| c.sign())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    fn p(s: &str) -> Poly<Q> {
        parse_poly(s).unwrap()
    }

    #[test]
    fn gcd_basic() {
        let g = gcd(&p("x^2 - 1"), &p("x^2 + 2*x + 1"));
        assert_eq!(g, p("x + 1"));
        let g = gcd(&p("x*y + x"), &p("y^2 - 1"));
        assert_eq!(g, p("y + 1"));
        assert!(gcd(&p("x + y"), &p("x - y")).is_one());
    }

    #[test]
    fn gcd_multivariate_hidden_factor() {
        let f = p("(x + y*z - 3)*(x^2 - z + 1)*(y - 2)");
        let g = p("(x + y*z - 3)*(y^2 + x*z)*(y - 2)^2");
        assert_eq!(gcd(&f, &g), p("(x + y*z - 3)*(y - 2)").monic());
    }

    #[test]
    fn prs_matches_heuristic() {
        let f = p("(3*x^2*y - 2*z + 7)*(x - y*z)");
        let g = p("(3*x^2*y - 2*z + 7)*(x*z + 5)");
        let (_, zf) = to_int_primitive(&f);
        let (_, zg) = to_int_primitive(&g);
        let x = zf.vars().index("x").unwrap();
        let a = positive_lc(prs_gcd(&zf, &zg, x));
        let (_, expect) = to_int_primitive(&p("3*x^2*y - 2*z + 7"));
        assert_eq!(a, expect);
    }

    #[test]
    fn univariate_resultant() {
        let f = p("x^2 + 1");
        let g = p("x - 2");
        let x = f.vars().index("x").unwrap();
        let r = uresultant(&to_upoly(&f, x), &to_upoly(&g.aligned(f.vars()), x));
        assert_eq!(r.as_constant().unwrap(), Q::from_i64(5));
    }
}
