use std::collections::HashMap;

use linweb::expr::{associated, gcd, parse, parse_poly, reassemble, resultant, squarefree, trial_divide, Poly, RatExpr};
use linweb::field::{q, Q};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn small_poly() -> impl Strategy<Value = Poly<Q>> {
    // up to 4 terms in x, y, z with small exponents and coefficients
    prop::collection::vec((-5i64..=5, 0u16..3, 0u16..3, 0u16..2), 1..5).prop_map(|terms| {
        let vars = linweb::expr::VarSet::new(["x", "y", "z"]);
        Poly::from_terms(vars, terms.into_iter().map(|(c, a, b, d)| (vec![a, b, d], q(c, 1))).collect())
    })
}

fn nonzero_poly() -> impl Strategy<Value = Poly<Q>> {
    small_poly().prop_filter("nonzero", |p| !p.is_zero())
}

fn rat() -> impl Strategy<Value = RatExpr> {
    (small_poly(), nonzero_poly()).prop_map(|(n, d)| RatExpr::new(n, d))
}

fn point(seed: i64) -> HashMap<String, Q> {
    HashMap::from([
        ("x".to_string(), q(seed % 7 + 2, 3)),
        ("y".to_string(), q(-(seed % 5) - 1, 2)),
        ("z".to_string(), q(seed % 11 + 5, 7)),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in rat(), b in rat(), c in rat()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        if !a.is_zero() {
            prop_assert!((&a * &a.inv()).is_one());
        }
    }

    #[test]
    fn canonical_form_agrees_with_evaluation(a in rat(), b in rat()) {
        let s = &a + &b;
        let alt = RatExpr::new(a.num().mul(b.den()).add(&b.num().mul(a.den())), a.den().mul(b.den()));
        prop_assert_eq!(&s, &alt);
        // normalization is idempotent
        prop_assert_eq!(&RatExpr::new(s.num().clone(), s.den().clone()), &s);
        for seed in 0..10 {
            let p = point(seed);
            if let (Some(va), Some(vb), Some(vs)) = (a.eval_q(&p), b.eval_q(&p), s.eval_q(&p)) {
                prop_assert_eq!(va + vb, vs);
            }
        }
    }

    #[test]
    fn leibniz_and_chain(a in rat(), b in rat()) {
        let lhs = (&a * &b).diff("x");
        let rhs = &(&a.diff("x") * &b) + &(&a * &b.diff("x"));
        prop_assert_eq!(lhs, rhs);
        // d/dx a(y = b) = a_x(y=b) + a_y(y=b) * b_x, with b free of y
        let b = b.substitute("y", &RatExpr::int(3));
        let comp = a.try_substitute("y", &b);
        prop_assume!(comp.is_some());
        let comp = comp.unwrap();
        let chain = &a.diff("x").substitute("y", &b) + &(&a.diff("y").substitute("y", &b) * &b.diff("x"));
        prop_assert_eq!(comp.diff("x"), chain);
    }

    #[test]
    fn gcd_contains_planted_factor(a in nonzero_poly(), b in nonzero_poly(), g in nonzero_poly()) {
        let (fa, fb) = (a.mul(&g), b.mul(&g));
        let h = gcd(&fa, &fb);
        prop_assert!(trial_divide(&fa, &h).unwrap().is_some());
        prop_assert!(trial_divide(&fb, &h).unwrap().is_some());
        prop_assert!(trial_divide(&h, &g).unwrap().is_some());
    }

    #[test]
    fn squarefree_reassembles(a in nonzero_poly(), b in nonzero_poly()) {
        let p = a.mul(&a).mul(&b);
        let f = squarefree(&p).unwrap();
        prop_assert!(associated(&reassemble(&f), &p));
        for (x, _) in &f {
            // square-free: no common factor with all of its partials
            let mut g = x.clone();
            for v in x.used_vars() {
                g = gcd(&g, &x.derivative(v));
            }
            prop_assert!(g.is_one());
        }
    }
}

/// Determinant of a square matrix over Q by fraction-free elimination.
fn det(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut sign = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            sign = -sign;
        }
        for r in c + 1..n {
            let f = &m[r][c] / &m[c][c];
            for k in c..n {
                let t = &f * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * &m[i][i])
}

fn sylvester(f: &[Q], g: &[Q]) -> Q {
    // coefficient lists from highest degree down
    let (n, m) = (f.len() - 1, g.len() - 1);
    let size = n + m;
    let mut rows = vec![vec![Q::zero(); size]; size];
    for i in 0..m {
        for (j, c) in f.iter().enumerate() {
            rows[i][i + j] = c.clone();
        }
    }
    for i in 0..n {
        for (j, c) in g.iter().enumerate() {
            rows[m + i][i + j] = c.clone();
        }
    }
    det(rows)
}

fn coeffs_desc(p: &RatExpr, var: &str, deg: usize) -> Vec<Q> {
    let poly = p.num();
    let parts = match poly.vars().index(var) {
        Some(k) => poly.coefficients_in(k),
        None => vec![poly.clone()],
    };
    (0..=deg).rev().map(|d| parts.get(d).and_then(|c| c.as_constant()).unwrap_or_else(Q::zero)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resultant_matches_sylvester_after_specialization(a in nonzero_poly(), b in nonzero_poly(), s in 0i64..20) {
        let (ka, kb) = (a.degree_in_name("x"), b.degree_in_name("x"));
        prop_assume!(ka > 0 && kb > 0);
        let r = resultant(&a, &b, "x").unwrap();
        let pt = point(s);
        let sub = |p: &Poly<Q>| {
            let mut e = RatExpr::from_poly(p.clone());
            for v in ["y", "z"] {
                e = e.substitute(v, &RatExpr::constant(pt[v].clone()));
            }
            e
        };
        let (sa, sb) = (sub(&a), sub(&b));
        // leading coefficients survive so the resultant specializes
        let (ca, cb) = (coeffs_desc(&sa, "x", ka as usize), coeffs_desc(&sb, "x", kb as usize));
        prop_assume!(!ca[0].is_zero() && !cb[0].is_zero());
        let expect = sylvester(&ca, &cb);
        let got = RatExpr::from_poly(r).eval_q(&pt).unwrap();
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn resultant_vanishes_iff_common_factor(a in nonzero_poly(), b in nonzero_poly(), g in nonzero_poly()) {
        prop_assume!(g.degree_in_name("x") > 0 && a.degree_in_name("x") + b.degree_in_name("x") > 0);
        let r = resultant(&a.mul(&g), &b.mul(&g), "x").unwrap();
        prop_assert!(r.is_zero());
        if a.degree_in_name("x") > 0 && b.degree_in_name("x") > 0 {
            let h = gcd(&a, &b);
            let r = resultant(&a, &b, "x").unwrap();
            prop_assert_eq!(r.is_zero(), h.degree_in_name("x") > 0);
        }
    }
}

#[test]
fn spec_examples() {
    assert_eq!(parse("x^2").unwrap().diff("x"), parse("2*x").unwrap());
    assert_eq!(parse("1/(x-y)").unwrap().diff("y"), parse("1/(x-y)^2").unwrap());
    assert!(parse("7/3").unwrap().diff("x").is_zero());
    let f = squarefree(&parse_poly("(x-1)^2*(x+2)").unwrap()).unwrap();
    assert_eq!(f, vec![(parse_poly("x+2").unwrap(), 1), (parse_poly("x-1").unwrap(), 2)]);
}
