use linweb::expr::{parse_poly, Poly, VarSet};
use linweb::field::{q_to_zp, zp_to_q};
use linweb::ideals::{dimension, groebner, groebner_mod_p, reduce, GroebnerBasis, IdealError, Limits, PolyIdeal};
use linweb::{QPoly, Q};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ideal(vars: &[&str], gens: &[&str]) -> PolyIdeal {
    PolyIdeal::parse(vars, gens).unwrap()
}

fn basis(vars: &[&str], gens: &[&str]) -> GroebnerBasis {
    groebner(&ideal(vars, gens), &Limits::default()).unwrap()
}

fn p(vars: &VarSet, s: &str) -> QPoly {
    parse_poly(s).unwrap().pruned().aligned(vars)
}

/// S-polynomial of two monic polynomials, built from public operations only.
fn spoly(f: &QPoly, g: &QPoly) -> QPoly {
    let (fe, ge) = (f.leading_exponents().unwrap(), g.leading_exponents().unwrap());
    let l: Vec<u16> = fe.iter().zip(ge).map(|(a, b)| *a.max(b)).collect();
    let qf: Vec<u16> = l.iter().zip(fe).map(|(a, b)| a - b).collect();
    let qg: Vec<u16> = l.iter().zip(ge).map(|(a, b)| a - b).collect();
    let (cf, cg) = (f.leading_coeff().unwrap().clone(), g.leading_coeff().unwrap().clone());
    f.mul_monomial(&qf, &(Q::one() / cf)).sub(&g.mul_monomial(&qg, &(Q::one() / cg)))
}

fn lt_divides(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Buchberger's criterion plus reducedness, checked independently of the engine.
fn assert_reduced_groebner(gb: &GroebnerBasis) {
    let g = gb.polys();
    for (i, f) in g.iter().enumerate() {
        assert!(f.leading_coeff().unwrap().is_one());
        for (j, h) in g.iter().enumerate() {
            if i < j {
                assert!(reduce(&spoly(f, h), g).is_zero(), "S({f}, {h}) does not reduce to zero");
            }
            if i != j {
                let lh = h.leading_exponents().unwrap();
                for (e, _) in f.terms() {
                    assert!(!lt_divides(lh, e), "{f} is not reduced against {h}");
                }
            }
        }
    }
}

/// Dimension from the growth of the number of standard monomials of degree
/// at most D: the cumulative count is a polynomial in D of degree dim.
fn hilbert_dimension(gb: &GroebnerBasis) -> Option<i64> {
    if gb.is_unit() {
        return Some(-1);
    }
    let lts = gb.leading_exponents();
    if lts.iter().any(|e| e.iter().map(|&x| x as u32).sum::<u32>() > 15) {
        return None;
    }
    let n = gb.vars().len();
    let count = |d: usize| -> i64 {
        let mut c = 0i64;
        let mut e = vec![0u16; n];
        loop {
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            if deg <= d && !lts.iter().any(|l| lt_divides(l, &e)) {
                c += 1;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return c;
                }
                e[k] += 1;
                if e[k] as usize <= d {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
        }
    };
    let mut vals: Vec<i64> = (60..66).map(count).collect();
    let mut deg = 0;
    for order in 1..vals.len() {
        if vals.iter().any(|&v| v != 0) && vals.iter().skip(1).any(|&v| v != vals[0]) {
            deg = order as i64;
        }
        vals = vals.windows(2).map(|w| w[1] - w[0]).collect();
        if vals.iter().all(|&v| v == 0) {
            break;
        }
    }
    Some(deg)
}

/// Largest independent variable set by trying every subset.
fn brute_force_dimension(gb: &GroebnerBasis) -> i64 {
    if gb.is_unit() {
        return -1;
    }
    let n = gb.vars().len();
    let lts = gb.leading_exponents();
    (0u32..1 << n)
        .filter(|mask| lts.iter().all(|l| l.iter().enumerate().any(|(k, &x)| x > 0 && mask & (1 << k) == 0)))
        .map(|mask| mask.count_ones() as i64)
        .max()
        .unwrap()
}

#[test]
fn spec_examples() {
    let gb = basis(&["x", "y"], &["x", "y"]);
    let v = gb.vars().clone();
    assert_eq!(gb.polys(), &[p(&v, "y"), p(&v, "x")]);
    assert_eq!(gb.dimension(), 0);

    let gb = basis(&["x", "y"], &["x*y-1", "x"]);
    assert!(gb.is_unit());
    assert_eq!(gb.polys().len(), 1);
    assert_eq!(gb.dimension(), -1);

    let gb = basis(&["x", "y"], &["x^2+y^2-1", "x-y"]);
    let v = gb.vars().clone();
    assert_reduced_groebner(&gb);
    assert!(gb.contains(&p(&v, "x^2+y^2-1")) && gb.contains(&p(&v, "x-y")));
    assert!(!gb.contains(&p(&v, "x-1")));
    assert_eq!(gb.leading_exponents(), vec![vec![1, 0], vec![0, 2]]);
    assert_eq!(gb.dimension(), 0);

    assert_eq!(basis(&["x", "y"], &["x^2+y^2-1"]).dimension(), 1);
    assert_eq!(basis(&["x", "y"], &["1"]).dimension(), -1);
}

#[test]
fn textbook_basis() {
    // grevlex with x > y: {x^2, x*y, y^2 - x/2}
    let gb = basis(&["x", "y"], &["x^3-2*x*y", "x^2*y-2*y^2+x"]);
    let v = gb.vars().clone();
    let expect = [p(&v, "y^2-x/2"), p(&v, "x*y"), p(&v, "x^2")];
    assert_eq!(gb.polys(), &expect);
}

#[test]
fn textbook_dimensions() {
    let xyz = ["x", "y", "z"];
    let cases: [(&[&str], i64); 11] = [
        (&["y-x^2", "z-x^3"], 1),
        (&["x*y", "x*z"], 2),
        (&["x^2+y^2+z^2-1"], 2),
        (&["x^2+y^2+z^2-1", "x^2+z^2-y", "x-z"], 0),
        (&["x*y*z-1"], 2),
        (&["x+y+z", "x*y+y*z+z*x", "x*y*z-1"], 0),
        (&["x^2", "y^2"], 1),
        (&["x*y", "y*z", "z*x"], 1),
        (&["x+2*y+2*z-1", "x^2+2*y^2+2*z^2-x", "2*x*y+2*y*z-y"], 0),
        (&["x^3-y*z", "y^2-x*z", "z^2-x^2*y"], 1),
        (&["x^2-1", "x*y+1", "x+y"], 1),
    ];
    for (gens, d) in cases {
        let gb = basis(&xyz, gens);
        assert_reduced_groebner(&gb);
        for (k, g) in gens.iter().enumerate() {
            assert!(gb.contains(&p(gb.vars(), g)), "generator {k} of {gens:?}");
        }
        assert_eq!(gb.dimension(), d, "{gens:?}");
        assert_eq!(brute_force_dimension(&gb), d);
        assert_eq!(hilbert_dimension(&gb), Some(d), "{gens:?}");
    }
}

fn random_poly(rng: &mut ChaCha8Rng, vars: &VarSet) -> QPoly {
    let n = vars.len();
    loop {
        let terms: Vec<(Vec<u16>, Q)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let deg = rng.gen_range(0..=3u16);
                let mut e = vec![0u16; n];
                for _ in 0..deg {
                    e[rng.gen_range(0..n)] += 1;
                }
                (e, Q::from_integer(rng.gen_range(-3i64..=3).into()))
            })
            .collect();
        let p = Poly::from_terms(vars.clone(), terms);
        if !p.is_zero() {
            return p;
        }
    }
}

#[test]
fn small_ideals_agree_with_independent_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked_hilbert = 0;
    for round in 0..400 {
        let n = 1 + round % 3;
        let vars = VarSet::new(["x", "y", "z"].iter().take(n).copied());
        let gens: Vec<QPoly> = (0..rng.gen_range(1..=4)).map(|_| random_poly(&mut rng, &vars)).collect();
        let gb = groebner(&PolyIdeal::new(vars.clone(), gens.clone()).unwrap(), &Limits::default()).unwrap();
        assert_reduced_groebner(&gb);
        for g in &gens {
            assert!(gb.contains(g));
        }
        let d = gb.dimension();
        assert_eq!(d, brute_force_dimension(&gb), "{gens:?}");
        if let Some(h) = hilbert_dimension(&gb) {
            assert_eq!(d, h, "{gens:?}");
            checked_hilbert += 1;
        }
    }
    assert!(checked_hilbert > 350);
}

#[test]
fn adding_generators_never_raises_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let vars = VarSet::new(["x", "y", "z"]);
    for _ in 0..60 {
        let mut gens = vec![random_poly(&mut rng, &vars)];
        let mut last = dimension(&PolyIdeal::new(vars.clone(), gens.clone()).unwrap(), &Limits::default()).unwrap();
        for _ in 0..3 {
            gens.push(random_poly(&mut rng, &vars));
            let d = dimension(&PolyIdeal::new(vars.clone(), gens.clone()).unwrap(), &Limits::default()).unwrap();
            assert!(d <= last, "{gens:?}: {d} > {last}");
            last = d;
        }
    }
}

#[test]
fn json_round_trip() {
    let i = ideal(&["x", "y", "S"], &["x^2+y^2-1", "x*S-1"]);
    let j = i.to_json();
    assert!(j.contains("\"variables\":[\"S\",\"x\",\"y\"]"));
    assert_eq!(PolyIdeal::from_json(&j).unwrap(), i);
    assert!(matches!(PolyIdeal::from_json("{\"variables\":[]}"), Err(IdealError::Json(_))));
}

#[test]
fn ceilings_and_bad_input() {
    let i = ideal(&["x", "y"], &["x^2+y^2-1", "x*y-1"]);
    let tight = Limits { max_pairs: 0, ..Limits::default() };
    assert!(matches!(groebner(&i, &tight), Err(IdealError::Ceiling { what: "pairs", .. })));
    assert!(matches!(PolyIdeal::parse(&["x"], &["x*y"]), Err(IdealError::ForeignVariable(_))));
    assert!(matches!(PolyIdeal::parse(&["x"], &["x-x"]), Err(IdealError::ZeroGenerator)));
    assert!(matches!(groebner(&ideal(&["x"], &[]), &Limits::default()), Err(IdealError::Empty)));
}

#[test]
fn independent_set_names_variables() {
    let gb = basis(&["x", "y", "z"], &["x*y", "x*z"]);
    assert_eq!(gb.independent_set().unwrap(), vec!["y".to_string(), "z".to_string()]);
}

#[test]
fn rational_reconstruction_round_trip() {
    for (n, d) in [(0, 1), (1, 1), (-1, 1), (13, 2), (-95, 18), (8, 27), (123_456, 789_011), (-1_000_000_007, 3)] {
        let x = Q::new(n.into(), d.into());
        assert_eq!(zp_to_q(q_to_zp(&x).unwrap()), Some(x));
    }
    // a residue with no small preimage
    let big = Q::from_integer((1i64 << 59).into()) / Q::from_integer(3.into());
    assert_ne!(zp_to_q(q_to_zp(&big).unwrap()), Some(big));
}

#[test]
fn modular_basis_is_the_image_of_the_rational_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..150 {
        let vars = VarSet::new(["x", "y", "z"].iter().take(1 + round % 3).copied());
        let gens: Vec<QPoly> = (0..rng.gen_range(1..=4)).map(|_| random_poly(&mut rng, &vars)).collect();
        let ideal = PolyIdeal::new(vars.clone(), gens).unwrap();
        let gb = groebner(&ideal, &Limits::default()).unwrap();
        let (modular, _) = groebner_mod_p(&ideal, &Limits::default()).unwrap().unwrap();
        let image: Vec<_> = gb.polys().iter().map(|p| p.map_coeffs(|c| q_to_zp(c).unwrap())).collect();
        assert_eq!(modular.len(), image.len());
        for m in &modular {
            assert!(image.contains(m), "{m:?}");
        }
    }
}

#[test]
fn counting_points() {
    let count = |gens: &[&str]| {
        let gb = basis(&["x", "y"], gens);
        (gb.standard_monomials().map(|m| m.len()), gb.real_point_count())
    };
    assert_eq!(count(&["x^2-2", "y"]), (Some(2), Some(2)));
    assert_eq!(count(&["x^2+1", "y"]), (Some(2), Some(0)));
    assert_eq!(count(&["x^2-2", "y^2+1"]), (Some(4), Some(0)));
    assert_eq!(count(&["x^2-2", "y-x"]), (Some(2), Some(2)));
    // a double point counts twice among the complex points, once among the real
    assert_eq!(count(&["x^2", "y-1"]), (Some(2), Some(1)));
    assert_eq!(count(&["x*y-1", "x^2+y^2-4"]), (Some(4), Some(4)));
    assert_eq!(count(&["x^2+y^2-1"]).0, None);
}
