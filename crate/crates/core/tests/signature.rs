use linweb::coframe::{
    admissible_samples, hexagonality, match_up_to_relabeling, signature_at, signature_csv, signature_dimension,
    signature_jacobian, signature_symbolic, symmetry_test, Coframe, Region, HEX_TOL,
};
use linweb::expr::parse;
use linweb::field::q;
use linweb::forms::{self, PlaneFrame};
use linweb::web::{apply_projective, quantities_at, quantities_symbolic, WebDef};
use linweb::RatExpr;

fn pencils() -> WebDef {
    WebDef::symbolic("y/x", "y/(x-1)", "(y-1)/x").unwrap()
}

/// Tangents to the parabola `2x = y^2` and lines parallel to its axis.
fn parabola() -> WebDef {
    WebDef::numeric("1/(y+sqrt(y^2-2*x))", "1/(y-sqrt(y^2-2*x))", "0").unwrap()
}
const PARABOLA_REGION: Region = Region { x0: -2.0, y0: 1.0, x1: -1.0, y1: 2.0 };

/// Tangents to `y = x^2` and horizontal lines: invariant under `(x, y) -> (t x, t^2 y)`.
fn scaling_web() -> WebDef {
    WebDef::numeric("2*x+2*sqrt(x^2-y)", "2*x-2*sqrt(x^2-y)", "0").unwrap()
}

/// Tangents to `y = x^2` and tangents to the unit circle.
fn two_conics() -> WebDef {
    WebDef::numeric("2*x+2*sqrt(x^2-y)", "2*x-2*sqrt(x^2-y)", "(x*y+sqrt(x^2+y^2-1))/(x^2-1)").unwrap()
}
const CONIC_REGION: Region = Region { x0: 2.0, y0: 0.5, x1: 3.0, y1: 2.0 };

#[test]
fn pencils_have_zero_signature_exactly() {
    let s = signature_symbolic(&pencils()).unwrap();
    assert!(s.entries.iter().all(RatExpr::is_zero));
    assert!(s.consistency.iter().all(RatExpr::is_zero));
    let pts = admissible_samples(&pencils(), Region::default(), 30, 1).unwrap();
    assert_eq!(signature_dimension(&pencils(), &pts, 2).unwrap().dimension, 0);
    assert!(hexagonality(&pencils(), &[], HEX_TOL).unwrap().hexagonal);
}

#[test]
fn parabola_web_has_the_one_point_signature() {
    let w = parabola();
    let target = [0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let pts = admissible_samples(&w, PARABOLA_REGION, 40, 7).unwrap();
    for &p in &pts {
        let (_, qn) = quantities_at(&w, p, 2).unwrap();
        let abc = [qn.a.value(), qn.b.value(), qn.c.value()];
        let mut sorted = abc;
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[0] + 0.5).abs() < 1e-9 && sorted[1].abs() < 1e-9 && (sorted[2] - 0.5).abs() < 1e-9, "{abc:?}");
        assert!(match_up_to_relabeling(&w, p, &target, 1e-8).unwrap().is_some());
    }
    let rep = signature_dimension(&w, &pts, 2).unwrap();
    assert_eq!(rep.dimension, 0, "{:?}", rep.singular_values);
    let hex = hexagonality(&w, &pts, HEX_TOL).unwrap();
    assert!(hex.hexagonal && !hex.exact);
}

#[test]
fn conic_tangent_pair_gives_opposite_invariants() {
    let w = two_conics();
    for p in admissible_samples(&w, CONIC_REGION, 30, 3).unwrap() {
        let s = signature_at(&w, p).unwrap();
        assert!((s.values[0] + s.values[1]).abs() < 1e-9, "{:?}", s.values);
    }
}

#[test]
fn dimension_one_for_a_scaling_symmetric_web() {
    let w = scaling_web();
    let pts = admissible_samples(&w, CONIC_REGION, 30, 5).unwrap();
    let rep = signature_dimension(&w, &pts, 2).unwrap();
    assert_eq!(rep.dimension, 1, "{:?}", rep.singular_values);
    // constant along the orbit of the symmetry
    let p = pts[0];
    let s0 = signature_at(&w, p).unwrap();
    for t in [0.8, 1.1, 1.3] {
        let s = signature_at(&w, [t * p[0], t * t * p[1]]).unwrap();
        for (x, y) in s.values.iter().zip(&s0.values) {
            assert!((x - y).abs() < 1e-8 * (1.0 + y.abs()), "{:?} vs {:?}", s.values, s0.values);
        }
    }
}

#[test]
fn dimension_two_for_a_generic_web() {
    let w = two_conics();
    let pts = admissible_samples(&w, CONIC_REGION, 30, 11).unwrap();
    let rep = signature_dimension(&w, &pts, 2).unwrap();
    assert_eq!(rep.dimension, 2, "{:?}", rep.singular_values);
}

/// Rank of a central finite-difference Jacobian of the order-4 signature.
fn fd_rank(w: &WebDef, p: [f64; 2], h: f64) -> usize {
    let mut cols = [[0.0; 9]; 2];
    for (k, col) in cols.iter_mut().enumerate() {
        let (mut lo, mut hi) = (p, p);
        lo[k] -= h;
        hi[k] += h;
        let (a, b) = (signature_at(w, lo).unwrap().values, signature_at(w, hi).unwrap().values);
        for i in 0..9 {
            col[i] = (b[i] - a[i]) / (2.0 * h);
        }
    }
    let g = |i: usize, j: usize| (0..9).map(|r| cols[i][r] * cols[j][r]).sum::<f64>();
    let (n0, n1, x) = (g(0, 0).sqrt(), g(1, 1).sqrt(), g(0, 1));
    let smax = n0.max(n1);
    if smax < 1e-6 {
        return 0;
    }
    // sine of the angle between the two columns
    let sin2 = 1.0 - x * x / (g(0, 0) * g(1, 1)).max(f64::MIN_POSITIVE);
    if n0.min(n1) < 1e-6 * smax || sin2 < 1e-6 {
        1
    } else {
        2
    }
}

#[test]
fn series_jacobian_agrees_with_finite_differences() {
    for (w, expect) in [(scaling_web(), 1), (two_conics(), 2)] {
        for p in admissible_samples(&w, CONIC_REGION, 5, 17).unwrap() {
            let (_, jac) = signature_jacobian(&w, p).unwrap();
            for h in [1e-3, 1e-4] {
                assert_eq!(fd_rank(&w, p, h), expect);
                let mut lo = p;
                lo[0] -= h;
                let mut hi = p;
                hi[0] += h;
                let fd = (signature_at(&w, hi).unwrap().values[0] - signature_at(&w, lo).unwrap().values[0]) / (2.0 * h);
                assert!((fd - jac[0][0]).abs() < 1e-4 * (1.0 + fd.abs()), "{fd} vs {}", jac[0][0]);
            }
        }
    }
}

#[test]
fn signature_is_projectively_invariant() {
    let w = two_conics();
    let m = [[q(2, 1), q(1, 3), q(-1, 2)], [q(1, 5), q(3, 2), q(1, 1)], [q(1, 7), q(-1, 9), q(1, 1)]];
    let img = w.projective_image(&m).unwrap();
    let mut checked = 0;
    for p in admissible_samples(&w, CONIC_REGION, 20, 23).unwrap() {
        let s = signature_at(&w, p).unwrap();
        let gp = apply_projective(&m, p).unwrap();
        let Ok(t) = signature_at(&img, gp) else { continue };
        for (x, y) in s.values.iter().zip(&t.values) {
            assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()), "{:?} vs {:?}", s.values, t.values);
        }
        checked += 1;
    }
    assert!(checked >= 15);
}

#[test]
fn non_hexagonal_web_is_detected() {
    let w = WebDef::numeric("y/x", "y/(x-1)", "(x*y+sqrt(x^2+y^2-1))/(x^2-1)").unwrap();
    let pts = admissible_samples(&w, CONIC_REGION, 25, 2).unwrap();
    let v = hexagonality(&w, &pts, HEX_TOL).unwrap();
    assert!(!v.hexagonal && v.max_abs_k.unwrap() > 1e-3);
}

#[test]
fn partials_reconstruct_the_differential() {
    let fr = PlaneFrame::default();
    let sq = quantities_symbolic(&pencils()).unwrap();
    let cf = Coframe::of_web(fr.clone(), &sq);
    let f = parse("x^2*y/(1+x+y^3)").unwrap();
    let [f1, f2, f3] = cf.partials(&f).unwrap();
    assert!((&(&f1 + &f2) + &f3).is_zero());
    let df = forms::d0(&fr, &f).unwrap();
    let u3 = cf.u3();
    let r1 = forms::sub(&forms::scale(&f3, &cf.u2), &forms::scale(&f2, &u3));
    let r2 = forms::sub(&forms::scale(&f1, &u3), &forms::scale(&f3, &cf.u1));
    assert_eq!(r1, df);
    assert_eq!(r2, df);
}

#[test]
fn csv_layout() {
    let s = signature_at(&parabola(), [-1.5, 1.5]).unwrap();
    let csv = signature_csv(&[s]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,y,a,b,c,a2,b3,c1,a22,b33,c11");
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), 11);
    assert_eq!(row[0], -1.5);
}

#[test]
fn symmetry_criterion_examples() {
    let (u, v) = ("u", "v");
    let t = symmetry_test(&RatExpr::one(), &parse("u").unwrap(), u, v).unwrap();
    assert!(t.holds);
    let lam = t.lambda.unwrap();
    assert!(lam.as_constant().is_some());

    let (p, qf) = (parse("v").unwrap(), parse("u").unwrap());
    let t = symmetry_test(&p, &qf, u, v).unwrap();
    assert!(t.holds);
    let lam = t.lambda.unwrap();
    assert!((&lam * &parse("u").unwrap()).as_constant().is_some(), "{lam}");
    // the flow of lam d/dv preserves omega: L_X omega = d(i_X omega) + i_X d omega
    let lie_u = &(&lam * &p.diff(v)) + &(&qf * &lam.diff(u));
    let lie_v = &(&lam * &qf.diff(v)) + &(&qf * &lam.diff(v));
    assert!(lie_u.is_zero() && lie_v.is_zero());

    let t = symmetry_test(&parse("v^2").unwrap(), &RatExpr::one(), u, v).unwrap();
    assert!(!t.holds);
    assert_eq!(t.defect, RatExpr::int(2));
}
