use std::collections::HashMap;

use linweb::cartan::*;
use linweb::coframe::admissible_samples;
use linweb::coframe::Region;
use linweb::field::q;
use linweb::forms::{Frame, JetFrame, TaylorFrame};
use linweb::web::{apply_projective, generic_quantities, WebDef};
use linweb::{RatExpr, Taylor};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(s: &str) -> RatExpr {
    RatExpr::var(s)
}

/// Imposes `d(dN) = 0` and `beta_1 - alpha_2 = 1`.
fn reduce(e: &RatExpr) -> RatExpr {
    let n21 = &(&v("N12") - &(&v("alpha") * &v("N2"))) + &(&v("beta") * &v("N1"));
    e.substitute("N21", &n21).substitute("beta1", &(&v("alpha2") + &RatExpr::one()))
}

#[test]
fn curvature_shape_in_free_variables() {
    let fr = formal_gauge_frame();
    let (a, b, n) = (v("alpha"), v("beta"), v("N"));
    let g = build_gauge(&fr, &a, &b, &n).unwrap();
    let t = gauge_trace(&g);
    assert!(t[0].is_zero() && t[1].is_zero());
    assert_eq!(&(&g.abc[0] + &g.abc[1]) + &g.abc[2], &n * &n);
    assert!(!isotropy_determinant(&g.omega).is_zero());

    let k = gauge_curvature(&fr, &g).unwrap();
    for r in k.shape_residuals() {
        assert!(reduce(&r).is_zero(), "{r}");
    }
    let c = closed_form_curvature(&fr, &a, &b, &n, ClosedForm::Corrected).unwrap();
    assert!(reduce(&(&k.k11 - &c[0])).is_zero());
    assert!(reduce(&(&k.k22 - &c[1])).is_zero());

    // the printed constant terms are three times too large
    let p = closed_form_curvature(&fr, &a, &b, &n, ClosedForm::Printed).unwrap();
    let three_n = n.scale(&q(3, 1));
    assert_eq!(&p[0] - &c[0], (&(&a + &b.scale(&q(2, 1))).scale(&q(-2, 1))) / &three_n);
    assert_eq!(&p[1] - &c[1], (&(&a.scale(&q(2, 1)) + &b).scale(&q(2, 1))) / &three_n);
    // with only alpha and N left, K11 = 2 alpha N/3 + 2 alpha^2/3 - alpha/(3N)
    let zero = RatExpr::zero();
    let only: Vec<(&str, RatExpr)> =
        ["beta", "N1", "N2", "N11", "N12", "N21", "alpha1", "alpha2", "beta1"].iter().map(|n| (*n, zero.clone())).collect();
    let k11 = c[0].substitute_all(&only);
    let expect = linweb::expr::parse("2*alpha*N/3 + 2*alpha^2/3 - alpha/(3*N)").unwrap();
    assert_eq!(k11, expect);
}

#[test]
fn coframe_curvature_is_the_sum_of_invariants() {
    let g = generic_quantities().unwrap();
    let k = coframe_curvature(&JetFrame, &g.u[0], &g.u[1]).unwrap();
    assert_eq!(k, g.k());
}

fn random_series(fr: &TaylorFrame<f64>, rng: &mut ChaCha8Rng, base: f64) -> Taylor<f64> {
    let (x, y) = (fr.coordinate(0), fr.coordinate(1));
    let mut c = || fr.value(rng.gen_range(-1.0..1.0));
    fr.value(base) + c() * x.clone() + c() * y.clone() + c() * x.clone() * y.clone() + c() * x.clone() * x + c() * y.clone() * y
}

#[test]
fn curvature_shape_on_random_numeric_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut done = 0;
    while done < 50 {
        let at = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let fr = TaylorFrame::new(CURVATURE_ORDER, at);
        let u1 = [random_series(&fr, &mut rng, 2.0), random_series(&fr, &mut rng, 0.0)];
        let u2 = [random_series(&fr, &mut rng, 0.0), random_series(&fr, &mut rng, 2.0)];
        let Ok(bf) = blaschke_normalize(fr.clone(), &u1, &u2) else { continue };
        let n = random_series(&fr, &mut rng, 3.0);
        let g = build_gauge(&bf.frame, &bf.alpha, &bf.beta, &n).unwrap();
        let k = gauge_curvature(&bf.frame, &g).unwrap();
        let scale = 1.0 + k.full.iter().flatten().map(|t| t.value().abs()).fold(0.0, f64::max);
        for r in k.shape_residuals() {
            assert!(r.value().abs() < 1e-10 * scale, "{}", r.value());
        }
        let c = closed_form_curvature(&bf.frame, &bf.alpha, &bf.beta, &n, ClosedForm::Corrected).unwrap();
        assert!((c[0].value() - k.k11.value()).abs() < 1e-10 * scale);
        assert!((c[1].value() - k.k22.value()).abs() < 1e-10 * scale);
        assert!(isotropy_determinant(&g.omega).value().abs() > 1e-12);
        done += 1;
    }
}

#[test]
fn exact_normalization_of_a_curved_web() {
    // slope fields of a non-linear web
    let w = WebDef::symbolic("x", "-y", "x*y+1").unwrap();
    let bf = blaschke_symbolic(&w).unwrap();
    assert!(bf.certificate.is_zero());
    // Blaschke 2-form of w equals w1 ^ w2
    let k = coframe_curvature(&bf.frame.base, &bf.frame.w[0], &bf.frame.w[1]).unwrap();
    assert_eq!(k, bf.frame.base.int(1));
}

#[test]
fn hexagonal_input_is_rejected() {
    let pencils = WebDef::symbolic("y/x", "y/(x-1)", "(y-1)/x").unwrap();
    assert!(matches!(blaschke_symbolic(&pencils), Err(CartanError::Hexagonal(_))));
    assert!(matches!(blaschke_at(&pencils, [2.0, 3.0], 5), Err(CartanError::Hexagonal(_))));
}

fn two_conics() -> WebDef {
    WebDef::numeric("2*x+2*sqrt(x^2-y)", "2*x-2*sqrt(x^2-y)", "(x*y+sqrt(x^2+y^2-1))/(x^2-1)").unwrap()
}
const CONIC_REGION: Region = Region { x0: 2.0, y0: 0.5, x1: 3.0, y1: 2.0 };

fn own_n(w: &WebDef) -> impl Fn(&TaylorFrame<f64>, &[f64]) -> Result<Taylor<f64>, CartanError> + Sync + '_ {
    move |fr: &TaylorFrame<f64>, p: &[f64]| {
        let (bf, _) = blaschke_at(w, fr.at, fr.lay.order())?;
        let x = fr.coordinate(0) - fr.value(fr.at[0]);
        let y = fr.coordinate(1) - fr.value(fr.at[1]);
        Ok(bf.root * (fr.value(1.0) + x * fr.value(p[0]) + y * fr.value(p[1])))
    }
}

#[test]
fn linear_web_is_flat_for_its_own_normalization() {
    let w = two_conics();
    let fam = own_n(&w);
    let exact = |fr: &TaylorFrame<f64>| fam(fr, &[0.0, 0.0]);
    for p in admissible_samples(&w, CONIC_REGION, 8, 9).unwrap() {
        let s = flatness_at(&w, &exact, p).unwrap();
        assert!(s.k11.abs() < 1e-8 && s.k22.abs() < 1e-8, "{s:?}");
        assert!(s.closed_vs_direct < 1e-8, "{s:?}");
        // the gauge coefficients reproduce the web invariants
        let (bf, q) = blaschke_at(&w, p, CURVATURE_ORDER).unwrap();
        let abc = gauge_coefficients(&bf.frame, &bf.alpha, &bf.beta, &bf.root).unwrap();
        let web_abc = if bf.orientation > 0 { q.abc() } else { [-q.b.clone(), -q.a.clone(), -q.c.clone()] };
        for (x, y) in abc.iter().zip(web_abc) {
            assert!((x.value() - y.value()).abs() < 1e-8, "{} {}", x.value(), y.value());
        }
    }
    let e = linweb::expr::parse_numeric("1+x").unwrap();
    let params = HashMap::new();
    let factor = linweb::cartan::n_from_expr(&e, &params);
    let bent = |fr: &TaylorFrame<f64>| Ok(fam(fr, &[0.0, 0.0])? * factor(fr)?);
    let grid = flatness_grid(&w, &bent, [2.0, 0.5, 3.0, 2.0], 4, 4);
    assert!(grid.len() >= 10);
    assert!(grid.iter().any(|s| s.k11.abs() > 1e-3 || s.k22.abs() > 1e-3));
    let csv = flatness_csv(&grid);
    assert!(csv.starts_with("x,y,K11,K22\r\n"));
    assert_eq!(csv.lines().count(), grid.len() + 1);
}

#[test]
fn gauss_newton_recovers_the_flat_gauge() {
    let w = two_conics();
    let fam = own_n(&w);
    let pts = admissible_samples(&w, CONIC_REGION, 6, 4).unwrap();
    let r = search_n(&w, &fam, &[0.2, -0.15], &pts, 50).unwrap();
    assert!(r.residual < 1e-7, "{r:?}");
    assert!(r.params.iter().all(|p| p.abs() < 1e-6), "{r:?}");
}

#[test]
fn constant_generator_gives_the_exponential() {
    let a = Matrix3::new(0.3, -0.7, 0.2, 0.5, -0.1, 0.4, -0.6, 0.9, -0.2);
    let nodes = develop(&ConstantGenerator(a), Matrix3::identity(), DevelopOptions::default()).unwrap();
    let f = nodes.last().unwrap().1;
    let e = expm_series(&a, 12);
    assert!((f - e).abs().max() < 1e-9, "{f} {e}");
    for (_, m) in &nodes {
        assert!((m.determinant() - 1.0).abs() < 1e-8);
    }
    let js = path_json(&nodes);
    assert_eq!(js.as_array().unwrap().len(), nodes.len());
}

fn pencils() -> WebDef {
    WebDef::symbolic("y/x", "y/(x-1)", "(y-1)/x").unwrap()
}

#[test]
fn development_is_path_independent_on_a_linear_web() {
    let w = pencils();
    let opt = DevelopOptions::default();
    let (p, q1) = ([1.5, 1.0], [1.9, 1.4]);
    let f1 = develop_polyline(&w, &[p, [1.9, 1.0], q1], opt).unwrap();
    let f2 = develop_polyline(&w, &[p, [1.5, 1.4], q1], opt).unwrap();
    assert!((f1 - f2).abs().max() < 1e-6);
    assert!((f1.determinant() - 1.0).abs() < 1e-8);
    let back = develop_polyline(&w, &[q1, [1.9, 1.0], p], opt).unwrap();
    assert!((f1 * back - Matrix3::identity()).abs().max() < 1e-7);
}

#[test]
fn linearization_maps_leaves_to_lines() {
    let opt = DevelopOptions::default();
    // a leaf of the pencil at the origin
    let w = pencils();
    let leaf: Vec<[f64; 2]> = (0..5).map(|i| 1.2 + 0.2 * i as f64).map(|x| [x, 1.5 * x]).collect();
    let img = linearize(&w, [1.5, 1.0], &leaf, opt).unwrap();
    assert!(collinearity_residual(&img) < 1e-6);
    let z = linearize(&w, [1.5, 1.0], &[[1.5, 1.0]], opt).unwrap()[0];
    assert!((z[0] - z[1]).abs() < 1e-12 && (z[1] - z[2]).abs() < 1e-12);

    // a tangent line of the parabola 2x = y^2
    let w = WebDef::numeric("1/(y+sqrt(y^2-2*x))", "1/(y-sqrt(y^2-2*x))", "0").unwrap();
    let leaf: Vec<[f64; 2]> = (0..5).map(|i| 1.0 + 0.2 * i as f64).map(|y| [-y - 0.5, y]).collect();
    let img = linearize(&w, [-1.5, 1.5], &leaf, opt).unwrap();
    assert!(collinearity_residual(&img) < 1e-6);
}

fn homog(p: [f64; 2]) -> [f64; 3] {
    [p[0], p[1], 1.0]
}

#[test]
fn linearization_is_projectively_equivalent() {
    let opt = DevelopOptions::default();
    let w = pencils();
    let leaf: Vec<[f64; 2]> = (0..4).map(|i| 1.2 + 0.25 * i as f64).map(|x| [x, 1.5 * x]).collect();
    let img = linearize(&w, [1.5, 1.0], &leaf, opt).unwrap();
    let cr_src = cross_ratio(&std::array::from_fn(|i| homog(leaf[i])));
    let cr_img = cross_ratio(&[img[0], img[1], img[2], img[3]]);
    assert!((cr_src - cr_img).abs() < 1e-6, "{cr_src} {cr_img}");

    let m = [[q(1, 1), q(1, 4), q(1, 3)], [q(-1, 5), q(1, 1), q(1, 2)], [q(1, 9), q(1, 11), q(1, 1)]];
    let moved = w.projective_image(&m).unwrap();
    let leaf2: Vec<[f64; 2]> = leaf.iter().map(|&p| apply_projective(&m, p).unwrap()).collect();
    let base2 = apply_projective(&m, [1.5, 1.0]).unwrap();
    let img2 = linearize(&moved, base2, &leaf2, opt).unwrap();
    assert!(collinearity_residual(&img2) < 1e-6);
    let cr2 = cross_ratio(&[img2[0], img2[1], img2[2], img2[3]]);
    assert!((cr2 - cr_img).abs() < 1e-6, "{cr2} {cr_img}");
}

#[test]
fn own_normalization_matches_the_root_of_k() {
    let w = two_conics();
    let (bf, q) = blaschke_at(&w, [2.5, 1.0], CURVATURE_ORDER).unwrap();
    let k = q.k().value();
    assert!((bf.root.value().powi(2) - k.abs()).abs() < 1e-9 * (1.0 + k.abs()));
    assert_eq!(bf.orientation, if k > 0.0 { 1 } else { -1 });
    // Blaschke 2-form equals w1 ^ w2
    let kb = coframe_curvature(&bf.frame.base, &bf.frame.w[0], &bf.frame.w[1]).unwrap();
    assert!((kb.value() - 1.0).abs() < 1e-9);
}
