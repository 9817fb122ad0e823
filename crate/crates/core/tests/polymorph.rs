use linweb::cartan::coframe_curvature;
use linweb::expr::{associated, parse, parse_poly, RatExpr};
use linweb::forms::{self, FormalFrame};
use linweb::ideals::Limits;
use linweb::polymorph::*;
use std::time::Duration;

fn e(s: &str) -> RatExpr {
    parse(s).unwrap()
}

fn invariants_of(a: &str, b: &str, k: &str, f: &str, f1: &str, f2: &str) -> [RatExpr; 3] {
    transformed_invariants(&e(a), &e(b), &e(k), &e(f), &e(f1), &e(f2)).unwrap()
}

#[test]
fn rescaling_by_one_changes_nothing() {
    let [a, b, k] = invariants_of("a", "b", "k", "0", "0", "0");
    assert_eq!((a, b, k), (e("a"), e("b"), e("k")));
    // doubling the coframe divides the curvature by four
    let [_, _, k] = invariants_of("a", "b", "k", "1", "0", "0");
    assert_eq!(k, e("k/4"));
    assert!(transformed_invariants(&e("a"), &e("b"), &e("k"), &e("-1"), &e("0"), &e("0")).is_err());
}

/// With `dU1 = s1 U1^U2`, `dU2 = s2 U1^U2` and the partials of `f` taken as
/// in the frames, `df = f2 U1 - f1 U2`, the rescaled coframe has
/// `dU~1 = ((1+f) s1 + f1) / (1+f)^2 U~1^U~2` and
/// `dU~2 = ((1+f) s2 + f2) / (1+f)^2 U~1^U~2`. Reading off `a~, b~` from
/// `s1 = k - a - 2b`, `s2 = 2a + b - k` must agree.
#[test]
fn rescaled_invariants_match_the_rescaled_structure_functions() {
    let [at, bt, kt] = invariants_of("a", "b", "k", "f", "f1", "f2");
    let (s1, s2) = (e("k-a-2*b"), e("2*a+b-k"));
    let g = e("1+f");
    let g2 = &g * &g;
    let st1 = &(&(&g * &s1) + &e("f1")) / &g2;
    let st2 = &(&(&g * &s2) + &e("f2")) / &g2;
    assert_eq!(kt, &e("k") / &g2);
    assert_eq!(&(&kt - &at) - &(&bt * &RatExpr::int(2)), st1);
    assert_eq!(&(&(&at * &RatExpr::int(2)) + &bt) - &kt, st2);

    // the same structure functions from a formal frame
    let mut fr = k_frame();
    fr.set_partials("f", e("f1"), e("f2"));
    let d = |w: [RatExpr; 2]| forms::d1(&fr, &w).unwrap();
    assert_eq!(d([g.clone(), RatExpr::zero()]), &st1 * &g2);
    assert_eq!(d([RatExpr::zero(), g.clone()]), &st2 * &g2);
}

fn k_frame_with_k() -> FormalFrame {
    let mut fr = k_frame();
    fr.set_partials("k", e("k1"), e("k2"));
    fr
}

#[test]
fn structure_functions_of_the_invariant_coframe() {
    let fr = k_frame_with_k();
    let r = structure_residuals(&fr, &e("a"), &e("b"), &e("k")).unwrap();
    assert!(r[..4].iter().all(RatExpr::is_zero), "{r:?}");
    let ks = k_sum(&e("a"), &e("b"), &e("k"), &e("a2"), &e("b1"));
    assert_eq!(r[4], &e("k1+k2") - &ks);
}

/// The `k1 + k2` relation follows from `d gamma = k U1^U2` for the Chern form.
#[test]
fn k_sum_follows_from_the_curvature() {
    let fr = k_frame_with_k();
    let one = RatExpr::one();
    let zero = RatExpr::zero();
    let curv = coframe_curvature(&fr, &[one.clone(), zero.clone()], &[zero, one]).unwrap();
    let ks = k_sum(&e("a"), &e("b"), &e("k"), &e("a2"), &e("b1"));
    let k2 = &ks - &e("k1");
    let on_relation = (&curv - &e("k")).substitute("k2", &k2);
    assert!(on_relation.is_zero(), "{on_relation}");
    assert!(!(&curv - &e("k")).is_zero());
}

#[test]
fn no_rescaling_solves_the_polymorph_equations() {
    let fr = k_frame_with_k();
    let r = polymorph_residuals(&fr, &e("a"), &e("b"), &e("k"), &RatExpr::zero()).unwrap();
    assert!(r.iter().all(RatExpr::is_zero));
    let mut flat = FormalFrame::new(RatExpr::zero(), RatExpr::zero());
    flat.set_constant("f");
    // hexagonal with a = b = 0: a constant f solves them exactly
    let r = polymorph_residuals(&flat, &RatExpr::zero(), &RatExpr::zero(), &RatExpr::zero(), &e("f")).unwrap();
    assert!(r.iter().all(RatExpr::is_zero), "{r:?}");
}

#[test]
fn two_pencil_solutions_solve_the_general_system() {
    let rep = lemma9_check().unwrap();
    assert_eq!(rep.residuals.len(), 7);
    assert!(rep.all_zero, "{:?}", rep.residuals);
}

#[test]
fn two_pencils_early_stages_match_the_transcription() {
    let opts = PipelineOptions { through_stage: 7, ..PipelineOptions::default() };
    let (tr, st) = two_pencils_pipeline(&opts).unwrap();
    assert_eq!(tr.stages.len(), 7);
    for s in &tr.stages[..6] {
        assert_eq!(s.status, StageStatus::Verified, "stage {}", s.index);
    }
    assert_eq!(tr.output("Z2"), Some("1/2*Z + 1"));
    let conic = st.conic.expect("conic");
    assert!(conic.iter().all(|c| !c.is_zero()));
    let w = st.w.expect("W");
    assert_eq!(w.degree_in_name("Z"), 5);
}

#[test]
fn two_pencils_factors_on_generic_lines() {
    let opts = PipelineOptions { through_stage: 9, ..PipelineOptions::default() };
    let (tr, st) = two_pencils_pipeline(&opts).unwrap();
    let s9 = tr.stages.iter().find(|s| s.index == 9).unwrap();
    assert_eq!(s9.status, StageStatus::Verified, "{:?}", s9.outputs);
    assert_eq!(tr.output("line 0: deg E"), Some("14"));
    assert_eq!(tr.output("line 1: deg E"), Some("14"));
    assert_eq!(st.factors.len(), 4);
    // three pairwise resultants per line
    assert_eq!(st.resultants.len(), 6);
}

#[test]
fn twelve_invariant_scheme() {
    let (tr, st) = theorem5_scheme(&PipelineOptions::default()).unwrap();
    assert_eq!(tr.stages.len(), 9);
    assert!(tr.is_complete());
    assert_eq!(st.constraints.len(), 2);
    for c in &st.constraints {
        assert!(c.used_var_names().iter().all(|v| TWELVE_INVARIANTS.contains(&v.as_str())), "{:?}", c.used_var_names());
    }
    assert!(!associated(&st.constraints[0], &st.constraints[1]));

    // re-substitution: the structure and polymorph equations hold identically,
    // and every compatibility condition vanishes except the two constraints
    let fr = &st.frame;
    let s = structure_residuals(fr, &e("a"), &e("b"), &e("k")).unwrap();
    assert!(s.iter().all(RatExpr::is_zero));
    let p = polymorph_residuals(fr, &e("a"), &e("b"), &e("k"), &e("f")).unwrap();
    assert!(p.iter().all(RatExpr::is_zero));
    let mut open = Vec::new();
    for name in fr.symbols() {
        let d = forms::d1(fr, fr.rule(name).unwrap()).unwrap();
        if !d.is_zero() {
            assert!(st.constraints.iter().any(|c| associated(c, d.num())), "d(d{name}) is new");
            open.push(name.clone());
        }
    }
    assert_eq!(open, ["a22", "b11"]);
}

#[test]
fn constant_rescaling_has_no_real_solution() {
    let limits = Limits { time: Some(Duration::from_secs(1)), ..Limits::default() };
    let rep = constant_rescaling_check(&limits).unwrap();
    assert_eq!(rep.equations.len(), 6);
    assert_ne!(rep.exact_unit, Some(true));
    assert!(rep.lifted_certified);
    assert_eq!(rep.lifted_dimension, 0);
    assert_eq!(rep.complex_points, Some(4));
    assert_eq!(rep.real_points, Some(0));
    assert!(!rep.inconsistent);
    assert!(rep.lifted_basis.iter().any(|g| g == "f^2 + 13/2*f + 13/2"), "{:?}", rep.lifted_basis);
}

fn chain_frame(rules: &[(&str, &str, &str)]) -> FormalFrame {
    let mut fr = FormalFrame::new(RatExpr::zero(), RatExpr::zero());
    for (n, a, b) in rules {
        fr.set(n, e(a), e(b));
    }
    fr
}

#[test]
fn chain_drops_dimension_and_never_differentiates_inverses() {
    let fr = chain_frame(&[("x", "y", "0"), ("y", "z", "0"), ("z", "0", "0")]);
    let chain = gronwall_chain(&[parse_poly("x-y^2").unwrap()], &fr, &["x"], &ChainOptions::default()).unwrap();
    assert_eq!(chain.dimensions(), [2, 1]);
    assert_eq!(chain.verdict, ChainVerdict::ConjectureTrue { step: 1, dimension: 1 });
    assert_eq!(chain.inverses, [("x".to_string(), "S".to_string())]);
    let inv = parse_poly("x*S-1").unwrap();
    for i in &chain.ideals {
        let with_s: Vec<_> = i.generators().iter().filter(|g| g.used_var_names().contains(&"S".to_string())).collect();
        assert_eq!(with_s.len(), 1);
        assert!(associated(with_s[0], &inv));
    }
}

#[test]
fn chain_on_the_unit_circle() {
    let fr = chain_frame(&[("x", "y", "0"), ("y", "-x", "0")]);
    let seed = [parse_poly("x^2+y^2-1").unwrap(), parse_poly("x-y").unwrap()];
    let chain = gronwall_chain(&seed, &fr, &["x", "y"], &ChainOptions::default()).unwrap();
    let names: Vec<&str> = chain.inverses.iter().map(|(_, t)| t.as_str()).collect();
    assert_eq!(names, ["S", "T"]);
    // x = y on the circle, then x + y = 0 from the derivative: empty
    assert_eq!(chain.dimensions(), [0]);
    assert!(matches!(chain.verdict, ChainVerdict::ConjectureTrue { step: 0, .. }));
}

#[test]
fn chain_stabilizing_above_a_curve() {
    let fr = chain_frame(&[("x", "0", "0"), ("y", "0", "0"), ("z", "0", "0")]);
    let chain = gronwall_chain(&[parse_poly("x-y*z").unwrap()], &fr, &[], &ChainOptions::default()).unwrap();
    assert_eq!(chain.dimensions(), [2, 2, 2, 2]);
    assert_eq!(chain.verdict, ChainVerdict::ConjectureFalseOnBranch { step: 2, dimension: 2, needs_component_choice: true });
    assert!(chain.dimensions().windows(2).all(|w| w[1] <= w[0]));
}
