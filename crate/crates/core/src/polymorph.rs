//! Polymorphic webs: rescalings `U -> (1 + f) U` of the invariant coframe
//! that keep the web linear, the specialization to webs with two pencils of
//! lines, and the ideal chain deciding whether non-hexagonal ones exist.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::cartan::frame_partials;
use crate::expr::{gcd, parse, resultant, squarefree, strip_factor, ExprError, Poly, RatExpr, VarSet};
use crate::field::{q, zp_to_q, Q};
use crate::forms::{self, FormalFrame, Frame, FrameError, Quad, QuadFrame, RelativeFrame};
use crate::ideals::{groebner, groebner_mod_p, IdealError, Limits, PolyIdeal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolymorphError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error("pole: {0}")]
    Pole(String),
    #[error("{symbol} does not enter {what} linearly")]
    NotLinear { symbol: String, what: String },
    #[error("stage {stage}: derived {name} differs from the reference by {diff}")]
    Mismatch { stage: String, name: String, diff: String },
    #[error("stage {stage}: {msg}")]
    Inconsistent { stage: String, msg: String },
    #[error("reference data: {0}")]
    Reference(String),
}

fn ex(s: &str) -> RatExpr {
    parse(s).unwrap_or_else(|e| panic!("built-in expression {s}: {e}"))
}

fn int(n: i64) -> RatExpr {
    RatExpr::int(n)
}

/// Invariants `(a~, b~, k~)` of the web after the rescaling `U~ = (1 + f) U`.
pub fn transformed_invariants(
    a: &RatExpr,
    b: &RatExpr,
    k: &RatExpr,
    f: &RatExpr,
    f1: &RatExpr,
    f2: &RatExpr,
) -> Result<[RatExpr; 3], PolymorphError> {
    let fp1 = f + &int(1);
    if fp1.is_zero() {
        return Err(PolymorphError::Pole("f = -1".into()));
    }
    let den = &(&fp1 * &fp1) * &int(3);
    let three = int(3);
    let at = &(&(f1 + &(f2 * &int(2))) + &(&(&(&three * a) - k) * f)) + &(&three * a);
    let bt = &(&(&(f1 * &int(-2)) - f2) + &(&(&(&three * b) - k) * f)) + &(&three * b);
    Ok([&at / &den, &bt / &den, &(k * &three) / &den])
}

/// Left minus right of the two equations a rescaling function `f` must
/// satisfy for `(1 + f) U` to be the invariant coframe of another linear
/// web. The frame's coframe is `(U1, U2)`.
pub fn polymorph_residuals<F: Frame>(fr: &F, a: &F::S, b: &F::S, k: &F::S, f: &F::S) -> Result<[F::S; 2], PolymorphError> {
    let [f1, f2, _] = frame_partials(fr, f)?;
    let [f11, f12, _] = frame_partials(fr, &f1)?;
    let [f21, f22, _] = frame_partials(fr, &f2)?;
    let [k1, k2, _] = frame_partials(fr, k)?;
    let n = |v: i64| fr.int(v);
    let (a, b, k, f) = (a.clone(), b.clone(), k.clone(), f.clone());
    let mixed = f12 + f21;
    let ba = n(1) + n(3) * (b.clone() - a.clone());
    let k2k = n(2) * k.clone() * k.clone();

    let rhs1 = f.clone() * (f1.clone() + n(2) * f2.clone())
        + ba.clone() * f1.clone()
        + (n(2) + n(3) * (a.clone() + n(2) * b.clone() - k.clone())) * f2.clone()
        + (n(3) * a.clone() - k.clone()) * f.clone() * f.clone()
        + (k2k.clone() - n(2) * k.clone() * (a.clone() + n(2) * b.clone()) + k1 - k.clone() + n(3) * a.clone()) * f.clone();
    let rhs2 = f.clone() * (n(2) * f1.clone() + f2.clone())
        + (n(2) + n(3) * (k.clone() - n(2) * a.clone() - b.clone())) * f1
        + ba * f2
        + (k.clone() - n(3) * b.clone()) * f.clone() * f.clone()
        + (k2k - n(2) * k.clone() * (n(2) * a + b.clone()) - k2 + k - n(3) * b) * f;
    Ok([f11 + mixed.clone() - rhs1, f22 + mixed - rhs2])
}

/// Residuals of the structure equations of `(U1, U2)` in terms of `(a, b, k)`:
/// the two structure functions, `a1`, `b2`, and the relation for `k1 + k2`.
pub fn structure_residuals<F: Frame>(fr: &F, a: &F::S, b: &F::S, k: &F::S) -> Result<[F::S; 5], PolymorphError> {
    let n = |v: i64| fr.int(v);
    let [s1, s2] = fr.structure();
    let [a1, a2, _] = frame_partials(fr, a)?;
    let [b1, b2, _] = frame_partials(fr, b)?;
    let [k1, k2, _] = frame_partials(fr, k)?;
    let (a, b, k) = (a.clone(), b.clone(), k.clone());
    Ok([
        s1 - (k.clone() - a.clone() - n(2) * b.clone()),
        s2 - (n(2) * a.clone() + b.clone() - k.clone()),
        a1 - a.clone() * (n(1) + n(2) * (a.clone() + n(2) * b.clone() - k.clone())),
        b2 - b.clone() * (n(1) + n(2) * (k.clone() - n(2) * a.clone() - b.clone())),
        k1 + k2
            - (a2 + b1 + n(2) * (a.clone() + b.clone()) + n(4) * (a.clone() * a.clone() - b.clone() * b.clone())
                + n(4) * k.clone() * (b - a)
                - k),
    ])
}

/// The right-hand side of the `k1 + k2` relation.
pub fn k_sum(a: &RatExpr, b: &RatExpr, k: &RatExpr, a2: &RatExpr, b1: &RatExpr) -> RatExpr {
    let mut s = a2 + b1;
    s = &s + &(&(a + b) * &int(2));
    s = &s + &(&(&(a * a) - &(b * b)) * &int(4));
    s = &s + &(&(k * &(b - a)) * &int(4));
    &s - k
}

/// Solves `eq = 0` for `symbol`, which must enter the numerator linearly.
pub fn solve_linear(eq: &RatExpr, symbol: &str) -> Result<RatExpr, PolymorphError> {
    let num = eq.num();
    let not_linear = || PolymorphError::NotLinear { symbol: symbol.to_string(), what: format!("an equation of size {}", eq.size()) };
    let k = num.vars().index(symbol).ok_or_else(not_linear)?;
    if num.degree_in(k) != 1 {
        return Err(not_linear());
    }
    let c = num.coefficients_in(k);
    let (c0, c1) = (RatExpr::from_poly(c[0].clone()), RatExpr::from_poly(c[1].clone()));
    Ok(&(-c0) / &c1)
}

/// Numerator of `d(A w1 + B w2)` over a formal coframe.
fn dd(fr: &FormalFrame, w: [RatExpr; 2]) -> Result<RatExpr, PolymorphError> {
    Ok(forms::d1(fr, &w)?)
}

fn rule(fr: &FormalFrame, name: &str) -> [RatExpr; 2] {
    fr.rule(name).cloned().unwrap_or_else(|| panic!("no rule for {name}"))
}

/// Residual report for the two-pencil to general-frame correspondence.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma9Report {
    pub residuals: Vec<(String, String)>,
    pub all_zero: bool,
}

/// The coframe `(w1, w2)` of a web with two pencils, `d w1 = w1^w2 / 2`,
/// `d w2 = -w1^w2`, `dH = H1 w1 - H w2`, with the given `g12, g22` rules and
/// `g21` fixed by `d(df) = 0`. `g11` and `H1` stay underived.
pub fn two_pencil_frame(g12: &RatExpr, g22: &RatExpr) -> FormalFrame {
    let mut fr = FormalFrame::new(RatExpr::frac(1, 2), int(-1));
    let g21 = &(g12 + &ex("g2")) - &ex("g1/2");
    fr.set("f", ex("g1"), ex("g2")).set("g1", ex("g11"), g12.clone()).set("g2", g21, g22.clone()).set("H", ex("H1"), ex("-H"));
    fr
}

/// `U1 = (w1 + k w2) / (2k)`, `U2 = (w1 - k w2) / (2k)` with `k = sqrt(H)`,
/// taken as a coframe over `Q(...)[sqrt H]`.
pub fn lemma9_frame(base: FormalFrame) -> Result<(RelativeFrame<QuadFrame<FormalFrame>>, Quad), PolymorphError> {
    let qf = QuadFrame::new(base, ex("H"))?;
    let k = qf.root();
    let half = qf.real(RatExpr::frac(1, 2));
    let inv2k = half.clone() / k.clone();
    let u1 = [inv2k.clone(), half.clone()];
    let u2 = [inv2k, -half];
    Ok((RelativeFrame::new(qf, u1, u2)?, k))
}

/// Checks that solutions of the two-pencil system give solutions of the
/// general structure and polymorphism equations, with `a = b = 0`, `k^2 = H`.
pub fn lemma9_check() -> Result<Lemma9Report, PolymorphError> {
    let r = reference()?;
    let base = two_pencil_frame(r.formula("g12")?, r.formula("g22")?);
    let (fr, k) = lemma9_frame(base)?;
    let zero = fr.zero();
    let f = fr.base.real(ex("f"));
    let s = structure_residuals(&fr, &zero, &zero, &k)?;
    let p = polymorph_residuals(&fr, &zero, &zero, &k, &f)?;
    let names = ["dU1", "dU2", "a1", "b2", "k1+k2", "polymorph 1", "polymorph 2"];
    let residuals: Vec<(String, String)> =
        names.iter().zip(s.iter().chain(p.iter())).map(|(n, v)| (n.to_string(), format!("{v:?}"))).collect();
    let all_zero = s.iter().chain(p.iter()).all(Quad::is_zero);
    Ok(Lemma9Report { residuals, all_zero })
}

// ---------------------------------------------------------------------------
// reference data

const REFERENCE: &str = include_str!("../data/two_pencils.txt");

/// Transcribed formulas, factors and degrees.
#[derive(Debug, Clone)]
pub struct Reference {
    pub formulas: BTreeMap<String, RatExpr>,
    pub factors: Vec<Poly<Q>>,
    pub degrees: BTreeMap<String, u32>,
}

impl Reference {
    pub fn formula(&self, name: &str) -> Result<&RatExpr, PolymorphError> {
        self.formulas.get(name).ok_or_else(|| PolymorphError::Reference(format!("missing {name}")))
    }
}

pub fn reference() -> Result<Reference, PolymorphError> {
    let mut r = Reference { formulas: BTreeMap::new(), factors: Vec::new(), degrees: BTreeMap::new() };
    for line in REFERENCE.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| PolymorphError::Reference(line.to_string()))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if lhs == "factor" {
            r.factors.push(crate::expr::parse_poly(rhs)?);
        } else if let Some(name) = lhs.strip_prefix("degree ") {
            let d = rhs.parse().map_err(|_| PolymorphError::Reference(line.to_string()))?;
            r.degrees.insert(name.trim().to_string(), d);
        } else {
            r.formulas.insert(lhs.to_string(), parse(rhs)?);
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// transcripts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    /// Derived and equal to the transcribed formula.
    Verified,
    /// Derived; nothing transcribed to compare with.
    Computed,
    /// Skipped or stopped at a resource ceiling.
    Unverified,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub index: u8,
    pub name: String,
    pub status: StageStatus,
    pub outputs: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub millis: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub pipeline: String,
    pub stages: Vec<Stage>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn output(&self, name: &str) -> Option<&str> {
        self.stages.iter().rev().flat_map(|s| s.outputs.iter().rev()).find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    pub fn is_complete(&self) -> bool {
        self.stages.iter().all(|s| s.status != StageStatus::Unverified)
    }
}

/// Resource ceilings for the long symbolic pipelines.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub through_stage: u8,
    /// Wall time allowed for any single expensive step.
    pub ceiling: Duration,
    /// Largest polynomial (in terms) an expensive step may start from.
    pub max_terms: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { through_stage: 10, ceiling: Duration::from_secs(120), max_terms: 20_000 }
    }
}

fn check_equal(stage: &str, name: &str, derived: &RatExpr, reference: &RatExpr) -> Result<(), PolymorphError> {
    let diff = derived - reference;
    if diff.is_zero() {
        Ok(())
    } else {
        Err(PolymorphError::Mismatch { stage: stage.into(), name: name.into(), diff: diff.to_string() })
    }
}

/// Runs `job` on a worker thread; `None` if it outlives `ceiling`.
fn with_ceiling<T: Send + 'static>(ceiling: Duration, job: impl FnOnce() -> T + Send + 'static) -> Option<T> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(job());
    });
    rx.recv_timeout(ceiling).ok()
}

/// Symbols and derived objects of the two-pencil computation.
#[derive(Debug, Clone, Default)]
pub struct TwoPencilState {
    pub h12: Option<RatExpr>,
    pub g21: Option<RatExpr>,
    pub g12: Option<RatExpr>,
    pub g22: Option<RatExpr>,
    pub g111: Option<RatExpr>,
    pub g112: Option<RatExpr>,
    pub g11: Option<RatExpr>,
    pub h11: Option<RatExpr>,
    /// `[T11, T01, T00, T1, T0]` in `g1, g2, f`.
    pub conic: Option<[Poly<Q>; 5]>,
    pub h_tilde: Option<RatExpr>,
    pub h1_tilde: Option<RatExpr>,
    pub z1: Option<RatExpr>,
    pub z2: Option<RatExpr>,
    pub w: Option<Poly<Q>>,
    pub constraints: Option<[Poly<Q>; 2]>,
    pub resultants: Vec<Poly<Q>>,
    /// Nonvanishing factors removed from equations, with the equation they came from.
    pub removed: Vec<(String, String)>,
    pub factors: Vec<Poly<Q>>,
    pub e: Option<Poly<Q>>,
    pub e_tilde: Option<Poly<Q>>,
}

/// Polynomials assumed nonzero on the working locus `f != 0, H != 0, 3f + 8 g2 != 0`.
fn nonvanishing() -> Vec<Poly<Q>> {
    ["f", "H", "3*f+8*g2", "Z"].iter().map(|s| crate::expr::parse_poly(s).expect("builtin")).collect()
}

/// Numerator of `e` with the nonvanishing factors and the content removed;
/// what was removed is logged under `label`.
fn clean_numerator(e: &RatExpr, label: &str, log: &mut Vec<(String, String)>, extra: &[Poly<Q>]) -> Poly<Q> {
    let mut p = e.num().clone();
    let mut removed = Vec::new();
    let mono = p.monomial_content();
    if mono.iter().any(|&m| m > 0) {
        let m = Poly::monomial(p.vars().clone(), &mono, Q::from_integer(1.into()));
        p = p.div_monomial(&mono);
        removed.push(m.to_string());
    }
    for f in nonvanishing().iter().chain(extra) {
        let (rest, k) = strip_factor(&p, f);
        if k > 0 {
            removed.push(format!("({f})^{k}"));
            p = rest;
        }
    }
    let (_, z) = crate::expr::to_int_primitive(&p);
    let p = crate::expr::gcd::int_to_q(&z).pruned();
    if !removed.is_empty() {
        log.push((label.to_string(), removed.join("*")));
    }
    p
}

/// The symbolic derivation for webs with two pencils of lines, stage by
/// stage, checked against the transcribed formulas where there are any.
pub fn two_pencils_pipeline(opts: &PipelineOptions) -> Result<(Transcript, TwoPencilState), PolymorphError> {
    let reference = reference()?;
    let mut st = TwoPencilState::default();
    let mut tr = Transcript { pipeline: "two-pencils".into(), stages: Vec::new() };
    let push = |tr: &mut Transcript, index: u8, name: &str, status, outputs: Vec<(&str, String)>, notes: Vec<String>, t0: Instant| {
        tr.stages.push(Stage {
            index,
            name: name.into(),
            status,
            outputs: outputs.into_iter().map(|(a, b)| (a.to_string(), b)).collect(),
            notes,
            millis: t0.elapsed().as_millis() as u64,
        });
    };
    let through = opts.through_stage.min(10);

    // (1) mixed derivatives from d(dH) = 0 and d(df) = 0
    let t0 = Instant::now();
    let mut fr = FormalFrame::new(RatExpr::frac(1, 2), int(-1));
    fr.set("H", ex("H1"), ex("-H")).set("H1", ex("H11"), ex("H12"));
    fr.set("f", ex("g1"), ex("g2")).set("g1", ex("g11"), ex("g12")).set("g2", ex("g21"), ex("g22"));
    let h12 = solve_linear(&dd(&fr, rule(&fr, "H"))?, "H12")?;
    let g21 = solve_linear(&dd(&fr, rule(&fr, "f"))?, "g21")?;
    check_equal("1", "H12", &h12, reference.formula("H12")?)?;
    check_equal("1", "g21", &g21, reference.formula("g21")?)?;
    push(&mut tr, 1, "mixed derivatives", StageStatus::Verified, vec![("H12", h12.to_string()), ("g21", g21.to_string())], vec![], t0);
    st.h12 = Some(h12.clone());
    st.g21 = Some(g21.clone());
    if through < 2 {
        return Ok((tr, st));
    }

    // (2) the polymorphism system in the (w1, w2) coframe, solved for g12, g22
    let t0 = Instant::now();
    let free = two_pencil_frame(&ex("g12"), &ex("g22"));
    let (lf, k) = lemma9_frame(free)?;
    let zero = lf.zero();
    let f = lf.base.real(ex("f"));
    let res = polymorph_residuals(&lf, &zero, &zero, &k, &f)?;
    let mut eqs: Vec<RatExpr> = Vec::new();
    for r in &res {
        for part in [&r.re, &r.im] {
            if !part.is_zero() {
                eqs.push(part.clone());
            }
        }
    }
    let (g12, g22) = solve_pair(&eqs, "g12", "g22", "2")?;
    check_equal("2", "g12", &g12, reference.formula("g12")?)?;
    check_equal("2", "g22", &g22, reference.formula("g22")?)?;
    push(
        &mut tr,
        2,
        "polymorphism system",
        StageStatus::Verified,
        vec![("g12", g12.to_string()), ("g22", g22.to_string())],
        vec![format!("{} scalar equations, all consistent", eqs.len())],
        t0,
    );
    st.g12 = Some(g12.clone());
    st.g22 = Some(g22.clone());
    if through < 3 {
        return Ok((tr, st));
    }

    // (3) g111, g112 from d(dg1) = d(dg2) = 0, then g11 from d(dg11) = 0
    let t0 = Instant::now();
    let mut fr = two_pencil_frame(&g12, &g22);
    fr.set("H1", ex("H11"), h12.clone()).set("H11", ex("H111"), ex("H112"));
    fr.set("g11", ex("g111"), ex("g112"));
    let h112 = solve_linear(&dd(&fr, rule(&fr, "H1"))?, "H112")?;
    fr.set("H11", ex("H111"), h112.clone());
    let g112 = solve_linear(&dd(&fr, rule(&fr, "g1"))?, "g112")?;
    let g111 = solve_linear(&dd(&fr, rule(&fr, "g2"))?, "g111")?;
    fr.set("g11", g111.clone(), g112.clone());
    let e11 = dd(&fr, rule(&fr, "g11"))?;
    let mut notes = vec![format!("H112 = {h112}")];
    if e11.contains("H111") {
        notes.push("d(dg11) involves H111".into());
    }
    let g11 = solve_linear(&e11, "g11")?;
    check_equal("3", "g11", &g11, reference.formula("g11")?)?;
    push(
        &mut tr,
        3,
        "g11",
        StageStatus::Verified,
        vec![("g111", g111.to_string()), ("g112", g112.to_string()), ("g11", g11.to_string())],
        notes,
        t0,
    );
    st.g111 = Some(g111);
    st.g112 = Some(g112);
    st.g11 = Some(g11.clone());
    if through < 4 {
        return Ok((tr, st));
    }

    // (4) H11 from d(dg1) = 0 with g11 substituted
    let t0 = Instant::now();
    let mut fr = two_pencil_frame(&g12, &g22);
    fr.set("H1", ex("H11"), h12.clone()).set("H11", ex("H111"), h112.clone());
    let g22s = g22.substitute("g11", &g11);
    fr.set("g1", g11.clone(), g12.clone());
    fr.set("g2", rule(&fr, "g2")[0].clone(), g22s.clone());
    let h11 = solve_linear(&dd(&fr, rule(&fr, "g1"))?, "H11")?;
    check_equal("4", "H11", &h11, reference.formula("H11")?)?;
    push(&mut tr, 4, "H11", StageStatus::Verified, vec![("H11", h11.to_string())], vec![], t0);
    st.h11 = Some(h11.clone());
    if through < 5 {
        return Ok((tr, st));
    }

    // (5) the conic in (H, H1) from d(dg2) = 0
    let t0 = Instant::now();
    let g11h = g11.substitute("H11", &h11);
    let mut fr = two_pencil_frame(&g12, &g22.substitute("g11", &g11h));
    fr.set("H1", h11.clone(), h12.clone()).set("g1", g11h.clone(), g12.clone());
    let e2 = dd(&fr, rule(&fr, "g2"))?;
    let conic_poly = clean_numerator(&e2, "d(dg2)", &mut st.removed, &[crate::expr::parse_poly("18*f+48*g2")?]);
    let conic = conic_coefficients(&conic_poly, "5")?;
    let names = ["T11", "T01", "T00", "T1", "T0"];
    let outputs: Vec<(&str, String)> = names.iter().zip(&conic).map(|(n, t)| (*n, t.to_string())).collect();
    let notes = vec![
        "quadratic in (H, H1) with no constant term".to_string(),
        format!("removed nonvanishing factors: {:?}", st.removed),
    ];
    push(&mut tr, 5, "conic", StageStatus::Verified, outputs, notes, t0);
    st.conic = Some(conic.clone());
    if through < 6 {
        return Ok((tr, st));
    }

    // (6) secant parametrization H1 = Z H
    let t0 = Instant::now();
    let [t11, t01, t00, t1, t0p] = conic.clone().map(RatExpr::from_poly);
    let z = ex("Z");
    let quad = &(&(&t11 * &(&z * &z)) + &(&t01 * &z)) + &t00;
    let lin = &(&t1 * &z) + &t0p;
    let h_tilde = &(-lin) / &quad;
    let h1_tilde = &z * &h_tilde;
    let mut zf = FormalFrame::new(RatExpr::frac(1, 2), int(-1));
    zf.set("Z", ex("Z1"), ex("Z2"));
    let z2 = solve_linear(&dd(&zf, [ex("Z"), int(-1)])?, "Z2")?;
    check_equal("6", "Z2", &z2, reference.formula("Z2")?)?;
    // back-substitution: the conic vanishes on the parametrization
    let back = RatExpr::from_poly(conic_poly.clone()).substitute_all(&[("H1", h1_tilde.clone()), ("H", h_tilde.clone())]);
    if !back.is_zero() {
        return Err(PolymorphError::Inconsistent { stage: "6".into(), msg: "parametrization misses the conic".into() });
    }
    push(
        &mut tr,
        6,
        "secant parametrization",
        StageStatus::Verified,
        vec![("H", h_tilde.to_string()), ("H1", h1_tilde.to_string()), ("Z2", z2.to_string())],
        vec![],
        t0,
    );
    st.h_tilde = Some(h_tilde.clone());
    st.h1_tilde = Some(h1_tilde.clone());
    st.z2 = Some(z2.clone());
    if through < 7 {
        return Ok((tr, st));
    }

    // (7) Z1 and the constraint W from dH = H1 w1 - H w2
    let t0 = Instant::now();
    let sub_h = |e: &RatExpr| e.substitute_all(&[("H1", h1_tilde.clone()), ("H", h_tilde.clone())]);
    let g11z = sub_h(&g11h);
    let g22z = sub_h(&g22.substitute("g11", &g11h));
    let mut fr = two_pencil_frame(&g12, &g22z);
    fr.set("g1", g11z.clone(), g12.clone()).set("Z", ex("Z1"), z2.clone());
    fr.remove("H");
    let dh = forms::d0(&fr, &h_tilde)?;
    let z1 = solve_linear(&(&dh[0] - &h1_tilde), "Z1")?;
    let w = clean_numerator(&(&dh[1] + &h_tilde), "W", &mut st.removed, &[]);
    push(
        &mut tr,
        7,
        "Z1 and W",
        StageStatus::Computed,
        vec![("Z1", z1.to_string()), ("W", w.to_string())],
        vec![format!("W: total degree {}, degree {} in Z, {} terms", w.total_degree(), w.degree_in_name("Z"), w.nterms())],
        t0,
    );
    st.z1 = Some(z1.clone());
    st.w = Some(w.clone());
    if through < 8 {
        return Ok((tr, st));
    }

    // (8) d(dg1), d(dg2) in (g1, g2, f, Z); their resultants in Z with W,
    // restricted to generic rational lines in (g1, g2, f)
    let t0 = Instant::now();
    fr.set("Z", z1.clone(), z2.clone());
    let c1 = clean_numerator(&dd(&fr, rule(&fr, "g1"))?, "d(dg1)", &mut st.removed, &[]);
    let c2 = clean_numerator(&dd(&fr, rule(&fr, "g2"))?, "d(dg2)", &mut st.removed, &[]);
    st.constraints = Some([c1.clone(), c2.clone()]);
    let sizes = format!(
        "sizes: d(dg1) {} terms (deg_Z {}), d(dg2) {} terms (deg_Z {}), W {} terms (deg_Z {})",
        c1.nterms(),
        c1.degree_in_name("Z"),
        c2.nterms(),
        c2.degree_in_name("Z"),
        w.nterms(),
        w.degree_in_name("Z")
    );
    let system = [c1.clone(), c2.clone(), w.clone()];
    let lines: Vec<Line> = CHECK_LINES.iter().map(|l| Line::new(l)).collect();
    let job_system = system.clone();
    let job_lines = lines.clone();
    let on_lines = with_ceiling(opts.ceiling, move || -> Result<Vec<(Vec<Poly<Q>>, Poly<Q>)>, PolymorphError> {
        job_lines.iter().map(|l| l.resultants(&job_system)).collect()
    });
    let Some(on_lines) = on_lines else {
        let why = format!("time ceiling {:?} exceeded", opts.ceiling);
        push(&mut tr, 8, "resultants", StageStatus::Unverified, vec![], vec![sizes, why], t0);
        for (i, name) in [(9u8, "simple factors and E"), (10u8, "E tilde")] {
            push(&mut tr, i, name, StageStatus::Unverified, vec![], vec!["depends on stage 8".into()], Instant::now());
        }
        return Ok((tr, st));
    };
    let on_lines = on_lines?;
    let mut outs = Vec::new();
    for (k, (res, common)) in on_lines.iter().enumerate() {
        let degs: Vec<String> = res.iter().map(|r| r.total_degree().to_string()).collect();
        outs.push((format!("line {k}: resultant degrees"), degs.join(", ")));
        outs.push((format!("line {k}: common part degree"), common.total_degree().to_string()));
    }
    let mut notes = vec![sizes];
    notes.extend(lines.iter().enumerate().map(|(k, l)| format!("line {k}: {l}")));
    push(&mut tr, 8, "resultants", StageStatus::Computed, borrow(&outs), notes, t0);
    st.resultants = on_lines.iter().flat_map(|(r, _)| r.clone()).collect();
    if through < 9 {
        return Ok((tr, st));
    }

    // (9) the four simple factors divide every resultant; the rest of the common part is E
    let t0 = Instant::now();
    let expected = reference.degrees.get("E").copied().unwrap_or(0);
    let mut outs = Vec::new();
    let mut all_match = true;
    for (k, (line, (res, common))) in lines.iter().zip(&on_lines).enumerate() {
        let (e_line, mult) = line.strip_factors(res, common, &reference.factors, "9")?;
        for (fct, m) in reference.factors.iter().zip(&mult) {
            outs.push((format!("line {k}: multiplicity of {fct}"), m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")));
        }
        outs.push((format!("line {k}: deg E"), e_line.total_degree().to_string()));
        all_match &= e_line.total_degree() == expected;
    }
    let status = if all_match { StageStatus::Verified } else { StageStatus::Unverified };
    push(&mut tr, 9, "simple factors and E", status, borrow(&outs), vec![format!("expected total degree {expected}")], t0);
    st.factors = reference.factors.clone();
    if through < 10 || !all_match {
        return Ok((tr, st));
    }

    // (10) E by interpolation over lines, Z from dE, then E tilde
    let t0 = Instant::now();
    let factors = reference.factors.clone();
    let fr10 = fr.clone();
    let check = (lines[0].clone(), on_lines[0].clone());
    let job = move || -> Result<(Poly<Q>, Poly<Q>), PolymorphError> {
        let e = interpolate_e(&system, &factors, expected)?;
        let (line, (res, common)) = check;
        let (e_line, _) = line.strip_factors(&res, &common, &factors, "10")?;
        if !crate::expr::associated(&line.restrict(&e), &e_line) {
            return Err(PolymorphError::Inconsistent { stage: "10".into(), msg: "interpolated E disagrees on the check line".into() });
        }
        let de = forms::d0(&fr10, &RatExpr::from_poly(e.clone()))?;
        let zz = solve_linear(&de[0], "Z")?;
        let mut f10 = fr10.clone();
        f10.substitute("Z", &zz);
        let dz = forms::d0(&f10, &zz)?;
        let cond = &dz[1] - &z2.substitute("Z", &zz);
        let mut log = Vec::new();
        let et = clean_numerator(&cond, "E tilde", &mut log, &[e.clone()]);
        Ok((e, et))
    };
    match with_ceiling(opts.ceiling, job) {
        Some(Ok((e, et))) => {
            let expected = reference.degrees.get("Etilde").copied().unwrap_or(0);
            let status = if et.total_degree() == expected { StageStatus::Verified } else { StageStatus::Unverified };
            let outs = vec![
                ("deg E".to_string(), e.total_degree().to_string()),
                ("E terms".to_string(), e.nterms().to_string()),
                ("deg E tilde".to_string(), et.total_degree().to_string()),
            ];
            push(&mut tr, 10, "E tilde", status, borrow(&outs), vec![format!("expected total degree {expected}")], t0);
            st.e = Some(e);
            st.e_tilde = Some(et);
        }
        Some(Err(e)) => return Err(e),
        None => push(&mut tr, 10, "E tilde", StageStatus::Unverified, vec![], vec![format!("time ceiling {:?} exceeded", opts.ceiling)], t0),
    }
    Ok((tr, st))
}

fn borrow(outs: &[(String, String)]) -> Vec<(&str, String)> {
    outs.iter().map(|(a, b)| (a.as_str(), b.clone())).collect()
}

/// Coefficient of `t^k` in a polynomial in `t` alone.
fn coeff_in_t(p: &Poly<Q>, k: usize) -> Q {
    p.terms()
        .find(|(e, _)| e.iter().map(|&x| x as usize).sum::<usize>() == k)
        .map(|(_, c)| c.clone())
        .unwrap_or_else(num_traits::Zero::zero)
}

/// Lines used to check the elimination: `(symbol, offset, direction)`.
const CHECK_LINES: [[(&str, &str, &str); 3]; 2] = [
    [("g1", "2/7", "3"), ("g2", "11/5", "-5/3"), ("f", "-13/9", "7/2")],
    [("g1", "-3/4", "5/2"), ("g2", "1/6", "7/4"), ("f", "9/5", "-2/3")],
];

/// Direction of the lines through the interpolation lattice.
const SHEAR: [(&str, &str); 3] = [("g1", "3/5"), ("g2", "-4/7"), ("f", "5/3")];
/// Corner of the interpolation lattice.
const LATTICE_ORIGIN: [&str; 3] = ["1/3", "-2/9", "3/8"];

/// A rational line `x = x0 + dx t` in the space of `(g1, g2, f)`.
#[derive(Debug, Clone)]
struct Line {
    coords: Vec<(String, Poly<Q>)>,
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|(n, p)| format!("{n} = {p}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

impl Line {
    fn new(spec: &[(&str, &str, &str); 3]) -> Line {
        let coords = spec
            .iter()
            .map(|(n, x0, dx)| (n.to_string(), crate::expr::parse_poly(&format!("({x0}) + ({dx})*t")).expect("builtin line")))
            .collect();
        Line { coords }
    }

    /// `(u, v, 0) + LATTICE_ORIGIN + t SHEAR`.
    fn through(u: usize, v: usize) -> Line {
        let coords = SHEAR
            .iter()
            .zip(LATTICE_ORIGIN)
            .enumerate()
            .map(|(k, ((n, dx), x0))| {
                let step = [u, v, 0][k];
                (n.to_string(), crate::expr::parse_poly(&format!("{step} + ({x0}) + ({dx})*t")).expect("lattice line"))
            })
            .collect();
        Line { coords }
    }

    fn restrict(&self, p: &Poly<Q>) -> Poly<Q> {
        let mut p = p.clone();
        for (n, v) in &self.coords {
            p = p.substitute(n, v);
        }
        p.pruned()
    }

    /// The three pairwise resultants in `Z` on the line and the square-free
    /// part of their common factors.
    fn resultants(&self, system: &[Poly<Q>; 3]) -> Result<(Vec<Poly<Q>>, Poly<Q>), PolymorphError> {
        let [a, b, c] = system.each_ref().map(|p| self.restrict(p));
        let res = vec![resultant(&a, &b, "Z")?, resultant(&a, &c, "Z")?, resultant(&b, &c, "Z")?];
        let common = common_factor_part(&res);
        Ok((res, common))
    }

    /// Divides the restricted factors out of the common part; each must
    /// divide every resultant. Returns the rest and the multiplicities.
    fn strip_factors(&self, res: &[Poly<Q>], common: &Poly<Q>, factors: &[Poly<Q>], stage: &str) -> Result<(Poly<Q>, Vec<Vec<u32>>), PolymorphError> {
        let mut rest = common.clone();
        let mut mult = Vec::new();
        for fct in factors {
            let fl = self.restrict(fct);
            let m: Vec<u32> = res.iter().map(|r| strip_factor(r, &fl).1).collect();
            let (r, k) = strip_factor(&rest, &fl);
            if k == 0 || m.contains(&0) {
                return Err(PolymorphError::Inconsistent { stage: stage.into(), msg: format!("{fct} does not divide the resultants on {self}") });
            }
            rest = r;
            mult.push(m);
        }
        Ok((rest, mult))
    }
}

/// `E(g1, g2, f)` of the given total degree from its restrictions to the
/// lines `(u, v, 0) + LATTICE_ORIGIN + t SHEAR` over the lattice `u + v <= degree`: made
/// monic in `t`, each coefficient is interpolated in `(u, v)` by forward
/// differences.
fn interpolate_e(system: &[Poly<Q>; 3], factors: &[Poly<Q>], degree: u32) -> Result<Poly<Q>, PolymorphError> {
    let n = degree as usize;
    let mut values: BTreeMap<(usize, usize), Vec<Q>> = BTreeMap::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let line = Line::through(i, j);
            let (res, common) = line.resultants(system)?;
            let (e_line, _) = line.strip_factors(&res, &common, factors, "10")?;
            if e_line.total_degree() != degree {
                return Err(PolymorphError::Inconsistent { stage: "10".into(), msg: format!("degree {} on {line}", e_line.total_degree()) });
            }
            let e_line = e_line.monic();
            let coeffs: Vec<Q> = (0..=n).map(|k| coeff_in_t(&e_line, k)).collect();
            values.insert((i, j), coeffs);
        }
    }
    let uv = VarSet::new(["u", "v"]);
    let binom = |name: &str, k: usize| -> Poly<Q> {
        let x = crate::expr::parse_poly(name).expect("var").aligned(&uv);
        (0..k).fold(Poly::one(uv.clone()), |acc, m| {
            let shifted = x.sub(&Poly::constant(uv.clone(), Q::from_integer(m.into())));
            acc.mul(&shifted).scale(&Q::new(1.into(), (m as i64 + 1).into()))
        })
    };
    let choose = |a: usize, b: usize| -> Q { (0..b).fold(Q::from_integer(1.into()), |acc, m| acc * Q::new(((a - m) as i64).into(), ((m + 1) as i64).into())) };
    let t = VarSet::new(["t", "u", "v"]);
    let mut e_hat = Poly::zero(t.clone());
    for k in 0..=n {
        let mut ck = Poly::zero(uv.clone());
        for i in 0..=n {
            for j in 0..=n - i {
                let mut d = Q::from_integer(0.into());
                for p in 0..=i {
                    for q in 0..=j {
                        let sign = if (i - p + j - q) % 2 == 0 { 1 } else { -1 };
                        d += Q::from_integer(sign.into()) * choose(i, p) * choose(j, q) * values[&(p, q)][k].clone();
                    }
                }
                if !num_traits::Zero::is_zero(&d) {
                    ck = ck.add(&binom("u", i).mul(&binom("v", j)).scale(&d));
                }
            }
        }
        let tk = Poly::monomial(t.clone(), &[k as u16, 0, 0], Q::from_integer(1.into()));
        e_hat = e_hat.add(&ck.aligned(&t).mul(&tk));
    }
    // back to (g1, g2, f): t = (f - f0) / df, u = g1 - u0 - dg1 t, v = g2 - v0 - dg2 t
    let q = |s: &str| -> Q { s.parse::<Q>().expect("builtin rational") };
    let (dg1, dg2, df) = (q(SHEAR[0].1), q(SHEAR[1].1), q(SHEAR[2].1));
    let shifted = |name: &str, k: usize| {
        let c = Poly::constant(VarSet::new([name]), q(LATTICE_ORIGIN[k]));
        crate::expr::parse_poly(name).expect("symbol").sub(&c)
    };
    let tt = shifted("f", 2).scale(&(Q::from_integer(1.into()) / df));
    let u = shifted("g1", 0).sub(&tt.scale(&dg1));
    let v = shifted("g2", 1).sub(&tt.scale(&dg2));
    let e = e_hat.substitute("u", &u).substitute("v", &v).substitute("t", &tt).pruned();
    let (_, z) = crate::expr::to_int_primitive(&e);
    Ok(crate::expr::gcd::int_to_q(&z).pruned())
}

/// Square-free part of the common factors of all `polys`.
fn common_factor_part(polys: &[Poly<Q>]) -> Poly<Q> {
    let mut g = polys[0].clone();
    for p in &polys[1..] {
        g = gcd(&g, p);
    }
    match squarefree(&g) {
        Ok(parts) => parts.into_iter().fold(Poly::one(VarSet::empty()), |acc, (f, _)| acc.mul(&f)).pruned(),
        Err(_) => g,
    }
}

/// Solves equations linear in two unknowns; every equation must be consistent.
fn solve_pair(eqs: &[RatExpr], x: &str, y: &str, stage: &str) -> Result<(RatExpr, RatExpr), PolymorphError> {
    // pick the first equation containing x, eliminate, then y
    let ix = eqs.iter().position(|e| e.contains(x)).ok_or_else(|| PolymorphError::NotLinear { symbol: x.into(), what: "system".into() })?;
    let xs = solve_linear(&eqs[ix], x)?;
    let rest: Vec<RatExpr> = eqs.iter().enumerate().filter(|(i, _)| *i != ix).map(|(_, e)| e.substitute(x, &xs)).collect();
    let iy = rest.iter().position(|e| e.contains(y)).ok_or_else(|| PolymorphError::NotLinear { symbol: y.into(), what: "system".into() })?;
    let ys = solve_linear(&rest[iy], y)?;
    let xs = xs.substitute(y, &ys);
    for (i, e) in rest.iter().enumerate() {
        if i != iy && !e.substitute(y, &ys).is_zero() {
            return Err(PolymorphError::Inconsistent { stage: stage.into(), msg: format!("equation {i} not implied") });
        }
    }
    Ok((xs, ys))
}

/// Splits a polynomial in `H, H1` (coefficients in the other variables) into
/// `[T11, T01, T00, T1, T0]`, insisting on the shape of a conic through the origin.
fn conic_coefficients(p: &Poly<Q>, stage: &str) -> Result<[Poly<Q>; 5], PolymorphError> {
    let vars = p.vars().clone();
    let (ih, ih1) = match (vars.index("H"), vars.index("H1")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PolymorphError::Inconsistent { stage: stage.into(), msg: "H or H1 missing".into() }),
    };
    let mut parts: BTreeMap<(u16, u16), Vec<(Vec<u16>, Q)>> = BTreeMap::new();
    for (e, c) in p.terms() {
        let key = (e[ih1], e[ih]);
        let mut rest = e.to_vec();
        rest[ih] = 0;
        rest[ih1] = 0;
        parts.entry(key).or_default().push((rest, c.clone()));
    }
    let allowed = [(2, 0), (1, 1), (0, 2), (1, 0), (0, 1)];
    if let Some(bad) = parts.keys().find(|k| !allowed.contains(k)) {
        return Err(PolymorphError::Inconsistent {
            stage: stage.into(),
            msg: format!("term H1^{} H^{} outside a conic through the origin", bad.0, bad.1),
        });
    }
    Ok(allowed.map(|k| Poly::from_terms(vars.clone(), parts.remove(&k).unwrap_or_default()).pruned()))
}

// ---------------------------------------------------------------------------
// the ideal chain

/// What the dimension sequence of the chain says about the existence of
/// non-hexagonal polymorphic webs on the branch the seed describes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChainVerdict {
    /// Some `dim(J_l) < 2`: the signature set is at most a curve.
    ConjectureTrue { step: usize, dimension: i64 },
    /// `dim(J_l) = dim(J_{l+1}) >= 2` with `l > 1`. Extracting a web also needs a
    /// component of maximal dimension, which this engine does not compute.
    ConjectureFalseOnBranch { step: usize, dimension: i64, needs_component_choice: bool },
    /// Stopped before either condition held.
    Undecided { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStep {
    pub generators: usize,
    pub dimension: i64,
    /// Generators whose derivatives were added to build the next ideal.
    pub differentiated: usize,
}

#[derive(Debug, Clone)]
pub struct IdealChain {
    pub ideals: Vec<PolyIdeal>,
    /// `(symbol, inverse)` pairs; `symbol * inverse - 1` is never differentiated.
    pub inverses: Vec<(String, String)>,
    pub steps: Vec<ChainStep>,
    pub verdict: ChainVerdict,
}

impl IdealChain {
    pub fn dimensions(&self) -> Vec<i64> {
        self.steps.iter().map(|s| s.dimension).collect()
    }

    pub fn report_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            inverses: &'a [(String, String)],
            steps: &'a [ChainStep],
            verdict: &'a ChainVerdict,
            last_ideal: serde_json::Value,
        }
        let last = self.ideals.last().map(|i| serde_json::from_str(&i.to_json()).expect("ideal json")).unwrap_or_default();
        serde_json::to_string_pretty(&Report { inverses: &self.inverses, steps: &self.steps, verdict: &self.verdict, last_ideal: last })
            .expect("chain serializes")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ChainOptions {
    pub max_steps: usize,
    pub limits: Limits,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { max_steps: 6, limits: Limits::default() }
    }
}

/// Every symbol reachable from `seed` through the derivation rules.
fn closure_vars(seed: &[Poly<Q>], rules: &FormalFrame) -> Vec<String> {
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut todo: Vec<String> = seed.iter().flat_map(|p| p.used_var_names()).collect();
    while let Some(v) = todo.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        if let Some(r) = rules.rule(&v) {
            for e in r {
                todo.extend(e.var_names());
            }
        }
    }
    seen.into_iter().collect()
}

/// Builds `J_0 = <seed, s*S - 1, ...>` and `J_{k+1} = J_k + <numerators of
/// e1(g), e2(g)>` over the generators `g` of `J_k` other than the inverse
/// relations, computing `dim(J_k)` after each step.
pub fn gronwall_chain(
    seed: &[Poly<Q>],
    rules: &FormalFrame,
    invert: &[&str],
    opts: &ChainOptions,
) -> Result<IdealChain, PolymorphError> {
    let inv_names: Vec<String> = match invert.len() {
        0..=2 => ["S", "T"].iter().take(invert.len()).map(|s| s.to_string()).collect(),
        n => (0..n).map(|i| format!("S{i}")).collect(),
    };
    let mut names = closure_vars(seed, rules);
    names.extend(invert.iter().map(|s| s.to_string()));
    names.extend(inv_names.iter().cloned());
    let vars = VarSet::new(names);
    let inverses: Vec<(String, String)> = invert.iter().map(|s| s.to_string()).zip(inv_names.iter().cloned()).collect();
    let inverse_polys: Vec<Poly<Q>> = inverses
        .iter()
        .map(|(s, t)| crate::expr::parse_poly(&format!("{s}*{t}-1")).map(|p| p.aligned(&vars)))
        .collect::<Result<_, _>>()?;

    let mut derivable: Vec<Poly<Q>> = seed.iter().map(|p| p.pruned().aligned(&vars)).collect();
    let mut ideals = Vec::new();
    let mut steps: Vec<ChainStep> = Vec::new();
    for step in 0..=opts.max_steps {
        let ideal = PolyIdeal::new(vars.clone(), derivable.iter().chain(&inverse_polys).cloned().collect())?;
        let dim = match groebner(&ideal, &opts.limits) {
            Ok(gb) => gb.dimension(),
            Err(IdealError::Ceiling { what, value }) => {
                ideals.push(ideal);
                let reason = format!("dimension of J_{step} hit the {what} ceiling at {value}");
                return Ok(IdealChain { ideals, inverses, steps, verdict: ChainVerdict::Undecided { reason } });
            }
            Err(e) => return Err(e.into()),
        };
        ideals.push(ideal);
        let verdict = if dim < 2 {
            Some(ChainVerdict::ConjectureTrue { step, dimension: dim })
        } else if step >= 3 && steps[step - 1].dimension == dim {
            Some(ChainVerdict::ConjectureFalseOnBranch { step: step - 1, dimension: dim, needs_component_choice: true })
        } else {
            None
        };
        let mut next = derivable.clone();
        let mut differentiated = 0;
        if verdict.is_none() && step < opts.max_steps {
            for g in &derivable {
                differentiated += 1;
                let ge = RatExpr::from_poly(g.clone());
                for i in 0..2 {
                    let d = rules.e(i, &ge)?;
                    if d.is_zero() {
                        continue;
                    }
                    let p = d.num().pruned().aligned(&vars);
                    if !next.iter().any(|x| crate::expr::associated(x, &p)) {
                        next.push(p);
                    }
                }
            }
        }
        steps.push(ChainStep { generators: derivable.len() + inverse_polys.len(), dimension: dim, differentiated });
        if let Some(v) = verdict {
            return Ok(IdealChain { ideals, inverses, steps, verdict: v });
        }
        derivable = next;
    }
    let reason = format!("no decision within {} steps", opts.max_steps);
    Ok(IdealChain { ideals, inverses, steps, verdict: ChainVerdict::Undecided { reason } })
}

// ---------------------------------------------------------------------------
// constant rescaling

/// The general invariant coframe `(U1, U2)`: `dU1 = (k-a-2b) U1^U2`,
/// `dU2 = (2a+b-k) U1^U2`, with `a1`, `b2` given by the structure equations.
pub fn k_frame() -> FormalFrame {
    let mut fr = FormalFrame::new(ex("k-a-2*b"), ex("2*a+b-k"));
    fr.set_partials("a", ex("a*(1+2*(a+2*b-k))"), ex("a2"));
    fr.set_partials("b", ex("b1"), ex("b*(1+2*(k-2*a-b))"));
    fr
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantAnsatzReport {
    pub k1: String,
    pub k2: String,
    pub a2: String,
    pub b1: String,
    pub equations: Vec<String>,
    /// Whether the exact basis of `<equations, k S - 1, f T - 1>` is `{1}`;
    /// `None` when it hit the ceiling.
    pub exact_unit: Option<bool>,
    /// The basis modulo `2^61 - 1`, lifted to the rationals.
    pub lifted_basis: Vec<String>,
    /// The lifted basis is a Gröbner basis over the rationals and every
    /// generator reduces to zero modulo it, so its zeros are exact solutions.
    pub lifted_certified: bool,
    pub lifted_dimension: i64,
    /// Complex points of the lifted variety counted with multiplicity, and
    /// distinct real points.
    pub complex_points: Option<usize>,
    pub real_points: Option<usize>,
    /// The basis contains 1 (exactly, or modulo the prime when the exact
    /// computation hit its ceiling).
    pub inconsistent: bool,
}

/// Constant nonzero `f`: the polymorphism equations fix `k1, k2`, then
/// `d(dk) = 0` and the `k` relation fix `a2, b1`; `d(da) = d(db) = 0` and
/// their derivatives are returned as polynomials in `a, b, k, f`.
pub fn constant_ansatz_equations() -> Result<(ConstantAnsatzReport, Vec<Poly<Q>>), PolymorphError> {
    let mut fr = k_frame();
    fr.set_constant("f").set_partials("k", ex("k1"), ex("k2"));
    let (a, b, k, f) = (ex("a"), ex("b"), ex("k"), ex("f"));
    let [r1, r2] = polymorph_residuals(&fr, &a, &b, &k, &f)?;
    let k1 = solve_linear(&r1, "k1")?;
    let k2 = solve_linear(&r2, "k2")?;
    fr.set_partials("k", k1.clone(), k2.clone());
    let ksum = &(&k1 + &k2) - &k_sum(&a, &b, &k, &ex("a2"), &ex("b1"));
    let ddk = dd(&fr, rule(&fr, "k"))?;
    let (a2, b1) = solve_pair(&[ksum, ddk], "a2", "b1", "constant f")?;
    fr.set_partials("a", ex("a*(1+2*(a+2*b-k))"), a2.clone());
    fr.set_partials("b", b1.clone(), ex("b*(1+2*(k-2*a-b))"));
    let mut eqs: Vec<RatExpr> = Vec::new();
    for name in ["a", "b"] {
        let e = dd(&fr, rule(&fr, name))?;
        let p = RatExpr::from_poly(e.num().clone());
        for i in 0..2 {
            eqs.push(fr.e(i, &p)?);
        }
        eqs.push(p);
    }
    let polys: Vec<Poly<Q>> = eqs.iter().map(|e| e.num().clone()).filter(|p| !p.is_zero()).collect();
    let report = ConstantAnsatzReport {
        k1: k1.to_string(),
        k2: k2.to_string(),
        a2: a2.to_string(),
        b1: b1.to_string(),
        equations: polys.iter().map(|p| p.to_string()).collect(),
        exact_unit: None,
        lifted_basis: Vec::new(),
        lifted_certified: false,
        lifted_dimension: -1,
        complex_points: None,
        real_points: None,
        inconsistent: false,
    };
    Ok((report, polys))
}

/// [`constant_ansatz_equations`] followed by the basis of
/// `<equations, k S - 1, f T - 1>`: exactly under `limits`, and modulo a
/// prime with the result lifted back and certified.
pub fn constant_rescaling_check(limits: &Limits) -> Result<ConstantAnsatzReport, PolymorphError> {
    let (mut report, mut gens) = constant_ansatz_equations()?;
    gens.push(crate::expr::parse_poly("k*S-1")?);
    gens.push(crate::expr::parse_poly("f*T-1")?);
    let vars = VarSet::new(["a", "b", "k", "f", "S", "T"]);
    let ideal = PolyIdeal::new(vars.clone(), gens)?;
    report.exact_unit = match groebner(&ideal, limits) {
        Ok(gb) => Some(gb.is_unit()),
        Err(IdealError::Ceiling { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let modular = groebner_mod_p(&ideal, &Limits::default())?.ok_or(PolymorphError::Inconsistent {
        stage: "constant f".into(),
        msg: "unlucky prime".into(),
    })?;
    let modular_unit = modular.0.iter().any(|p| p.is_constant());
    report.inconsistent = report.exact_unit.unwrap_or(modular_unit);
    let lifted: Option<Vec<Poly<Q>>> = modular
        .0
        .iter()
        .map(|p| {
            let terms: Option<Vec<(Vec<u16>, Q)>> = p.terms().map(|(e, c)| zp_to_q(*c).map(|q| (e.to_vec(), q))).collect();
            terms.map(|t| Poly::from_terms(vars.clone(), t))
        })
        .collect();
    if let Some(lifted) = lifted {
        report.lifted_basis = lifted.iter().map(|p| p.to_string()).collect();
        let gb = groebner(&PolyIdeal::new(vars.clone(), lifted.clone())?, limits)?;
        let same = gb.polys().len() == lifted.len() && lifted.iter().all(|p| gb.polys().contains(p));
        report.lifted_certified = same && ideal.generators().iter().all(|g| gb.contains(g));
        report.lifted_dimension = gb.dimension();
        report.complex_points = gb.standard_monomials().map(|m| m.len());
        report.real_points = gb.real_point_count();
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// compatibility scheme for the general case

/// Working state of the general compatibility computation.
#[derive(Debug, Clone)]
pub struct Theorem5State {
    pub frame: FormalFrame,
    pub values: BTreeMap<String, RatExpr>,
    /// The two final polynomial constraints in the twelve invariants.
    pub constraints: Vec<Poly<Q>>,
}

/// The twelve invariants the final constraints live in.
pub const TWELVE_INVARIANTS: [&str; 12] = ["a", "a2", "a22", "b", "b1", "b11", "k", "h", "f", "f1", "f2", "L"];

const THEOREM5_STAGES: [&str; 9] = [
    "k1, k2 via h",
    "f11, f22",
    "L1, L2",
    "h1, h2 via r",
    "r",
    "a222 via m",
    "m1, m2",
    "m",
    "constraints",
];

/// Records `name = value` and substitutes it into every rule and every
/// earlier solution.
fn fix(st: &mut Theorem5State, out: &mut Vec<(String, String)>, name: &str, value: RatExpr) {
    st.frame.substitute(name, &value);
    for e in st.values.values_mut() {
        if e.contains(name) {
            *e = e.substitute(name, &value);
        }
    }
    out.push((name.to_string(), value.to_string()));
    st.values.insert(name.to_string(), value);
}

fn rule_of(st: &Theorem5State, name: &str) -> [RatExpr; 2] {
    rule(&st.frame, name)
}

fn t5_stage(i: u8, st: &mut Theorem5State) -> Result<(Vec<(String, String)>, Vec<String>), PolymorphError> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let (a, b, k, f) = (ex("a"), ex("b"), ex("k"), ex("f"));
    match i {
        1 => {
            let half = k_sum(&a, &b, &k, &ex("a2"), &ex("b1")).scale(&q(1, 2));
            let hk = &ex("h") * &k;
            st.frame.set_partials("k", ex("k1"), ex("k2"));
            fix(st, &mut out, "k1", &half - &hk);
            fix(st, &mut out, "k2", &half + &hk);
        }
        2 => {
            let [s1, s2] = st.frame.structure();
            let half = (&(&s2 * &ex("f1")) - &(&s1 * &ex("f2"))).scale(&q(1, 2));
            st.frame.set_partials("f", ex("f1"), ex("f2"));
            st.frame.set_partials("f1", ex("f11"), &ex("L") - &half);
            st.frame.set_partials("f2", &ex("L") + &half, ex("f22"));
            if !dd(&st.frame, rule_of(st, "f"))?.is_zero() {
                return Err(PolymorphError::Inconsistent { stage: "f11, f22".into(), msg: "d(df) != 0".into() });
            }
            let [r1, r2] = polymorph_residuals(&st.frame, &a, &b, &k, &f)?;
            let f11 = solve_linear(&r1, "f11")?;
            fix(st, &mut out, "f11", f11);
            let r2 = r2.substitute("f11", &st.values["f11"]);
            fix(st, &mut out, "f22", solve_linear(&r2, "f22")?);
        }
        3 => {
            st.frame.set_partials("a2", ex("a21"), ex("a22"));
            st.frame.set_partials("b1", ex("b11"), ex("b12"));
            st.frame.set_partials("h", ex("h1"), ex("h2"));
            st.frame.set_partials("L", ex("L1"), ex("L2"));
            let a21 = solve_linear(&dd(&st.frame, rule_of(st, "a"))?, "a21")?;
            fix(st, &mut out, "a21", a21);
            let b12 = solve_linear(&dd(&st.frame, rule_of(st, "b"))?, "b12")?;
            fix(st, &mut out, "b12", b12);
            let eqs = [dd(&st.frame, rule_of(st, "f1"))?, dd(&st.frame, rule_of(st, "f2"))?];
            let (l1, l2) = solve_pair(&eqs, "L1", "L2", "L1, L2")?;
            fix(st, &mut out, "L1", l1);
            fix(st, &mut out, "L2", l2);
        }
        4 => {
            fix(st, &mut out, "h2", &ex("h1") + &ex("2*r"));
            let h1 = solve_linear(&dd(&st.frame, rule_of(st, "k"))?, "h1")?;
            if h1.den().degree_in_name("r") > 0 || h1.num().degree_in_name("r") > 1 {
                return Err(PolymorphError::NotLinear { symbol: "r".into(), what: "h1".into() });
            }
            notes.push("h1 and h2 are linear in r".into());
            fix(st, &mut out, "h1", h1);
        }
        5 => {
            st.frame.set_partials("a22", ex("a221"), ex("a222"));
            st.frame.set_partials("b11", ex("b111"), ex("b112"));
            st.frame.set_partials("r", ex("r1"), ex("r2"));
            let a221 = solve_linear(&dd(&st.frame, rule_of(st, "a2"))?, "a221")?;
            fix(st, &mut out, "a221", a221);
            let b112 = solve_linear(&dd(&st.frame, rule_of(st, "b1"))?, "b112")?;
            fix(st, &mut out, "b112", b112);
            let r1 = solve_linear(&dd(&st.frame, rule_of(st, "h"))?, "r1")?;
            fix(st, &mut out, "r1", r1);
            let ddl = dd(&st.frame, rule_of(st, "L"))?;
            let stray: Vec<String> = ["r1", "r2", "a222", "b111"].iter().filter(|n| ddl.contains(n)).map(|n| n.to_string()).collect();
            if !stray.is_empty() {
                notes.push(format!("d(dL) still involves {stray:?}"));
            }
            let r = solve_linear(&ddl, "r")?;
            fix(st, &mut out, "r", r);
        }
        6 => {
            fix(st, &mut out, "b111", &ex("a222") + &ex("2*m"));
            let a222 = solve_linear(&dd(&st.frame, rule_of(st, "h"))?, "a222")?;
            fix(st, &mut out, "a222", a222);
        }
        7 => {
            st.frame.set_partials("m", ex("m1"), ex("m2"));
            let eqs = [dd(&st.frame, rule_of(st, "a22"))?, dd(&st.frame, rule_of(st, "b11"))?];
            let (m1, m2) = solve_pair(&eqs, "m1", "m2", "m1, m2")?;
            fix(st, &mut out, "m1", m1);
            fix(st, &mut out, "m2", m2);
        }
        8 => {
            let m = solve_linear(&dd(&st.frame, rule_of(st, "m"))?, "m")?;
            fix(st, &mut out, "m", m);
        }
        9 => {
            let phi = dd(&st.frame, rule_of(st, "a22"))?.num().pruned();
            let psi = dd(&st.frame, rule_of(st, "b11"))?.num().pruned();
            let extra: Vec<String> = [&phi, &psi]
                .iter()
                .flat_map(|p| p.used_var_names())
                .filter(|n| !TWELVE_INVARIANTS.contains(&n.as_str()))
                .collect();
            if !extra.is_empty() {
                return Err(PolymorphError::Inconsistent { stage: "constraints".into(), msg: format!("stray symbols {extra:?}") });
            }
            let independent = !phi.is_zero() && !psi.is_zero() && !crate::expr::associated(&phi, &psi);
            notes.push(format!("independent constraints: {}", if independent { 2 } else { 0 }));
            out.push(("Phi".into(), format!("{} terms, total degree {}", phi.nterms(), phi.total_degree())));
            out.push(("Psi".into(), format!("{} terms, total degree {}", psi.nterms(), psi.total_degree())));
            st.constraints = vec![phi, psi];
        }
        _ => unreachable!("stage index"),
    }
    for (n, e) in out.iter_mut() {
        if e.len() > 2000 {
            let size = st.values.get(n.as_str()).map_or(0, RatExpr::size);
            *e = format!("<{size} terms>");
        }
    }
    Ok((out, notes))
}

/// The compatibility computation for the general polymorphic web, stage by
/// stage, each under the time ceiling; stages past a ceiling are reported
/// as unverified.
pub fn theorem5_scheme(opts: &PipelineOptions) -> Result<(Transcript, Theorem5State), PolymorphError> {
    let mut st = Theorem5State { frame: k_frame(), values: BTreeMap::new(), constraints: Vec::new() };
    let mut tr = Transcript { pipeline: "theorem5".into(), stages: Vec::new() };
    let through = opts.through_stage.min(THEOREM5_STAGES.len() as u8);
    let mut stopped = false;
    for i in 1..=THEOREM5_STAGES.len() as u8 {
        let name = THEOREM5_STAGES[i as usize - 1].to_string();
        if stopped || i > through {
            let why = if stopped { "an earlier stage hit a ceiling" } else { "beyond the requested stage" };
            tr.stages.push(Stage { index: i, name, status: StageStatus::Unverified, outputs: vec![], notes: vec![why.into()], millis: 0 });
            continue;
        }
        let t0 = Instant::now();
        let mut work = st.clone();
        match with_ceiling(opts.ceiling, move || {
            let r = t5_stage(i, &mut work);
            (r, work)
        }) {
            Some((Ok((outputs, notes)), next)) => {
                st = next;
                let millis = t0.elapsed().as_millis() as u64;
                tr.stages.push(Stage { index: i, name, status: StageStatus::Computed, outputs, notes, millis });
            }
            Some((Err(e), _)) => return Err(e),
            None => {
                stopped = true;
                let note = format!("time ceiling {:?} exceeded", opts.ceiling);
                tr.stages.push(Stage { index: i, name, status: StageStatus::Unverified, outputs: vec![], notes: vec![note], millis: 0 });
            }
        }
    }
    Ok((tr, st))
}
