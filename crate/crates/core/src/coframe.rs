//! Coframe calculus of a 3-web: the derivations `d_i`, the signature map and
//! the dimension of its image, hexagonality, and the infinitesimal symmetry
//! criterion for a single 1-form.

use std::fmt::Write as _;

use nalgebra::SMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{gcd, resultant, to_int_primitive, ExprError, Poly, RatExpr, Taylor};
use crate::field::Q;
use crate::forms::{self, Form1, Frame, FrameError, PlaneFrame};
use crate::web::{quantities_at, quantities_symbolic, WebDef, WebError, WebQuantities};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoframeError {
    #[error(transparent)]
    Web(#[from] WebError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("only {found} admissible sample points, need {needed}")]
    InsufficientSamples { found: usize, needed: usize },
    #[error("structure relations violated at the point (residual {0:.3e})")]
    Inconsistent(f64),
    #[error("q vanishes identically")]
    VanishingQ,
}

/// A coframe `(U1, U2)` with `U3 = -U1 - U2`, optionally carrying `a, b, c`.
#[derive(Debug, Clone)]
pub struct Coframe<F: Frame> {
    pub frame: F,
    pub u1: Form1<F::S>,
    pub u2: Form1<F::S>,
    pub abc: Option<[F::S; 3]>,
}

impl<F: Frame> Coframe<F> {
    pub fn new(frame: F, u1: Form1<F::S>, u2: Form1<F::S>) -> Self {
        Coframe { frame, u1, u2, abc: None }
    }

    pub fn of_web(frame: F, w: &WebQuantities<F::S>) -> Self {
        Coframe { frame, u1: w.u[0].clone(), u2: w.u[1].clone(), abc: Some(w.abc()) }
    }

    pub fn u3(&self) -> Form1<F::S> {
        forms::neg(&forms::add(&self.u1, &self.u2))
    }

    /// `(f1, f2, f3)` with `df = f2 U1 - f1 U2` and `f1 + f2 + f3 = 0`.
    pub fn partials(&self, f: &F::S) -> Result<[F::S; 3], FrameError> {
        forms::partials(&self.frame, f, &self.u1, &self.u2)
    }

    /// `(a, b, c, a2, b3, c1, a22, b33, c11)` plus the residuals of
    /// `a1 = a(1 + 2(b - c))` and its cyclic versions.
    pub fn signature(&self) -> Result<Signature<F::S>, FrameError> {
        let [a, b, c] = self.abc.clone().ok_or_else(|| FrameError::Domain("coframe carries no invariants".into()))?;
        let one = self.frame.int(1);
        let two = self.frame.int(2);
        let pa = self.partials(&a)?;
        let pb = self.partials(&b)?;
        let pc = self.partials(&c)?;
        let rel = |x: &F::S, y: &F::S, z: &F::S| x.clone() * (one.clone() + two.clone() * (y.clone() - z.clone()));
        let consistency = [
            pa[0].clone() - rel(&a, &b, &c),
            pb[1].clone() - rel(&b, &c, &a),
            pc[2].clone() - rel(&c, &a, &b),
        ];
        let a22 = self.partials(&pa[1])?[1].clone();
        let b33 = self.partials(&pb[2])?[2].clone();
        let c11 = self.partials(&pc[0])?[0].clone();
        let [_, a2, _] = pa;
        let [_, _, b3] = pb;
        let [c1, _, _] = pc;
        Ok(Signature { entries: [a, b, c, a2, b3, c1, a22, b33, c11], consistency })
    }
}

pub const SIGNATURE_NAMES: [&str; 9] = ["a", "b", "c", "a2", "b3", "c1", "a22", "b33", "c11"];

#[derive(Debug, Clone)]
pub struct Signature<S> {
    pub entries: [S; 9],
    pub consistency: [S; 3],
}

/// The signature of a symbolic web as rational functions of `x, y`.
pub fn signature_symbolic(w: &WebDef) -> Result<Signature<RatExpr>, CoframeError> {
    let q = quantities_symbolic(w)?;
    Ok(Coframe::of_web(PlaneFrame::default(), &q).signature()?)
}

/// Relative size of a consistency residual that aborts a numeric signature.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// The signature as Taylor series of the given order (4 for values, 5 for
/// first derivatives).
pub fn signature_series(w: &WebDef, at: [f64; 2], order: usize) -> Result<Signature<Taylor<f64>>, CoframeError> {
    let (fr, q) = quantities_at(w, at, order)?;
    let s = Coframe::of_web(fr, &q).signature()?;
    let scale = 1.0 + s.entries[..3].iter().map(|t| t.value().abs()).fold(0.0, f64::max);
    let worst = s.consistency.iter().map(|t| t.value().abs()).fold(0.0, f64::max);
    if !(worst <= CONSISTENCY_TOL * scale * scale) {
        return Err(CoframeError::Inconsistent(worst));
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SignatureSample {
    pub point: [f64; 2],
    pub values: [f64; 9],
}

pub fn signature_at(w: &WebDef, at: [f64; 2]) -> Result<SignatureSample, CoframeError> {
    let s = signature_series(w, at, 4)?;
    Ok(SignatureSample { point: at, values: s.entries.map(|t| t.value()) })
}

/// CSV with header `x,y,a,b,c,a2,b3,c1,a22,b33,c11`, 17 significant digits.
pub fn signature_csv(samples: &[SignatureSample]) -> String {
    let mut out = String::from("x,y");
    for n in SIGNATURE_NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push_str("\r\n");
    for s in samples {
        let _ = write!(out, "{:.16e},{:.16e}", s.point[0], s.point[1]);
        for v in s.values {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push_str("\r\n");
    }
    out
}

pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// The relabeling of foliations under which the signature at `at` equals
/// `target` to `tol`, if any.
pub fn match_up_to_relabeling(w: &WebDef, at: [f64; 2], target: &[f64; 9], tol: f64) -> Result<Option<[usize; 3]>, CoframeError> {
    for perm in PERMUTATIONS {
        let s = signature_at(&w.permuted(perm), at)?;
        if s.values.iter().zip(target).all(|(x, y)| (x - y).abs() <= tol) {
            return Ok(Some(perm));
        }
    }
    Ok(None)
}

/// Axis-parallel sampling rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region { x0: 1.0, y0: 1.0, x1: 2.0, y1: 2.0 }
    }
}

/// `n` seeded uniform points of `region` at which the web invariants exist.
pub fn admissible_samples(w: &WebDef, region: Region, n: usize, seed: u64) -> Result<Vec<[f64; 2]>, CoframeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..100 * n.max(1) {
        if out.len() == n {
            break;
        }
        let p = [rng.gen_range(region.x0..=region.x1), rng.gen_range(region.y0..=region.y1)];
        if quantities_at(w, p, 2).is_ok() {
            out.push(p);
        }
    }
    if out.len() < n {
        return Err(CoframeError::InsufficientSamples { found: out.len(), needed: n });
    }
    Ok(out)
}

/// Order-preserving parallel map over `jobs` threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub const MIN_DIMENSION_SAMPLES: usize = 25;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-6;
/// Absolute floor, relative to the size of the signature itself.
pub const RANK_ABS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub dimension: usize,
    /// Number of samples at which the Jacobian had rank 0, 1, 2.
    pub rank_counts: [usize; 3],
    pub rejected: usize,
    pub points: Vec<[f64; 2]>,
    /// Both singular values of the 9x2 Jacobian at each point, descending.
    pub singular_values: Vec<[f64; 2]>,
    pub rel_threshold: f64,
    pub abs_threshold: f64,
}

/// The 9x2 Jacobian of the signature at `at`, from order-5 series.
pub fn signature_jacobian(w: &WebDef, at: [f64; 2]) -> Result<([f64; 9], [[f64; 2]; 9]), CoframeError> {
    let s = signature_series(w, at, 5)?;
    let vals = s.entries.clone().map(|t| t.value());
    let jac = s.entries.map(|t| [t.dx(0).value(), t.dx(1).value()]);
    Ok((vals, jac))
}

/// Numeric rank of the signature map, decided per sample and reported with
/// the full spectrum; the dimension is the rank seen most often (ties go up).
pub fn signature_dimension(w: &WebDef, samples: &[[f64; 2]], jobs: usize) -> Result<DimensionReport, CoframeError> {
    let results = par_map(samples, jobs, |&p| signature_jacobian(w, p).map(|r| (p, r)));
    let mut report = DimensionReport {
        dimension: 0,
        rank_counts: [0; 3],
        rejected: 0,
        points: Vec::new(),
        singular_values: Vec::new(),
        rel_threshold: RANK_REL_TOL,
        abs_threshold: RANK_ABS_TOL,
    };
    for r in results {
        let Ok((p, (vals, jac))) = r else {
            report.rejected += 1;
            continue;
        };
        let m = SMatrix::<f64, 9, 2>::from_fn(|i, j| jac[i][j]);
        let sv = m.singular_values();
        let (s0, s1) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
        if !s0.is_finite() {
            report.rejected += 1;
            continue;
        }
        let floor = RANK_ABS_TOL * (1.0 + vals.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let rank = [s0, s1].iter().filter(|&&s| s > RANK_REL_TOL * s0 && s > floor).count();
        report.rank_counts[rank] += 1;
        report.points.push(p);
        report.singular_values.push([s0, s1]);
    }
    let found = report.points.len();
    if found < MIN_DIMENSION_SAMPLES {
        return Err(CoframeError::InsufficientSamples { found, needed: MIN_DIMENSION_SAMPLES });
    }
    report.dimension = (0..3).rev().max_by_key(|&r| report.rank_counts[r]).unwrap_or(0);
    Ok(report)
}

/// Hexagonality threshold on `|k|` in floating point.
pub const HEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct HexVerdict {
    pub hexagonal: bool,
    pub exact: bool,
    /// `k = a + b + c`, printed, in symbolic mode.
    pub k: Option<String>,
    pub max_abs_k: Option<f64>,
    pub samples: usize,
    pub tolerance: Option<f64>,
}

/// Decides `k = 0`: exactly for symbolic webs, by sampling otherwise.
pub fn hexagonality(w: &WebDef, samples: &[[f64; 2]], tol: f64) -> Result<HexVerdict, CoframeError> {
    if w.is_symbolic() {
        let k = quantities_symbolic(w)?.k();
        return Ok(HexVerdict { hexagonal: k.is_zero(), exact: true, k: Some(k.to_string()), max_abs_k: None, samples: 0, tolerance: None });
    }
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for &p in samples {
        if let Ok((_, q)) = quantities_at(w, p, 2) {
            worst = worst.max(q.k().value().abs());
            used += 1;
        }
    }
    if used == 0 {
        return Err(CoframeError::InsufficientSamples { found: 0, needed: 1 });
    }
    Ok(HexVerdict { hexagonal: worst <= tol, exact: false, k: None, max_abs_k: Some(worst), samples: used, tolerance: Some(tol) })
}

#[derive(Debug, Clone)]
pub struct SymmetryVerdict {
    pub holds: bool,
    /// `d/dv (p_v/q) - d/du (q_v/q)`.
    pub defect: RatExpr,
    /// `lambda` up to a constant factor, when it is rational.
    pub lambda: Option<RatExpr>,
    /// `(ln lambda)_u` and `(ln lambda)_v`, when the criterion holds.
    pub log_gradient: Option<[RatExpr; 2]>,
}

/// Whether `omega = p du + q dv` admits a symmetry `lambda d/dv`, i.e.
/// `q lambda_u = -lambda p_v`, `q lambda_v = -lambda q_v` are compatible.
pub fn symmetry_test(p: &RatExpr, q: &RatExpr, u: &str, v: &str) -> Result<SymmetryVerdict, CoframeError> {
    if q.is_zero() {
        return Err(CoframeError::VanishingQ);
    }
    let (pv, qv) = (p.diff(v), q.diff(v));
    let defect = &(&pv / q).diff(v) - &(&qv / q).diff(u);
    if !defect.is_zero() {
        return Ok(SymmetryVerdict { holds: false, defect, lambda: None, log_gradient: None });
    }
    let grad = [(&pv / q).neg(), (&qv / q).neg()];
    // lambda = phi(u)/q with phi'/phi = (q_u - p_v)/q, a function of u alone
    let psi = &(&q.diff(u) - &pv) / q;
    let lambda = log_antiderivative(&psi, u).map(|phi| &phi / q);
    Ok(SymmetryVerdict { holds: true, defect, lambda, log_gradient: Some(grad) })
}

/// A rational `phi` with `phi'/phi = psi` (in the variable `u`), if one exists.
pub fn log_antiderivative(psi: &RatExpr, u: &str) -> Option<RatExpr> {
    if psi.is_zero() {
        return Some(RatExpr::one());
    }
    if psi.var_names().iter().any(|n| n != u) {
        return None;
    }
    let (n, d) = (psi.num().clone(), psi.den().clone());
    // logarithmic derivatives vanish at infinity and have simple poles
    if n.degree_in_name(u) >= d.degree_in_name(u) {
        return None;
    }
    let dd = d.derivative_by_name(u);
    if !gcd(&d, &dd).is_constant() {
        return None;
    }
    // residues are the roots of res_u(n - t d', d)
    let t = Poly::<Q>::var("__residue");
    let lhs = n.sub(&t.mul(&dd));
    let r = if lhs.degree_in_name(u) == 0 { lhs.pow(d.degree_in_name(u)) } else { resultant(&lhs, &d, u).ok()? };
    let mut phi = RatExpr::one();
    for c in integer_roots(&r, "__residue")? {
        let cq = Poly::constant(r.vars().clone(), Q::from_integer(c.into()));
        let g = gcd(&n.sub(&cq.mul(&dd)), &d);
        phi = &phi * &RatExpr::from_poly(g).pow(c as i32);
    }
    let check = &phi.diff(u) / &phi;
    (check == *psi).then_some(phi)
}

/// Nonzero integer roots of a univariate polynomial, or `None` when the
/// candidate set is too large to enumerate.
fn integer_roots(p: &Poly<Q>, var: &str) -> Option<Vec<i64>> {
    let k = p.vars().index(var)?;
    let (_, z) = to_int_primitive(p);
    let coeffs = z.coefficients_in(k);
    let low = coeffs.iter().find_map(|c| c.as_constant().filter(|x| !num_traits::Zero::is_zero(x)))?;
    let low: i64 = i64::try_from(low.magnitude().clone()).ok()?;
    if low > 1_000_000_000_000 {
        return None;
    }
    let mut roots = Vec::new();
    let mut i = 1i64;
    while i * i <= low {
        if low % i == 0 {
            for d in [i, low / i] {
                for c in [d, -d] {
                    if !roots.contains(&c) && p.eval_var(var, &Q::from_integer(c.into())).is_zero() {
                        roots.push(c);
                    }
                }
            }
        }
        i += 1;
    }
    roots.sort();
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn partials_of_a_coordinate() {
        let fr = PlaneFrame::new("u", "v");
        let one = RatExpr::one();
        let cf = Coframe::new(fr, [one.clone(), RatExpr::zero()], [RatExpr::zero(), one]);
        let p = cf.partials(&RatExpr::var("u")).unwrap();
        assert_eq!(p, [RatExpr::zero(), RatExpr::one(), RatExpr::int(-1)]);
        let p = cf.partials(&RatExpr::frac(7, 3)).unwrap();
        assert!(p.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn integer_root_finder() {
        let p = crate::expr::parse_poly("(t-3)*(t+2)*(2*t-1)*t").unwrap();
        assert_eq!(integer_roots(&p, "t").unwrap(), vec![-2, 3]);
    }

    #[test]
    fn log_antiderivative_of_products() {
        // phi = u^2 (u-1)^-3
        let phi = parse("u^2/(u-1)^3").unwrap();
        let psi = &phi.diff("u") / &phi;
        let got = log_antiderivative(&psi, "u").unwrap();
        assert!((&got / &phi).as_constant().is_some());
        assert!(log_antiderivative(&parse("1/(2*u)").unwrap(), "u").is_none());
        assert!(log_antiderivative(&parse("1").unwrap(), "u").is_none());
    }
}
