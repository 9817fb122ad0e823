//! Projective Cartan connections of a non-hexagonal 3-web: Blaschke
//! normalization, the gauge family `Omega_N`, its curvature, and numeric
//! development of the Pfaff system `dF = F Omega`.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, NumExpr, RatExpr, Taylor};
use crate::field::Q;
use crate::forms::{
    self, curvature, trace, Form1, FormMatrix, Frame, FrameError, PlaneFrame, QuadFrame, RelativeFrame, Scalar,
    TaylorFrame, TwoFormMatrix,
};
use crate::web::{omega_from_invariants, quantities_at, quantities_symbolic, WebDef, WebError, WebQuantities};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CartanError {
    #[error(transparent)]
    Web(#[from] WebError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("Blaschke curvature vanishes (hexagonal web){0}")]
    Hexagonal(String),
    #[error("N vanishes")]
    VanishingN,
    #[error("normalization certificate failed: {0}")]
    Certificate(String),
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
    #[error("{0}")]
    Invalid(String),
}

/// `k` below this (relative to the size of `a, b, c`) counts as zero.
pub const HEX_TOL: f64 = 1e-9;

/// Coframe `(w1, w2)` with `d w1 = alpha w1^w2`, `d w2 = beta w1^w2` and
/// Blaschke curvature `orientation * w1^w2`.
#[derive(Debug, Clone)]
pub struct BlaschkeFrame<F: Frame> {
    pub frame: RelativeFrame<F>,
    pub alpha: F::S,
    pub beta: F::S,
    /// `+1` for `w = sqrt(k) (U1, U2)`; `-1` in real mode with `k < 0`, where
    /// foliations 1 and 2 are swapped, `w = sqrt(-k) (-U2, -U1)`, which
    /// turns `k` into `-k` and keeps `beta_1 - alpha_2 = 1`.
    pub orientation: i8,
    /// `sqrt(|k|)`: the `N` with `U_i = w_i / N`.
    pub root: F::S,
    /// `beta_1 - alpha_2 - 1`.
    pub certificate: F::S,
}

/// Blaschke derivatives `(f1, f2, f3)` on any frame, relative to `(theta1, theta2)`.
pub fn frame_partials<F: Frame>(fr: &F, f: &F::S) -> Result<[F::S; 3], FrameError> {
    let f2 = fr.e(0, f)?;
    let f1 = -fr.e(1, f)?;
    let f3 = -(f1.clone() + f2.clone());
    Ok([f1, f2, f3])
}

/// Blaschke curvature `k` of the web `(U1, U2, -U1 - U2)`: with
/// `dU_i = s_i U1 ^ U2` the Chern form is `gamma = s2 U1 - s1 U2` and
/// `d gamma = k U1 ^ U2`.
pub fn coframe_curvature<F: Frame + Clone>(fr: &F, u1: &Form1<F::S>, u2: &Form1<F::S>) -> Result<F::S, FrameError> {
    let rf = RelativeFrame::new(fr.clone(), u1.clone(), u2.clone())?;
    let [s1, s2] = rf.structure();
    forms::d1(&rf, &[s2, -s1])
}

fn normalize<F: Frame>(base: F, u: &[Form1<F::S>], root: F::S, orientation: i8) -> Result<BlaschkeFrame<F>, CartanError> {
    let w1 = forms::scale(&root, &u[0]);
    let w2 = forms::scale(&root, &u[1]);
    let frame = RelativeFrame::new(base, w1, w2)?;
    let [alpha, beta] = frame.structure();
    let b1 = frame_partials(&frame, &beta)?[0].clone();
    let a2 = frame_partials(&frame, &alpha)?[1].clone();
    let certificate = b1 - a2 - frame.int(1);
    Ok(BlaschkeFrame { frame, alpha, beta, orientation, root, certificate })
}

/// Exact Blaschke frame of a symbolic web over `Q(x, y)[sqrt(k)]`. The slope
/// fields need not be linear: `k` is the curvature of the coframe itself.
pub fn blaschke_symbolic(w: &WebDef) -> Result<SymbolicBlaschke, CartanError> {
    let q = quantities_symbolic(w)?;
    blaschke_symbolic_coframe(&q.u[0], &q.u[1])
}

/// Exact Blaschke frame of a rational coframe `(U1, U2)` in `x, y`.
pub fn blaschke_symbolic_coframe(u1: &Form1<RatExpr>, u2: &Form1<RatExpr>) -> Result<SymbolicBlaschke, CartanError> {
    let k = coframe_curvature(&PlaneFrame::default(), u1, u2)?;
    if k.is_zero() {
        return Err(CartanError::Hexagonal(String::new()));
    }
    let qf = QuadFrame::new(PlaneFrame::default(), k)?;
    let lift = |f: &Form1<RatExpr>| [qf.real(f[0].clone()), qf.real(f[1].clone())];
    let u = [lift(u1), lift(u2)];
    let root = qf.root();
    let bf = normalize(qf, &u, root, 1)?;
    if !bf.certificate.is_zero() {
        return Err(CartanError::Certificate(format!("{:?}", bf.certificate)));
    }
    Ok(bf)
}

/// Numeric Blaschke frame at a point from Taylor series of the given order
/// (`alpha, beta` need 4, their derivatives 5, the curvature 6).
pub fn blaschke_at(w: &WebDef, at: [f64; 2], order: usize) -> Result<(BlaschkeFrame<TaylorFrame<f64>>, WebQuantities<Taylor<f64>>), CartanError> {
    let (fr, q) = quantities_at(w, at, order)?;
    let scale = q.a.value().abs() + q.b.value().abs() + q.c.value().abs();
    let k = coframe_curvature(&fr, &q.u[0], &q.u[1])?;
    let bf = blaschke_numeric(fr, &q.u[..2], k, scale)?;
    Ok((bf, q))
}

/// Numeric Blaschke frame of an abstract coframe `(U1, U2)` on a Taylor frame.
pub fn blaschke_normalize(fr: TaylorFrame<f64>, u1: &Form1<Taylor<f64>>, u2: &Form1<Taylor<f64>>) -> Result<BlaschkeFrame<TaylorFrame<f64>>, CartanError> {
    let k = coframe_curvature(&fr, u1, u2)?;
    blaschke_numeric(fr, &[u1.clone(), u2.clone()], k, 0.0)
}

fn blaschke_numeric(fr: TaylorFrame<f64>, u: &[Form1<Taylor<f64>>], k: Taylor<f64>, scale: f64) -> Result<BlaschkeFrame<TaylorFrame<f64>>, CartanError> {
    if k.value().abs() <= HEX_TOL * scale.max(1.0) {
        return Err(CartanError::Hexagonal(format!(" (|k| = {:.3e})", k.value().abs())));
    }
    let bf = if k.value() > 0.0 {
        normalize(fr, u, k.sqrt(), 1)?
    } else {
        let swapped = [forms::neg(&u[1]), forms::neg(&u[0])];
        normalize(fr, &swapped, (-k).sqrt(), -1)?
    };
    let c = bf.certificate.value().abs();
    if !(c <= 1e-9 * (1.0 + bf.alpha.value().abs() + bf.beta.value().abs())) {
        return Err(CartanError::Certificate(format!("|beta_1 - alpha_2 - 1| = {c:.3e}")));
    }
    Ok(bf)
}

/// The gauge `Omega_N` on a frame whose coframe is `(w1, w2)`.
#[derive(Debug, Clone)]
pub struct Gauge<S> {
    pub abc: [S; 3],
    pub u: [Form1<S>; 3],
    pub omega: FormMatrix<S>,
}

/// `a, b, c` making most of the curvature of `Omega_N` vanish.
pub fn gauge_coefficients<F: Frame>(fr: &F, alpha: &F::S, beta: &F::S, n: &F::S) -> Result<[F::S; 3], FrameError> {
    let [n1, n2, _] = frame_partials(fr, n)?;
    let t = |k: i64| fr.constant(&Q::new(k.into(), 3.into()));
    let n2sq = n.clone() * n.clone() * t(1);
    let a = n2sq.clone() + (t(2) * beta.clone() + t(1) * alpha.clone()) * n.clone() - t(1) * n1.clone() - t(2) * n2.clone();
    let b = n2sq.clone() - (t(1) * beta.clone() + t(2) * alpha.clone()) * n.clone() + t(2) * n1.clone() + t(1) * n2.clone();
    let c = n2sq + (t(1) * alpha.clone() - t(1) * beta.clone()) * n.clone() - t(1) * n1 + t(1) * n2;
    Ok([a, b, c])
}

/// `Omega_N` with `U_i = w_i / N` and the coefficients above.
pub fn build_gauge<F: Frame>(fr: &F, alpha: &F::S, beta: &F::S, n: &F::S) -> Result<Gauge<F::S>, CartanError> {
    if n.negligible(0.0) {
        return Err(CartanError::VanishingN);
    }
    let abc = gauge_coefficients(fr, alpha, beta, n)?;
    let (one, zero) = (fr.int(1), fr.zero());
    let inv = one.clone() / n.clone();
    let u1 = [inv.clone(), zero.clone()];
    let u2 = [zero, inv];
    let u3 = forms::neg(&forms::add(&u1, &u2));
    let u = [u1, u2, u3];
    let omega = omega_from_invariants(fr, &abc, &u);
    Ok(Gauge { abc, u, omega })
}

/// `det` of `v -> Omega(v) (1,1,1)^T mod (1,1,1)^T` on the coframe basis.
pub fn isotropy_determinant<S: Scalar>(omega: &FormMatrix<S>) -> S {
    let col = |k: usize| -> [S; 3] { std::array::from_fn(|i| omega[i][0][k].clone() + omega[i][1][k].clone() + omega[i][2][k].clone()) };
    let (c0, c1) = (col(0), col(1));
    let p = |c: &[S; 3], i: usize| c[i].clone() - c[2].clone();
    p(&c0, 0) * p(&c1, 1) - p(&c0, 1) * p(&c1, 0)
}

#[derive(Debug, Clone)]
pub struct CurvatureReport<S> {
    pub k11: S,
    pub k22: S,
    /// Coefficients of `w1 ^ w2` in `d Omega + Omega ^ Omega`.
    pub full: TwoFormMatrix<S>,
}

impl<S: Scalar> CurvatureReport<S> {
    /// Deviations from the pattern "every row is `(K11, K22, -K11-K22)`".
    pub fn shape_residuals(&self) -> Vec<S> {
        let mut out = Vec::new();
        for row in &self.full {
            out.push(row[0].clone() - self.k11.clone());
            out.push(row[1].clone() - self.k22.clone());
            out.push(row[0].clone() + row[1].clone() + row[2].clone());
        }
        out
    }
}

/// Direct curvature of the gauge.
pub fn gauge_curvature<F: Frame>(fr: &F, g: &Gauge<F::S>) -> Result<CurvatureReport<F::S>, CartanError> {
    let full = curvature(fr, &g.omega)?;
    Ok(CurvatureReport { k11: full[0][0].clone(), k22: full[0][1].clone(), full })
}

/// Which closed formulas for `K11, K22` to use. `Printed` carries the terms
/// `-(alpha + 2 beta)/N` and `+(2 alpha + beta)/N`; direct computation gives a
/// third of each, which is `Corrected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    Corrected,
    Printed,
}

/// `K11, K22` from the closed formulas in `alpha, beta, N` and their
/// derivatives, with `N_ij = d_j (d_i N)`. They agree with the direct
/// curvature once `N21 = N12 - alpha N2 + beta N1` and `beta_1 - alpha_2 = 1`.
pub fn closed_form_curvature<F: Frame>(fr: &F, alpha: &F::S, beta: &F::S, n: &F::S, form: ClosedForm) -> Result<[F::S; 2], FrameError> {
    let [n1, n2, _] = frame_partials(fr, n)?;
    let [n11, n12, _] = frame_partials(fr, &n1)?;
    let [n21, n22, _] = frame_partials(fr, &n2)?;
    let [a1, a2, _] = frame_partials(fr, alpha)?;
    let [b1, b2, _] = frame_partials(fr, beta)?;
    let (a, b) = (alpha.clone(), beta.clone());
    let i = |k: i64| fr.int(k);
    let third = fr.constant(&Q::new(1.into(), 3.into()));
    let nn = n.clone() * n.clone();
    let lin = if form == ClosedForm::Printed { fr.int(1) } else { third.clone() };
    let k11 = (i(2) * n1.clone() * n1.clone() + i(4) * n1.clone() * n2.clone() + n1.clone() + i(2) * n2.clone()) * third.clone() / nn.clone()
        - (n11 + n12.clone() + n21.clone()) * third.clone() / n.clone()
        - ((a.clone() + b.clone()) * n1.clone() + a.clone() * n2.clone() + lin.clone() * (a.clone() + i(2) * b.clone())) / n.clone()
        + i(2) * a.clone() * n.clone() * third.clone()
        + (i(2) * a.clone() * a.clone() + i(4) * a.clone() * b.clone() + a1 + a2.clone() + b1.clone()) * third.clone();
    let k22 = (n22 + n12 + n21) * third.clone() / n.clone()
        - (i(2) * n2.clone() * n2.clone() + i(4) * n1.clone() * n2.clone() + i(2) * n1.clone() + n2.clone()) * third.clone() / nn
        + (b.clone() * n1.clone() + (a.clone() + b.clone()) * n2 + lin * (i(2) * a.clone() + b.clone())) / n.clone()
        + i(2) * b.clone() * n.clone() * third.clone()
        - (i(2) * b.clone() * b.clone() + i(4) * a * b + b1 + b2 + a2) * third;
    Ok([k11, k22])
}

/// Free-variable frame: `alpha, beta, N` with formal first derivatives and
/// `N` with formal second derivatives.
pub fn formal_gauge_frame() -> forms::FormalFrame {
    let v = RatExpr::var;
    let mut fr = forms::FormalFrame::new(v("alpha"), v("beta"));
    fr.set_partials("alpha", v("alpha1"), v("alpha2"))
        .set_partials("beta", v("beta1"), v("beta2"))
        .set_partials("N", v("N1"), v("N2"))
        .set_partials("N1", v("N11"), v("N12"))
        .set_partials("N2", v("N21"), v("N22"));
    fr
}

/// Numeric `N` given on the plane: a function of the expansion frame.
pub type NField<'a> = dyn Fn(&TaylorFrame<f64>) -> Result<Taylor<f64>, CartanError> + Sync + 'a;

/// `N` from an expression in `x, y` and named parameters.
pub fn n_from_expr<'a>(e: &'a NumExpr, params: &'a HashMap<String, f64>) -> impl Fn(&TaylorFrame<f64>) -> Result<Taylor<f64>, CartanError> + Sync + 'a {
    move |fr: &TaylorFrame<f64>| Ok(e.eval_series(&fr.lay, &[("x", fr.at[0]), ("y", fr.at[1])], params)?)
}

/// Flatness residuals `(K11, K22)` at one point, closed form and direct.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlatnessSample {
    pub point: [f64; 2],
    pub k11: f64,
    pub k22: f64,
    /// Largest disagreement between the closed formulas and `d Omega + Omega ^ Omega`.
    pub closed_vs_direct: f64,
}

/// Order of the Taylor expansion used for curvature at a point.
pub const CURVATURE_ORDER: usize = 6;

pub fn flatness_at(w: &WebDef, n: &NField<'_>, at: [f64; 2]) -> Result<FlatnessSample, CartanError> {
    let (bf, _) = blaschke_at(w, at, CURVATURE_ORDER)?;
    let nv = n(&bf.frame.base)?;
    if nv.value() == 0.0 {
        return Err(CartanError::VanishingN);
    }
    let g = build_gauge(&bf.frame, &bf.alpha, &bf.beta, &nv)?;
    let rep = gauge_curvature(&bf.frame, &g)?;
    let [c11, c22] = closed_form_curvature(&bf.frame, &bf.alpha, &bf.beta, &nv, ClosedForm::Corrected)?;
    let diff = (rep.k11.value() - c11.value()).abs().max((rep.k22.value() - c22.value()).abs());
    let shape = rep.shape_residuals().iter().map(|r| r.value().abs()).fold(0.0, f64::max);
    Ok(FlatnessSample { point: at, k11: c11.value(), k22: c22.value(), closed_vs_direct: diff.max(shape) })
}

/// Residual grid over `[x0, x1] x [y0, y1]` with `nx * ny` nodes; points where
/// the frame degenerates are skipped.
pub fn flatness_grid(w: &WebDef, n: &NField<'_>, corners: [f64; 4], nx: usize, ny: usize) -> Vec<FlatnessSample> {
    let mut pts = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let t = |k: usize, m: usize| if m > 1 { k as f64 / (m - 1) as f64 } else { 0.5 };
            pts.push([corners[0] + t(i, nx) * (corners[2] - corners[0]), corners[1] + t(j, ny) * (corners[3] - corners[1])]);
        }
    }
    pts.into_iter().filter_map(|p| flatness_at(w, n, p).ok()).collect()
}

/// CSV `x,y,K11,K22`.
pub fn flatness_csv(samples: &[FlatnessSample]) -> String {
    let mut out = String::from("x,y,K11,K22\r\n");
    for s in samples {
        let _ = write!(out, "{:.16e},{:.16e},{:.16e},{:.16e}\r\n", s.point[0], s.point[1], s.k11, s.k22);
    }
    out
}

/// Damped Gauss-Newton (Levenberg-Marquardt) on the parameters of an `N`
/// family, minimizing the flatness residuals over the given points.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub params: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn search_n(
    w: &WebDef,
    family: &(dyn Fn(&TaylorFrame<f64>, &[f64]) -> Result<Taylor<f64>, CartanError> + Sync),
    seed: &[f64],
    points: &[[f64; 2]],
    max_iter: usize,
) -> Result<SearchResult, CartanError> {
    let residuals = |p: &[f64]| -> Result<DVector<f64>, CartanError> {
        let mut r = Vec::with_capacity(2 * points.len());
        for &pt in points {
            let n = |fr: &TaylorFrame<f64>| family(fr, p);
            let s = flatness_at(w, &n, pt)?;
            r.push(s.k11);
            r.push(s.k22);
        }
        Ok(DVector::from_vec(r))
    };
    let mut p = seed.to_vec();
    let mut r = residuals(&p)?;
    let mut lambda = 1e-3;
    let mut it = 0;
    while it < max_iter && r.norm() > 1e-12 {
        it += 1;
        let mut jac = DMatrix::zeros(r.len(), p.len());
        for k in 0..p.len() {
            let h = 1e-6 * (1.0 + p[k].abs());
            let mut q = p.clone();
            q[k] += h;
            let rk = residuals(&q)?;
            jac.set_column(k, &((rk - &r) / h));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..20 {
            let mut a = &jt * &jac;
            for d in 0..p.len() {
                a[(d, d)] *= 1.0 + lambda;
                a[(d, d)] += 1e-15;
            }
            let Some(step) = a.lu().solve(&(-&g)) else { break };
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            if let Ok(rq) = residuals(&q) {
                if rq.norm() < r.norm() {
                    p = q;
                    r = rq;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(SearchResult { residual: r.norm(), params: p, iterations: it })
}

/// The numeric `Omega` of a linear web at a point, as matrices applied to `dx`, `dy`.
pub fn omega_at(w: &WebDef, at: [f64; 2]) -> Result<[Matrix3<f64>; 2], CartanError> {
    let (fr, q) = quantities_at(w, at, 2)?;
    let om = omega_from_invariants(&fr, &q.abc(), &q.u);
    Ok(std::array::from_fn(|k| Matrix3::from_fn(|i, j| om[i][j][k].value())))
}

/// Integration knobs for [`develop`].
#[derive(Debug, Clone, Copy)]
pub struct DevelopOptions {
    pub tol: f64,
    pub min_step: f64,
    pub renormalize: bool,
}

impl Default for DevelopOptions {
    fn default() -> Self {
        DevelopOptions { tol: 1e-11, min_step: 1e-9, renormalize: true }
    }
}

/// Generator `A(s)` of `F' = F A(s)` along a parametrized curve, `s` in `[0, 1]`.
pub trait Generator {
    fn at(&self, s: f64) -> Result<Matrix3<f64>, CartanError>;
}

/// `Omega(gamma'(s))` for the straight segment `p -> q`.
pub struct SegmentGenerator<'a> {
    pub web: &'a WebDef,
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Generator for SegmentGenerator<'_> {
    fn at(&self, s: f64) -> Result<Matrix3<f64>, CartanError> {
        let d = [self.to[0] - self.from[0], self.to[1] - self.from[1]];
        let p = [self.from[0] + s * d[0], self.from[1] + s * d[1]];
        let [ox, oy] = omega_at(self.web, p)?;
        Ok(ox * d[0] + oy * d[1])
    }
}

/// A constant generator.
pub struct ConstantGenerator(pub Matrix3<f64>);

impl Generator for ConstantGenerator {
    fn at(&self, _s: f64) -> Result<Matrix3<f64>, CartanError> {
        Ok(self.0)
    }
}

fn rk4_step(g: &dyn Generator, s: f64, h: f64, f: &Matrix3<f64>) -> Result<Matrix3<f64>, CartanError> {
    let a0 = g.at(s)?;
    let am = g.at(s + h / 2.0)?;
    let a1 = g.at(s + h)?;
    let k1 = f * a0;
    let k2 = (f + k1 * (h / 2.0)) * am;
    let k3 = (f + k2 * (h / 2.0)) * am;
    let k4 = (f + k3 * h) * a1;
    Ok(f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Solves `F' = F A(s)` on `[0, 1]` from `f0` with step doubling; returns
/// the accepted nodes.
pub fn develop(g: &dyn Generator, f0: Matrix3<f64>, opt: DevelopOptions) -> Result<Vec<(f64, Matrix3<f64>)>, CartanError> {
    let mut out = vec![(0.0, f0)];
    let (mut s, mut f, mut h) = (0.0f64, f0, 0.05f64);
    while s < 1.0 {
        h = h.min(1.0 - s);
        let full = rk4_step(g, s, h, &f)?;
        let half = rk4_step(g, s, h / 2.0, &f)?;
        let two = rk4_step(g, s + h / 2.0, h / 2.0, &half)?;
        let err = (two - full).abs().max() / 15.0;
        if err <= opt.tol * (1.0 + f.abs().max()) {
            s += h;
            f = two + (two - full) / 15.0;
            if opt.renormalize {
                let d = f.determinant();
                if d > 0.0 {
                    f /= d.cbrt();
                }
            }
            out.push((s, f));
            h *= if err > 0.0 { (0.9 * (opt.tol / err).powf(0.2)).clamp(0.2, 4.0) } else { 4.0 };
        } else {
            h *= (0.9 * (opt.tol / err).powf(0.2)).clamp(0.1, 0.5);
            if h < opt.min_step {
                return Err(CartanError::StepUnderflow(s));
            }
        }
    }
    Ok(out)
}

/// Endpoint of the development along a polyline starting at the identity.
pub fn develop_polyline(w: &WebDef, path: &[[f64; 2]], opt: DevelopOptions) -> Result<Matrix3<f64>, CartanError> {
    let mut f = Matrix3::identity();
    for seg in path.windows(2) {
        let g = SegmentGenerator { web: w, from: seg[0], to: seg[1] };
        f = develop(&g, f, opt)?.last().map(|x| x.1).unwrap_or(f);
    }
    Ok(f)
}

/// `[zeta(p)]` with `zeta = F(p) (1,1,1)^T`, developed from `base` along the
/// straight segment.
pub fn linearize(w: &WebDef, base: [f64; 2], samples: &[[f64; 2]], opt: DevelopOptions) -> Result<Vec<[f64; 3]>, CartanError> {
    samples
        .iter()
        .map(|&p| {
            let f = develop_polyline(w, &[base, p], opt)?;
            let z = f * nalgebra::Vector3::new(1.0, 1.0, 1.0);
            let n = z.norm();
            Ok([z[0] / n, z[1] / n, z[2] / n])
        })
        .collect()
}

/// Largest normalized `|det(z_a, z_b, z_c)|` over consecutive triples.
pub fn collinearity_residual(points: &[[f64; 3]]) -> f64 {
    points
        .windows(3)
        .map(|t| {
            let m = Matrix3::from_fn(|i, j| t[j][i]);
            let n: f64 = t.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).product();
            m.determinant().abs() / n
        })
        .fold(0.0, f64::max)
}

/// Cross-ratio of four collinear homogeneous points `(z0, z1; z2, z3)`.
pub fn cross_ratio(z: &[[f64; 3]; 4]) -> f64 {
    // coordinates on the line spanned by z0, z1: z = s z0 + t z1
    let a = nalgebra::Vector3::from(z[0]);
    let b = nalgebra::Vector3::from(z[1]);
    let m = nalgebra::Matrix3x2::from_columns(&[a, b]);
    let pinv = (m.transpose() * m).try_inverse().unwrap_or_else(nalgebra::Matrix2::zeros) * m.transpose();
    let coords: Vec<[f64; 2]> = z.iter().map(|v| {
        let c = pinv * nalgebra::Vector3::from(*v);
        [c[0], c[1]]
    }).collect();
    let br = |i: usize, j: usize| coords[i][0] * coords[j][1] - coords[i][1] * coords[j][0];
    (br(0, 2) * br(1, 3)) / (br(0, 3) * br(1, 2))
}

/// Matrix exponential by summing the series with scaling and squaring.
pub fn expm_series(a: &Matrix3<f64>, terms: usize) -> Matrix3<f64> {
    let norm = a.abs().max();
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(k);
    let mut sum = Matrix3::identity();
    let mut term = Matrix3::identity();
    for n in 1..=terms {
        term = term * b / n as f64;
        sum += term;
    }
    for _ in 0..k {
        sum = sum * sum;
    }
    sum
}

/// Developed path as JSON: a list of `{"s":.., "F":[[..],[..],[..]]}`.
pub fn path_json(nodes: &[(f64, Matrix3<f64>)]) -> serde_json::Value {
    serde_json::Value::Array(
        nodes
            .iter()
            .map(|(s, f)| {
                let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| f[(i, j)]).collect()).collect();
                serde_json::json!({ "s": s, "F": rows })
            })
            .collect(),
    )
}

/// `trace(Omega_N)`, for checks.
pub fn gauge_trace<S: Scalar>(g: &Gauge<S>) -> Form1<S> {
    trace(&g.omega)
}

pub type SymbolicBlaschke = BlaschkeFrame<QuadFrame<PlaneFrame>>;
