//! Exterior calculus on a surface in a moving coframe.
//!
//! A [`Frame`] supplies a coframe `(theta1, theta2)` through the dual
//! derivations `e1, e2` (so `df = e1(f) theta1 + e2(f) theta2`) and the
//! structure functions `d theta_i = s_i theta1 ^ theta2`. A 1-form is the pair
//! of its coefficients, a 2-form is its coefficient on `theta1 ^ theta2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Float;
use thiserror::Error;

use crate::expr::{Layout, RatExpr, Taylor};
use crate::field::{q_to_f64, Q};
use crate::jets::{total_dx, total_dy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("no derivative rule for {0}")]
    NoRule(String),
    #[error("degenerate coframe: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Domain(String),
}

/// Field-like values the calculus runs over.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// Size of the value used for relative tolerances (0 for exact values).
    fn magnitude(&self) -> f64;
    /// Exactly zero, or (for floating values) at most `bound` in magnitude.
    fn negligible(&self, bound: f64) -> bool;
}

impl Scalar for RatExpr {
    fn magnitude(&self) -> f64 {
        0.0
    }
    fn negligible(&self, _bound: f64) -> bool {
        self.is_zero()
    }
}

impl<T: Float> Scalar for Taylor<T> {
    fn magnitude(&self) -> f64 {
        self.value().abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn negligible(&self, bound: f64) -> bool {
        let v = self.magnitude();
        v == 0.0 || v <= bound
    }
}

/// A derivation pair with structure functions.
pub trait Frame {
    type S: Scalar;
    /// `e_i(f)` for `i` in `0..2`.
    fn e(&self, i: usize, f: &Self::S) -> Result<Self::S, FrameError>;
    /// `[s1, s2]` with `d theta_i = s_i theta1 ^ theta2`.
    fn structure(&self) -> [Self::S; 2];
    fn constant(&self, c: &Q) -> Self::S;

    fn int(&self, n: i64) -> Self::S {
        self.constant(&Q::from_integer(n.into()))
    }
    fn zero(&self) -> Self::S {
        self.int(0)
    }
}

/// Coefficients of a 1-form on `(theta1, theta2)`.
pub type Form1<S> = [S; 2];
/// A 3x3 matrix of 1-forms.
pub type FormMatrix<S> = [[Form1<S>; 3]; 3];
/// A 3x3 matrix of 2-forms (coefficients on `theta1 ^ theta2`).
pub type TwoFormMatrix<S> = [[S; 3]; 3];

pub fn d0<F: Frame>(fr: &F, f: &F::S) -> Result<Form1<F::S>, FrameError> {
    Ok([fr.e(0, f)?, fr.e(1, f)?])
}

/// `d(A theta1 + B theta2) = (-e2 A + e1 B + s1 A + s2 B) theta1 ^ theta2`.
pub fn d1<F: Frame>(fr: &F, w: &Form1<F::S>) -> Result<F::S, FrameError> {
    let [s1, s2] = fr.structure();
    Ok(fr.e(0, &w[1])? - fr.e(1, &w[0])? + s1 * w[0].clone() + s2 * w[1].clone())
}

pub fn wedge<S: Scalar>(a: &Form1<S>, b: &Form1<S>) -> S {
    a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone()
}

pub fn scale<S: Scalar>(c: &S, w: &Form1<S>) -> Form1<S> {
    [c.clone() * w[0].clone(), c.clone() * w[1].clone()]
}

pub fn add<S: Scalar>(a: &Form1<S>, b: &Form1<S>) -> Form1<S> {
    [a[0].clone() + b[0].clone(), a[1].clone() + b[1].clone()]
}

pub fn sub<S: Scalar>(a: &Form1<S>, b: &Form1<S>) -> Form1<S> {
    [a[0].clone() - b[0].clone(), a[1].clone() - b[1].clone()]
}

pub fn neg<S: Scalar>(a: &Form1<S>) -> Form1<S> {
    [-a[0].clone(), -a[1].clone()]
}

/// Blaschke derivatives `(f1, f2, f3)` of `f` relative to `(u1, u2)`:
/// the solution of `df = f2 u1 - f1 u2`, `f3 = -f1 - f2`.
pub fn partials<F: Frame>(fr: &F, f: &F::S, u1: &Form1<F::S>, u2: &Form1<F::S>) -> Result<[F::S; 3], FrameError> {
    let det = wedge(u1, u2);
    let bound = 1e-12 * ((u1[0].clone() * u2[1].clone()).magnitude() + (u1[1].clone() * u2[0].clone()).magnitude());
    if det.negligible(bound) {
        return Err(FrameError::Degenerate("u1 ^ u2 vanishes".into()));
    }
    let [d1f, d2f] = d0(fr, f)?;
    let f2 = (d1f.clone() * u2[1].clone() - u2[0].clone() * d2f.clone()) / det.clone();
    let f1 = (u1[1].clone() * d1f - u1[0].clone() * d2f) / det;
    let f3 = -(f1.clone() + f2.clone());
    Ok([f1, f2, f3])
}

/// Exterior derivative of every entry.
pub fn d_matrix<F: Frame>(fr: &F, m: &FormMatrix<F::S>) -> Result<TwoFormMatrix<F::S>, FrameError> {
    let row = |i: usize| -> Result<[F::S; 3], FrameError> { Ok([d1(fr, &m[i][0])?, d1(fr, &m[i][1])?, d1(fr, &m[i][2])?]) };
    Ok([row(0)?, row(1)?, row(2)?])
}

/// `(A ^ B)_ij = sum_k A_ik ^ B_kj`.
pub fn wedge_matrix<S: Scalar>(a: &FormMatrix<S>, b: &FormMatrix<S>) -> TwoFormMatrix<S> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = wedge(&a[i][0], &b[0][j]);
            for k in 1..3 {
                acc = acc + wedge(&a[i][k], &b[k][j]);
            }
            acc
        })
    })
}

/// Curvature `d Omega + Omega ^ Omega`.
pub fn curvature<F: Frame>(fr: &F, m: &FormMatrix<F::S>) -> Result<TwoFormMatrix<F::S>, FrameError> {
    let d = d_matrix(fr, m)?;
    let w = wedge_matrix(m, m);
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| d[i][j].clone() + w[i][j].clone())))
}

pub fn trace<S: Scalar>(m: &FormMatrix<S>) -> Form1<S> {
    add(&add(&m[0][0], &m[1][1]), &m[2][2])
}

/// Inverse of a 3x3 matrix by the adjugate, given its determinant.
pub fn inverse3<S: Scalar>(m: &[[S; 3]; 3], det: &S) -> [[S; 3]; 3] {
    let c = |i: usize, j: usize| m[i % 3][j % 3].clone();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            // adj[i][j] = cofactor[j][i]
            (c(j + 1, i + 1) * c(j + 2, i + 2) - c(j + 1, i + 2) * c(j + 2, i + 1)) / det.clone()
        })
    })
}

pub fn det3<S: Scalar>(m: &[[S; 3]; 3]) -> S {
    let t = |a: usize, b: usize, c: usize| m[0][a].clone() * m[1][b].clone() * m[2][c].clone();
    t(0, 1, 2) + t(1, 2, 0) + t(2, 0, 1) - t(2, 1, 0) - t(0, 2, 1) - t(1, 0, 2)
}

/// Coordinate coframe `(dx, dy)` on the jet alphabet, with total derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct JetFrame;

impl Frame for JetFrame {
    type S = RatExpr;
    fn e(&self, i: usize, f: &RatExpr) -> Result<RatExpr, FrameError> {
        Ok(if i == 0 { total_dx(f) } else { total_dy(f) })
    }
    fn structure(&self) -> [RatExpr; 2] {
        [RatExpr::zero(), RatExpr::zero()]
    }
    fn constant(&self, c: &Q) -> RatExpr {
        RatExpr::constant(c.clone())
    }
}

/// Coordinate coframe `(dx, dy)` for rational functions of `x, y`.
#[derive(Debug, Clone)]
pub struct PlaneFrame {
    pub x: String,
    pub y: String,
}

impl Default for PlaneFrame {
    fn default() -> Self {
        PlaneFrame { x: "x".into(), y: "y".into() }
    }
}

impl PlaneFrame {
    pub fn new(x: &str, y: &str) -> Self {
        PlaneFrame { x: x.into(), y: y.into() }
    }
}

impl Frame for PlaneFrame {
    type S = RatExpr;
    fn e(&self, i: usize, f: &RatExpr) -> Result<RatExpr, FrameError> {
        Ok(f.diff(if i == 0 { &self.x } else { &self.y }))
    }
    fn structure(&self) -> [RatExpr; 2] {
        [RatExpr::zero(), RatExpr::zero()]
    }
    fn constant(&self, c: &Q) -> RatExpr {
        RatExpr::constant(c.clone())
    }
}

/// A frame that knows its coordinate functions `x, y`.
pub trait PlaneCoords: Frame {
    fn coords(&self) -> [Self::S; 2];
}

impl PlaneCoords for JetFrame {
    fn coords(&self) -> [RatExpr; 2] {
        [RatExpr::var("x"), RatExpr::var("y")]
    }
}

impl PlaneCoords for PlaneFrame {
    fn coords(&self) -> [RatExpr; 2] {
        [RatExpr::var(&self.x), RatExpr::var(&self.y)]
    }
}

/// Coordinate coframe for Taylor series in two variables expanded at `at`.
#[derive(Debug, Clone)]
pub struct TaylorFrame<T> {
    pub lay: Arc<Layout>,
    pub at: [T; 2],
}

impl<T: Float> TaylorFrame<T> {
    pub fn new(order: usize, at: [T; 2]) -> Self {
        TaylorFrame { lay: Layout::new(2, order), at }
    }
    pub fn coordinate(&self, i: usize) -> Taylor<T> {
        Taylor::variable(&self.lay, i, self.at[i])
    }
    pub fn value(&self, v: T) -> Taylor<T> {
        Taylor::constant(&self.lay, v)
    }
}

impl<T: Float> PlaneCoords for TaylorFrame<T> {
    fn coords(&self) -> [Taylor<T>; 2] {
        [self.coordinate(0), self.coordinate(1)]
    }
}

impl<T: Float> Frame for TaylorFrame<T> {
    type S = Taylor<T>;
    fn e(&self, i: usize, f: &Taylor<T>) -> Result<Taylor<T>, FrameError> {
        if f.valid_order() == 0 {
            return Err(FrameError::Domain("series order exhausted; raise the expansion order".into()));
        }
        Ok(f.dx(i))
    }
    fn structure(&self) -> [Taylor<T>; 2] {
        [self.value(T::zero()), self.value(T::zero())]
    }
    fn constant(&self, c: &Q) -> Taylor<T> {
        self.value(T::from(q_to_f64(c)).unwrap())
    }
}

/// Abstract coframe on formal symbols: each symbol carries the coefficients
/// of its differential, and symbols outside the rule set are errors unless
/// declared constant.
#[derive(Debug, Clone)]
pub struct FormalFrame {
    rules: BTreeMap<String, [RatExpr; 2]>,
    constants: BTreeSet<String>,
    s: [RatExpr; 2],
}

impl FormalFrame {
    pub fn new(s1: RatExpr, s2: RatExpr) -> Self {
        FormalFrame { rules: BTreeMap::new(), constants: BTreeSet::new(), s: [s1, s2] }
    }

    /// `d name = e1 theta1 + e2 theta2`.
    pub fn set(&mut self, name: &str, e1: RatExpr, e2: RatExpr) -> &mut Self {
        self.rules.insert(name.to_string(), [e1, e2]);
        self
    }

    /// Rule in Blaschke notation: `d name = d2 theta1 - d1 theta2`.
    pub fn set_partials(&mut self, name: &str, d1: RatExpr, d2: RatExpr) -> &mut Self {
        self.set(name, d2, -d1)
    }

    pub fn set_constant(&mut self, name: &str) -> &mut Self {
        self.constants.insert(name.to_string());
        self
    }

    pub fn rule(&self, name: &str) -> Option<&[RatExpr; 2]> {
        self.rules.get(name)
    }

    pub fn remove(&mut self, name: &str) {
        self.rules.remove(name);
    }

    /// Replaces a symbol by an expression in every rule and the structure.
    pub fn substitute(&mut self, name: &str, value: &RatExpr) {
        self.rules.remove(name);
        for r in self.rules.values_mut() {
            for c in r.iter_mut() {
                if c.contains(name) {
                    *c = c.substitute(name, value);
                }
            }
        }
        for c in self.s.iter_mut() {
            if c.contains(name) {
                *c = c.substitute(name, value);
            }
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &String> {
        self.rules.keys()
    }
}

impl Frame for FormalFrame {
    type S = RatExpr;
    fn e(&self, i: usize, f: &RatExpr) -> Result<RatExpr, FrameError> {
        for n in f.vars().names() {
            if !self.rules.contains_key(n) && !self.constants.contains(n) {
                return Err(FrameError::NoRule(n.clone()));
            }
        }
        Ok(f.apply_derivation(|n| self.rules.get(n).map(|r| r[i].clone())))
    }
    fn structure(&self) -> [RatExpr; 2] {
        self.s.clone()
    }
    fn constant(&self, c: &Q) -> RatExpr {
        RatExpr::constant(c.clone())
    }
}

/// `re + im * sqrt(k)` over rational functions, with `k` shared.
#[derive(Clone, PartialEq)]
pub struct Quad {
    pub re: RatExpr,
    pub im: RatExpr,
    k: Arc<RatExpr>,
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})*sqrt({})", self.re, self.im, self.k)
    }
}

impl Quad {
    pub fn new(re: RatExpr, im: RatExpr, k: &Arc<RatExpr>) -> Self {
        Quad { re, im, k: k.clone() }
    }
    pub fn real(re: RatExpr, k: &Arc<RatExpr>) -> Self {
        Quad::new(re, RatExpr::zero(), k)
    }
    /// `sqrt(k)` itself.
    pub fn root(k: &Arc<RatExpr>) -> Self {
        Quad::new(RatExpr::zero(), RatExpr::one(), k)
    }
    pub fn radicand(&self) -> &Arc<RatExpr> {
        &self.k
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    /// The conjugate `re - im sqrt(k)`.
    pub fn conj(&self) -> Self {
        Quad::new(self.re.clone(), -&self.im, &self.k)
    }
    /// `re^2 - im^2 k`.
    pub fn norm(&self) -> RatExpr {
        &(&self.re * &self.re) - &(&(&self.im * &self.im) * &*self.k)
    }
    fn check(&self, o: &Quad) {
        debug_assert!(Arc::ptr_eq(&self.k, &o.k) || self.k == o.k, "mixed radicands");
    }
}

impl Add for Quad {
    type Output = Quad;
    fn add(self, o: Quad) -> Quad {
        self.check(&o);
        Quad::new(self.re + o.re, self.im + o.im, &self.k)
    }
}

impl Sub for Quad {
    type Output = Quad;
    fn sub(self, o: Quad) -> Quad {
        self.check(&o);
        Quad::new(self.re - o.re, self.im - o.im, &self.k)
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad::new(-self.re, -self.im, &self.k)
    }
}

impl Mul for Quad {
    type Output = Quad;
    fn mul(self, o: Quad) -> Quad {
        self.check(&o);
        let re = &(&self.re * &o.re) + &(&(&self.im * &o.im) * &*self.k);
        let im = &(&self.re * &o.im) + &(&self.im * &o.re);
        Quad::new(re, im, &self.k)
    }
}

impl Div for Quad {
    type Output = Quad;
    fn div(self, o: Quad) -> Quad {
        self.check(&o);
        let n = o.norm();
        let p = self * o.conj();
        Quad::new(&p.re / &n, &p.im / &n, &p.k)
    }
}

impl Scalar for Quad {
    fn magnitude(&self) -> f64 {
        0.0
    }
    fn negligible(&self, _bound: f64) -> bool {
        self.is_zero()
    }
}

/// Lifts a rational frame to `Q(vars)[sqrt(k)]`; `e_i(sqrt k) = e_i(k)/(2k) sqrt k`.
#[derive(Debug, Clone)]
pub struct QuadFrame<F> {
    pub base: F,
    pub k: Arc<RatExpr>,
    dk: [RatExpr; 2],
}

impl<F: Frame<S = RatExpr>> QuadFrame<F> {
    pub fn new(base: F, k: RatExpr) -> Result<Self, FrameError> {
        if k.is_zero() {
            return Err(FrameError::Degenerate("radicand is zero".into()));
        }
        let two_k = k.scale(&Q::from_integer(2.into()));
        let dk = [&base.e(0, &k)? / &two_k, &base.e(1, &k)? / &two_k];
        Ok(QuadFrame { base, k: Arc::new(k), dk })
    }
    pub fn real(&self, r: RatExpr) -> Quad {
        Quad::real(r, &self.k)
    }
    pub fn root(&self) -> Quad {
        Quad::root(&self.k)
    }
}

impl<F: Frame<S = RatExpr>> Frame for QuadFrame<F> {
    type S = Quad;
    fn e(&self, i: usize, f: &Quad) -> Result<Quad, FrameError> {
        let re = self.base.e(i, &f.re)?;
        let im = &self.base.e(i, &f.im)? + &(&f.im * &self.dk[i]);
        Ok(Quad::new(re, im, &self.k))
    }
    fn structure(&self) -> [Quad; 2] {
        let [a, b] = self.base.structure();
        [self.real(a), self.real(b)]
    }
    fn constant(&self, c: &Q) -> Quad {
        self.real(RatExpr::constant(c.clone()))
    }
}

/// The coframe `(w1, w2)`, given on a base frame, taken as the new `(theta1, theta2)`.
#[derive(Debug, Clone)]
pub struct RelativeFrame<F: Frame> {
    pub base: F,
    pub w: [Form1<F::S>; 2],
    det: F::S,
    s: [F::S; 2],
}

impl<F: Frame> RelativeFrame<F> {
    pub fn new(base: F, w1: Form1<F::S>, w2: Form1<F::S>) -> Result<Self, FrameError> {
        let det = wedge(&w1, &w2);
        let bound = 1e-12 * ((w1[0].clone() * w2[1].clone()).magnitude() + (w1[1].clone() * w2[0].clone()).magnitude());
        if det.negligible(bound) {
            return Err(FrameError::Degenerate("w1 ^ w2 vanishes".into()));
        }
        let s = [d1(&base, &w1)? / det.clone(), d1(&base, &w2)? / det.clone()];
        Ok(RelativeFrame { base, w: [w1, w2], det, s })
    }

    /// Coefficients of a base 1-form on `(w1, w2)`.
    pub fn express(&self, g: &Form1<F::S>) -> Form1<F::S> {
        let [w1, w2] = &self.w;
        [
            (g[0].clone() * w2[1].clone() - w2[0].clone() * g[1].clone()) / self.det.clone(),
            (w1[0].clone() * g[1].clone() - w1[1].clone() * g[0].clone()) / self.det.clone(),
        ]
    }
}

impl<F: Frame> Frame for RelativeFrame<F> {
    type S = F::S;
    fn e(&self, i: usize, f: &F::S) -> Result<F::S, FrameError> {
        let g = d0(&self.base, f)?;
        Ok(self.express(&g)[i].clone())
    }
    fn structure(&self) -> [F::S; 2] {
        self.s.clone()
    }
    fn constant(&self, c: &Q) -> F::S {
        self.base.constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn e(s: &str) -> RatExpr {
        parse(s).unwrap()
    }

    #[test]
    fn exterior_derivative_squares_to_zero() {
        let fr = PlaneFrame::default();
        let f = e("x^2*y/(1+x*y)");
        let df = d0(&fr, &f).unwrap();
        assert!(d1(&fr, &df).unwrap().is_zero());
    }

    #[test]
    fn formal_structure() {
        // d theta1 = theta1 ^ theta2 on the half-plane coframe (dx/y, dy/y)
        let mut fr = FormalFrame::new(RatExpr::one(), RatExpr::zero());
        fr.set("u", e("y"), RatExpr::zero()).set("y", RatExpr::zero(), e("y"));
        let du = d0(&fr, &e("u*y")).unwrap();
        assert!(d1(&fr, &du).unwrap().is_zero());
        assert!(matches!(fr.e(0, &e("z")), Err(FrameError::NoRule(_))));
    }

    #[test]
    fn partials_reconstruct_differential() {
        let fr = PlaneFrame::new("u", "v");
        let u1 = [RatExpr::one(), RatExpr::zero()];
        let u2 = [RatExpr::zero(), RatExpr::one()];
        let p = partials(&fr, &e("u"), &u1, &u2).unwrap();
        assert_eq!(p, [RatExpr::zero(), RatExpr::one(), RatExpr::int(-1)]);
        let u1 = [e("v"), e("1+u")];
        let u2 = [e("u^2"), e("v-1")];
        let f = e("u*v^2 - u");
        let [f1, f2, _] = partials(&fr, &f, &u1, &u2).unwrap();
        let rec = sub(&scale(&f2, &u1), &scale(&f1, &u2));
        assert_eq!(rec, d0(&fr, &f).unwrap());
    }

    #[test]
    fn quadratic_extension() {
        let fr = QuadFrame::new(PlaneFrame::default(), e("x^2+y")).unwrap();
        let s = fr.root();
        assert_eq!(s.clone() * s.clone(), fr.real(e("x^2+y")));
        let inv = fr.real(RatExpr::one()) / (s.clone() + fr.real(e("x")));
        assert_eq!(inv * (s.clone() + fr.real(e("x"))), fr.real(RatExpr::one()));
        // d(s^2) = dk
        let ds2 = fr.e(0, &(s.clone() * s)).unwrap();
        assert_eq!(ds2, fr.real(e("2*x")));
    }

    #[test]
    fn inverse_by_adjugate() {
        let m = [[e("1"), e("x"), e("0")], [e("y"), e("1"), e("2")], [e("0"), e("1"), e("x")]];
        let d = det3(&m);
        let inv = inverse3(&m, &d);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = RatExpr::zero();
                for k in 0..3 {
                    acc = &acc + &(&m[i][k] * &inv[k][j]);
                }
                assert_eq!(acc, RatExpr::int((i == j) as i64));
            }
        }
    }
}
