//! Projective invariants of a linear 3-web given by its slope fields `P, Q, R`.
//!
//! Everything is written once against [`PlaneCoords`] frames, so the same code
//! runs on formal jets, on concrete rational functions of `(x, y)` and on
//! Taylor series at a point.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, parse_numeric, ExprError, NumExpr, RatExpr, Taylor};
use crate::field::{q, q_to_f64, Q};
use crate::forms::{
    self, add, curvature, d0, d1, det3, inverse3, partials, scale, sub, wedge, Form1, FormMatrix, Frame, FrameError,
    JetFrame, PlaneCoords, PlaneFrame, Scalar, TaylorFrame,
};
use crate::jets::{jet_var, parse_jet_var};

/// Relative threshold below which `Delta` counts as zero in floating point.
pub const NEAR_REGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WebError {
    #[error("regular/degenerate web: Delta vanishes{0}")]
    Regular(String),
    #[error("direction fields {0} and {1} coincide")]
    Coincident(char, char),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid web definition: {0}")]
    Definition(String),
    #[error("operation needs a symbolic web")]
    NotSymbolic,
}

/// A web given by three slope fields in `x, y`.
#[derive(Debug, Clone, PartialEq)]
pub enum WebDef {
    Symbolic([RatExpr; 3]),
    Numeric([NumExpr; 3]),
}

#[derive(Deserialize)]
struct WebJson {
    mode: String,
    #[serde(rename = "P")]
    p: String,
    #[serde(rename = "Q")]
    q: String,
    #[serde(rename = "R")]
    r: String,
}

impl WebDef {
    pub fn symbolic(p: &str, q: &str, r: &str) -> Result<Self, WebError> {
        let w = WebDef::Symbolic([parse(p)?, parse(q)?, parse(r)?]);
        w.check_distinct()?;
        Ok(w)
    }

    pub fn numeric(p: &str, q: &str, r: &str) -> Result<Self, WebError> {
        let w = WebDef::Numeric([parse_numeric(p)?, parse_numeric(q)?, parse_numeric(r)?]);
        w.check_distinct()?;
        Ok(w)
    }

    /// Symbolic when all three parse as rational functions, numeric otherwise.
    pub fn auto(p: &str, q: &str, r: &str) -> Result<Self, WebError> {
        match Self::symbolic(p, q, r) {
            Err(WebError::Expr(ExprError::SqrtInSymbolic { .. })) => Self::numeric(p, q, r),
            other => other,
        }
    }

    /// `{"mode":"symbolic"|"numeric","P":..,"Q":..,"R":..}`.
    pub fn from_json(text: &str) -> Result<Self, WebError> {
        let j: WebJson = serde_json::from_str(text).map_err(|e| WebError::Definition(e.to_string()))?;
        match j.mode.as_str() {
            "symbolic" => Self::symbolic(&j.p, &j.q, &j.r),
            "numeric" => Self::numeric(&j.p, &j.q, &j.r),
            m => Err(WebError::Definition(format!("unknown mode {m:?}"))),
        }
    }

    fn check_distinct(&self) -> Result<(), WebError> {
        let same = |i: usize, j: usize| match self {
            WebDef::Symbolic(s) => s[i] == s[j],
            WebDef::Numeric(s) => s[i] == s[j],
        };
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            if same(i, j) {
                return Err(WebError::Coincident(NAMES[i], NAMES[j]));
            }
        }
        Ok(())
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, WebDef::Symbolic(_))
    }

    pub fn rational(&self) -> Option<&[RatExpr; 3]> {
        match self {
            WebDef::Symbolic(s) => Some(s),
            WebDef::Numeric(_) => None,
        }
    }

    pub fn numeric_exprs(&self) -> [NumExpr; 3] {
        match self {
            WebDef::Symbolic(s) => std::array::from_fn(|i| NumExpr::from(&s[i])),
            WebDef::Numeric(s) => s.clone(),
        }
    }

    /// The slopes as Taylor series at the frame's expansion point.
    pub fn slopes_taylor(&self, fr: &TaylorFrame<f64>) -> Result<[Taylor<f64>; 3], WebError> {
        let vars = [("x", fr.at[0]), ("y", fr.at[1])];
        let consts = HashMap::new();
        let e = self.numeric_exprs();
        Ok([
            e[0].eval_series(&fr.lay, &vars, &consts)?,
            e[1].eval_series(&fr.lay, &vars, &consts)?,
            e[2].eval_series(&fr.lay, &vars, &consts)?,
        ])
    }

    /// Relabels the foliations: slot `i` of the result is slot `perm[i]` of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> WebDef {
        match self {
            WebDef::Symbolic(s) => WebDef::Symbolic(perm.map(|i| s[i].clone())),
            WebDef::Numeric(s) => WebDef::Numeric(perm.map(|i| s[i].clone())),
        }
    }
}

pub const NAMES: [char; 3] = ['P', 'Q', 'R'];

/// `(x, y) -> ((m00 x + m01 y + m02)/(m20 x + m21 y + m22), ...)`.
pub fn apply_projective(m: &[[Q; 3]; 3], p: [f64; 2]) -> Option<[f64; 2]> {
    let f = |r: usize| q_to_f64(&m[r][0]) * p[0] + q_to_f64(&m[r][1]) * p[1] + q_to_f64(&m[r][2]);
    let w = f(2);
    (w != 0.0).then(|| [f(0) / w, f(1) / w])
}

fn inverse_q(m: &[[Q; 3]; 3]) -> Option<[[Q; 3]; 3]> {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        &m[r0][c0] * &m[r1][c1] - &m[r0][c1] * &m[r1][c0]
    };
    let det = &m[0][0] * c(0, 0) + &m[0][1] * c(0, 1) + &m[0][2] * c(0, 2);
    if num_traits::Zero::is_zero(&det) {
        return None;
    }
    // inverse is the transposed cofactor matrix over det
    Some(std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / &det)))
}

impl WebDef {
    /// The image of the web under the projective map `m` (a numeric web in
    /// the target coordinates `x, y`).
    pub fn projective_image(&self, m: &[[Q; 3]; 3]) -> Result<WebDef, WebError> {
        use NumExpr as N;
        let inv = inverse_q(m).ok_or_else(|| WebError::Definition("singular projective matrix".into()))?;
        let bx = |e: N| Box::new(e);
        let lin = |row: &[Q; 3], x: &N, y: &N| {
            let t = |c: &Q, v: &N| N::Mul(bx(N::Const(c.clone())), bx(v.clone()));
            N::Add(bx(N::Add(bx(t(&row[0], x)), bx(t(&row[1], y)))), bx(N::Const(row[2].clone())))
        };
        let map = |mat: &[[Q; 3]; 3], x: &N, y: &N| {
            let w = lin(&mat[2], x, y);
            [N::Div(bx(lin(&mat[0], x, y)), bx(w.clone())), N::Div(bx(lin(&mat[1], x, y)), bx(w))]
        };
        let (tx, ty) = (N::var("x"), N::var("y"));
        let [sx, sy] = map(&inv, &tx, &ty);
        let back = HashMap::from([("x".to_string(), sx.clone()), ("y".to_string(), sy.clone())]);
        let e = self.numeric_exprs();
        let slope = |b: &N| {
            // the image of the leaf through the preimage is the line through
            // the images of the preimage and of the preimage moved along (1, B)
            let b = b.substitute(&back);
            let [qx, qy] = map(m, &N::Add(bx(sx.clone()), bx(N::int(1))), &N::Add(bx(sy.clone()), bx(b)));
            N::Div(bx(N::Sub(bx(qy), bx(ty.clone()))), bx(N::Sub(bx(qx), bx(tx.clone()))))
        };
        Ok(WebDef::Numeric([slope(&e[0]), slope(&e[1]), slope(&e[2])]))
    }
}


/// Everything the invariant formulas produce at one level of abstraction.
#[derive(Debug, Clone)]
pub struct WebQuantities<S> {
    pub slopes: [S; 3],
    pub slopes_y: [S; 3],
    pub slopes_yy: [S; 3],
    /// `P_y(Q-R) + Q_y(R-P) + R_y(P-Q)`.
    pub delta: S,
    /// `-(P-Q)(Q-R)(R-P)/Delta^2`.
    pub mu: S,
    pub z: [S; 3],
    pub a: S,
    pub b: S,
    pub c: S,
    /// `U_1, U_2, U_3` on `(dx, dy)`.
    pub u: [Form1<S>; 3],
}

impl<S: Scalar> WebQuantities<S> {
    /// Blaschke curvature function `k = a + b + c`.
    pub fn k(&self) -> S {
        self.a.clone() + self.b.clone() + self.c.clone()
    }

    /// Chern connection form `a U1 + b U2 + c U3`.
    pub fn gamma(&self) -> Form1<S> {
        add(&add(&scale(&self.a, &self.u[0]), &scale(&self.b, &self.u[1])), &scale(&self.c, &self.u[2]))
    }

    pub fn abc(&self) -> [S; 3] {
        [self.a.clone(), self.b.clone(), self.c.clone()]
    }
}

/// Invariants from the slopes, on any planar frame.
pub fn quantities<F: PlaneCoords>(fr: &F, slopes: [F::S; 3]) -> Result<WebQuantities<F::S>, WebError> {
    let [p, q, r] = slopes.clone();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let d = slopes[i].clone() - slopes[j].clone();
        let bound = NEAR_REGULAR_TOL * (slopes[i].magnitude() + slopes[j].magnitude());
        if d.negligible(bound) {
            return Err(WebError::Coincident(NAMES[i], NAMES[j]));
        }
    }
    let y1: [F::S; 3] = [fr.e(1, &p)?, fr.e(1, &q)?, fr.e(1, &r)?];
    let y2: [F::S; 3] = [fr.e(1, &y1[0])?, fr.e(1, &y1[1])?, fr.e(1, &y1[2])?];
    let t = [
        y1[0].clone() * (q.clone() - r.clone()),
        y1[1].clone() * (r.clone() - p.clone()),
        y1[2].clone() * (p.clone() - q.clone()),
    ];
    let delta = t[0].clone() + t[1].clone() + t[2].clone();
    let bound = NEAR_REGULAR_TOL * t.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    if delta.negligible(bound) {
        let note = if delta.magnitude() > 0.0 { format!(" (|Delta| = {:.3e}, near-regular)", delta.magnitude()) } else { String::new() };
        return Err(WebError::Regular(note));
    }
    let (pq, qr, rp) = (p.clone() - q.clone(), q.clone() - r.clone(), r.clone() - p.clone());
    let d2 = delta.clone() * delta.clone();
    let mu = -(pq.clone() * qr.clone() * rp.clone()) / d2.clone();
    let z = [t[0].clone() / delta.clone(), t[1].clone() / delta.clone(), t[2].clone() / delta.clone()];
    // a = (P-Q)(P-R)(R-Q) P_yy / Delta^2, and cyclically
    let a = pq.clone() * (-rp.clone()) * (-qr.clone()) * y2[0].clone() / d2.clone();
    let b = qr.clone() * (-pq.clone()) * (-rp.clone()) * y2[1].clone() / d2.clone();
    let c = rp.clone() * (-qr.clone()) * (-pq.clone()) * y2[2].clone() / d2;
    // U_i = -Delta (dy - B dx) / ((B - B')(B - B''))
    let one = fr.int(1);
    let ui = |b: &F::S, den: F::S| -> Form1<F::S> {
        let s = -delta.clone() / den;
        [-(s.clone() * b.clone()), s * one.clone()]
    };
    let u = [
        ui(&p, (-rp.clone()) * pq.clone()),
        ui(&q, (-pq.clone()) * qr.clone()),
        ui(&r, (-qr.clone()) * rp.clone()),
    ];
    Ok(WebQuantities { slopes, slopes_y: y1, slopes_yy: y2, delta, mu, z, a, b, c, u })
}

/// The quantities of a fully generic web, over the jet alphabet.
pub fn generic_quantities() -> Result<WebQuantities<RatExpr>, WebError> {
    quantities(&JetFrame, NAMES.map(|b| RatExpr::var(&jet_var(b, 0))))
}

/// The frame matrix without the `mu^(-1/3)` prefactor: column `i` is
/// `z_i (x - 1/B_y, y - B/B_y, 1)`.
#[derive(Debug, Clone)]
pub struct FrameMatrix<S> {
    pub fhat: [[S; 3]; 3],
    pub det: S,
}

pub fn frame_matrix<F: PlaneCoords>(fr: &F, w: &WebQuantities<F::S>) -> FrameMatrix<F::S> {
    let [x, y] = fr.coords();
    let one = fr.int(1);
    let col = |i: usize| {
        let inv = one.clone() / w.slopes_y[i].clone();
        [
            w.z[i].clone() * (x.clone() - inv.clone()),
            w.z[i].clone() * (y.clone() - w.slopes[i].clone() * inv),
            w.z[i].clone(),
        ]
    };
    let cols = [col(0), col(1), col(2)];
    let fhat = std::array::from_fn(|r| std::array::from_fn(|c| cols[c][r].clone()));
    let det = det3(&fhat);
    FrameMatrix { fhat, det }
}

/// The Darboux derivative assembled from `(a, b, c)` and the `U_i`.
pub fn omega_from_invariants<F: Frame>(fr: &F, abc: &[F::S; 3], u: &[Form1<F::S>; 3]) -> FormMatrix<F::S> {
    let [a, b, c] = abc.clone();
    let third = fr.constant(&q(1, 3));
    let two = fr.int(2);
    let one = fr.int(1);
    let lin = |x: &F::S, y: &F::S| (one.clone() - two.clone() * x.clone() - y.clone()) * third.clone();
    let lin_p = |x: &F::S, y: &F::S| (one.clone() + two.clone() * x.clone() + y.clone()) * third.clone();
    let diag = |x: &F::S, y: &F::S, z: &F::S, up: &Form1<F::S>, um: &Form1<F::S>| {
        // (1-2x-z)/3 up - (1+2x+y)/3 um
        sub(&scale(&lin(x, z), up), &scale(&lin_p(x, y), um))
    };
    let au = scale(&a, &u[0]);
    let bu = scale(&b, &u[1]);
    let cu = scale(&c, &u[2]);
    [
        [diag(&a, &b, &c, &u[2], &u[1]), bu.clone(), cu.clone()],
        [au.clone(), diag(&b, &c, &a, &u[0], &u[2]), cu],
        [au, bu, diag(&c, &a, &b, &u[1], &u[0])],
    ]
}

/// `Fhat^-1 dFhat - (1/3)(dmu/mu) Id`, which equals `F^-1 dF` for the
/// unimodular frame `F = mu^(-1/3) Fhat`.
pub fn omega_from_frame<F: PlaneCoords>(fr: &F, w: &WebQuantities<F::S>) -> Result<FormMatrix<F::S>, WebError> {
    let fm = frame_matrix(fr, w);
    let inv = inverse3(&fm.fhat, &fm.det);
    let mut dm: Vec<Vec<Form1<F::S>>> = Vec::with_capacity(3);
    for row in &fm.fhat {
        dm.push(row.iter().map(|e| d0(fr, e)).collect::<Result<_, _>>()?);
    }
    let dmu = d0(fr, &w.mu)?;
    let log = scale(&(fr.constant(&q(1, 3)) / w.mu.clone()), &dmu);
    let zero = [fr.zero(), fr.zero()];
    let mut out: FormMatrix<F::S> = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = zero.clone();
            for k in 0..3 {
                acc = add(&acc, &scale(&inv[i][k], &dm[k][j]));
            }
            if i == j {
                acc = sub(&acc, &log);
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

/// Named residuals of the structure equations; all vanish for a linear web.
#[derive(Debug, Clone)]
pub struct StructureReport<S> {
    pub residuals: Vec<(String, S)>,
}

impl StructureReport<RatExpr> {
    pub fn nonzero(&self) -> Vec<&str> {
        self.residuals.iter().filter(|(_, r)| !r.is_zero()).map(|(n, _)| n.as_str()).collect()
    }
}

/// Residuals of `dU_i`, `a_1, b_2, c_3`, `d Omega + Omega ^ Omega` and `d gamma`.
pub fn verify_structure<F: PlaneCoords>(fr: &F, w: &WebQuantities<F::S>) -> Result<StructureReport<F::S>, WebError> {
    let (a, b, c) = (w.a.clone(), w.b.clone(), w.c.clone());
    let u = &w.u;
    let one = fr.int(1);
    let two = fr.int(2);
    let mut res = Vec::new();
    let pairs = [
        ("dU1", 0usize, c.clone() - b.clone(), 1usize, 2usize),
        ("dU2", 1, a.clone() - c.clone(), 2, 0),
        ("dU3", 2, b.clone() - a.clone(), 0, 1),
    ];
    for (name, i, coef, j, k) in pairs {
        res.push((name.to_string(), d1(fr, &u[i])? - coef * wedge(&u[j], &u[k])));
    }
    let a1 = partials(fr, &a, &u[0], &u[1])?[0].clone();
    let b2 = partials(fr, &b, &u[0], &u[1])?[1].clone();
    let c3 = partials(fr, &c, &u[0], &u[1])?[2].clone();
    res.push(("a1".into(), a1 - a.clone() * (one.clone() + two.clone() * (b.clone() - c.clone()))));
    res.push(("b2".into(), b2 - b.clone() * (one.clone() + two.clone() * (c.clone() - a.clone()))));
    res.push(("c3".into(), c3 - c.clone() * (one + two * (a.clone() - b.clone()))));
    let om = omega_from_invariants(fr, &w.abc(), u);
    let k = curvature(fr, &om)?;
    for (i, row) in k.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            res.push((format!("K{}{}", i + 1, j + 1), e.clone()));
        }
    }
    res.push(("dgamma".into(), d1(fr, &w.gamma())? - w.k() * wedge(&u[0], &u[1])));
    Ok(StructureReport { residuals: res })
}

/// `Omega_22 - Omega_33 + Omega_23 - Omega_32`, which recovers `U_1`.
pub fn u1_from_omega<S: Scalar>(om: &FormMatrix<S>) -> Form1<S> {
    add(&sub(&om[1][1], &om[2][2]), &sub(&om[1][2], &om[2][1]))
}

/// Focal point of one foliation: finite, or the direction of a point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FocalPoint {
    Finite([f64; 2]),
    Infinite([f64; 2]),
}

/// Tangency points `(x - 1/B_y, y - B/B_y)` of the three leaves through `at`.
pub fn focal_points(w: &WebDef, at: [f64; 2]) -> Result<[FocalPoint; 3], WebError> {
    let fr = TaylorFrame::new(1, at);
    let s = w.slopes_taylor(&fr)?;
    Ok(std::array::from_fn(|i| {
        let b = s[i].value();
        let by = s[i].dx(1).value();
        if by.abs() <= 1e-14 * (1.0 + b.abs()) {
            FocalPoint::Infinite([1.0, b])
        } else {
            FocalPoint::Finite([at[0] - 1.0 / by, at[1] - b / by])
        }
    }))
}

/// Numeric quantities at a point, from Taylor expansions of the given order
/// (2 suffices for `a, b, c`; the signature needs 4, its Jacobian 5).
pub fn quantities_at(w: &WebDef, at: [f64; 2], order: usize) -> Result<(TaylorFrame<f64>, WebQuantities<Taylor<f64>>), WebError> {
    let fr = TaylorFrame::new(order.max(2), at);
    let s = w.slopes_taylor(&fr)?;
    let q = quantities(&fr, s)?;
    Ok((fr, q))
}

/// Exact quantities of a symbolic web as rational functions of `x, y`.
pub fn quantities_symbolic(w: &WebDef) -> Result<WebQuantities<RatExpr>, WebError> {
    let s = w.rational().ok_or(WebError::NotSymbolic)?;
    quantities(&PlaneFrame::default(), s.clone())
}

/// Invariants at a point, as reported by the command line.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantRecord {
    pub point: [String; 2],
    pub a: String,
    pub b: String,
    pub c: String,
    pub k: String,
    #[serde(rename = "U")]
    pub u: [[String; 2]; 3],
    pub tolerance: Option<f64>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

/// Invariants at `at`: exact for symbolic webs at rational points, Taylor otherwise.
pub fn invariant_record(w: &WebDef, at: [Q; 2]) -> Result<InvariantRecord, WebError> {
    if let WebDef::Symbolic(_) = w {
        let sq = quantities_symbolic(w)?;
        let pt = HashMap::from([("x".to_string(), at[0].clone()), ("y".to_string(), at[1].clone())]);
        let ev = |e: &RatExpr| -> Result<String, WebError> {
            e.eval_q(&pt).map(|v| v.to_string()).ok_or_else(|| WebError::Regular(" (pole at the point)".into()))
        };
        // the exact path needs Delta to be nonzero at the point
        if sq.delta.eval_q(&pt).is_none_or(|d| num_traits::Zero::is_zero(&d)) {
            return Err(WebError::Regular(" at the point".into()));
        }
        return Ok(InvariantRecord {
            point: [at[0].to_string(), at[1].to_string()],
            a: ev(&sq.a)?,
            b: ev(&sq.b)?,
            c: ev(&sq.c)?,
            k: ev(&sq.k())?,
            u: [
                [ev(&sq.u[0][0])?, ev(&sq.u[0][1])?],
                [ev(&sq.u[1][0])?, ev(&sq.u[1][1])?],
                [ev(&sq.u[2][0])?, ev(&sq.u[2][1])?],
            ],
            tolerance: None,
        });
    }
    let pt = [crate::field::q_to_f64(&at[0]), crate::field::q_to_f64(&at[1])];
    let (_, nq) = quantities_at(w, pt, 2)?;
    let v = |t: &Taylor<f64>| fmt_f(t.value());
    Ok(InvariantRecord {
        point: [fmt_f(pt[0]), fmt_f(pt[1])],
        a: v(&nq.a),
        b: v(&nq.b),
        c: v(&nq.c),
        k: v(&nq.k()),
        u: [[v(&nq.u[0][0]), v(&nq.u[0][1])], [v(&nq.u[1][0]), v(&nq.u[1][1])], [v(&nq.u[2][0]), v(&nq.u[2][1])]],
        tolerance: Some(NEAR_REGULAR_TOL),
    })
}

/// Swaps two bases of the jet alphabet (all orders up to `max_order`).
pub fn swap_bases(e: &RatExpr, b1: char, b2: char) -> RatExpr {
    let mut map: Vec<(String, RatExpr)> = Vec::new();
    for n in e.vars().names() {
        if let Some((b, k)) = parse_jet_var(n) {
            let other = if b == b1 { b2 } else if b == b2 { b1 } else { continue };
            map.push((n.clone(), RatExpr::var(&jet_var(other, k))));
        }
    }
    let refs: Vec<(&str, RatExpr)> = map.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    e.substitute_all(&refs)
}

/// Checks the action of the transposition of foliations 1 and 2:
/// `(U1, U2, U3, a, b, c) -> (-U2, -U1, -U3, -b, -a, -c)`.
pub fn transposition_residuals(w: &WebQuantities<RatExpr>) -> Vec<(String, RatExpr)> {
    let sw = |e: &RatExpr| swap_bases(e, 'P', 'Q');
    let swf = |f: &Form1<RatExpr>| [sw(&f[0]), sw(&f[1])];
    let mut out = Vec::new();
    let pairs: [(&str, &Form1<RatExpr>, &Form1<RatExpr>); 3] =
        [("U1", &w.u[0], &w.u[1]), ("U2", &w.u[1], &w.u[0]), ("U3", &w.u[2], &w.u[2])];
    for (n, from, to) in pairs {
        let s = forms::add(&swf(from), to);
        out.push((format!("{n}[dx]"), s[0].clone()));
        out.push((format!("{n}[dy]"), s[1].clone()));
    }
    out.push(("a".into(), &sw(&w.a) + &w.b));
    out.push(("b".into(), &sw(&w.b) + &w.a));
    out.push(("c".into(), &sw(&w.c) + &w.c));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencils_have_zero_invariants() {
        let w = WebDef::symbolic("y/x", "y/(x-1)", "(y-1)/x").unwrap();
        let sq = quantities_symbolic(&w).unwrap();
        assert!(sq.a.is_zero() && sq.b.is_zero() && sq.c.is_zero());
        let f = focal_points(&w, [2.0, 3.0]).unwrap();
        assert_eq!(f[0], FocalPoint::Finite([0.0, 0.0]));
        assert_eq!(f[1], FocalPoint::Finite([1.0, 0.0]));
        assert_eq!(f[2], FocalPoint::Finite([0.0, 1.0]));
    }

    #[test]
    fn regular_web_is_rejected() {
        // pencils centred on the x-axis
        let w = WebDef::symbolic("y/x", "y/(x-1)", "y/(x+1)").unwrap();
        assert!(matches!(quantities_symbolic(&w), Err(WebError::Regular(_))));
        assert!(matches!(quantities_at(&w, [2.0, 3.0], 2), Err(WebError::Regular(_))));
    }

    #[test]
    fn frame_identities_on_a_concrete_web() {
        let w = WebDef::symbolic("y/x", "y/(x-1)", "(y-1)/x").unwrap();
        let fr = PlaneFrame::default();
        let sq = quantities_symbolic(&w).unwrap();
        let fm = frame_matrix(&fr, &sq);
        assert_eq!(fm.det, sq.mu);
        let om = omega_from_frame(&fr, &sq).unwrap();
        let closed = omega_from_invariants(&fr, &sq.abc(), &sq.u);
        assert_eq!(om, closed);
    }
}
