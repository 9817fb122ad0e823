//! Truncated multivariate Taylor series: forward-mode differentiation to any
//! fixed order in a few variables.
//!
//! A value stores the Taylor coefficients `c[m] = (d^m f)(p) / m!` for every
//! multi-index `m` of total degree at most the layout order. `valid` tracks how
//! many orders are still exact after differentiation.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Float;

/// Monomial indexing shared by every series of one shape.
pub struct Layout {
    nvars: usize,
    order: usize,
    monos: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    // (i, j, k): c_k += a_i * b_j
    products: Vec<(u32, u32, u32)>,
    // shift[v][i] = index of monos[i] + e_v, if within the order
    shift: Vec<Vec<Option<usize>>>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layout(nvars={}, order={})", self.nvars, self.order)
    }
}

impl Layout {
    pub fn new(nvars: usize, order: usize) -> Arc<Layout> {
        let mut monos: Vec<Vec<u8>> = vec![vec![0; nvars]];
        for d in (1..=order).filter(|_| nvars > 0) {
            let mut level = Vec::new();
            gen_degree(nvars, d, &mut vec![0; nvars], 0, &mut level);
            monos.extend(level);
        }
        let degree: Vec<usize> = monos.iter().map(|m| m.iter().map(|&x| x as usize).sum()).collect();
        let index: HashMap<Vec<u8>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut products = Vec::new();
        for i in 0..monos.len() {
            for j in 0..monos.len() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let m: Vec<u8> = monos[i].iter().zip(&monos[j]).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&m] as u32));
            }
        }
        let shift = (0..nvars)
            .map(|v| {
                monos
                    .iter()
                    .map(|m| {
                        let mut m = m.clone();
                        m[v] += 1;
                        index.get(&m).copied()
                    })
                    .collect()
            })
            .collect();
        Arc::new(Layout { nvars, order, monos, degree, index, products, shift })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn index_of(&self, m: &[u8]) -> Option<usize> {
        self.index.get(m).copied()
    }
}

fn gen_degree(n: usize, d: usize, cur: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k == n - 1 {
        cur[k] = d as u8;
        out.push(cur.clone());
        cur[k] = 0;
        return;
    }
    for a in (0..=d).rev() {
        cur[k] = a as u8;
        gen_degree(n, d - a, cur, k + 1, out);
    }
    cur[k] = 0;
}

/// Truncated Taylor series with scalar type `T`.
#[derive(Clone)]
pub struct Taylor<T> {
    lay: Arc<Layout>,
    c: Vec<T>,
    valid: usize,
}

impl<T: Float + fmt::Debug> fmt::Debug for Taylor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Taylor(valid={}, {:?})", self.valid, self.c)
    }
}

impl<T: Float> Taylor<T> {
    pub fn constant(lay: &Arc<Layout>, v: T) -> Self {
        let mut c = vec![T::zero(); lay.len()];
        c[0] = v;
        Taylor { lay: lay.clone(), c, valid: lay.order }
    }

    /// The coordinate function `x_var` expanded at `value`.
    pub fn variable(lay: &Arc<Layout>, var: usize, value: T) -> Self {
        let mut t = Self::constant(lay, value);
        if lay.order > 0 {
            let mut m = vec![0u8; lay.nvars];
            m[var] = 1;
            t.c[lay.index[&m]] = T::one();
        }
        t
    }

    /// A constant with the same layout as `self`.
    pub fn lift(&self, v: T) -> Self {
        Self::constant(&self.lay, v)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.lay
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn valid_order(&self) -> usize {
        self.valid
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// Taylor coefficient of the multi-index `m`.
    pub fn coeff(&self, m: &[u8]) -> T {
        self.lay.index_of(m).map_or(T::zero(), |i| self.c[i])
    }

    /// The partial derivative `d^m f` at the expansion point.
    pub fn derivative(&self, m: &[u8]) -> T {
        let mut fact = T::one();
        for &k in m {
            for j in 2..=k {
                fact = fact * T::from(j).unwrap();
            }
        }
        self.coeff(m) * fact
    }

    /// Partial derivative as a series (one order less exact).
    pub fn dx(&self, var: usize) -> Self {
        let mut c = vec![T::zero(); self.c.len()];
        for (i, slot) in c.iter_mut().enumerate() {
            if let Some(j) = self.lay.shift[var][i] {
                let mult = T::from(self.lay.monos[i][var] as usize + 1).unwrap();
                *slot = self.c[j] * mult;
            }
        }
        Taylor { lay: self.lay.clone(), c, valid: self.valid.saturating_sub(1) }
    }

    fn truncate(mut self) -> Self {
        for (i, d) in self.lay.degree.iter().enumerate() {
            if *d > self.valid {
                self.c[i] = T::zero();
            }
        }
        self
    }

    fn mul_ref(&self, o: &Self) -> Self {
        let valid = self.valid.min(o.valid);
        let mut c = vec![T::zero(); self.c.len()];
        for &(i, j, k) in &self.lay.products {
            let (i, j, k) = (i as usize, j as usize, k as usize);
            if self.lay.degree[k] > valid {
                continue;
            }
            c[k] = c[k] + self.c[i] * o.c[j];
        }
        Taylor { lay: self.lay.clone(), c, valid }
    }

    /// `sum_k a[k] * u^k` for the nilpotent part `u`.
    fn compose(&self, a: &[T]) -> Self {
        let mut u = self.clone();
        u.c[0] = T::zero();
        let mut acc = self.lift(a[a.len() - 1]);
        acc.valid = self.valid;
        for k in (0..a.len() - 1).rev() {
            acc = acc.mul_ref(&u);
            acc.c[0] = acc.c[0] + a[k];
        }
        acc.truncate()
    }

    pub fn recip(&self) -> Self {
        let g0 = self.c[0];
        let n = self.lay.order;
        // 1/(g0 + u) = sum (-1)^k u^k / g0^(k+1)
        let mut a = Vec::with_capacity(n + 1);
        let mut p = T::one() / g0;
        for _ in 0..=n {
            a.push(p);
            p = -p / g0;
        }
        self.compose(&a)
    }

    pub fn sqrt(&self) -> Self {
        let g0 = self.c[0];
        let n = self.lay.order;
        // sqrt(g0) * sum binom(1/2, k) (u/g0)^k
        let s = g0.sqrt();
        let half = T::from(0.5).unwrap();
        let mut a = Vec::with_capacity(n + 1);
        let mut binom = T::one();
        let mut gpow = T::one();
        for k in 0..=n {
            a.push(s * binom / gpow);
            let kk = T::from(k).unwrap();
            binom = binom * (half - kk) / (kk + T::one());
            gpow = gpow * g0;
        }
        self.compose(&a)
    }

    pub fn powi(&self, e: i32) -> Self {
        if e < 0 {
            return self.recip().powi(-e);
        }
        let mut acc = self.lift(T::one());
        let mut base = self.clone();
        let mut e = e as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        acc
    }

    pub fn scale(&self, s: T) -> Self {
        Taylor { lay: self.lay.clone(), c: self.c.iter().map(|&x| x * s).collect(), valid: self.valid }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert!(Arc::ptr_eq(&self.lay, &o.lay) || self.lay.len() == o.lay.len());
        let valid = self.valid.min(o.valid);
        let c = self.c.iter().zip(&o.c).map(|(&a, &b)| f(a, b)).collect();
        Taylor { lay: self.lay.clone(), c, valid }.truncate()
    }
}

impl<T: Float> Add for Taylor<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(&o, |a, b| a + b)
    }
}
impl<T: Float> Sub for Taylor<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(&o, |a, b| a - b)
    }
}
impl<T: Float> Mul for Taylor<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.mul_ref(&o)
    }
}
impl<T: Float> Div for Taylor<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self.mul_ref(&o.recip())
    }
}
impl<T: Float> Neg for Taylor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}
impl<'a, T: Float> Add<&'a Taylor<T>> for &'a Taylor<T> {
    type Output = Taylor<T>;
    fn add(self, o: &Taylor<T>) -> Taylor<T> {
        self.zip(o, |a, b| a + b)
    }
}
impl<'a, T: Float> Sub<&'a Taylor<T>> for &'a Taylor<T> {
    type Output = Taylor<T>;
    fn sub(self, o: &Taylor<T>) -> Taylor<T> {
        self.zip(o, |a, b| a - b)
    }
}
impl<'a, T: Float> Mul<&'a Taylor<T>> for &'a Taylor<T> {
    type Output = Taylor<T>;
    fn mul(self, o: &Taylor<T>) -> Taylor<T> {
        self.mul_ref(o)
    }
}
impl<'a, T: Float> Div<&'a Taylor<T>> for &'a Taylor<T> {
    type Output = Taylor<T>;
    fn div(self, o: &Taylor<T>) -> Taylor<T> {
        self.mul_ref(&o.recip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes() {
        assert_eq!(Layout::new(2, 4).len(), 15);
        assert_eq!(Layout::new(3, 2).len(), 10);
    }

    #[test]
    fn product_rule_and_powers() {
        let lay = Layout::new(2, 4);
        let x = Taylor::variable(&lay, 0, 2.0);
        let y = Taylor::variable(&lay, 1, 3.0);
        // f = x^3 y^2
        let f = x.powi(3) * y.powi(2);
        assert!((f.value() - 72.0).abs() < 1e-12);
        assert!((f.derivative(&[1, 0]) - 3.0 * 4.0 * 9.0).abs() < 1e-12);
        assert!((f.derivative(&[2, 1]) - 6.0 * 2.0 * 2.0 * 3.0).abs() < 1e-12);
        assert!((f.dx(0).dx(0).dx(1).value() - 72.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_and_reciprocal() {
        let lay = Layout::new(1, 5);
        let x = Taylor::variable(&lay, 0, 4.0);
        let s = x.sqrt();
        // d^3 sqrt(x) = 3/8 x^(-5/2)
        assert!((s.derivative(&[3]) - 0.375 * 4f64.powf(-2.5)).abs() < 1e-14);
        let r = x.recip();
        // d^4 (1/x) = 24/x^5
        assert!((r.derivative(&[4]) - 24.0 / 4f64.powi(5)).abs() < 1e-14);
        let one = &s * &s;
        assert!((one.derivative(&[5]) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let lay = Layout::new(1, 2);
        let x = Taylor::<f32>::variable(&lay, 0, 3.0);
        let f = x.clone() * x;
        assert_eq!(f.derivative(&[2]), 2.0f32);
    }
}
