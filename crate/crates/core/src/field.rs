//! Coefficient domains.
//!
//! Polynomials, rational functions and the numeric layers are written once
//! against [`Ring`] / [`Field`] and instantiated with exact rationals ([`Q`]),
//! machine floats, or the word-sized prime field [`Zp`] used for modular
//! shortcuts.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact rationals, the coefficient field of every symbolic computation.
pub type Q = BigRational;

/// A commutative ring with unit, usable as a polynomial coefficient.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    fn from_i64(n: i64) -> Self;

    fn mul_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out *= other;
        out
    }
}

/// A ring where every nonzero element is invertible.
pub trait Field: Ring + for<'a> DivAssign<&'a Self> {
    fn inv(&self) -> Self {
        let mut one = Self::one();
        one /= self;
        one
    }

    fn div_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out /= other;
        out
    }
}

/// Exact division in an integral domain: `Some(a/d)` when `d` divides `a`.
pub trait ExactDiv: Ring {
    fn try_div(&self, d: &Self) -> Option<Self>;
}

impl ExactDiv for BigRational {
    fn try_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            None
        } else {
            Some(self / d)
        }
    }
}

impl ExactDiv for BigInt {
    fn try_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let (q, r) = num_integer::Integer::div_rem(self, d);
        if r.is_zero() {
            Some(q)
        } else {
            None
        }
    }
}

impl ExactDiv for f64 {
    fn try_div(&self, d: &Self) -> Option<Self> {
        if *d == 0.0 {
            None
        } else {
            Some(self / d)
        }
    }
}

impl ExactDiv for Zp {
    fn try_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            None
        } else {
            Some(*self / *d)
        }
    }
}

impl Ring for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}
impl Field for BigRational {}

impl Ring for BigInt {
    fn from_i64(n: i64) -> Self {
        BigInt::from(n)
    }
}

impl Ring for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}
impl Field for f64 {}

/// Convenience constructor for small rationals.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails on absurd exponents; fall back to scaled division.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Reduces a rational into `Zp`; `None` when the denominator vanishes mod p.
pub fn q_to_zp(x: &Q) -> Option<Zp> {
    let n = bigint_to_zp(x.numer());
    let d = bigint_to_zp(x.denom());
    if d.is_zero() {
        None
    } else {
        Some(n / d)
    }
}

pub fn bigint_to_zp(n: &BigInt) -> Zp {
    let m = BigInt::from(Zp::MODULUS);
    let mut r = n % &m;
    if r.is_negative() {
        r += &m;
    }
    Zp(r.to_u64().expect("residue fits in u64"))
}

/// The rational `n/d` with `|n|, |d| <= sqrt(p/2)` congruent to `x`, if any
/// (half-extended Euclid on `(p, x)`).
pub fn zp_to_q(x: Zp) -> Option<Q> {
    let p = Zp::MODULUS as i128;
    let bound = ((p / 2) as f64).sqrt() as i128;
    let (mut r0, mut r1) = (p, x.value() as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 > bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if s1 == 0 || s1.abs() > bound {
        return None;
    }
    Some(Q::new(BigInt::from(r1), BigInt::from(s1)))
}

/// Integers modulo the Mersenne prime 2^61 - 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Zp(u64);

impl Zp {
    pub const MODULUS: u64 = (1u64 << 61) - 1;

    pub fn new(v: u64) -> Self {
        Zp(v % Self::MODULUS)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Zp(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn reduce(x: u128) -> u64 {
        let p = Self::MODULUS as u128;
        let lo = x & p;
        let hi = x >> 61;
        let mut s = lo + hi;
        while s >= p {
            s -= p;
        }
        s as u64
    }
}

impl Debug for Zp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Display for Zp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Zp {
    type Output = Zp;
    fn add(self, o: Zp) -> Zp {
        let s = self.0 + o.0;
        Zp(if s >= Self::MODULUS { s - Self::MODULUS } else { s })
    }
}
impl Sub for Zp {
    type Output = Zp;
    fn sub(self, o: Zp) -> Zp {
        if self.0 >= o.0 {
            Zp(self.0 - o.0)
        } else {
            Zp(self.0 + Self::MODULUS - o.0)
        }
    }
}
impl Mul for Zp {
    type Output = Zp;
    fn mul(self, o: Zp) -> Zp {
        Zp(Self::reduce(self.0 as u128 * o.0 as u128))
    }
}
impl Div for Zp {
    type Output = Zp;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Zp) -> Zp {
        assert!(o.0 != 0, "division by zero in Zp");
        self * o.pow(Self::MODULUS - 2)
    }
}
impl Rem for Zp {
    type Output = Zp;
    fn rem(self, _o: Zp) -> Zp {
        Zp(0)
    }
}
impl Neg for Zp {
    type Output = Zp;
    fn neg(self) -> Zp {
        if self.0 == 0 {
            self
        } else {
            Zp(Self::MODULUS - self.0)
        }
    }
}
impl<'a> AddAssign<&'a Zp> for Zp {
    fn add_assign(&mut self, o: &Zp) {
        *self = *self + *o;
    }
}
impl<'a> SubAssign<&'a Zp> for Zp {
    fn sub_assign(&mut self, o: &Zp) {
        *self = *self - *o;
    }
}
impl<'a> MulAssign<&'a Zp> for Zp {
    fn mul_assign(&mut self, o: &Zp) {
        *self = *self * *o;
    }
}
impl<'a> DivAssign<&'a Zp> for Zp {
    fn div_assign(&mut self, o: &Zp) {
        *self = *self / *o;
    }
}
impl Zero for Zp {
    fn zero() -> Self {
        Zp(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}
impl One for Zp {
    fn one() -> Self {
        Zp(1)
    }
}
impl Num for Zp {
    type FromStrRadixErr = std::num::ParseIntError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        u64::from_str_radix(s, radix).map(Zp::new)
    }
}
impl Ring for Zp {
    fn from_i64(n: i64) -> Self {
        if n >= 0 {
            Zp::new(n as u64)
        } else {
            -Zp::new(n.unsigned_abs())
        }
    }
}
impl Field for Zp {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zp_inverse_roundtrip() {
        for v in [1u64, 2, 3, 12345, Zp::MODULUS - 1] {
            let x = Zp::new(v);
            assert_eq!(x * x.inv(), Zp::one());
        }
    }

    #[test]
    fn zp_from_rational() {
        let h = q_to_zp(&q(1, 2)).unwrap();
        assert_eq!(h + h, Zp::one());
        assert_eq!(q_to_zp(&q(-3, 1)).unwrap() + Zp::new(3), Zp::zero());
    }
}
