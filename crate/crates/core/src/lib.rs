//! Projective differential invariants of planar linear 3-webs.
//!
//! The crate is layered: [`expr`] is the exact kernel (rational functions over
//! the rationals) plus a floating-point layer with truncated Taylor series;
//! [`jets`], [`web`], [`coframe`], [`cartan`] and [`polymorph`] build the
//! geometry on top; [`ideals`] holds the Gröbner engine.

pub mod expr;
pub mod cartan;
pub mod coframe;
pub mod field;
pub mod forms;
pub mod ideals;
pub mod jets;
pub mod polymorph;
pub mod web;

pub use expr::{NumExpr, Poly, RatExpr, Taylor};
pub use field::{Zp, Q};

/// Polynomials with exact rational coefficients.
pub type QPoly = Poly<Q>;
/// Double-precision Taylor series.
pub type Taylor64 = Taylor<f64>;
/// Single-precision Taylor series.
pub type Taylor32 = Taylor<f32>;
