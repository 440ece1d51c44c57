//! Construction of semiholomorphic polynomials `p(u, v, v̄)` whose zero set
//! meets every small three-sphere in a prescribed braid closure, together
//! with grid-based numerical certificates for isolation, link type and
//! d-regularity.
//!
//! The pipeline is
//!
//! 1. describe a braid by a Fourier parametrisation ([`braid::BraidParam`]),
//! 2. expand the braid polynomial `g_{a,b}(u, t)` with `a`, `b` kept symbolic
//!    ([`construct::expand_g`]),
//! 3. pick the radial exponents ([`construct::derive_scaling`],
//!    [`construct::choose_k`]) and homogenize into a polynomial in `u, v, v̄`
//!    ([`construct::homogenize`]),
//! 4. certify the result ([`certify`]).

pub mod braid;
pub mod certify;
pub mod construct;
pub mod numerics;
pub mod trigpoly;

pub use num_complex::Complex64;
