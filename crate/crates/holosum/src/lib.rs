//! Exact-arithmetic toolkit for holonomic summation: multivariate
//! polynomials and rational functions over `Q`, shift-operator algebra,
//! hypergeometric terms, creative telescoping over one or several
//! summation variables, boundary-term assembly of inhomogeneous
//! recurrences, and data-driven recurrence guessing.
//!
//! Everything computes exactly — no floating point anywhere — so every
//! identity the toolkit emits is verified symbolically, and certificates
//! can be re-checked independently of how they were found.

pub mod boundary;
pub mod factored;
pub mod gcd;
pub mod gosper;
pub mod gsum;
pub mod guessing;
pub mod hyperterm;
pub mod linalg;
pub mod linform;
pub mod mpoly;
pub mod ore;
pub mod parse;
pub mod ratfun;
pub mod series;
pub mod telescoping;
pub mod vars;
