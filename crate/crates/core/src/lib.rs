//! Weighted, binomial and log-log averages of prime-factor counting
//! functions, with a growth classifier for power-log expressions and
//! Weyl-sum instrumentation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averages;
pub mod cache;
pub mod error;
pub mod gaussian;
pub mod hardy;
pub mod numeric;
pub mod quadrature;
pub mod sieve;
pub mod ud_lab;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
