//! Exact state-vector simulation of quantum algorithms for learning with errors.
//!
//! The crate is `no_std` with `alloc`. Every quantum state is a dense amplitude
//! vector ([`qsim::PureState`]); the algorithms in [`sieve`], [`clwe`] and
//! [`reductions`] act on those vectors directly, so closed-form amplitudes and
//! probabilities can be checked against brute force.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod amplitudes;
pub mod clwe;
pub mod error;
pub mod qsim;
pub mod reductions;
pub mod sieve;
pub mod zq_math;

pub use error::{Error, Result};
pub use num_complex::Complex64;
