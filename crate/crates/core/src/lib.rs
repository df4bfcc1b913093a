//! Banded-matrix kernels with reverse-mode derivatives, and Gaussian Markov
//! model inference built on them.

// `!(x > 0.0)` is used on purpose so NaN fails the check; index loops mirror
// the band recursions.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod band;
pub mod dual;
pub mod error;
pub mod exec;
pub mod grad;
pub mod gradcheck;
pub mod inference;
pub mod models;
pub mod tape;

pub use band::{BandedMatrix, SymmetricBandedMatrix};
pub use error::{Error, Result};
