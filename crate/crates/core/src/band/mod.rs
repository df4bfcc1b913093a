//! Band storage and the forward banded kernels.

pub mod ops;
mod storage;

pub use ops::{
    cholesky, gram_from_cholesky, log_det_from_cholesky, outer_band, product_band_band,
    product_band_band_mode, product_band_band_restricted, product_band_vec, product_band_vec_transposed, solve_mat,
    solve_mat_transposed, solve_vec, sparse_inverse_subset,
};
pub use storage::{BandedMatrix, SymmetricBandedMatrix};
