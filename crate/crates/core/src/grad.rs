//! Reverse-mode sensitivities of the banded kernels.
//!
//! Every function takes the forward inputs, the forward output where needed,
//! and the sensitivity `out_bar` of a downstream scalar with respect to that
//! output. Matrix sensitivities are returned with the band of their primal.
//!
//! Symmetric matrices are handled in lower-band convention: the sensitivity
//! stored at an off-diagonal cell `(i, j)`, `i > j`, is the derivative with
//! respect to the single stored value, i.e. the sum of the `(i, j)` and
//! `(j, i)` contributions of the logical matrix.

use serde::Serialize;

use crate::band::{
    ops, outer_band, product_band_band_restricted, product_band_vec, product_band_vec_transposed,
    solve_mat, solve_mat_transposed, solve_vec, BandedMatrix, SymmetricBandedMatrix,
};
use crate::error::{Error, Result};

/// Sensitivities of `P = A B`.
pub fn vjp_product_band_band(
    a: &BandedMatrix,
    b: &BandedMatrix,
    p_bar: &BandedMatrix,
) -> Result<(BandedMatrix, BandedMatrix)> {
    a.check_same_n(b)?;
    a.check_same_n(p_bar)?;
    let a_bar = product_band_band_restricted(p_bar, &b.transpose(), a.lower_bw(), a.upper_bw())?;
    let b_bar = product_band_band_restricted(&a.transpose(), p_bar, b.lower_bw(), b.upper_bw())?;
    Ok((a_bar, b_bar))
}

/// Sensitivities of `p = B v`.
pub fn vjp_product_band_vec(
    b: &BandedMatrix,
    v: &[f64],
    p_bar: &[f64],
) -> Result<(BandedMatrix, Vec<f64>)> {
    let b_bar = outer_band(p_bar, v, b.lower_bw(), b.upper_bw())?;
    let v_bar = product_band_vec_transposed(b, p_bar)?;
    Ok((b_bar, v_bar))
}

/// Sensitivities of the banded outer product `O = band(m v^T)`.
pub fn vjp_outer(m: &[f64], v: &[f64], o_bar: &BandedMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    if m.len() != o_bar.n() || v.len() != o_bar.n() {
        return Err(Error::DimensionMismatch(format!(
            "outer product of lengths {} and {} against an {}x{} band",
            m.len(),
            v.len(),
            o_bar.n(),
            o_bar.n()
        )));
    }
    Ok((product_band_vec(o_bar, v)?, product_band_vec_transposed(o_bar, m)?))
}

/// Sensitivities of `s = L^{-1} v` (or `s = L^{-T} v` when `transpose_l`).
/// `s` is the forward result.
pub fn vjp_solve_vec(
    l: &BandedMatrix,
    v: &[f64],
    s: &[f64],
    s_bar: &[f64],
    transpose_l: bool,
) -> Result<(BandedMatrix, Vec<f64>)> {
    let _ = v;
    let bw = l.lower_bw();
    let v_bar = solve_vec(l, s_bar, !transpose_l)?;
    let mut l_bar = if transpose_l {
        outer_band(s, &v_bar, bw, 0)?
    } else {
        outer_band(&v_bar, s, bw, 0)?
    };
    l_bar.data_mut().iter_mut().for_each(|x| *x = -*x);
    Ok((l_bar, v_bar))
}

/// Sensitivities of `S = band(L^{-1} R)`, where `s` is the forward output and
/// `s_bar` has the band of `s`.
pub fn vjp_solve_mat(
    l: &BandedMatrix,
    r: &BandedMatrix,
    s: &BandedMatrix,
    s_bar: &BandedMatrix,
) -> Result<(BandedMatrix, BandedMatrix)> {
    l.check_same_n(r)?;
    l.check_same_n(s_bar)?;
    let lo = s_bar.lower_bw();
    let u = r.upper_bw();
    let x = solve_mat_transposed(l, s_bar, lo.max(r.lower_bw()), u.max(s_bar.upper_bw()))?;
    let r_bar = x.restricted(r.lower_bw(), r.upper_bw());
    // Only entries of L^{-1} R inside (lo, u) enter the L sensitivity.
    let s_full = if s.lower_bw() >= lo && s.upper_bw() >= u {
        s.clone()
    } else {
        solve_mat(l, r, lo, u)?
    };
    let mut l_bar = product_band_band_restricted(&x, &s_full.transpose(), l.lower_bw(), 0)?;
    l_bar.data_mut().iter_mut().for_each(|v| *v = -*v);
    Ok((l_bar, r_bar))
}

/// Sensitivity of `log_det_from_cholesky(L) = sum_i log L_ii`.
pub fn vjp_log_det_from_cholesky(l: &BandedMatrix, g: f64) -> Result<BandedMatrix> {
    l.check_lower()?;
    let mut out = BandedMatrix::zeros(l.n(), l.lower_bw(), 0);
    for i in 0..l.n() {
        let d = l.at(i, i);
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal(i));
        }
        *out.at_mut(i, i) = g / d;
    }
    Ok(out)
}

/// Sensitivity of `Q` given the sensitivity of its Cholesky factor.
///
/// `l_bar` is consumed: the backward sweep updates it in place.
pub fn vjp_cholesky(l: &BandedMatrix, l_bar: BandedMatrix) -> Result<SymmetricBandedMatrix> {
    l.check_lower()?;
    l.check_same_n(&l_bar)?;
    let n = l.n();
    let bw = l.lower_bw();
    let mut lb = if l_bar.lower_bw() == bw && l_bar.upper_bw() == 0 {
        l_bar
    } else {
        l_bar.restricted(bw, 0)
    };
    for i in 0..n {
        if !(l.at(i, i) > 0.0) {
            return Err(Error::NonPositiveDiagonal(i));
        }
    }
    let mut qb = SymmetricBandedMatrix::zeros(n, bw);
    for i in (0..n).rev() {
        let stop = i.saturating_sub(bw);
        for j in (stop..=i).rev() {
            let g = if j == i {
                0.5 * lb.at(i, i) / l.at(i, i)
            } else {
                let g = lb.at(i, j) / l.at(j, j);
                *lb.at_mut(j, j) -= lb.at(i, j) * l.at(i, j) / l.at(j, j);
                g
            };
            *qb.at_mut(i, j) = g;
            for k in stop..j {
                *lb.at_mut(i, k) -= g * l.at(j, k);
                *lb.at_mut(j, k) -= g * l.at(i, k);
            }
        }
    }
    Ok(qb)
}

/// Sensitivity of `L` given the sensitivity of `S = sparse_inverse_subset(L)`.
///
/// `s_bar` is consumed: it is zeroed cell by cell during the sweep.
pub fn vjp_sparse_inverse_subset(
    l: &BandedMatrix,
    s: &SymmetricBandedMatrix,
    s_bar: SymmetricBandedMatrix,
) -> Result<BandedMatrix> {
    l.check_lower()?;
    let n = l.n();
    let bw = l.lower_bw();
    if s.n() != n || s_bar.n() != n || s.bandwidth() != bw || s_bar.bandwidth() > bw {
        return Err(Error::DimensionMismatch(
            "subset inverse and its sensitivity must share the band of L".into(),
        ));
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let d = l.at(i, i);
        if d.abs() < ops::SINGULAR_PIVOT || !d.is_finite() {
            return Err(Error::SingularDiagonal(i));
        }
        diag.push(d);
    }
    let mut zb = if s_bar.bandwidth() == bw {
        s_bar
    } else {
        SymmetricBandedMatrix::from_lower(s_bar.into_lower().widened(bw, 0))?
    };
    // Cell (k, i), k > i, accumulates the sensitivity of U[i, k] = L[k, i] / L[i, i].
    let mut ub = BandedMatrix::zeros(n, bw, 0);
    let mut inv_sq_bar = vec![0.0; n];
    for j in 0..n {
        for i in j.saturating_sub(bw)..=j {
            let g = zb.at(i, j);
            if g == 0.0 {
                continue;
            }
            if i == j {
                inv_sq_bar[i] += g;
            }
            let gd = g / diag[i];
            for k in i + 1..(i + bw + 1).min(n) {
                *ub.at_mut(k, i) -= s.at(k, j) * g;
                *zb.at_mut(k, j) -= l.at(k, i) * gd;
            }
            *zb.at_mut(i, j) = 0.0;
        }
    }
    let mut lb = BandedMatrix::zeros(n, bw, 0);
    for i in 0..n {
        let d = diag[i];
        let mut d_bar = -2.0 * inv_sq_bar[i] / (d * d * d);
        for k in i + 1..(i + bw + 1).min(n) {
            let u_bar = ub.at(k, i);
            *lb.at_mut(k, i) = u_bar / d;
            d_bar -= u_bar * l.at(k, i) / (d * d);
        }
        *lb.at_mut(i, i) = d_bar;
    }
    Ok(lb)
}

/// One coordinate of a finite-difference comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoordinateError {
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteDiffReport {
    pub eps: f64,
    /// Largest relative error among coordinates whose absolute error exceeds the
    /// absolute floor used by [`FiniteDiffReport::passes`].
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub coordinates: Vec<CoordinateError>,
}

impl FiniteDiffReport {
    /// A coordinate passes if its absolute error is at most `atol` or its
    /// relative error is at most `rtol`. NaN never passes.
    pub fn passes(&self, rtol: f64, atol: f64) -> bool {
        self.coordinates
            .iter()
            .all(|c| c.abs_err <= atol || c.rel_err <= rtol)
    }

    pub fn max_rel_err_above(&self, atol: f64) -> f64 {
        self.coordinates
            .iter()
            .filter(|c| !(c.abs_err <= atol))
            .map(|c| if c.rel_err.is_nan() { f64::INFINITY } else { c.rel_err })
            .fold(0.0, f64::max)
    }
}

/// Default absolute floor for gradient comparisons.
pub const FD_ATOL: f64 = 1e-8;
/// Default relative tolerance for gradient comparisons.
pub const FD_RTOL: f64 = 1e-5;
/// Default central-difference step, scaled by `|x_i| + 1`.
pub const FD_EPS: f64 = 1e-5;

/// Compares `grad` against central differences of `f` at `x0`, with step
/// `eps * (|x_i| + 1)` per coordinate. Evaluation failures show up as NaN.
pub fn finite_diff_check<F>(f: F, x0: &[f64], grad: &[f64], eps: f64) -> FiniteDiffReport
where
    F: Fn(&[f64]) -> Result<f64>,
{
    assert_eq!(x0.len(), grad.len(), "gradient length must match x0");
    let mut x = x0.to_vec();
    let mut coordinates = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let h = eps * (x0[i].abs() + 1.0);
        x[i] = x0[i] + h;
        let fp = f(&x).unwrap_or(f64::NAN);
        x[i] = x0[i] - h;
        let fm = f(&x).unwrap_or(f64::NAN);
        x[i] = x0[i];
        let numeric = (fp - fm) / (2.0 * h);
        let analytic = grad[i];
        let abs_err = (numeric - analytic).abs();
        let scale = numeric.abs().max(analytic.abs());
        let rel_err = if abs_err == 0.0 { 0.0 } else { abs_err / scale };
        coordinates.push(CoordinateError {
            analytic,
            numeric,
            abs_err,
            rel_err,
        });
    }
    let max_abs_err = coordinates
        .iter()
        .map(|c| if c.abs_err.is_nan() { f64::INFINITY } else { c.abs_err })
        .fold(0.0, f64::max);
    let mut report = FiniteDiffReport {
        eps,
        max_rel_err: 0.0,
        max_abs_err,
        coordinates,
    };
    report.max_rel_err = report.max_rel_err_above(FD_ATOL);
    report
}
