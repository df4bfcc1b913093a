//! Forward banded kernels. Everything here is `O(n l)` or `O(n l^2)` in time and
//! `O(n l)` in memory; nothing materializes a dense `n x n` array.

use crate::band::{BandedMatrix, SymmetricBandedMatrix};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};

/// Diagonal entries with magnitude below this are treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// Column-parallel products only pay off on large matrices.
const PAR_MIN_N: usize = 1 << 14;

fn product_mode(n: usize) -> Mode {
    if n >= PAR_MIN_N {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

fn check_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {n}"
        )));
    }
    Ok(())
}

#[inline]
fn pivot(l: &BandedMatrix, i: usize) -> Result<f64> {
    let d = l.at(i, i);
    if d.abs() < SINGULAR_PIVOT || !d.is_finite() {
        return Err(Error::SingularDiagonal(i));
    }
    Ok(d)
}

/// Banded Cholesky factor `L` of a symmetric positive-definite `Q`, with the same
/// number of sub-diagonals as `Q`.
pub fn cholesky(q: &SymmetricBandedMatrix) -> Result<BandedMatrix> {
    let n = q.n();
    let l = q.bandwidth();
    let qb = q.lower();
    let mut out = BandedMatrix::zeros(n, l, 0);
    for i in 0..n {
        let m = i.saturating_sub(l);
        for j in m..=i {
            let mut s = 0.0;
            for k in m..j {
                s += out.at(i, k) * out.at(j, k);
            }
            let r = qb.at(i, j) - s;
            if i == j {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::NotPositiveDefinite(i));
                }
                *out.at_mut(i, i) = r.sqrt();
            } else {
                *out.at_mut(i, j) = r / out.at(j, j);
            }
        }
    }
    Ok(out)
}

/// `L^{-1} v`, or `L^{-T} v` when `transpose_l` is set, for lower-triangular banded `L`.
pub fn solve_vec(l: &BandedMatrix, v: &[f64], transpose_l: bool) -> Result<Vec<f64>> {
    l.check_lower()?;
    let n = l.n();
    check_len("right-hand side", v.len(), n)?;
    let bw = l.lower_bw();
    let mut s = v.to_vec();
    if !transpose_l {
        for i in 0..n {
            let mut acc = s[i];
            for k in i.saturating_sub(bw)..i {
                acc -= l.at(i, k) * s[k];
            }
            s[i] = acc / pivot(l, i)?;
        }
    } else {
        // L^T is upper triangular: sweep upwards reading column i of L.
        for i in (0..n).rev() {
            let mut acc = s[i];
            for k in i + 1..(i + bw + 1).min(n) {
                acc -= l.at(k, i) * s[k];
            }
            s[i] = acc / pivot(l, i)?;
        }
    }
    Ok(s)
}

/// In-band entries `(out_lower, out_upper)` of `L^{-1} R`.
///
/// The recursion sweeps diagonals from the top (`-u`) down to `out_lower`.
/// Internally at least `R`'s upper bandwidth is carried, which is the true
/// upper bandwidth of `L^{-1} R`, so every returned entry is exact.
pub fn solve_mat(
    l: &BandedMatrix,
    r: &BandedMatrix,
    out_lower: usize,
    out_upper: usize,
) -> Result<BandedMatrix> {
    l.check_lower()?;
    l.check_same_n(r)?;
    let n = l.n();
    let bw = l.lower_bw();
    let up = out_upper.max(r.upper_bw());
    let mut o = BandedMatrix::zeros(n, out_lower, up);
    for i in 0..n {
        pivot(l, i)?;
    }
    for k in -(up as isize)..=(out_lower as isize) {
        let i_lo = k.max(0) as usize;
        let i_hi = (n as isize + k.min(0)).max(0) as usize;
        for i in i_lo..i_hi {
            let j = (i as isize - k) as usize;
            let mut acc = r.entry(i, j);
            let m_lo = i.saturating_sub(bw).max(j.saturating_sub(up));
            for m in m_lo..i {
                acc -= l.at(i, m) * o.at(m, j);
            }
            *o.at_mut(i, j) = acc / l.at(i, i);
        }
    }
    Ok(if up == out_upper {
        o
    } else {
        o.restricted(out_lower, out_upper)
    })
}

/// In-band entries `(out_lower, out_upper)` of `L^{-T} R`, swept from the
/// bottom diagonal up without forming `L^T`.
pub fn solve_mat_transposed(
    l: &BandedMatrix,
    r: &BandedMatrix,
    out_lower: usize,
    out_upper: usize,
) -> Result<BandedMatrix> {
    l.check_lower()?;
    l.check_same_n(r)?;
    let n = l.n();
    let bw = l.lower_bw();
    let lo_bw = out_lower.max(r.lower_bw());
    let mut o = BandedMatrix::zeros(n, lo_bw, out_upper);
    for i in 0..n {
        pivot(l, i)?;
    }
    for k in (-(out_upper as isize)..=(lo_bw as isize)).rev() {
        let i_lo = k.max(0) as usize;
        let i_hi = (n as isize + k.min(0)).max(0) as usize;
        for i in (i_lo..i_hi).rev() {
            let j = (i as isize - k) as usize;
            let mut acc = r.entry(i, j);
            let m_hi = (i + bw + 1).min(n).min(j + lo_bw + 1);
            for m in i + 1..m_hi {
                acc -= l.at(m, i) * o.at(m, j);
            }
            *o.at_mut(i, j) = acc / l.at(i, i);
        }
    }
    Ok(if lo_bw == out_lower {
        o
    } else {
        o.restricted(out_lower, out_upper)
    })
}

/// In-band entries of `(L L^T)^{-1}` by the Takahashi recursion.
pub fn sparse_inverse_subset(l: &BandedMatrix) -> Result<SymmetricBandedMatrix> {
    l.check_lower()?;
    let n = l.n();
    let bw = l.lower_bw();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        diag.push(pivot(l, i)?);
    }
    // Z holds the symmetric band of the inverse in lower storage.
    let mut z = SymmetricBandedMatrix::zeros(n, bw);
    for j in (0..n).rev() {
        for i in (j.saturating_sub(bw)..=j).rev() {
            // U[i, k] = L[k, i] / L[i, i] for k in (i, i + bw]
            let mut acc = 0.0;
            for k in i + 1..(i + bw + 1).min(n) {
                acc += l.at(k, i) * z.at(k, j);
            }
            let mut v = -acc / diag[i];
            if i == j {
                v += 1.0 / (diag[i] * diag[i]);
            }
            *z.at_mut(i, j) = v;
        }
    }
    Ok(z)
}

/// `A B`, with lower bandwidth `a.l + b.l` and upper bandwidth `a.u + b.u`.
pub fn product_band_band(a: &BandedMatrix, b: &BandedMatrix) -> Result<BandedMatrix> {
    product_band_band_restricted(
        a,
        b,
        a.lower_bw() + b.lower_bw(),
        a.upper_bw() + b.upper_bw(),
    )
}

/// Entries of `A B` inside band `(out_lower, out_upper)` only.
pub fn product_band_band_restricted(
    a: &BandedMatrix,
    b: &BandedMatrix,
    out_lower: usize,
    out_upper: usize,
) -> Result<BandedMatrix> {
    product_band_band_mode(a, b, out_lower, out_upper, product_mode(a.n()))
}

/// [`product_band_band_restricted`] with an explicit execution mode; the
/// result is identical in both modes.
pub fn product_band_band_mode(
    a: &BandedMatrix,
    b: &BandedMatrix,
    out_lower: usize,
    out_upper: usize,
    mode: Mode,
) -> Result<BandedMatrix> {
    a.check_same_n(b)?;
    let n = a.n();
    let mut out = BandedMatrix::zeros(n, out_lower, out_upper);
    let w = out.width();
    exec::for_each_chunk_mut(mode, out.data_mut(), w, |j, col| {
        let i_lo = j.saturating_sub(out_upper);
        let i_hi = (j + out_lower + 1).min(n);
        let (bk_lo, bk_hi) = b.col_rows(j);
        for i in i_lo..i_hi {
            let (ak_lo, ak_hi) = a.row_cols(i);
            let k_lo = ak_lo.max(bk_lo);
            let k_hi = ak_hi.min(bk_hi);
            let mut s = 0.0;
            for k in k_lo..k_hi {
                s += a.at(i, k) * b.at(k, j);
            }
            col[i + out_upper - j] = s;
        }
    });
    Ok(out)
}

/// `B v`.
pub fn product_band_vec(b: &BandedMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("vector", v.len(), b.n())?;
    let mut y = vec![0.0; b.n()];
    for (j, &vj) in v.iter().enumerate() {
        let (lo, hi) = b.col_rows(j);
        for i in lo..hi {
            y[i] += b.at(i, j) * vj;
        }
    }
    Ok(y)
}

/// `B^T v` without forming the transpose.
pub fn product_band_vec_transposed(b: &BandedMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("vector", v.len(), b.n())?;
    Ok((0..b.n())
        .map(|j| {
            let (lo, hi) = b.col_rows(j);
            (lo..hi).map(|i| b.at(i, j) * v[i]).sum()
        })
        .collect())
}

/// Band `(out_lower, out_upper)` of the outer product `m v^T`.
pub fn outer_band(m: &[f64], v: &[f64], out_lower: usize, out_upper: usize) -> Result<BandedMatrix> {
    check_len("vector", v.len(), m.len())?;
    let n = m.len();
    let mut out = BandedMatrix::zeros(n, out_lower, out_upper);
    let w = out.width();
    exec::for_each_chunk_mut(product_mode(n), out.data_mut(), w, |j, col| {
        let i_lo = j.saturating_sub(out_upper);
        let i_hi = (j + out_lower + 1).min(n);
        for i in i_lo..i_hi {
            col[i + out_upper - j] = m[i] * v[j];
        }
    });
    Ok(out)
}

/// `sum_i log L_ii`, i.e. half the log-determinant of `L L^T`.
pub fn log_det_from_cholesky(l: &BandedMatrix) -> Result<f64> {
    l.check_lower()?;
    let mut s = 0.0;
    for i in 0..l.n() {
        let d = l.at(i, i);
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal(i));
        }
        s += d.ln();
    }
    Ok(s)
}

/// `L L^T` as a symmetric band (bandwidth of `L`).
pub fn gram_from_cholesky(l: &BandedMatrix) -> Result<SymmetricBandedMatrix> {
    l.check_lower()?;
    let bw = l.lower_bw();
    let full = product_band_band_restricted(l, &l.transpose(), bw, 0)?;
    SymmetricBandedMatrix::from_lower(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sym(d: &[f64], n: usize, l: usize) -> SymmetricBandedMatrix {
        SymmetricBandedMatrix::from_dense(&DMatrix::from_row_slice(n, n, d), l).unwrap()
    }

    fn lower(d: &[f64], n: usize, l: usize) -> BandedMatrix {
        BandedMatrix::from_dense(&DMatrix::from_row_slice(n, n, d), l, 0).unwrap()
    }

    #[test]
    fn cholesky_small_cases() {
        assert_eq!(
            cholesky(&SymmetricBandedMatrix::identity(4)).unwrap(),
            BandedMatrix::identity(4)
        );
        let d = cholesky(&SymmetricBandedMatrix::from_diagonal(&[4.0, 4.0, 4.0])).unwrap();
        assert_eq!(d.diagonal(), vec![2.0, 2.0, 2.0]);
        let l = cholesky(&sym(&[4.0, 2.0, 2.0, 5.0], 2, 1)).unwrap();
        assert_eq!(l.to_dense(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
    }

    #[test]
    fn cholesky_of_tridiagonal_has_one_subdiagonal() {
        let n = 6;
        let d = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let l = cholesky(&SymmetricBandedMatrix::from_dense(&d, 1).unwrap()).unwrap();
        assert_eq!((l.lower_bw(), l.upper_bw()), (1, 0));
        assert!((1..n).all(|i| l.at(i, i - 1) != 0.0));
    }

    #[test]
    fn cholesky_reports_failing_row() {
        let q = sym(&[1.0, 2.0, 2.0, 1.0], 2, 1);
        assert_eq!(cholesky(&q), Err(Error::NotPositiveDefinite(1)));
        let q = SymmetricBandedMatrix::from_diagonal(&[-1.0, 1.0]);
        assert_eq!(cholesky(&q), Err(Error::NotPositiveDefinite(0)));
    }

    #[test]
    fn solve_vec_small_cases() {
        let v = [1.0, -2.0, 3.0];
        assert_eq!(solve_vec(&BandedMatrix::identity(3), &v, false).unwrap(), v);
        let d = BandedMatrix::from_diagonal(&[2.0, 2.0]);
        assert_eq!(solve_vec(&d, &[4.0, 4.0], false).unwrap(), vec![2.0, 2.0]);
        assert_eq!(solve_vec(&d, &[4.0, 4.0], true).unwrap(), vec![2.0, 2.0]);
        let z = BandedMatrix::from_diagonal(&[1.0, 0.0]);
        assert_eq!(solve_vec(&z, &[1.0, 1.0], false), Err(Error::SingularDiagonal(1)));
        assert!(matches!(
            solve_vec(&BandedMatrix::identity(2).widened(0, 1), &[1.0, 1.0], false),
            Err(Error::NotLowerTriangular(1))
        ));
    }

    #[test]
    fn solve_mat_with_identity_and_diagonal() {
        let r = BandedMatrix::from_dense(
            &DMatrix::from_fn(5, 5, |i, j| if i.abs_diff(j) <= 1 { (i + 2 * j) as f64 } else { 0.0 }),
            1,
            1,
        )
        .unwrap();
        let o = solve_mat(&BandedMatrix::identity(5), &r, 1, 1).unwrap();
        assert_eq!(o, r);
        let c = [2.0, 4.0, 8.0, 1.0, 0.5];
        let o = solve_mat(&BandedMatrix::from_diagonal(&c), &r, 1, 1).unwrap();
        for j in 0..5 {
            let (lo, hi) = r.col_rows(j);
            for i in lo..hi {
                assert_eq!(o.at(i, j), r.at(i, j) / c[i]);
            }
        }
    }

    #[test]
    fn sparse_inverse_small_cases() {
        assert_eq!(
            sparse_inverse_subset(&BandedMatrix::identity(3)).unwrap(),
            SymmetricBandedMatrix::identity(3)
        );
        let s = sparse_inverse_subset(&BandedMatrix::from_diagonal(&[2.0, 2.0])).unwrap();
        assert_eq!(s.diagonal(), vec![0.25, 0.25]);
        let s = sparse_inverse_subset(&lower(&[1.0, 0.0, 1.0, 1.0], 2, 1)).unwrap();
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn products_small_cases() {
        let a = BandedMatrix::from_dense(
            &DMatrix::from_fn(4, 4, |i, j| if i.abs_diff(j) <= 1 { 1.0 + (i * 4 + j) as f64 } else { 0.0 }),
            1,
            1,
        )
        .unwrap();
        assert_eq!(product_band_band(&a, &BandedMatrix::identity(4)).unwrap().to_dense(), a.to_dense());
        let p = product_band_band(&a, &a).unwrap();
        assert_eq!((p.lower_bw(), p.upper_bw()), (2, 2));
        let diag = product_band_band_restricted(&a, &a, 0, 0).unwrap();
        let dense = a.to_dense() * a.to_dense();
        assert_eq!(diag.diagonal(), (0..4).map(|i| dense[(i, i)]).collect::<Vec<_>>());
        assert_eq!(diag.diagonal().iter().sum::<f64>(), dense.trace());

        let v = [1.0, 1.0];
        assert_eq!(product_band_vec(&BandedMatrix::identity(2), &v).unwrap(), v);
        assert_eq!(
            product_band_vec(&BandedMatrix::from_diagonal(&[2.0, 2.0]), &v).unwrap(),
            vec![2.0, 2.0]
        );
        assert!(product_band_vec(&a, &v).is_err());
    }

    #[test]
    fn outer_band_small_cases() {
        let z = outer_band(&[0.0; 3], &[1.0, 2.0, 3.0], 1, 1).unwrap();
        assert!(z.data().iter().all(|&x| x == 0.0));
        let e = outer_band(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 0, 0).unwrap();
        assert_eq!(e.diagonal(), vec![1.0, 0.0, 0.0]);
        assert!(outer_band(&[1.0], &[1.0, 2.0], 0, 0).is_err());
    }

    #[test]
    fn log_det_small_cases() {
        assert_eq!(log_det_from_cholesky(&BandedMatrix::identity(3)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((log_det_from_cholesky(&BandedMatrix::from_diagonal(&[e, e])).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            log_det_from_cholesky(&BandedMatrix::from_diagonal(&[1.0, -1.0])),
            Err(Error::NonPositiveDiagonal(1))
        );
    }
}
