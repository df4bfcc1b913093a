//! Band storage.
//!
//! An `n x n` matrix with lower bandwidth `l` and upper bandwidth `u` is kept
//! as an `(l + u + 1) x n` array. Matrix entry `(i, j)` (0-based) lives in
//! storage row `i - j + u` of storage column `j`, so the diagonal occupies
//! storage row `u` for every column (row `u + 1` when counted from 1).
//!
//! Internally each storage column is contiguous in memory. Cells of the array
//! whose `(i, j)` falls outside the matrix are kept at zero.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; (lower + upper + 1) * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            n: diag.len(),
            lower: 0,
            upper: 0,
            data: diag.to_vec(),
        }
    }

    /// Builds a matrix from storage rows: `rows[r][j]` is storage cell `(r, j)`.
    /// Corner cells are forced to zero.
    pub fn from_storage_rows(n: usize, lower: usize, upper: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let w = lower + upper + 1;
        if rows.len() != w || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "expected {w} storage rows of length {n}"
            )));
        }
        let mut b = Self::zeros(n, lower, upper);
        for (r, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let i = j as isize + r as isize - upper as isize;
                if i >= 0 && (i as usize) < n {
                    b.data[j * w + r] = v;
                }
            }
        }
        Ok(b)
    }

    /// Strict conversion: every entry outside the declared band must be exactly zero.
    pub fn from_dense(dense: &DMatrix<f64>, lower: usize, upper: usize) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "dense matrix is {}x{}, expected square",
                dense.nrows(),
                dense.ncols()
            )));
        }
        let n = dense.nrows();
        let mut b = Self::zeros(n, lower, upper);
        for j in 0..n {
            for i in 0..n {
                let v = dense[(i, j)];
                if b.in_band(i, j) {
                    *b.at_mut(i, j) = v;
                } else if v != 0.0 {
                    return Err(Error::NonzeroOutsideBand { row: i, col: j, value: v });
                }
            }
        }
        Ok(b)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let (lo, hi) = self.col_rows(j);
            for i in lo..hi {
                d[(i, j)] = self.at(i, j);
            }
        }
        d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn lower_bw(&self) -> usize {
        self.lower
    }

    #[inline]
    pub fn upper_bw(&self) -> usize {
        self.upper
    }

    /// Number of storage rows, `lower + upper + 1`.
    #[inline]
    pub fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.upper == 0
    }

    /// Raw storage, column-contiguous: cell `(r, j)` is at `j * width + r`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.upper >= j && j + self.lower >= i
    }

    /// 0-based storage `(row, col)` holding entry `(i, j)`.
    pub fn storage_index(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        self.in_band(i, j).then(|| (i + self.upper - j, j))
    }

    /// Half-open range of rows `i` with `(i, j)` inside the band.
    #[inline]
    pub fn col_rows(&self, j: usize) -> (usize, usize) {
        (j.saturating_sub(self.upper), (j + self.lower + 1).min(self.n))
    }

    /// Half-open range of columns `j` with `(i, j)` inside the band.
    #[inline]
    pub fn row_cols(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.lower), (i + self.upper + 1).min(self.n))
    }

    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.in_band(i, j), "({i},{j}) outside band");
        j * self.width() + (i + self.upper - j)
    }

    /// Unchecked (debug-asserted) read of an in-band entry.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// Entry `(i, j)` of the logical matrix; zero outside the band.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.at(i, j)
        } else {
            0.0
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if self.in_band(i, j) {
            Ok(self.at(i, j))
        } else {
            Err(self.out_of_band(i, j))
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if self.in_band(i, j) {
            *self.at_mut(i, j) = v;
            Ok(())
        } else {
            Err(self.out_of_band(i, j))
        }
    }

    fn out_of_band(&self, i: usize, j: usize) -> Error {
        Error::OutOfBand {
            row: i,
            col: j,
            lower: self.lower,
            upper: self.upper,
            n: self.n,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.upper, self.lower);
        for j in 0..self.n {
            let (lo, hi) = self.col_rows(j);
            for i in lo..hi {
                *t.at_mut(j, i) = self.at(i, j);
            }
        }
        t
    }

    /// Copy with a wider (or equal) band; new cells are zero.
    pub fn widened(&self, lower: usize, upper: usize) -> Self {
        let lower = lower.max(self.lower);
        let upper = upper.max(self.upper);
        if lower == self.lower && upper == self.upper {
            return self.clone();
        }
        let mut out = Self::zeros(self.n, lower, upper);
        for j in 0..self.n {
            let (lo, hi) = self.col_rows(j);
            for i in lo..hi {
                *out.at_mut(i, j) = self.at(i, j);
            }
        }
        out
    }

    /// Keeps only entries with `-upper <= i - j <= lower`; the result has exactly
    /// the requested bandwidths (cells outside `self`'s band become zero).
    pub fn restricted(&self, lower: usize, upper: usize) -> Self {
        let mut out = Self::zeros(self.n, lower, upper);
        for j in 0..self.n {
            let (lo, hi) = out.col_rows(j);
            for i in lo..hi {
                if self.in_band(i, j) {
                    *out.at_mut(i, j) = self.at(i, j);
                }
            }
        }
        out
    }

    /// Entries with `0 <= i - j <= l`.
    pub fn lower_band(&self, l: usize) -> Result<Self> {
        if l > self.lower {
            return Err(Error::DimensionMismatch(format!(
                "lower_band({l}) exceeds lower bandwidth {}",
                self.lower
            )));
        }
        Ok(self.restricted(l, 0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let mut out = self.widened(other.lower, other.upper);
        for j in 0..other.n {
            let (lo, hi) = other.col_rows(j);
            for i in lo..hi {
                *out.at_mut(i, j) += other.at(i, j);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn add_diagonal(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for n = {}",
                d.len(),
                self.n
            )));
        }
        let mut out = self.clone();
        for (i, &v) in d.iter().enumerate() {
            *out.at_mut(i, i) += v;
        }
        Ok(out)
    }

    /// Elementwise sum over the shared band of `self .* other`.
    pub fn band_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_n(other)?;
        let lower = self.lower.min(other.lower);
        let upper = self.upper.min(other.upper);
        let mut s = 0.0;
        for j in 0..self.n {
            let lo = j.saturating_sub(upper);
            let hi = (j + lower + 1).min(self.n);
            for i in lo..hi {
                s += self.at(i, j) * other.at(i, j);
            }
        }
        Ok(s)
    }

    pub(crate) fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "matrix sizes {} and {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub(crate) fn check_lower(&self) -> Result<()> {
        if self.upper != 0 {
            return Err(Error::NotLowerTriangular(self.upper));
        }
        Ok(())
    }

    /// Serializes as `band n l_l l_u` followed by the storage rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("band {} {} {}\n", self.n, self.lower, self.upper);
        for r in 0..self.width() {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:e}", self.data[j * self.width() + r]))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty input".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "band" {
            return Err(Error::Parse {
                line: hl,
                msg: "expected header `band n l_l l_u`".into(),
            });
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: hl,
                msg: e.to_string(),
            })
        };
        let n = parse_usize(fields[1])?;
        let lower = parse_usize(fields[2])?;
        let upper = parse_usize(fields[3])?;
        let mut rows = Vec::with_capacity(lower + upper + 1);
        for (ln, line) in lines {
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: ln,
                        msg: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != n {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {n} values, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        Self::from_storage_rows(n, lower, upper, &rows)
    }
}

impl fmt::Display for BandedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for BandedMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// Symmetric matrix with bandwidth `l`, stored as its lower band only.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBandedMatrix {
    lower: BandedMatrix,
}

impl SymmetricBandedMatrix {
    pub fn zeros(n: usize, l: usize) -> Self {
        Self {
            lower: BandedMatrix::zeros(n, l, 0),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: BandedMatrix::identity(n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            lower: BandedMatrix::from_diagonal(d),
        }
    }

    /// Interprets a lower-triangular band as the lower half of a symmetric matrix.
    pub fn from_lower(lower: BandedMatrix) -> Result<Self> {
        lower.check_lower()?;
        Ok(Self { lower })
    }

    /// Reads the lower band of `dense`; fails if `dense` is not symmetric or has
    /// entries outside bandwidth `l`.
    pub fn from_dense(dense: &DMatrix<f64>, l: usize) -> Result<Self> {
        let full = BandedMatrix::from_dense(dense, l, l)?;
        let n = full.n();
        for j in 0..n {
            for i in j + 1..(j + l + 1).min(n) {
                if full.at(i, j) != full.at(j, i) {
                    return Err(Error::DimensionMismatch(format!(
                        "dense matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            lower: full.restricted(l, 0),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.lower.n()
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.lower.lower_bw()
    }

    pub fn lower(&self) -> &BandedMatrix {
        &self.lower
    }

    pub fn lower_mut(&mut self) -> &mut BandedMatrix {
        &mut self.lower
    }

    pub fn into_lower(self) -> BandedMatrix {
        self.lower
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.lower.in_band(a, b)
    }

    /// Mirrored read of an in-band entry.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.lower.at(i, j)
        } else {
            self.lower.at(j, i)
        }
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        if i >= j {
            self.lower.at_mut(i, j)
        } else {
            self.lower.at_mut(j, i)
        }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.at(i, j)
        } else {
            0.0
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if i >= j {
            self.lower.get(i, j)
        } else {
            self.lower.get(j, i)
        }
    }

    /// Writes `(i, j)` and, implicitly, `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i >= j {
            self.lower.set(i, j, v)
        } else {
            self.lower.set(j, i, v)
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.lower.diagonal()
    }

    /// General band form with `lower = upper = l`.
    pub fn to_full(&self) -> BandedMatrix {
        let l = self.bandwidth();
        let mut out = BandedMatrix::zeros(self.n(), l, l);
        for j in 0..self.n() {
            let (lo, hi) = self.lower.col_rows(j);
            for i in lo..hi {
                let v = self.lower.at(i, j);
                *out.at_mut(i, j) = v;
                *out.at_mut(j, i) = v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_full().to_dense()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            lower: self.lower.add(&other.lower)?,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            lower: self.lower.scale(c),
        }
    }

    pub fn add_diagonal(&self, d: &[f64]) -> Result<Self> {
        Ok(Self {
            lower: self.lower.add_diagonal(d)?,
        })
    }

    /// Entries with `0 <= i - j <= l` of the symmetric matrix.
    pub fn lower_band(&self, l: usize) -> Result<BandedMatrix> {
        self.lower.lower_band(l)
    }

    /// `sum_ij self_ij * b_ij` over the band of `b`, reading `self` mirrored.
    /// Requires `b`'s band to lie inside `self`'s band.
    pub fn inner_with(&self, b: &BandedMatrix) -> Result<f64> {
        if b.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "matrix sizes {} and {}",
                self.n(),
                b.n()
            )));
        }
        if b.lower_bw() > self.bandwidth() || b.upper_bw() > self.bandwidth() {
            return Err(Error::DimensionMismatch(format!(
                "band ({}, {}) exceeds symmetric bandwidth {}",
                b.lower_bw(),
                b.upper_bw(),
                self.bandwidth()
            )));
        }
        let mut s = 0.0;
        for j in 0..b.n() {
            let (lo, hi) = b.col_rows(j);
            for i in lo..hi {
                s += self.at(i, j) * b.at(i, j);
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_dense(n: usize, lower: usize, upper: usize, seed: u64) -> DMatrix<f64> {
        // xorshift keeps these unit tests independent of the rand crate.
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        DMatrix::from_fn(n, n, |i, j| {
            if i + upper >= j && j + lower >= i {
                next()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn identity_storage_is_single_row() {
        let b = BandedMatrix::from_dense(&DMatrix::identity(3, 3), 0, 0).unwrap();
        assert_eq!(b.width(), 1);
        assert_eq!(b.data(), &[1.0, 1.0, 1.0]);
        assert_eq!(b.get(1, 1).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_round_trip() {
        let d = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0]);
        let b = BandedMatrix::from_dense(&d, 1, 1).unwrap();
        assert_eq!(b.width(), 3);
        assert_eq!(b.data().len(), 6);
        assert_eq!(b.to_dense(), d);
    }

    #[test]
    fn tridiagonal_round_trip() {
        let d = DMatrix::from_fn(5, 5, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let b = BandedMatrix::from_dense(&d, 1, 1).unwrap();
        assert_eq!((b.lower_bw(), b.upper_bw()), (1, 1));
        assert_eq!(b.to_dense(), d);
    }

    #[test]
    fn nonzero_outside_band_is_rejected() {
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            BandedMatrix::from_dense(&d, 1, 1),
            Err(Error::NonzeroOutsideBand { row: 0, col: 2, .. })
        ));
    }

    #[test]
    fn get_set_and_layout() {
        let mut b = BandedMatrix::zeros(4, 2, 1);
        b.set(2, 1, 7.0).unwrap();
        assert_eq!(b.get(2, 1).unwrap(), 7.0);
        // 1-based storage row i - j + l_u + 1 = 3 - 2 + 1 + 1 = 3
        assert_eq!(b.storage_index(2, 1), Some((2, 1)));
        for j in 0..4 {
            assert_eq!(b.storage_index(j, j), Some((1, j)));
        }
        assert!(matches!(b.get(0, 2), Err(Error::OutOfBand { .. })));
        assert!(b.set(3, 0, 1.0).is_err());
    }

    #[test]
    fn transpose_swaps_bandwidths() {
        let d = DMatrix::from_fn(4, 4, |i, j| if i == j || i == j + 1 { 1.0 + i as f64 } else { 0.0 });
        let b = BandedMatrix::from_dense(&d, 1, 0).unwrap();
        let t = b.transpose();
        assert_eq!((t.lower_bw(), t.upper_bw()), (0, 1));
        assert_eq!(t.to_dense(), d.transpose());
        assert_eq!(t.transpose(), b);
    }

    #[test]
    fn add_scale_add_diagonal() {
        let i = BandedMatrix::identity(3);
        assert_eq!(i.add(&i).unwrap(), i.scale(2.0));
        let q = BandedMatrix::from_dense(&random_dense(6, 2, 2, 3), 2, 2).unwrap();
        let mask = [0.0, 4.0, 0.0, 4.0, 4.0, 0.0];
        let r = q.add_diagonal(&mask).unwrap();
        assert_eq!((r.lower_bw(), r.upper_bw()), (2, 2));
        let mut dense = q.to_dense();
        for k in 0..6 {
            dense[(k, k)] += mask[k];
        }
        assert_eq!(r.to_dense(), dense);
        assert!(q.add(&BandedMatrix::identity(5)).is_err());
    }

    #[test]
    fn lower_band_masks() {
        let sym = DMatrix::from_fn(5, 5, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let b = BandedMatrix::from_dense(&sym, 1, 1).unwrap();
        let lb = b.lower_band(1).unwrap();
        assert_eq!(lb.to_dense(), DMatrix::from_fn(5, 5, |i, j| if i >= j { sym[(i, j)] } else { 0.0 }));
        assert_eq!(
            BandedMatrix::identity(4).lower_band(0).unwrap(),
            BandedMatrix::identity(4)
        );
    }

    #[test]
    fn text_format_round_trip() {
        let b = BandedMatrix::from_dense(&random_dense(5, 2, 1, 11), 2, 1).unwrap();
        let text = b.to_text();
        assert!(text.starts_with("band 5 2 1\n"));
        assert_eq!(text.lines().count(), 5);
        let back: BandedMatrix = text.parse().unwrap();
        assert_eq!(back, b);
        assert!(BandedMatrix::from_text("band 3 0 0\n1 2\n").is_err());
    }

    #[test]
    fn symmetric_mirrors() {
        let mut s = SymmetricBandedMatrix::zeros(4, 1);
        s.set(0, 1, 3.0).unwrap();
        assert_eq!(s.get(1, 0).unwrap(), 3.0);
        let d = s.to_dense();
        assert_eq!(d, d.transpose());
        assert!(s.get(0, 3).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_and_layout(n in 1usize..12, lower in 0usize..4, upper in 0usize..4, seed in any::<u64>()) {
            let d = random_dense(n, lower, upper, seed);
            let b = BandedMatrix::from_dense(&d, lower, upper).unwrap();
            prop_assert_eq!(b.data().len(), (lower + upper + 1) * n);
            prop_assert_eq!(b.to_dense(), d.clone());
            prop_assert_eq!(b.transpose().transpose(), b.clone());
            prop_assert_eq!(b.transpose().to_dense(), d.transpose());
            prop_assert_eq!(b.scale(-1.5).to_dense(), d.clone() * -1.5);
            for j in 0..n {
                prop_assert_eq!(b.storage_index(j, j), Some((upper, j)));
                let (lo, hi) = b.col_rows(j);
                prop_assert!(lo <= j && j < hi);
            }
            // corner cells stay zero
            for j in 0..n {
                for r in 0..b.width() {
                    let i = j as isize + r as isize - upper as isize;
                    if i < 0 || i >= n as isize {
                        prop_assert_eq!(b.data()[j * b.width() + r], 0.0);
                    }
                }
            }
        }

        #[test]
        fn add_matches_dense(n in 1usize..10, a in (0usize..3, 0usize..3), c in (0usize..3, 0usize..3), seed in any::<u64>()) {
            let da = random_dense(n, a.0, a.1, seed);
            let dc = random_dense(n, c.0, c.1, seed ^ 0xABCD);
            let s = BandedMatrix::from_dense(&da, a.0, a.1).unwrap()
                .add(&BandedMatrix::from_dense(&dc, c.0, c.1).unwrap()).unwrap();
            prop_assert_eq!((s.lower_bw(), s.upper_bw()), (a.0.max(c.0), a.1.max(c.1)));
            prop_assert_eq!(s.to_dense(), da + dc);
        }
    }
}
