//! Forward-mode scalars and tiny dense matrices.
//!
//! Model builders are written once over [`Scalar`]; evaluating them with
//! [`Dual`] yields the derivative of every assembled entry with respect to
//! the (log) hyperparameters alongside the value.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn scale(self, c: f64) -> Self {
        self * Self::cst(c)
    }
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Value plus `K` directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const K: usize> {
    pub v: f64,
    pub d: [f64; K],
}

impl<const K: usize> Dual<K> {
    /// The `k`-th independent variable with value `v`.
    pub fn var(v: f64, k: usize) -> Self {
        let mut d = [0.0; K];
        d[k] = 1.0;
        Self { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= dv);
        Self { v, d }
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        d.iter_mut().zip(o.d).for_each(|(a, b)| *a += b);
        Self { v: self.v + o.v, d }
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        d.iter_mut().zip(o.d).for_each(|(a, b)| *a -= b);
        Self { v: self.v - o.v, d }
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; K];
        for k in 0..K {
            d[k] = self.d[k] * o.v + self.v * o.d[k];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; K];
        for k in 0..K {
            d[k] = (self.d[k] - v * o.d[k]) * inv;
        }
        Self { v, d }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const K: usize> Scalar for Dual<K> {
    fn cst(x: f64) -> Self {
        Self { v: x, d: [0.0; K] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
}

/// Row-major dense matrix for the `d x d` blocks of state-space models.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SmallMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    out[(i, j)] = out[(i, j)] + a * o[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |s, j| s + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    pub fn cholesky(&self, what: &'static str) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(s.value() > 0.0) {
                        return Err(Error::SingularBlock(what));
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Inverse and log-determinant of a symmetric positive-definite matrix.
    pub fn spd_inverse(&self, what: &'static str) -> Result<(Self, T)> {
        let n = self.rows;
        let l = self.cholesky(what)?;
        let mut logdet = T::zero();
        for i in 0..n {
            logdet = logdet + l[(i, i)].ln().scale(2.0);
        }
        // Columns of L^{-1}, then inverse = L^{-T} L^{-1}.
        let mut linv = Self::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in c..i {
                    s = s - l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / l[(i, i)];
            }
        }
        Ok((linv.transpose().matmul(&linv), logdet))
    }

    /// `x` with `self x = b` for symmetric positive-definite `self`.
    pub fn spd_solve(&self, b: &[T], what: &'static str) -> Result<Vec<T>> {
        let l = self.cholesky(what)?;
        let n = self.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - l[(i, k)] * y[k];
            }
            y[i] = y[i] / l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = y[i] - l[(k, i)] * y[k];
            }
            y[i] = y[i] / l[(i, i)];
        }
        Ok(y)
    }

    pub fn map_value(&self) -> SmallMat<f64> {
        SmallMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.value()).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for SmallMat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SmallMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D2 = Dual<2>;

    #[test]
    fn dual_rules() {
        let x = D2::var(2.0, 0);
        let y = D2::var(3.0, 1);
        let f = x * y + (x / y).exp() - y.ln() * x.sqrt();
        let (xv, yv) = (2.0f64, 3.0f64);
        let dfx = yv + (xv / yv).exp() / yv - yv.ln() * 0.5 / xv.sqrt();
        let dfy = xv - (xv / yv).exp() * xv / (yv * yv) - xv.sqrt() / yv;
        assert!((f.d[0] - dfx).abs() < 1e-14);
        assert!((f.d[1] - dfy).abs() < 1e-14);
        assert_eq!((-x).d, [-1.0, 0.0]);
    }

    #[test]
    fn spd_inverse_and_solve() {
        let a = SmallMat::from_rows(2, 2, vec![4.0, 2.0, 2.0, 5.0]);
        let (inv, ld) = a.spd_inverse("a").unwrap();
        let prod = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-14);
            }
        }
        assert!((ld - 16f64.ln()).abs() < 1e-14);
        let x = a.spd_solve(&[2.0, 3.0], "a").unwrap();
        let b = a.matvec(&x);
        assert!((b[0] - 2.0).abs() < 1e-14 && (b[1] - 3.0).abs() < 1e-14);
        assert!(SmallMat::from_rows(1, 1, vec![-1.0]).cholesky("neg").is_err());
    }
}
