//! Dense `O(n^3)` Gaussian-process regression, used as a baseline and oracle.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::ssm::KernelSpec;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `-1/2 |L^{-1} y|^2 - sum log L_ii - n/2 log 2pi` with `L = chol(K + noise I)`.
pub fn dense_gpr_loglik(k: &DMatrix<f64>, y: &[f64], noise: f64) -> Result<f64> {
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch(format!("gram {}x{} for {n} values", k.nrows(), k.ncols())));
    }
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += noise;
    }
    let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite(0))?;
    let l = chol.l();
    let z = l.solve_lower_triangular(&DVector::from_column_slice(y)).ok_or(Error::SingularDiagonal(0))?;
    let logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    Ok(-0.5 * z.norm_squared() - logdet - 0.5 * n as f64 * LN_2PI)
}

/// Value and gradient with respect to `[kernel log-params..., log noise]`.
pub fn dense_gpr_loglik_grad(spec: &KernelSpec, times: &[f64], y: &[f64], log_params: &[f64]) -> Result<(f64, Vec<f64>)> {
    let nk = spec.num_kernel_params();
    if log_params.len() != nk + 1 {
        return Err(Error::DimensionMismatch(format!("expected {} parameters", nk + 1)));
    }
    let p: Vec<f64> = log_params.iter().map(|x| x.exp()).collect();
    let n = times.len();
    let noise = p[nk];
    let mut a = spec.gram(times, &p[..nk]);
    for i in 0..n {
        a[(i, i)] += noise;
    }
    let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite(0))?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let ainv = chol.inverse();
    let l = chol.l();
    let logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let value = -0.5 * yv.dot(&alpha) - logdet - 0.5 * n as f64 * LN_2PI;
    // d/dtheta = 1/2 tr((alpha alpha^T - A^{-1}) dA/dtheta)
    let w = &alpha * alpha.transpose() - ainv;
    let mut grad = vec![0.0; nk + 1];
    for (c, kind) in spec.components.iter().enumerate() {
        let (s2, ell) = (p[2 * c], p[2 * c + 1]);
        let (mut gv, mut gl) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let r = (times[i] - times[j]).abs();
                let kv = kind.eval(r, s2, ell);
                let dl = match kind {
                    crate::models::KernelKind::Matern12 => kv * r / ell,
                    crate::models::KernelKind::Matern32 => {
                        let z = 3f64.sqrt() * r / ell;
                        s2 * z * z * (-z).exp()
                    }
                };
                gv += w[(i, j)] * kv;
                gl += w[(i, j)] * dl;
            }
        }
        grad[2 * c] = 0.5 * gv;
        grad[2 * c + 1] = 0.5 * gl;
    }
    grad[nk] = 0.5 * noise * w.trace();
    Ok((value, grad))
}
