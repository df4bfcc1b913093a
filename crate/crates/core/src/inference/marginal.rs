//! Exact log marginal likelihood of a partially observed GMRF with Gaussian
//! noise: `y = E f + N(0, noise I)`, `f ~ N(0, Q^{-1})`.

use crate::band::{cholesky, log_det_from_cholesky, solve_vec, SymmetricBandedMatrix};
use crate::error::{Error, Result};
use crate::models::SelectionIndex;
use crate::tape::{Tape, Value, Var};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check(q: &SymmetricBandedMatrix, sel: &SelectionIndex, y: &[f64]) -> Result<()> {
    if sel.num_nodes() != q.n() || y.len() != sel.len() {
        return Err(Error::DimensionMismatch(format!(
            "precision of size {}, selection over {} nodes with {} observed, {} values",
            q.n(),
            sel.num_nodes(),
            sel.len(),
            y.len()
        )));
    }
    Ok(())
}

/// `-n/2 log 2pi - log|L| + log|L_Q| - n/2 log t - y'y / 2t + |L^{-1} E'y|^2 / 2t^2`
/// with `L = chol(Q + E'E / t)`, `L_Q = chol(Q)`, `t` the noise variance.
pub fn marginal_likelihood_partial(q: &SymmetricBandedMatrix, sel: &SelectionIndex, y: &[f64], noise: f64) -> Result<f64> {
    check(q, sel, y)?;
    if !(noise > 0.0) {
        return Err(Error::NonPositiveParam { name: "noise variance", value: noise });
    }
    let n = y.len() as f64;
    let post = q.add_diagonal(&sel.mask().iter().map(|m| m / noise).collect::<Vec<_>>())?;
    let l = cholesky(&post)?;
    let lq = cholesky(q)?;
    let r = solve_vec(&l, &sel.scatter(y)?, false)?;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    Ok(-0.5 * n * LN_2PI - log_det_from_cholesky(&l)? + log_det_from_cholesky(&lq)? - 0.5 * n * noise.ln()
        - yy / (2.0 * noise)
        + rr / (2.0 * noise * noise))
}

/// Tape version; `q` is a symmetric node and `log_noise` a scalar node.
pub fn record_marginal_likelihood(tape: &mut Tape, q: Var, sel: &SelectionIndex, y: &[f64], log_noise: Var) -> Result<Var> {
    check(tape.value(q)?.as_sym()?, sel, y)?;
    let n = y.len() as f64;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let neg = tape.scale(log_noise, -1.0)?;
    let inv = tape.exp(neg)?;
    let mask = tape.constant(Value::Vector(sel.mask()))?;
    let d = tape.scale_by(mask, inv)?;
    let post = tape.add_diag(q, d)?;
    let l = tape.cholesky(post)?;
    let lq = tape.cholesky(q)?;
    let ety = tape.constant(Value::Vector(sel.scatter(y)?))?;
    let r = tape.solve_vec(l, ety, false)?;
    let rr = tape.sum_squares(r)?;
    let inv2 = tape.mul(inv, inv)?;
    let quad = tape.mul(rr, inv2)?;
    let quad = tape.scale(quad, 0.5)?;
    let data = tape.scale(inv, -0.5 * yy)?;
    let ld = tape.log_det_chol(l)?;
    let ldq = tape.log_det_chol(lq)?;
    let dets = tape.sub(ldq, ld)?;
    let noise_term = tape.scale(log_noise, -0.5 * n)?;
    let mut acc = tape.add(quad, data)?;
    acc = tape.add(acc, dets)?;
    acc = tape.add(acc, noise_term)?;
    tape.add_const(acc, -0.5 * n * LN_2PI)
}

/// Value and gradient with respect to `(Q, log noise)`.
pub fn marginal_likelihood_grad(
    q: &SymmetricBandedMatrix,
    sel: &SelectionIndex,
    y: &[f64],
    noise: f64,
) -> Result<(f64, SymmetricBandedMatrix, f64)> {
    let mut tape = Tape::new();
    let qv = tape.param("q", Value::Sym(q.clone()))?;
    let ln = tape.param("log_noise", Value::Scalar(noise.ln()))?;
    let out = record_marginal_likelihood(&mut tape, qv, sel, y, ln)?;
    let v = tape.scalar(out)?;
    let g = tape.backward(out)?;
    Ok((v, g.sym("q")?.clone(), g.scalar("log_noise")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let q = SymmetricBandedMatrix::identity(1);
        let v = marginal_likelihood_partial(&q, &SelectionIndex::all(1), &[0.0], 1.0).unwrap();
        assert!((v + 0.5 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn tape_value_matches() {
        let mut q = SymmetricBandedMatrix::zeros(3, 1);
        for i in 0..3 {
            *q.at_mut(i, i) = 2.0;
        }
        *q.at_mut(1, 0) = -0.5;
        *q.at_mut(2, 1) = 0.3;
        let sel = SelectionIndex::new(3, vec![0, 2]).unwrap();
        let y = [0.7, -1.2];
        let a = marginal_likelihood_partial(&q, &sel, &y, 0.4).unwrap();
        let (b, _, _) = marginal_likelihood_grad(&q, &sel, &y, 0.4).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
