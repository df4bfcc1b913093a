//! Gaussian-process regression through the natural parameters of the banded
//! state precision, plus the Kalman and dense baselines on the same model.

use crate::band::{cholesky, log_det_from_cholesky, solve_vec};
use crate::error::{Error, Result};
use crate::inference::dense::{dense_gpr_loglik, dense_gpr_loglik_grad};
use crate::inference::kalman::kalman_loglik;
use crate::models::natural::{likelihood_natural_params, prior_natural_params, LikelihoodNatural, NaturalParams};
use crate::models::ssm::{check_times, KernelSpec, StateSpaceModel};
use crate::models::{record_precision, SsmPrior};
use crate::tape::{Tape, Value};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log p(Y) = sum log C0_ii - 1/2 |C0^{-1} eta0|^2 - sum log C2_ii
/// + 1/2 |C2^{-1} eta2|^2 + log_norm`, with `C0 = chol(Lambda0)`,
/// `C2 = chol(Lambda0 + Lambda1)` and `eta2 = eta0 + eta1`.
pub fn gpr_banded_loglik(prior: &NaturalParams, lik: &LikelihoodNatural) -> Result<f64> {
    let c0 = cholesky(&prior.lambda)?;
    let lam2 = prior.lambda.add(&lik.lambda)?;
    let c2 = cholesky(&lam2)?;
    let eta2: Vec<f64> = prior.eta.iter().zip(&lik.eta).map(|(a, b)| a + b).collect();
    if eta2.len() != prior.eta.len() || lik.eta.len() != prior.eta.len() {
        return Err(Error::DimensionMismatch("prior and likelihood state sizes differ".into()));
    }
    let z0 = solve_vec(&c0, &prior.eta, false)?;
    let z2 = solve_vec(&c2, &eta2, false)?;
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    Ok(log_det_from_cholesky(&c0)? - 0.5 * sq(&z0) - log_det_from_cholesky(&c2)? + 0.5 * sq(&z2) + lik.log_norm)
}

/// Log marginal likelihood of a state-space model from its natural parameters.
pub fn ssm_loglik_banded(ssm: &StateSpaceModel<f64>, y: &[f64]) -> Result<f64> {
    gpr_banded_loglik(&prior_natural_params(ssm)?, &likelihood_natural_params(ssm, y)?)
}

/// Scalar time series with a sum-of-Matérn kernel and Gaussian noise.
///
/// Parameters are always `[log kernel params..., log noise]`.
#[derive(Debug, Clone)]
pub struct GprProblem {
    pub spec: KernelSpec,
    pub times: Vec<f64>,
    pub y: Vec<f64>,
}

impl GprProblem {
    pub fn new(spec: KernelSpec, times: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_times(&times)?;
        if times.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} times but {} values", times.len(), y.len())));
        }
        Ok(Self { spec, times, y })
    }

    pub fn num_params(&self) -> usize {
        self.spec.num_kernel_params() + 1
    }

    pub fn param_names(&self) -> Vec<String> {
        self.spec.param_names()
    }

    fn split<'a>(&self, log_params: &'a [f64]) -> Result<(&'a [f64], f64)> {
        if log_params.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                log_params.len()
            )));
        }
        let (k, n) = log_params.split_at(self.num_params() - 1);
        Ok((k, n[0]))
    }

    pub fn ssm(&self, log_params: &[f64]) -> Result<StateSpaceModel<f64>> {
        let (k, n) = self.split(log_params)?;
        self.spec.build(&self.times, k)?.with_noise(n.exp())
    }

    pub fn loglik_banded(&self, log_params: &[f64]) -> Result<f64> {
        ssm_loglik_banded(&self.ssm(log_params)?, &self.y)
    }

    pub fn loglik_kalman(&self, log_params: &[f64]) -> Result<f64> {
        kalman_loglik(&self.ssm(log_params)?, &self.y)
    }

    pub fn loglik_dense(&self, log_params: &[f64]) -> Result<f64> {
        let (k, n) = self.split(log_params)?;
        let p: Vec<f64> = k.iter().map(|x| x.exp()).collect();
        dense_gpr_loglik(&self.spec.gram(&self.times, &p), &self.y, n.exp())
    }

    pub fn loglik_dense_grad(&self, log_params: &[f64]) -> Result<(f64, Vec<f64>)> {
        dense_gpr_loglik_grad(&self.spec, &self.times, &self.y, log_params)
    }

    /// Banded log likelihood and its gradient over the log parameters, by
    /// reverse mode through the natural parameters. The likelihood precision
    /// and linear term scale as `1 / noise`, which is recorded explicitly.
    pub fn loglik_grad(&self, log_params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (k, log_noise) = self.split(log_params)?;
        let unit = likelihood_natural_params(&self.spec.build(&self.times, k)?, &self.y)?;
        let e = 1.0;
        let t = self.times.len() as f64;
        // Unit-noise normalizer is `-T e/2 log 2pi - SS/2`.
        let ss = -2.0 * (unit.log_norm + 0.5 * t * e * LN_2PI);
        let prior = SsmPrior {
            spec: self.spec.clone(),
            times: self.times.clone(),
        };

        let mut tape = Tape::new();
        let theta = tape.param("kernel", Value::Vector(k.to_vec()))?;
        let ln = tape.param("log_noise", Value::Scalar(log_noise))?;
        let lam0 = record_precision(&mut tape, &prior, theta)?;
        let neg = tape.scale(ln, -1.0)?;
        let inv = tape.exp(neg)?;
        let m = tape.constant(Value::Sym(unit.lambda))?;
        let eta = tape.constant(Value::Vector(unit.eta))?;
        let lam1 = tape.scale_by(m, inv)?;
        let eta1 = tape.scale_by(eta, inv)?;
        let lam2 = tape.add(lam0, lam1)?;
        let c0 = tape.cholesky(lam0)?;
        let c2 = tape.cholesky(lam2)?;
        let z = tape.solve_vec(c2, eta1, false)?;
        let zz = tape.sum_squares(z)?;
        let ld0 = tape.log_det_chol(c0)?;
        let ld2 = tape.log_det_chol(c2)?;
        let half_zz = tape.scale(zz, 0.5)?;
        let data = tape.scale(inv, -0.5 * ss)?;
        let noise_det = tape.scale(ln, -0.5 * t * e)?;
        let mut acc = tape.sub(ld0, ld2)?;
        acc = tape.add(acc, half_zz)?;
        acc = tape.add(acc, data)?;
        acc = tape.add(acc, noise_det)?;
        let out = tape.add_const(acc, -0.5 * t * e * LN_2PI)?;
        let value = tape.scalar(out)?;
        let g = tape.backward(out)?;
        let mut grad = g.vector("kernel")?.to_vec();
        grad.push(g.scalar("log_noise")?);
        Ok((value, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::{finite_diff_check, FD_ATOL, FD_EPS, FD_RTOL};
    use crate::models::KernelKind;

    fn problem(spec: &str) -> GprProblem {
        let times: Vec<f64> = (0..25).map(|i| 0.3 * i as f64 + 0.05 * (i % 3) as f64).collect();
        let y = times.iter().map(|t| (1.3 * t).sin() + 0.2 * (5.0 * t).cos()).collect();
        GprProblem::new(KernelSpec::parse(spec).unwrap(), times, y).unwrap()
    }

    #[test]
    fn three_ways_agree() {
        for (spec, p) in [
            ("matern12", vec![0.2, 0.1, -1.5]),
            ("matern32", vec![-0.1, 0.4, -2.0]),
            ("matern32+matern12", vec![0.0, 0.5, -1.0, -0.5, -1.8]),
        ] {
            let pr = problem(spec);
            let b = pr.loglik_banded(&p).unwrap();
            let k = pr.loglik_kalman(&p).unwrap();
            let d = pr.loglik_dense(&p).unwrap();
            assert!((b - k).abs() < 1e-8 && (b - d).abs() < 1e-8, "{spec}: {b} {k} {d}");
        }
    }

    #[test]
    fn gradients_match_differences_and_dense() {
        let pr = problem("matern32+matern12");
        let p = [0.0, 0.5, -1.0, -0.5, -1.8];
        let (v, g) = pr.loglik_grad(&p).unwrap();
        assert!((v - pr.loglik_banded(&p).unwrap()).abs() < 1e-10);
        let rep = finite_diff_check(|x| pr.loglik_banded(x), &p, &g, FD_EPS);
        assert!(rep.passes(FD_RTOL, FD_ATOL), "{rep:?}");
        let (_, gd) = pr.loglik_dense_grad(&p).unwrap();
        for (a, b) in g.iter().zip(&gd) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
        }
        assert_eq!(pr.spec.components[0], KernelKind::Matern32);
    }
}
