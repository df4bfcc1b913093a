//! Natural parameters `(eta, Lambda)` of the joint state prior and of the
//! observation likelihood, viewed as Gaussians over the stacked states
//! `F = [F_0; ...; F_T]`.

use crate::band::SymmetricBandedMatrix;
use crate::dual::{Dual, Scalar, SmallMat};
use crate::error::{Error, Result};
use crate::models::ssm::StateSpaceModel;

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    pub eta: Vec<f64>,
    pub lambda: SymmetricBandedMatrix,
}

/// Likelihood natural parameters plus the data-only normalizer
/// `-T e/2 log 2pi - T/2 log|R| - 1/2 sum_t (Y_t - c)^T R^{-1} (Y_t - c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodNatural {
    pub eta: Vec<f64>,
    pub lambda: SymmetricBandedMatrix,
    pub log_norm: f64,
}

/// Lower-band cells of a symmetric matrix over a generic scalar.
struct Cells<S> {
    n: usize,
    bw: usize,
    data: Vec<S>,
}

impl<S: Scalar> Cells<S> {
    fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![S::zero(); n * (bw + 1)],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: S) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        let k = j * (self.bw + 1) + (i - j);
        self.data[k] = self.data[k] + v;
    }

    fn add_block(&mut self, r0: usize, c0: usize, m: &SmallMat<S>, lower_only: bool) {
        for i in 0..m.rows {
            for j in 0..m.cols {
                if !lower_only || r0 + i >= c0 + j {
                    self.add(r0 + i, c0 + j, m[(i, j)]);
                }
            }
        }
    }

    fn to_sym(&self, f: impl Fn(&S) -> f64) -> SymmetricBandedMatrix {
        let mut s = SymmetricBandedMatrix::zeros(self.n, self.bw);
        for j in 0..self.n {
            for i in j..(j + self.bw + 1).min(self.n) {
                *s.at_mut(i, j) = f(&self.data[j * (self.bw + 1) + (i - j)]);
            }
        }
        s
    }
}

/// Declared bandwidth of the state precision.
pub fn state_bandwidth(d: usize) -> usize {
    2 * d - 1
}

fn assemble_prior<S: Scalar>(ssm: &StateSpaceModel<S>) -> Result<(Vec<S>, Cells<S>)> {
    let d = ssm.d;
    let t_len = ssm.num_steps();
    let n = (t_len + 1) * d;
    let mut lam = Cells::new(n, state_bandwidth(d));
    let mut eta = vec![S::zero(); n];

    let (s0_inv, _) = ssm.sigma0.spd_inverse("Sigma0")?;
    lam.add_block(0, 0, &s0_inv, true);
    for (i, v) in s0_inv.matvec(&ssm.mu0).into_iter().enumerate() {
        eta[i] = eta[i] + v;
    }
    for t in 1..=t_len {
        let (qi, _) = ssm.q[t - 1].spd_inverse("Q_t")?;
        let a = &ssm.a[t - 1];
        let qa = qi.matmul(a);
        let (cur, prev) = (t * d, (t - 1) * d);
        lam.add_block(cur, cur, &qi, true);
        lam.add_block(prev, prev, &a.transpose().matmul(&qa), true);
        lam.add_block(cur, prev, &qa.scaled(-S::one()), false);
        let qb = qi.matvec(&ssm.b[t - 1]);
        let aqb = a.transpose().matvec(&qb);
        for i in 0..d {
            eta[cur + i] = eta[cur + i] + qb[i];
            eta[prev + i] = eta[prev + i] - aqb[i];
        }
    }
    Ok((eta, lam))
}

/// Prior precision `Lambda_0` (bandwidth `2d - 1`) and linear term `eta_0`.
pub fn prior_natural_params(ssm: &StateSpaceModel<f64>) -> Result<NaturalParams> {
    let (eta, lam) = assemble_prior(ssm)?;
    Ok(NaturalParams {
        eta,
        lambda: lam.to_sym(|x| *x),
    })
}

/// Prior natural parameters and their derivatives with respect to the first
/// `nparams` dual directions.
pub fn prior_natural_params_jacobian<const K: usize>(
    ssm: &StateSpaceModel<Dual<K>>,
    nparams: usize,
) -> Result<(NaturalParams, Vec<NaturalParams>)> {
    if nparams > K {
        return Err(Error::InvalidConfig(format!("at most {K} hyperparameters are supported")));
    }
    let (eta, lam) = assemble_prior(ssm)?;
    let value = NaturalParams {
        eta: eta.iter().map(|x| x.v).collect(),
        lambda: lam.to_sym(|x| x.v),
    };
    let derivs = (0..nparams)
        .map(|k| NaturalParams {
            eta: eta.iter().map(|x| x.d[k]).collect(),
            lambda: lam.to_sym(|x| x.d[k]),
        })
        .collect();
    Ok((value, derivs))
}

/// `Lambda_1` has `H^T R^{-1} H` on the blocks of `F_1 .. F_T` and zero on
/// `F_0`; `eta_1` block `t` is `H^T R^{-1} (Y_t - c)`. `y` is `Y_1 .. Y_T`
/// flattened. `Lambda_1` is stored with the prior's bandwidth so the two add
/// without reshaping.
pub fn likelihood_natural_params(ssm: &StateSpaceModel<f64>, y: &[f64]) -> Result<LikelihoodNatural> {
    let (d, e, t_len) = (ssm.d, ssm.e, ssm.num_steps());
    if y.len() != t_len * e {
        return Err(Error::DimensionMismatch(format!(
            "expected {} observations, got {}",
            t_len * e,
            y.len()
        )));
    }
    let (r_inv, r_logdet) = ssm.r.spd_inverse("R")?;
    let ht = ssm.h.transpose();
    let hrh = ht.matmul(&r_inv).matmul(&ssm.h);
    let n = (t_len + 1) * d;
    let mut lam = Cells::<f64>::new(n, state_bandwidth(d));
    let mut eta = vec![0.0; n];
    let mut quad = 0.0;
    for t in 1..=t_len {
        lam.add_block(t * d, t * d, &hrh, true);
        let resid: Vec<f64> = (0..e).map(|i| y[(t - 1) * e + i] - ssm.c[i]).collect();
        let u = r_inv.matvec(&resid);
        quad += resid.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        for (i, v) in ht.matvec(&u).into_iter().enumerate() {
            eta[t * d + i] = v;
        }
    }
    let tf = t_len as f64;
    Ok(LikelihoodNatural {
        eta,
        lambda: lam.to_sym(|x| *x),
        log_norm: -0.5 * tf * e as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * tf * r_logdet - 0.5 * quad,
    })
}

/// `log|Lambda_0| = -log|Sigma_0| - sum_t log|Q_t|`, from the blocks alone.
pub fn prior_log_det_closed_form(ssm: &StateSpaceModel<f64>) -> Result<f64> {
    let mut s = -ssm.sigma0.spd_inverse("Sigma0")?.1;
    for q in &ssm.q {
        s -= q.spd_inverse("Q_t")?.1;
    }
    Ok(s)
}
