//! Gaussian variational inference with a banded Cholesky-parameterized
//! precision.

use serde::Serialize;

use crate::band::{
    cholesky, gram_from_cholesky, log_det_from_cholesky, product_band_vec_transposed, sparse_inverse_subset,
    BandedMatrix, SymmetricBandedMatrix,
};
use crate::error::{Error, Result};
use crate::inference::likelihood::{expected_log_lik, Likelihood, Observations};
use crate::inference::optimize::{maximize, OptimConfig};
use crate::inference::quadrature::GaussianQuadrature;
use crate::tape::{trace_product, Tape, Value, Var};

/// `N(m_p, (L_p L_p^T)^{-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    pub m_p: Vec<f64>,
    pub l_p: BandedMatrix,
}

fn check_factor(m: &[f64], l: &BandedMatrix) -> Result<()> {
    if !l.is_lower_triangular() {
        return Err(Error::NotLowerTriangular(l.upper_bw()));
    }
    if m.len() != l.n() {
        return Err(Error::DimensionMismatch(format!("mean of length {} for a {}x{} factor", m.len(), l.n(), l.n())));
    }
    if let Some(i) = l.diagonal().iter().position(|d| !(*d > 0.0)) {
        return Err(Error::NonPositiveDiagonal(i));
    }
    Ok(())
}

impl GaussianPrior {
    pub fn new(m_p: Vec<f64>, l_p: BandedMatrix) -> Result<Self> {
        check_factor(&m_p, &l_p)?;
        Ok(Self { m_p, l_p })
    }

    pub fn from_precision(m_p: Vec<f64>, q: &SymmetricBandedMatrix) -> Result<Self> {
        Self::new(m_p, cholesky(q)?)
    }

    pub fn zero_mean(q: &SymmetricBandedMatrix) -> Result<Self> {
        Self::from_precision(vec![0.0; q.n()], q)
    }

    pub fn n(&self) -> usize {
        self.m_p.len()
    }

    pub fn precision(&self) -> Result<SymmetricBandedMatrix> {
        gram_from_cholesky(&self.l_p)
    }
}

/// `q(F) = N(m_q, (L_q L_q^T)^{-1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalState {
    pub m_q: Vec<f64>,
    #[serde(skip)]
    pub l_q: BandedMatrix,
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl VariationalState {
    pub fn new(m_q: Vec<f64>, l_q: BandedMatrix) -> Result<Self> {
        check_factor(&m_q, &l_q)?;
        Ok(Self { m_q, l_q })
    }

    /// `q = p`, widened to `bandwidth` sub-diagonals if that exceeds the prior's.
    pub fn from_prior(p: &GaussianPrior, bandwidth: usize) -> Self {
        let bw = bandwidth.max(p.l_p.lower_bw());
        Self {
            m_q: p.m_p.clone(),
            l_q: p.l_p.widened(bw, 0),
        }
    }

    pub fn n(&self) -> usize {
        self.m_q.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.l_q.lower_bw()
    }

    /// Marginal means and variances `diag(Q_q^{-1})`.
    pub fn marginals(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.m_q.clone(), sparse_inverse_subset(&self.l_q)?.diagonal()))
    }

    /// `[m_q, cells of L_q column by column]`, diagonal cells mapped through
    /// the inverse softplus.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        let mut x = self.m_q.clone();
        for j in 0..self.n() {
            let (lo, hi) = self.l_q.col_rows(j);
            for i in lo.max(j)..hi {
                let v = self.l_q.at(i, j);
                x.push(if i == j { softplus_inv(v) } else { v });
            }
        }
        x
    }

    pub fn from_unconstrained(n: usize, bandwidth: usize, x: &[f64]) -> Result<Self> {
        let (m, raw) = split_raw(n, bandwidth, x)?;
        let mut l = raw;
        for i in 0..n {
            let d = l.at_mut(i, i);
            *d = softplus(*d);
        }
        Self::new(m.to_vec(), l)
    }
}

fn split_raw(n: usize, bw: usize, x: &[f64]) -> Result<(&[f64], BandedMatrix)> {
    let cells = (0..n).map(|j| (n - j).min(bw + 1)).sum::<usize>();
    if x.len() != n + cells {
        return Err(Error::DimensionMismatch(format!("expected {} variational parameters, got {}", n + cells, x.len())));
    }
    let mut l = BandedMatrix::zeros(n, bw, 0);
    let mut k = n;
    for j in 0..n {
        for i in j..(j + bw + 1).min(n) {
            *l.at_mut(i, j) = x[k];
            k += 1;
        }
    }
    Ok((&x[..n], l))
}

fn check_bands(q: &BandedMatrix, p: &GaussianPrior) -> Result<()> {
    if q.n() != p.n() {
        return Err(Error::DimensionMismatch(format!("variational size {} vs prior size {}", q.n(), p.n())));
    }
    if q.lower_bw() < p.l_p.lower_bw() {
        return Err(Error::InvalidConfig(format!(
            "variational bandwidth {} is narrower than the prior's {}",
            q.lower_bw(),
            p.l_p.lower_bw()
        )));
    }
    Ok(())
}

/// `KL(q || p) = 1/2 (tr(Q_q^{-1} Q_p) + 2 sum(log L_q,ii - log L_p,ii)
/// + |L_p^T (m_p - m_q)|^2 - N)`; the trace only needs `Q_q^{-1}` inside
/// the band of `Q_p`.
pub fn kl_banded(q: &VariationalState, p: &GaussianPrior) -> Result<f64> {
    check_bands(&q.l_q, p)?;
    let s = sparse_inverse_subset(&q.l_q)?;
    let tr = trace_product(&s, &p.precision()?)?;
    let diff: Vec<f64> = p.m_p.iter().zip(&q.m_q).map(|(a, b)| a - b).collect();
    let u = product_band_vec_transposed(&p.l_p, &diff)?;
    let quad: f64 = u.iter().map(|x| x * x).sum();
    let ld = log_det_from_cholesky(&q.l_q)? - log_det_from_cholesky(&p.l_p)?;
    Ok(0.5 * (tr + 2.0 * ld + quad - p.n() as f64))
}

/// Tape version of [`kl_banded`] over `m_q` (vector) and `L_q` (banded).
pub fn record_kl(tape: &mut Tape, m_q: Var, l_q: Var, p: &GaussianPrior, q_p: &SymmetricBandedMatrix) -> Result<Var> {
    check_bands(tape.value(l_q)?.as_banded()?, p)?;
    let s = tape.sparse_inverse(l_q)?;
    let qp = tape.constant(Value::Sym(q_p.clone()))?;
    let tr = tape.trace_product(s, qp)?;
    let mp = tape.constant(Value::Vector(p.m_p.clone()))?;
    let lp = tape.constant(Value::Banded(p.l_p.clone()))?;
    let diff = tape.sub(mp, m_q)?;
    let u = tape.product_band_vec(lp, diff, true)?;
    let quad = tape.sum_squares(u)?;
    let ldq = tape.log_det_chol(l_q)?;
    let ldq2 = tape.scale(ldq, 2.0)?;
    let mut acc = tape.add(tr, ldq2)?;
    acc = tape.add(acc, quad)?;
    let c = -2.0 * log_det_from_cholesky(&p.l_p)? - p.n() as f64;
    let acc = tape.add_const(acc, c)?;
    tape.scale(acc, 0.5)
}

/// Evidence lower bound `sum_i E_q log p(y_i | F_i) - KL(q || p)`.
pub fn vi_objective(
    q: &VariationalState,
    p: &GaussianPrior,
    lik: &Likelihood,
    obs: &Observations,
    quad: &GaussianQuadrature,
) -> Result<f64> {
    lik.validate(obs)?;
    let (mu, s2) = q.marginals()?;
    let (ell, _, _) = expected_log_lik(lik, obs, &mu, &s2, quad)?;
    Ok(ell - kl_banded(q, p)?)
}

/// Fixed data of a variational problem; evaluates the ELBO and its gradient
/// in the unconstrained coordinates of [`VariationalState::to_unconstrained`].
pub struct ViProblem<'a> {
    pub prior: &'a GaussianPrior,
    pub lik: &'a Likelihood,
    pub obs: &'a Observations,
    pub quad: GaussianQuadrature,
    pub bandwidth: usize,
    q_p: SymmetricBandedMatrix,
}

impl<'a> ViProblem<'a> {
    pub fn new(prior: &'a GaussianPrior, lik: &'a Likelihood, obs: &'a Observations, quad_points: usize, bandwidth: usize) -> Result<Self> {
        lik.validate(obs)?;
        if obs.sel.num_nodes() != prior.n() {
            return Err(Error::DimensionMismatch(format!(
                "observations over {} nodes, prior over {}",
                obs.sel.num_nodes(),
                prior.n()
            )));
        }
        if quad_points == 0 {
            return Err(Error::InvalidConfig("need at least one quadrature point".into()));
        }
        Ok(Self {
            prior,
            lik,
            obs,
            quad: GaussianQuadrature::new(quad_points),
            bandwidth: bandwidth.max(prior.l_p.lower_bw()),
            q_p: prior.precision()?,
        })
    }

    pub fn initial_state(&self) -> VariationalState {
        VariationalState::from_prior(self.prior, self.bandwidth)
    }

    pub fn state(&self, x: &[f64]) -> Result<VariationalState> {
        VariationalState::from_unconstrained(self.prior.n(), self.bandwidth, x)
    }

    pub fn elbo(&self, x: &[f64]) -> Result<f64> {
        vi_objective(&self.state(x)?, self.prior, self.lik, self.obs, &self.quad)
    }

    pub fn elbo_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.prior.n();
        let bw = self.bandwidth;
        let (m, raw) = split_raw(n, bw, x)?;
        let mut tape = Tape::new();
        let mq = tape.param("m_q", Value::Vector(m.to_vec()))?;
        let lraw = tape.param("l_raw", Value::Banded(raw.clone()))?;

        let mut l = raw;
        for i in 0..n {
            let d = l.at_mut(i, i);
            *d = softplus(*d);
        }
        let lq = tape.custom(
            &[lraw],
            Value::Banded(l),
            Box::new(|bar, _, inputs| {
                let mut g = bar.as_banded()?.clone();
                let raw = inputs[0].as_banded()?;
                for i in 0..g.n() {
                    *g.at_mut(i, i) *= sigmoid(raw.at(i, i));
                }
                Ok(vec![Value::Banded(g)])
            }),
        )?;
        let s = tape.sparse_inverse(lq)?;
        let s2 = tape.diag(s)?;
        let (ell, gm, gs) = {
            let mu = tape.value(mq)?.as_vector()?;
            let var = tape.value(s2)?.as_vector()?;
            expected_log_lik(self.lik, self.obs, mu, var, &self.quad)?
        };
        let ell = tape.custom(
            &[mq, s2],
            Value::Scalar(ell),
            Box::new(move |bar, _, _| {
                let b = bar.as_scalar()?;
                Ok(vec![
                    Value::Vector(gm.iter().map(|g| g * b).collect()),
                    Value::Vector(gs.iter().map(|g| g * b).collect()),
                ])
            }),
        )?;
        let kl = record_kl(&mut tape, mq, lq, self.prior, &self.q_p)?;
        let out = tape.sub(ell, kl)?;
        let value = tape.scalar(out)?;
        let g = tape.backward(out)?;
        let mut grad = g.vector("m_q")?.to_vec();
        let gl = g.banded("l_raw")?;
        for j in 0..n {
            for i in j..(j + bw + 1).min(n) {
                grad.push(gl.entry(i, j));
            }
        }
        Ok((value, grad))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViConfig {
    pub quad_points: usize,
    /// Sub-diagonals of `L_q`; never narrower than the prior factor.
    pub bandwidth: usize,
    pub optim: OptimConfig,
}

impl Default for ViConfig {
    fn default() -> Self {
        Self {
            quad_points: 20,
            bandwidth: 0,
            optim: OptimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViFit {
    pub state: VariationalState,
    pub elbo: f64,
    /// ELBO at the initial state and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes the ELBO from `q = p`.
pub fn fit_vi(prior: &GaussianPrior, lik: &Likelihood, obs: &Observations, cfg: &ViConfig) -> Result<ViFit> {
    let problem = ViProblem::new(prior, lik, obs, cfg.quad_points, cfg.bandwidth)?;
    let x0 = problem.initial_state().to_unconstrained();
    let r = maximize(|x| problem.elbo_grad(x), &x0, &cfg.optim)?;
    Ok(ViFit {
        state: problem.state(&r.x)?,
        elbo: r.value,
        trace: r.trace,
        iterations: r.iterations,
        converged: r.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SelectionIndex;

    #[test]
    fn scalar_kl() {
        let p = GaussianPrior::new(vec![1.0], BandedMatrix::identity(1)).unwrap();
        let q = VariationalState::new(vec![0.0], BandedMatrix::identity(1)).unwrap();
        assert!((kl_banded(&q, &p).unwrap() - 0.5).abs() < 1e-15);
        let same = VariationalState::from_prior(&p, 0);
        assert!(kl_banded(&same, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn softplus_round_trip() {
        for y in [1e-3, 0.5, 2.0, 40.0] {
            assert!((softplus(softplus_inv(y)) - y).abs() < 1e-12 * (1.0 + y));
        }
    }

    #[test]
    fn unconstrained_round_trip() {
        let mut q = SymmetricBandedMatrix::zeros(4, 1);
        for i in 0..4 {
            *q.at_mut(i, i) = 2.0;
        }
        for i in 1..4 {
            *q.at_mut(i, i - 1) = -0.7;
        }
        let p = GaussianPrior::zero_mean(&q).unwrap();
        let s = VariationalState::from_prior(&p, 2);
        let back = VariationalState::from_unconstrained(4, 2, &s.to_unconstrained()).unwrap();
        for (a, b) in back.l_q.data().iter().zip(s.l_q.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn prior_initialization_has_zero_kl() {
        let q = SymmetricBandedMatrix::identity(3).scale(2.0);
        let p = GaussianPrior::zero_mean(&q).unwrap();
        let obs = Observations {
            sel: SelectionIndex::new(3, vec![1]).unwrap(),
            y: vec![0.3],
        };
        let lik = Likelihood::Gaussian { noise: 0.5 };
        let pr = ViProblem::new(&p, &lik, &obs, 20, 0).unwrap();
        let x0 = pr.initial_state().to_unconstrained();
        let (v, _) = pr.elbo_grad(&x0).unwrap();
        let (ell, _, _) = expected_log_lik(&lik, &obs, &[0.0; 3], &[0.5; 3], &pr.quad).unwrap();
        assert!((v - ell).abs() < 1e-13);
    }
}
