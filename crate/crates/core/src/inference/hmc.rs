//! Hamiltonian Monte Carlo on whitened latents `F = m_p + L^{-T} v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::band::solve_vec;
use crate::error::{Error, Result};
use crate::exec::{map_range, Mode};
use crate::inference::likelihood::{log_lik_sum, log_sum_exp, Likelihood, Observations};
use crate::inference::vi::GaussianPrior;
use crate::models::{record_precision, PriorModel};
use crate::tape::{Tape, Value};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    /// Kept draws after burn-in.
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            leapfrog_steps: 20,
            samples: 1000,
            burn_in: 500,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("need at least one leapfrog step".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HmcChain {
    pub samples: Vec<Vec<f64>>,
    pub accepted: usize,
    pub proposals: usize,
    /// Proposals rejected because the energy was not finite or the target
    /// could not be evaluated.
    pub divergent: usize,
    pub mean_abs_energy_error: f64,
}

impl HmcChain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposals.max(1) as f64
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[k]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        mean_of(&self.samples)
    }
}

pub fn mean_of(samples: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let mut m = vec![0.0; first.len()];
    for s in samples {
        m.iter_mut().zip(s).for_each(|(a, b)| *a += b);
    }
    let n = samples.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means with `floor(sqrt(n))` batches.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let b = (n as f64).sqrt().floor() as usize;
    if b < 2 {
        return f64::NAN;
    }
    let size = n / b;
    let means: Vec<f64> = (0..b).map(|k| xs[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let mu = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

type Eval = (f64, Vec<f64>);

/// Leapfrog integration; `None` if any evaluation fails or is non-finite.
fn leapfrog<F>(target: &mut F, x: &[f64], p: &[f64], start: &Eval, eps: f64, steps: usize) -> Option<(Vec<f64>, Vec<f64>, Eval)>
where
    F: FnMut(&[f64]) -> Result<Eval>,
{
    let mut x = x.to_vec();
    let mut p = p.to_vec();
    let mut g = start.1.clone();
    let mut f = start.0;
    for _ in 0..steps {
        p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi += 0.5 * eps * gi);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += eps * pi);
        let (fv, gv) = target(&x).ok()?;
        if !fv.is_finite() || gv.iter().any(|v| !v.is_finite()) {
            return None;
        }
        f = fv;
        g = gv;
        p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi += 0.5 * eps * gi);
    }
    Some((x, p, (f, g)))
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

/// `H(end) - H(start)` along one trajectory with identity mass.
pub fn energy_error<F>(mut target: F, x: &[f64], p: &[f64], eps: f64, steps: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Eval>,
{
    let start = target(x)?;
    let h0 = -start.0 + kinetic(p);
    let (_, pn, (fe, _)) = leapfrog(&mut target, x, p, &start, eps, steps).ok_or(Error::NonFiniteObjective)?;
    Ok(-fe + kinetic(&pn) - h0)
}

fn run_chain<F>(cfg: &HmcConfig, x0: &[f64], mut target: F, stream: u64) -> Result<HmcChain>
where
    F: FnMut(&[f64]) -> Result<Eval>,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut x = x0.to_vec();
    let mut cur = target(&x)?;
    if !cur.0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut chain = HmcChain {
        samples: Vec::with_capacity(cfg.samples),
        accepted: 0,
        proposals: 0,
        divergent: 0,
        mean_abs_energy_error: 0.0,
    };
    let mut abs_err_sum = 0.0;
    for it in 0..cfg.burn_in + cfg.samples {
        let p: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        let u: f64 = rng.random();
        chain.proposals += 1;
        let h0 = -cur.0 + kinetic(&p);
        match leapfrog(&mut target, &x, &p, &cur, cfg.step_size, cfg.leapfrog_steps) {
            Some((xn, pn, en)) => {
                let dh = -en.0 + kinetic(&pn) - h0;
                if dh.is_finite() {
                    abs_err_sum += dh.abs();
                    if u.ln() < -dh {
                        x = xn;
                        cur = en;
                        chain.accepted += 1;
                    }
                } else {
                    chain.divergent += 1;
                }
            }
            None => chain.divergent += 1,
        }
        if it >= cfg.burn_in {
            chain.samples.push(x.clone());
        }
    }
    let finite = chain.proposals - chain.divergent;
    chain.mean_abs_energy_error = abs_err_sum / finite.max(1) as f64;
    Ok(chain)
}

/// One chain; bit-reproducible for a given seed.
pub fn hmc_sample<F>(cfg: &HmcConfig, x0: &[f64], target: F) -> Result<HmcChain>
where
    F: FnMut(&[f64]) -> Result<Eval>,
{
    run_chain(cfg, x0, target, 0)
}

/// Independent chains sharing the seed on distinct random streams.
pub fn hmc_chains<F>(cfg: &HmcConfig, x0: &[f64], chains: usize, mode: Mode, target: F) -> Result<Vec<HmcChain>>
where
    F: Fn(&[f64]) -> Result<Eval> + Sync,
{
    map_range(mode, chains, |k| run_chain(cfg, x0, &target, k as u64))
        .into_iter()
        .collect()
}

/// Fixed-hyperparameter log joint over whitened `v`:
/// `log N(v; 0, I) + sum log p(y | F)` with `F = m_p + L_p^{-T} v`.
pub struct WhitenedTarget<'a> {
    pub prior: &'a GaussianPrior,
    pub lik: &'a Likelihood,
    pub obs: &'a Observations,
}

impl<'a> WhitenedTarget<'a> {
    pub fn new(prior: &'a GaussianPrior, lik: &'a Likelihood, obs: &'a Observations) -> Result<Self> {
        lik.validate(obs)?;
        if obs.sel.num_nodes() != prior.n() {
            return Err(Error::DimensionMismatch("observations and prior sizes differ".into()));
        }
        Ok(Self { prior, lik, obs })
    }

    pub fn latent(&self, v: &[f64]) -> Result<Vec<f64>> {
        let f = solve_vec(&self.prior.l_p, v, true)?;
        Ok(f.iter().zip(&self.prior.m_p).map(|(a, b)| a + b).collect())
    }

    pub fn log_joint(&self, v: &[f64]) -> Result<Eval> {
        let f = self.latent(v)?;
        let (ll, gf) = log_lik_sum(self.lik, self.obs, &f)?;
        // dF/dv = L^{-T}, so the likelihood pulls back through L^{-1}.
        let gv = solve_vec(&self.prior.l_p, &gf, false)?;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let value = -0.5 * vv - 0.5 * v.len() as f64 * LN_2PI + ll;
        Ok((value, gv.iter().zip(v).map(|(g, x)| g - x).collect()))
    }
}

/// Log joint over whitened latents and log-hyperparameters of a zero-mean
/// prior, `log N(v; 0, I) + log N(theta; 0, I) + sum log p(y | F)` with
/// `F = L_Q(theta)^{-T} v`. Returns the value, `d/dv` and `d/dtheta`.
pub fn hmc_log_joint(
    v: &[f64],
    theta: &[f64],
    model: &dyn PriorModel,
    lik: &Likelihood,
    obs: &Observations,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut tape = Tape::new();
    let th = tape.param("theta", Value::Vector(theta.to_vec()))?;
    let vv = tape.param("v", Value::Vector(v.to_vec()))?;
    let q = record_precision(&mut tape, model, th)?;
    let l = tape.cholesky(q)?;
    let f = tape.solve_vec(l, vv, true)?;
    let (ll, gf) = log_lik_sum(lik, obs, tape.value(f)?.as_vector()?)?;
    let ll = tape.custom(
        &[f],
        Value::Scalar(ll),
        Box::new(move |bar, _, _| {
            let b = bar.as_scalar()?;
            Ok(vec![Value::Vector(gf.iter().map(|g| g * b).collect())])
        }),
    )?;
    let pv = tape.sum_squares(vv)?;
    let pt = tape.sum_squares(th)?;
    let prior_sq = tape.add(pv, pt)?;
    let prior_sq = tape.scale(prior_sq, -0.5)?;
    let acc = tape.add(ll, prior_sq)?;
    let out = tape.add_const(acc, -0.5 * (v.len() + theta.len()) as f64 * LN_2PI)?;
    let value = tape.scalar(out)?;
    let g = tape.backward(out)?;
    Ok((value, g.vector("v")?.to_vec(), g.vector("theta")?.to_vec()))
}

/// `sum_k log( mean_s p(y_k | F_s) )` over latent draws.
pub fn log_predictive_from_samples(lik: &Likelihood, obs: &Observations, latents: &[Vec<f64>]) -> Result<f64> {
    lik.validate(obs)?;
    if latents.is_empty() {
        return Err(Error::InvalidConfig("no samples".into()));
    }
    let ln_s = (latents.len() as f64).ln();
    let mut total = 0.0;
    let mut terms = vec![0.0; latents.len()];
    for (k, (&i, &y)) in obs.sel.indices().iter().zip(&obs.y).enumerate() {
        for (t, f) in terms.iter_mut().zip(latents) {
            *t = lik.log_density(k, y, f[i]).0;
        }
        total += log_sum_exp(&terms) - ln_s;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(prec: f64) -> impl Fn(&[f64]) -> Result<Eval> {
        move |x: &[f64]| {
            Ok((
                -0.5 * prec * x.iter().map(|v| v * v).sum::<f64>(),
                x.iter().map(|v| -prec * v).collect(),
            ))
        }
    }

    #[test]
    fn reproducible_and_accepting() {
        let cfg = HmcConfig {
            samples: 200,
            burn_in: 50,
            seed: 7,
            ..Default::default()
        };
        let a = hmc_sample(&cfg, &[0.5, -0.5], gaussian(1.0)).unwrap();
        let b = hmc_sample(&cfg, &[0.5, -0.5], gaussian(1.0)).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.acceptance_rate() > 0.9);
    }

    #[test]
    fn energy_error_is_second_order() {
        let x = [1.0, -0.3, 0.7];
        let p = [0.2, 0.9, -1.1];
        let e1 = energy_error(gaussian(2.0), &x, &p, 0.1, 10).unwrap().abs();
        let e2 = energy_error(gaussian(2.0), &x, &p, 0.05, 20).unwrap().abs();
        let r = e1 / e2;
        assert!((3.0..=5.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn batch_means_of_iid_series() {
        let xs: Vec<f64> = (0..10_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(batch_means_se(&xs) < 1e-12);
        assert!(batch_means_se(&[1.0, 2.0]).is_nan());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = HmcConfig {
            step_size: 0.0,
            ..Default::default()
        };
        assert!(hmc_sample(&cfg, &[0.0], gaussian(1.0)).is_err());
    }
}
