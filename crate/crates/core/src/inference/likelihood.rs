//! Observation models for partially observed latent fields.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::inference::quadrature::GaussianQuadrature;
use crate::models::SelectionIndex;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Likelihood {
    /// `y_i ~ N(f_i, noise)`.
    Gaussian { noise: f64 },
    /// `y_i ~ Poisson(exp(f_i) w_i)`, one exposure per observation.
    Poisson { exposure: Vec<f64> },
}

/// Observed values `y` at the latent indices in `sel` (same order).
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub sel: SelectionIndex,
    pub y: Vec<f64>,
}

impl Observations {
    /// Pairs `(node, value)` in any order; duplicates are rejected.
    pub fn from_pairs(num_nodes: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig("node observed twice".into()));
        }
        let sel = SelectionIndex::new(num_nodes, pairs.iter().map(|p| p.0).collect())?;
        Ok(Self {
            sel,
            y: pairs.into_iter().map(|p| p.1).collect(),
        })
    }

    pub fn full(y: Vec<f64>) -> Self {
        Self {
            sel: SelectionIndex::all(y.len()),
            y,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

impl Likelihood {
    pub fn validate(&self, obs: &Observations) -> Result<()> {
        if obs.y.len() != obs.sel.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} observed nodes",
                obs.y.len(),
                obs.sel.len()
            )));
        }
        match self {
            Likelihood::Gaussian { noise } => {
                if !(*noise > 0.0) {
                    return Err(Error::NonPositiveParam { name: "noise variance", value: *noise });
                }
            }
            Likelihood::Poisson { exposure } => {
                if exposure.len() != obs.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} exposures for {} observations",
                        exposure.len(),
                        obs.len()
                    )));
                }
                if let Some(&w) = exposure.iter().find(|w| !(**w > 0.0)) {
                    return Err(Error::NonPositiveParam { name: "exposure", value: w });
                }
                if obs.y.iter().any(|&y| y < 0.0 || y.fract() != 0.0) {
                    return Err(Error::InvalidConfig("Poisson counts must be non-negative integers".into()));
                }
            }
        }
        Ok(())
    }

    /// `log p(y | f)` and its derivative in `f`, for observation `k`.
    pub fn log_density(&self, k: usize, y: f64, f: f64) -> (f64, f64) {
        match self {
            Likelihood::Gaussian { noise } => {
                let r = y - f;
                (-0.5 * (LN_2PI + noise.ln()) - 0.5 * r * r / noise, r / noise)
            }
            Likelihood::Poisson { exposure } => {
                let w = exposure[k];
                let rate = w * f.exp();
                (y * (f + w.ln()) - rate - ln_gamma(y + 1.0), y - rate)
            }
        }
    }

    /// `E log p(y | f)` under `f ~ N(mu, s2)` with derivatives in `mu`, `s2`.
    /// Gaussian is closed form; Poisson uses the quadrature rule.
    pub fn expected(&self, k: usize, y: f64, mu: f64, s2: f64, quad: &GaussianQuadrature) -> (f64, f64, f64) {
        match self {
            Likelihood::Gaussian { noise } => {
                let r = y - mu;
                (
                    -0.5 * (LN_2PI + noise.ln()) - 0.5 * (r * r + s2) / noise,
                    r / noise,
                    -0.5 / noise,
                )
            }
            Likelihood::Poisson { .. } => quad.expect(mu, s2, |f| self.log_density(k, y, f)),
        }
    }

    /// Log predictive density `log E p(y | f)` under `f ~ N(mu, s2)`.
    pub fn log_predictive(&self, k: usize, y: f64, mu: f64, s2: f64, quad: &GaussianQuadrature) -> f64 {
        match self {
            Likelihood::Gaussian { noise } => {
                let v = noise + s2;
                -0.5 * (LN_2PI + v.ln()) - 0.5 * (y - mu).powi(2) / v
            }
            Likelihood::Poisson { .. } => {
                let sd = s2.sqrt();
                let terms: Vec<f64> = quad
                    .nodes
                    .iter()
                    .zip(&quad.weights)
                    .map(|(&z, &w)| w.ln() + self.log_density(k, y, mu + sd * z).0)
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `sum_k log p(y_k | f[sel_k])` and its gradient over the full latent vector.
pub fn log_lik_sum(lik: &Likelihood, obs: &Observations, f: &[f64]) -> Result<(f64, Vec<f64>)> {
    if f.len() != obs.sel.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "latent of length {}, expected {}",
            f.len(),
            obs.sel.num_nodes()
        )));
    }
    let mut g = vec![0.0; f.len()];
    let mut s = 0.0;
    for (k, (&i, &y)) in obs.sel.indices().iter().zip(&obs.y).enumerate() {
        let (v, d) = lik.log_density(k, y, f[i]);
        s += v;
        g[i] += d;
    }
    Ok((s, g))
}

/// `sum_k E log p(y_k | f)` with marginals `N(mu_i, s2_i)`, and gradients
/// over the full `mu` and `s2`.
pub fn expected_log_lik(
    lik: &Likelihood,
    obs: &Observations,
    mu: &[f64],
    s2: &[f64],
    quad: &GaussianQuadrature,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = obs.sel.num_nodes();
    if mu.len() != n || s2.len() != n {
        return Err(Error::DimensionMismatch(format!("marginals must have length {n}")));
    }
    let mut gm = vec![0.0; n];
    let mut gs = vec![0.0; n];
    let mut s = 0.0;
    for (k, (&i, &y)) in obs.sel.indices().iter().zip(&obs.y).enumerate() {
        let (v, dm, ds) = lik.expected(k, y, mu[i], s2[i], quad);
        s += v;
        gm[i] += dm;
        gs[i] += ds;
    }
    Ok((s, gm, gs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_expectation_closed_form() {
        let lik = Likelihood::Gaussian { noise: 2.0 };
        let q = GaussianQuadrature::new(20);
        let (v, _, _) = lik.expected(0, 1.0, 0.5, 0.3, &q);
        let (vq, _, _) = q.expect(0.5, 0.3, |f| lik.log_density(0, 1.0, f));
        assert!((v - vq).abs() < 1e-12);
    }

    #[test]
    fn poisson_quadrature_matches_lognormal_form() {
        let lik = Likelihood::Poisson { exposure: vec![3.0] };
        let q = GaussianQuadrature::new(20);
        let (y, mu, s2) = (4.0, 0.2, 0.4);
        let (v, dm, ds) = lik.expected(0, y, mu, s2, &q);
        let exact = y * (mu + 3f64.ln()) - 3.0 * (mu + s2 / 2.0).exp() - ln_gamma(y + 1.0);
        assert!((v - exact).abs() < 1e-10);
        assert!((dm - (y - 3.0 * (mu + s2 / 2.0).exp())).abs() < 1e-10);
        assert!((ds + 1.5 * (mu + s2 / 2.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn validation() {
        let obs = Observations::full(vec![1.0, 2.5]);
        assert!(Likelihood::Poisson { exposure: vec![1.0, 1.0] }.validate(&obs).is_err());
        assert!(Likelihood::Poisson { exposure: vec![1.0] }.validate(&Observations::full(vec![1.0, 2.0])).is_err());
        assert!(Likelihood::Gaussian { noise: 0.0 }.validate(&obs).is_err());
        assert!(Observations::from_pairs(3, vec![(1, 0.0), (1, 1.0)]).is_err());
    }
}
