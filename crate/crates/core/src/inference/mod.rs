//! Marginal likelihoods, variational inference, HMC and the reference
//! Kalman/dense oracles.

pub mod dense;
pub mod gmrf;
pub mod gpr;
pub mod hmc;
pub mod kalman;
pub mod likelihood;
pub mod marginal;
pub mod optimize;
pub mod quadrature;
pub mod vi;

pub use dense::{dense_gpr_loglik, dense_gpr_loglik_grad};
pub use gpr::{gpr_banded_loglik, ssm_loglik_banded, GprProblem};
pub use hmc::{hmc_chains, hmc_log_joint, hmc_sample, HmcChain, HmcConfig, WhitenedTarget};
pub use kalman::kalman_loglik;
pub use likelihood::{Likelihood, Observations};
pub use marginal::{marginal_likelihood_grad, marginal_likelihood_partial, record_marginal_likelihood};
pub use optimize::{fit_mle, maximize, FitResult, OptimConfig};
pub use quadrature::GaussianQuadrature;
pub use vi::{fit_vi, kl_banded, vi_objective, GaussianPrior, VariationalState, ViConfig, ViFit, ViProblem};
