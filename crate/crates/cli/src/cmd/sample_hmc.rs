use bandgp::inference::gmrf::{baseline_rates, held_out_rates, held_out_samples, hmc_posterior, summarize};
use bandgp::inference::hmc::{batch_means_se, WhitenedTarget};
use bandgp::inference::{hmc_chains, GaussianPrior, HmcConfig, Likelihood, Observations};
use bandgp::SymmetricBandedMatrix;
use clap::{Args as ClapArgs, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::fit_vi::GraphArgs;
use super::Exec;
use crate::error::Result;
use crate::report::{finite_or_label, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// One latent value, Gaussian prior and one Gaussian observation.
    Conjugate,
    /// Graph GMRF with Poisson counts (see the graph flags).
    Gmrf,
}

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Model::Conjugate)]
    pub model: Model,
    #[arg(long, default_value_t = 2.0)]
    pub prior_var: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.3)]
    pub y: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: GraphArgs,
    #[arg(long, default_value_t = 0.1)]
    pub step_size: f64,
    #[arg(long, default_value_t = 10)]
    pub leapfrog_steps: usize,
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, value_enum, default_value_t = Exec::Parallel)]
    pub exec: Exec,
}

fn config(a: &Args, seed: u64) -> HmcConfig {
    HmcConfig {
        step_size: a.step_size,
        leapfrog_steps: a.leapfrog_steps,
        samples: a.samples,
        burn_in: a.burn_in,
        seed,
    }
}

fn chain_summary(chains: &[bandgp::inference::HmcChain]) -> serde_json::Value {
    chains
        .iter()
        .map(|c| {
            json!({
                "acceptance_rate": c.acceptance_rate(),
                "divergent": c.divergent,
                "mean_abs_energy_error": c.mean_abs_energy_error,
            })
        })
        .collect()
}

pub fn run(a: &Args, seed: u64, report: &mut Report) -> Result<bool> {
    let cfg = config(a, seed);
    match a.model {
        Model::Conjugate => {
            let prior = GaussianPrior::zero_mean(&SymmetricBandedMatrix::from_diagonal(&[1.0 / a.prior_var]))?;
            let obs = Observations::full(vec![a.y]);
            let lik = Likelihood::Gaussian { noise: a.noise };
            let target = WhitenedTarget::new(&prior, &lik, &obs)?;
            let chains = report.time("sample_ms", || {
                hmc_chains(&cfg, &[0.0], a.chains, a.exec.into(), |v| target.log_joint(v))
            })?;
            let mut f = Vec::new();
            for c in &chains {
                for v in &c.samples {
                    f.push(target.latent(v)?[0]);
                }
            }
            let mean = f.iter().sum::<f64>() / f.len() as f64;
            let sd = (f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (f.len() as f64 - 1.0).max(1.0)).sqrt();
            let se = batch_means_se(&f);
            let exact = a.prior_var * a.y / (a.prior_var + a.noise);
            let exact_sd = (a.prior_var * a.noise / (a.prior_var + a.noise)).sqrt();
            let within = (mean - exact).abs() < 3.0 * se;
            eprintln!("posterior mean {mean:.4} (se {se:.4}) vs exact {exact:.4}");
            report.set("chains", chain_summary(&chains));
            report.set(
                "posterior",
                json!({ "mean": mean, "sd": sd, "se": se, "exact_mean": exact, "exact_sd": exact_sd, "within_3se": within }),
            );
            let acc_ok = chains.iter().all(|c| c.acceptance_rate() > 0.0 && c.acceptance_rate() <= 1.0);
            Ok(within && acc_ok)
        }
        Model::Gmrf => {
            let d = report.time("setup_ms", || a.data.load())?;
            let (chains, draws) = report.time("sample_ms", || hmc_posterior(&d.setup, &cfg, a.chains, a.exec.into()))?;
            let post = summarize(&draws);
            let nodes: Vec<serde_json::Value> = (0..d.graph.num_nodes)
                .map(|i| json!({ "id": i, "mean": post.mean[i], "sd": post.var[i].sqrt() }))
                .collect();
            report.set("chains", chain_summary(&chains));
            report.set("nodes", nodes);
            if let Some(test) = &d.test {
                let hmc = held_out_samples(&d.graph, &draws, test)?;
                let base = held_out_rates(&d.graph, &baseline_rates(&d.graph, &d.train), test)?;
                report.set("test_loglik", json!({ "hmc": hmc, "baseline": finite_or_label(base) }));
            }
            Ok(chains.iter().all(|c| c.acceptance_rate() > 0.0))
        }
    }
}
