use bandgp::inference::{fit_mle, GprProblem, OptimConfig};
use clap::Args as ClapArgs;
use serde::Serialize;
use serde_json::json;

use super::{kernel, log_params, named};
use crate::error::Result;
use crate::io::read_series;
use crate::report::Report;

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    /// CSV with columns `t,y` (header optional).
    #[arg(long)]
    pub data: String,
    /// `matern12`, `matern32` or a `+`-joined sum.
    #[arg(long, default_value = "matern12")]
    pub kernel: String,
    /// Natural-scale start values: variance, lengthscale per component, then noise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<f64>>,
    /// Zero evaluates the log likelihood at `init` without optimizing.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

pub fn run(a: &Args, report: &mut Report) -> Result<bool> {
    let (t, y) = read_series(&a.data)?;
    let pr = GprProblem::new(kernel(&a.kernel)?, t, y)?;
    let x0 = log_params(&pr, a.init.as_deref())?;
    let cfg = OptimConfig {
        max_iters: a.max_iters,
        ..OptimConfig::default()
    };
    let fit = report.time("fit_ms", || fit_mle(|x| pr.loglik_grad(x), &x0, &cfg))?;
    let names = pr.param_names();
    let natural: Vec<f64> = fit.x.iter().map(|x| x.exp()).collect();
    report.set("n", pr.y.len());
    report.set("kernel", pr.spec.name());
    report.set("init", named(&names, &x0.iter().map(|x| x.exp()).collect::<Vec<_>>()));
    report.set("fitted", named(&names, &natural));
    report.set("fitted_list", &natural);
    report.set("log_params", &fit.x);
    report.set("loglik_initial", fit.trace[0]);
    report.set("loglik", fit.value);
    report.set(
        "optimizer",
        json!({
            "iterations": fit.iterations,
            "evaluations": fit.evaluations,
            "converged": fit.converged,
            "grad_inf_norm": fit.grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
        }),
    );
    Ok(fit.value.is_finite() && fit.value >= fit.trace[0])
}
