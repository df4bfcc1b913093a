use bandgp::inference::GprProblem;
use clap::Args as ClapArgs;
use serde::Serialize;
use serde_json::json;

use super::{kernel, log_params, named, DENSE_CAP};
use crate::error::Result;
use crate::io::read_series;
use crate::report::Report;

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value = "matern12")]
    pub kernel: String,
    /// Natural-scale values: variance, lengthscale per component, then noise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub params: Option<Vec<f64>>,
    /// Largest allowed pairwise difference.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

pub fn run(a: &Args, report: &mut Report) -> Result<bool> {
    let (t, y) = read_series(&a.data)?;
    let pr = GprProblem::new(kernel(&a.kernel)?, t, y)?;
    let p = log_params(&pr, a.params.as_deref())?;
    let n = pr.y.len();
    let kalman = report.time("kalman_ms", || pr.loglik_kalman(&p))?;
    let banded = report.time("banded_ms", || pr.loglik_banded(&p))?;
    let dense = if n <= DENSE_CAP {
        Some(report.time("dense_ms", || pr.loglik_dense(&p))?)
    } else {
        let notice = format!("dense skipped: n = {n} exceeds the cap of {DENSE_CAP}");
        eprintln!("notice: {notice}");
        report.set("notice", notice);
        None
    };
    let mut deltas = vec![("kalman-banded", (kalman - banded).abs())];
    if let Some(d) = dense {
        deltas.push(("banded-dense", (banded - d).abs()));
        deltas.push(("kalman-dense", (kalman - d).abs()));
    }
    let passed = deltas.iter().all(|(_, d)| *d < a.tol);
    report.set("n", n);
    report.set("params", named(&pr.param_names(), &p.iter().map(|x| x.exp()).collect::<Vec<_>>()));
    report.set("loglik", json!({ "kalman": kalman, "banded": banded, "dense": dense }));
    report.set("abs_diff", deltas.iter().map(|(k, d)| (k.to_string(), json!(d))).collect::<serde_json::Map<_, _>>());
    for (k, d) in &deltas {
        eprintln!("|{k}| = {d:.3e} {}", if *d < a.tol { "ok" } else { "FAIL" });
    }
    Ok(passed)
}
