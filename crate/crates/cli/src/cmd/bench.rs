//! Timing sweeps of log likelihood plus gradient for three backends.

use std::time::Instant;

use bandgp::inference::GprProblem;
use bandgp::models::ssm::simulate;
use bandgp::models::{KernelKind, KernelSpec};
use clap::{Args as ClapArgs, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::DENSE_CAP;
use crate::error::{CliError, Result};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// `sizes` are series lengths; the kernel is fixed.
    ScaleN,
    /// `sizes` are numbers of stacked Matérn-3/2 components at fixed `n`;
    /// the `size` column reports the resulting precision bandwidth.
    ScaleBandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Banded,
    Kalman,
    Dense,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::Banded => "banded",
            Backend::Kalman => "kalman",
            Backend::Dense => "dense",
        }
    }
}

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Sweep::ScaleN)]
    pub mode: Sweep,
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 2000, 4000, 8000])]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Backend::Banded])]
    pub backends: Vec<Backend>,
    /// Timed repetitions per cell (one extra warm-up is discarded).
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Kernel for `scale-n`.
    #[arg(long, default_value = "matern32")]
    pub kernel: String,
    /// Series length for `scale-bandwidth`.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Record cells beyond the dense cap as skipped instead of failing.
    #[arg(long)]
    pub skip_unavailable: bool,
    /// Also write the `size,backend,median_ms` table here.
    #[arg(long)]
    pub csv: Option<String>,
}

#[derive(Debug, Serialize)]
struct Row {
    size: usize,
    backend: &'static str,
    n: usize,
    median_ms: f64,
}

/// Synthetic series of length `n` drawn from the model at unit parameters and
/// noise 0.1; identical for identical `(seed, n, kernel)`.
pub fn synthetic(spec: &KernelSpec, n: usize, seed: u64) -> Result<(GprProblem, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
    let mut t = 0.0;
    let times: Vec<f64> = (0..n)
        .map(|_| {
            t += rng.random_range(0.05..0.15);
            t
        })
        .collect();
    let mut p = vec![0.0; spec.num_kernel_params()];
    p.push(0.1f64.ln());
    let ssm = spec.build(&times, &p[..p.len() - 1])?.with_noise(0.1)?;
    let (_, y) = simulate(&ssm, &mut rng)?;
    Ok((GprProblem::new(spec.clone(), times, y)?, p))
}

/// Kalman log likelihood with a central-difference gradient.
fn kalman_with_fd_grad(pr: &GprProblem, p: &[f64]) -> bandgp::Result<(f64, Vec<f64>)> {
    let f = pr.loglik_kalman(p)?;
    let mut x = p.to_vec();
    let mut g = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        x[i] = p[i] + 1e-5;
        let fp = pr.loglik_kalman(&x)?;
        x[i] = p[i] - 1e-5;
        let fm = pr.loglik_kalman(&x)?;
        x[i] = p[i];
        g.push((fp - fm) / 2e-5);
    }
    Ok((f, g))
}

fn evaluate(b: Backend, pr: &GprProblem, p: &[f64]) -> bandgp::Result<(f64, Vec<f64>)> {
    match b {
        Backend::Banded => pr.loglik_grad(p),
        Backend::Kalman => kalman_with_fd_grad(pr, p),
        Backend::Dense => pr.loglik_dense_grad(p),
    }
}

fn median_ms(b: Backend, pr: &GprProblem, p: &[f64], reps: usize) -> Result<f64> {
    evaluate(b, pr, p)?;
    let mut ts = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        std::hint::black_box(evaluate(b, pr, p)?);
        ts.push(t.elapsed().as_secs_f64() * 1e3);
    }
    ts.sort_by(f64::total_cmp);
    Ok(ts[ts.len() / 2])
}

pub fn run(a: &Args, seed: u64, report: &mut Report) -> Result<bool> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut datasets = Vec::new();
    for &size in &a.sizes {
        let (spec, n) = match a.mode {
            Sweep::ScaleN => (super::kernel(&a.kernel)?, size),
            Sweep::ScaleBandwidth => {
                if size == 0 {
                    return Err(CliError::Invalid("scale-bandwidth sizes count components and must be positive".into()));
                }
                (KernelSpec::new(vec![KernelKind::Matern32; size])?, a.n)
            }
        };
        if n == 0 {
            return Err(CliError::Invalid("series length must be positive".into()));
        }
        let (pr, p) = synthetic(&spec, n, seed)?;
        datasets.push(serde_json::json!({
            "n": n,
            "kernel": spec.name(),
            "y_sum": pr.y.iter().sum::<f64>(),
            "t_last": pr.times[n - 1],
        }));
        let label = match a.mode {
            Sweep::ScaleN => n,
            Sweep::ScaleBandwidth => 2 * spec.state_dim() - 1,
        };
        for &b in &a.backends {
            if b == Backend::Dense && n > DENSE_CAP {
                let e = CliError::BackendUnavailableAtSize {
                    backend: "dense",
                    size: n,
                    cap: DENSE_CAP,
                };
                if !a.skip_unavailable {
                    return Err(e);
                }
                eprintln!("notice: {e}; skipped");
                skipped.push(e.to_string());
                continue;
            }
            let ms = median_ms(b, &pr, &p, a.reps)?;
            eprintln!("{label:>8} {:<7} {ms:10.3} ms", b.name());
            rows.push(Row {
                size: label,
                backend: b.name(),
                n,
                median_ms: ms,
            });
        }
    }

    // Growth factor of the median between consecutive sizes, per backend.
    let mut ratios = serde_json::Map::new();
    for &b in &a.backends {
        let r: Vec<serde_json::Value> = rows
            .iter()
            .filter(|r| r.backend == b.name())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| {
                serde_json::json!({
                    "from": w[0].size,
                    "to": w[1].size,
                    "ratio": w[1].median_ms / w[0].median_ms,
                })
            })
            .collect();
        ratios.insert(b.name().to_string(), r.into());
    }

    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{path}: {e}")))?;
        w.write_record(["size", "backend", "median_ms"])
            .map_err(|e| CliError::Output(e.to_string()))?;
        for r in &rows {
            w.write_record([r.size.to_string(), r.backend.to_string(), r.median_ms.to_string()])
                .map_err(|e| CliError::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    }
    report.set("rows", &rows);
    report.set("ratios", ratios);
    report.set("skipped", skipped);
    report.set("datasets", datasets);
    Ok(true)
}
