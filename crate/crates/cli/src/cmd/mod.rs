pub mod bench;
pub mod check_grads;
pub mod fit_gpr;
pub mod fit_vi;
pub mod kalman_compare;
pub mod sample_hmc;

use bandgp::exec::Mode;
use bandgp::inference::GprProblem;
use bandgp::models::{KernelSpec, PrecisionForm};
use clap::ValueEnum;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Largest `n` the dense backend is run at.
pub const DENSE_CAP: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Parallel,
    Sequential,
}

impl From<Exec> for Mode {
    fn from(e: Exec) -> Mode {
        match e {
            Exec::Parallel => Mode::Parallel,
            Exec::Sequential => Mode::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    MaternHalfCorrected,
    AsPrinted,
}

impl From<Form> for PrecisionForm {
    fn from(f: Form) -> PrecisionForm {
        match f {
            Form::MaternHalfCorrected => PrecisionForm::MaternHalfCorrected,
            Form::AsPrinted => PrecisionForm::AsPrinted,
        }
    }
}

pub fn kernel(spec: &str) -> Result<KernelSpec> {
    Ok(KernelSpec::parse(spec)?)
}

/// Log-parameters from natural-scale values, or a data-driven default:
/// each component gets variance `var(y)` and lengthscale a tenth of the time
/// span; noise starts at a tenth of `var(y)`.
pub fn log_params(pr: &GprProblem, given: Option<&[f64]>) -> Result<Vec<f64>> {
    let p = match given {
        Some(p) => p.to_vec(),
        None => {
            let n = pr.y.len() as f64;
            let mean = pr.y.iter().sum::<f64>() / n;
            let var = (pr.y.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).max(1e-6);
            let span = (pr.times[pr.times.len() - 1] - pr.times[0]).max(1e-3);
            let mut p = Vec::new();
            for _ in &pr.spec.components {
                p.extend([var, span / 10.0]);
            }
            p.push(var / 10.0);
            p
        }
    };
    if p.len() != pr.num_params() {
        return Err(CliError::Invalid(format!(
            "kernel `{}` takes {} values ({}), got {}",
            pr.spec.name(),
            pr.num_params(),
            pr.param_names().join(", "),
            p.len()
        )));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(CliError::Invalid(format!("parameters must be positive, got {x}")));
    }
    Ok(p.iter().map(|x| x.ln()).collect())
}

pub fn named(names: &[String], values: &[f64]) -> serde_json::Map<String, serde_json::Value> {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| (n.clone(), serde_json::json!(v)))
        .collect()
}

/// Adds guidance to a non-SPD precision built from the literal formula.
pub fn with_form_hint(e: bandgp::Error, form: Form) -> CliError {
    match (e, form) {
        (e @ bandgp::Error::NotPositiveDefinite(_), Form::AsPrinted) => CliError::Hinted {
            source: e,
            hint: "the as-printed precision is not SPD for these parameters; use --form matern-half-corrected",
        },
        (e, _) => e.into(),
    }
}
