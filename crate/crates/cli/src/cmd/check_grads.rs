use bandgp::gradcheck::{run_suite, OPS};
use clap::Args as ClapArgs;
use serde::Serialize;

use super::Exec;
use crate::error::{CliError, Result};
use crate::report::Report;

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    /// Only ops whose name contains this string.
    #[arg(long)]
    pub op: Option<String>,
    /// Random instances per op.
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = Exec::Parallel)]
    pub exec: Exec,
}

pub fn run(a: &Args, seed: u64, report: &mut Report) -> Result<bool> {
    if let Some(f) = &a.op {
        if !OPS.iter().any(|o| o.contains(f.as_str())) {
            return Err(CliError::Invalid(format!("no op matches `{f}`; known ops: {}", OPS.join(", "))));
        }
    }
    let suite = report.time("suite_ms", || run_suite(a.op.as_deref(), seed, a.reps, a.exec.into()));
    for op in &suite.ops {
        eprintln!(
            "{:<30} {}  {}/{} failed, max abs err {:.1e}",
            op.op,
            if op.passed { "ok  " } else { "FAIL" },
            op.failures,
            op.instances,
            op.max_abs_err
        );
    }
    report.set("suite", &suite);
    Ok(suite.passed)
}
