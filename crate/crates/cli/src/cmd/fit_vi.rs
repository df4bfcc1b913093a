use bandgp::inference::gmrf::{baseline_rates, held_out_gaussian, held_out_rates, setup, vi_posterior, GmrfSetup};
use bandgp::inference::{OptimConfig, ViConfig};
use bandgp::models::ordering::bandwidth_under;
use bandgp::models::GraphSpec;
use clap::Args as ClapArgs;
use serde::Serialize;
use serde_json::json;

use super::{with_form_hint, Form};
use crate::error::{CliError, Result};
use crate::io::{read_counts, read_graph};
use crate::report::{finite_or_label, Report};

/// Graph, counts and prior hyperparameters shared by `fit-vi` and `sample-hmc`.
#[derive(Debug, ClapArgs, Serialize)]
pub struct GraphArgs {
    /// Edge list `i j length`; may also hold `node i count` lines.
    #[arg(long)]
    pub graph: Option<String>,
    /// Training counts `i count`; defaults to the graph file's node lines.
    #[arg(long)]
    pub counts: Option<String>,
    /// Held-out counts `i count` for the test log likelihood.
    #[arg(long)]
    pub test: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    /// Defaults to five times the mean edge length.
    #[arg(long)]
    pub lengthscale: Option<f64>,
    #[arg(long, value_enum, default_value_t = Form::MaternHalfCorrected)]
    pub form: Form,
}

pub struct GraphData {
    pub graph: GraphSpec,
    pub train: Vec<(usize, f64)>,
    pub test: Option<Vec<(usize, f64)>>,
    pub setup: GmrfSetup,
    pub lengthscale: f64,
}

impl GraphArgs {
    pub fn load(&self) -> Result<GraphData> {
        let path = self
            .graph
            .as_deref()
            .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
        let (graph, inline) = read_graph(path)?;
        let train = match &self.counts {
            Some(p) => read_counts(p)?,
            None => inline,
        };
        let test = self.test.as_deref().map(read_counts).transpose()?;
        let lengthscale = self.lengthscale.unwrap_or_else(|| {
            5.0 * graph.edges.iter().map(|e| e.length).sum::<f64>() / graph.edges.len() as f64
        });
        let setup = setup(&graph, &train, self.variance, lengthscale, self.form.into())
            .map_err(|e| with_form_hint(e, self.form))?;
        Ok(GraphData {
            graph,
            train,
            test,
            setup,
            lengthscale,
        })
    }
}

#[derive(Debug, ClapArgs, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: GraphArgs,
    #[arg(long, default_value_t = 20)]
    pub quad_points: usize,
    /// Bandwidth of the variational factor; 0 uses the prior's.
    #[arg(long, default_value_t = 0)]
    pub bandwidth: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

#[derive(Debug, Serialize)]
struct NodeRow {
    id: usize,
    mean: f64,
    var: f64,
    train_count: Option<f64>,
    baseline_rate: f64,
}

pub fn run(a: &Args, report: &mut Report) -> Result<bool> {
    let d = report.time("setup_ms", || a.data.load())?;
    let cfg = ViConfig {
        quad_points: a.quad_points,
        bandwidth: a.bandwidth,
        optim: OptimConfig {
            max_iters: a.max_iters,
            ..OptimConfig::default()
        },
    };
    let (fit, post) = report.time("fit_ms", || vi_posterior(&d.setup, &cfg))?;
    let rates = baseline_rates(&d.graph, &d.train);
    let mut count = vec![None; d.graph.num_nodes];
    for &(i, c) in &d.train {
        count[i] = Some(c);
    }
    let nodes: Vec<NodeRow> = (0..d.graph.num_nodes)
        .map(|i| NodeRow {
            id: i,
            mean: post.mean[i],
            var: post.var[i],
            train_count: count[i],
            baseline_rate: rates[i],
        })
        .collect();

    let identity: Vec<usize> = (0..d.graph.num_nodes).collect();
    report.set("num_nodes", d.graph.num_nodes);
    report.set("lengthscale", d.lengthscale);
    report.set(
        "bandwidth",
        json!({
            "input_order": bandwidth_under(&d.graph, &identity),
            "rcm": d.setup.graph.bandwidth(),
            "variational": fit.state.bandwidth(),
        }),
    );
    let improved = fit.elbo >= fit.trace[0];
    report.set("elbo_initial", fit.trace[0]);
    report.set("elbo", fit.elbo);
    report.set("elbo_improved", improved);
    report.set("iterations", fit.iterations);
    report.set("converged", fit.converged);
    report.set("nodes", &nodes);
    if let Some(test) = &d.test {
        let vi = held_out_gaussian(&d.graph, &post, test, a.quad_points)?;
        let base = held_out_rates(&d.graph, &rates, test)?;
        eprintln!("held-out log likelihood: vi {vi:.3}, baseline {base:.3}");
        report.set("test_loglik", json!({ "vi": vi, "baseline": finite_or_label(base) }));
    }
    Ok(improved)
}
