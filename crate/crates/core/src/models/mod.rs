//! Builders for banded precisions: state-space kernels, graph GMRFs, node
//! ordering and observation selection.

pub mod graph;
pub mod natural;
pub mod ordering;
pub mod selection;
pub mod ssm;

use crate::band::SymmetricBandedMatrix;
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::tape::{Tape, Value, Var};

pub use graph::{graph_precision, Edge, GraphSpec, PrecisionForm};
pub use natural::{likelihood_natural_params, prior_natural_params, LikelihoodNatural, NaturalParams};
pub use ordering::rcm_ordering;
pub use selection::SelectionIndex;
pub use ssm::{matern12_ssm, matern32_ssm, ssm_stack, KernelKind, KernelSpec, StateSpaceModel};

/// Largest number of hyperparameters a prior may expose.
pub const MAX_PARAMS: usize = 8;

/// A zero-mean Gaussian prior whose precision depends on log-hyperparameters.
pub trait PriorModel: Send + Sync {
    fn dim(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn precision(&self, log_params: &[f64]) -> Result<SymmetricBandedMatrix>;
    /// Precision and `dQ / d log_params[k]` for every `k`.
    fn precision_jacobian(&self, log_params: &[f64]) -> Result<(SymmetricBandedMatrix, Vec<SymmetricBandedMatrix>)>;

    fn num_params(&self) -> usize {
        self.param_names().len()
    }
}

/// Graph Matérn-½ prior over `(log variance, log lengthscale)`; the graph must
/// already be in its final node order.
#[derive(Debug, Clone)]
pub struct GraphPrior {
    pub graph: GraphSpec,
    pub form: PrecisionForm,
}

impl PriorModel for GraphPrior {
    fn dim(&self) -> usize {
        self.graph.num_nodes
    }

    fn param_names(&self) -> Vec<String> {
        vec!["variance".into(), "lengthscale".into()]
    }

    fn precision(&self, p: &[f64]) -> Result<SymmetricBandedMatrix> {
        check_len(p, 2)?;
        graph_precision(&self.graph, p[0].exp(), p[1].exp(), self.form)
    }

    fn precision_jacobian(&self, p: &[f64]) -> Result<(SymmetricBandedMatrix, Vec<SymmetricBandedMatrix>)> {
        check_len(p, 2)?;
        let (q, [a, b]) = graph::graph_precision_jacobian(&self.graph, p[0], p[1], self.form)?;
        Ok((q, vec![a, b]))
    }
}

/// State prior `Lambda_0` of a stacked Matérn model over its kernel
/// log-parameters.
#[derive(Debug, Clone)]
pub struct SsmPrior {
    pub spec: KernelSpec,
    pub times: Vec<f64>,
}

impl PriorModel for SsmPrior {
    fn dim(&self) -> usize {
        (self.times.len() + 1) * self.spec.state_dim()
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = self.spec.param_names();
        names.pop();
        names
    }

    fn precision(&self, p: &[f64]) -> Result<SymmetricBandedMatrix> {
        let ssm = self.spec.build(&self.times, p)?;
        Ok(prior_natural_params(&ssm)?.lambda)
    }

    fn precision_jacobian(&self, p: &[f64]) -> Result<(SymmetricBandedMatrix, Vec<SymmetricBandedMatrix>)> {
        let duals = dual_vars(p)?;
        let ssm = self.spec.build(&self.times, &duals)?;
        let (v, d) = natural::prior_natural_params_jacobian(&ssm, p.len())?;
        Ok((v.lambda, d.into_iter().map(|x| x.lambda).collect()))
    }
}

/// Independent dual variables for each entry of `p`.
pub fn dual_vars(p: &[f64]) -> Result<Vec<Dual<MAX_PARAMS>>> {
    if p.len() > MAX_PARAMS {
        return Err(Error::InvalidConfig(format!("at most {MAX_PARAMS} hyperparameters are supported")));
    }
    Ok(p.iter().enumerate().map(|(k, &x)| Dual::var(x, k)).collect())
}

fn check_len(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} parameters, got {}", p.len())));
    }
    Ok(())
}

/// Records `Q(theta)` on a tape; `theta` must be a vector node of
/// log-hyperparameters. The backward rule contracts the sensitivity with
/// each `dQ / dtheta_k`.
pub fn record_precision(tape: &mut Tape, model: &dyn PriorModel, theta: Var) -> Result<Var> {
    let p = tape.value(theta)?.as_vector()?.to_vec();
    let (q, jac) = model.precision_jacobian(&p)?;
    tape.custom(
        &[theta],
        Value::Sym(q),
        Box::new(move |bar, _, _| {
            let qb = bar.as_sym()?;
            let g = jac
                .iter()
                .map(|dq| qb.lower().band_inner(dq.lower()))
                .collect::<Result<Vec<f64>>>()?;
            Ok(vec![Value::Vector(g)])
        }),
    )
}

/// Cheap `f64` evaluation helper used by generic builders in tests.
pub fn values<S: Scalar>(xs: &[S]) -> Vec<f64> {
    xs.iter().map(|x| x.value()).collect()
}
