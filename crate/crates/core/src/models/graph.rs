//! Graph Matérn-½ precisions built as a sum of per-edge inner products.

use serde::{Deserialize, Serialize};

use crate::band::{cholesky, SymmetricBandedMatrix};
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Edge length.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub num_nodes: usize,
    pub edges: Vec<Edge>,
    /// Per-node exposure `w_i` (rate multiplier of the Poisson likelihood).
    pub weights: Vec<f64>,
}

/// Which reading of the per-edge formula to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionForm {
    /// `1/s2 * sum_e [ (1/(1 - lam^2)) [[1, -lam], [-lam, 1]] - 1/2 I ]` with
    /// `lam = exp(-d / l)`: the two-point Matérn-½ precision, always SPD on
    /// graphs without isolated nodes.
    #[default]
    MaternHalfCorrected,
    /// `1/s2 * sum_e (1/(1 - lam)) [[1, -lam], [-lam, 1]] - 1/2 I` per edge with
    /// `lam = s2 exp(-d / l)`, taken literally.
    AsPrinted,
}

impl PrecisionForm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "matern-half-corrected" | "corrected" => Ok(Self::MaternHalfCorrected),
            "as-printed" | "printed" => Ok(Self::AsPrinted),
            o => Err(Error::InvalidConfig(format!("unknown precision form `{o}`"))),
        }
    }
}

impl GraphSpec {
    /// Validates edges and computes `w_i = sum_j max(10, d_ij / 2)`.
    pub fn new(num_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut weights = vec![0.0; num_nodes];
        let mut degree = vec![0usize; num_nodes];
        for e in &edges {
            for node in [e.i, e.j] {
                if node >= num_nodes {
                    return Err(Error::UnknownNode { node, num_nodes });
                }
            }
            if e.i == e.j {
                return Err(Error::InvalidEdge(format!("self-loop at node {}", e.i)));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::InvalidEdge(format!(
                    "edge ({}, {}) has non-positive length {}",
                    e.i, e.j, e.length
                )));
            }
            let w = (e.length / 2.0).max(10.0);
            for node in [e.i, e.j] {
                weights[node] += w;
                degree[node] += 1;
            }
        }
        if let Some(node) = degree.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode(node));
        }
        Ok(Self {
            num_nodes,
            edges,
            weights,
        })
    }

    /// Parses `i j d` lines (`#` comments allowed). Lines `node i count` are
    /// returned separately as observations. Node count is one more than the
    /// largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<(Self, Vec<(usize, f64)>)> {
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        let mut max_node = None::<usize>;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: k + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let node = |s: &str| s.parse::<usize>().map_err(|e| perr(format!("bad node index `{s}`: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| perr(format!("bad number `{s}`: {e}")));
            match toks.as_slice() {
                ["node", i, c] => {
                    let i = node(i)?;
                    counts.push((i, num(c)?));
                    max_node = max_node.max(Some(i));
                }
                [i, j, d] => {
                    let (i, j) = (node(i)?, node(j)?);
                    edges.push(Edge { i, j, length: num(d)? });
                    max_node = max_node.max(Some(i.max(j)));
                }
                _ => return Err(perr(format!("expected `i j length` or `node i count`, got `{line}`"))),
            }
        }
        let n = max_node.map_or(0, |m| m + 1);
        Ok((Self::new(n, edges)?, counts))
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit-free edge lengths.
    pub fn path(n: usize, length: f64) -> Result<Self> {
        Self::new(
            n,
            (1..n).map(|k| Edge { i: k - 1, j: k, length }).collect(),
        )
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        adj.iter_mut().for_each(|a| {
            a.sort_unstable();
            a.dedup();
        });
        adj
    }

    /// Relabels nodes so that original node `order[k]` becomes node `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let pos = inverse_permutation(order, self.num_nodes)?;
        Ok(Self {
            num_nodes: self.num_nodes,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    i: pos[e.i],
                    j: pos[e.j],
                    length: e.length,
                })
                .collect(),
            weights: order.iter().map(|&o| self.weights[o]).collect(),
        })
    }

    /// Largest `|i - j|` over edges.
    pub fn bandwidth(&self) -> usize {
        self.edges.iter().map(|e| e.i.abs_diff(e.j)).max().unwrap_or(0)
    }
}

pub fn inverse_permutation(order: &[usize], n: usize) -> Result<Vec<usize>> {
    if order.len() != n {
        return Err(Error::DimensionMismatch(format!("permutation of length {} for {n} nodes", order.len())));
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &o) in order.iter().enumerate() {
        if o >= n || pos[o] != usize::MAX {
            return Err(Error::InvalidConfig("ordering is not a permutation".into()));
        }
        pos[o] = k;
    }
    Ok(pos)
}

/// Lower-band cells over a generic scalar, laid out like the symmetric storage.
fn assemble<S: Scalar>(g: &GraphSpec, variance: S, lengthscale: S, form: PrecisionForm) -> (usize, Vec<S>) {
    let n = g.num_nodes;
    let bw = g.bandwidth();
    let w = bw + 1;
    let mut cells = vec![S::zero(); n * w];
    let half = S::cst(0.5);
    let inv_var = S::one() / variance;
    // Edges are applied in input order, so assembly is bit-stable.
    for e in &g.edges {
        let decay = (-(S::cst(e.length) / lengthscale)).exp();
        let (diag, off, corr) = match form {
            PrecisionForm::MaternHalfCorrected => {
                let s = inv_var / (S::one() - decay * decay);
                (s - inv_var * half, -(s * decay), S::zero())
            }
            PrecisionForm::AsPrinted => {
                let lam = variance * decay;
                let s = inv_var / (S::one() - lam);
                (s, -(s * lam), half)
            }
        };
        let (hi, lo) = if e.i > e.j { (e.i, e.j) } else { (e.j, e.i) };
        for node in [hi, lo] {
            let k = node * w;
            cells[k] = cells[k] + diag - corr;
        }
        let k = lo * w + (hi - lo);
        cells[k] = cells[k] + off;
    }
    (bw, cells)
}

fn to_sym<S: Scalar>(n: usize, bw: usize, cells: &[S], f: impl Fn(&S) -> f64) -> SymmetricBandedMatrix {
    let mut q = SymmetricBandedMatrix::zeros(n, bw);
    for j in 0..n {
        for i in j..(j + bw + 1).min(n) {
            *q.at_mut(i, j) = f(&cells[j * (bw + 1) + (i - j)]);
        }
    }
    q
}

/// Precision of the graph in its current node labelling, with bandwidth
/// `max |i - j|` over edges. Positive definiteness is checked by Cholesky.
pub fn graph_precision(g: &GraphSpec, variance: f64, lengthscale: f64, form: PrecisionForm) -> Result<SymmetricBandedMatrix> {
    for (name, v) in [("variance", variance), ("lengthscale", lengthscale)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveParam { name, value: v });
        }
    }
    if g.num_nodes == 0 {
        return Err(Error::InvalidConfig("graph has no nodes".into()));
    }
    let (bw, cells) = assemble(g, variance, lengthscale, form);
    let q = to_sym(g.num_nodes, bw, &cells, |x| *x);
    cholesky(&q)?;
    Ok(q)
}

/// Precision and its derivatives with respect to `(log s2, log l)`.
pub fn graph_precision_jacobian(
    g: &GraphSpec,
    log_variance: f64,
    log_lengthscale: f64,
    form: PrecisionForm,
) -> Result<(SymmetricBandedMatrix, [SymmetricBandedMatrix; 2])> {
    let s2 = Dual::<2>::var(log_variance, 0).exp();
    let l = Dual::<2>::var(log_lengthscale, 1).exp();
    let (bw, cells) = assemble(g, s2, l, form);
    let n = g.num_nodes;
    Ok((
        to_sym(n, bw, &cells, |x| x.v),
        [to_sym(n, bw, &cells, |x| x.d[0]), to_sym(n, bw, &cells, |x| x.d[1])],
    ))
}
