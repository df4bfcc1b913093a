//! Define-by-run reverse-mode tape over banded values.
//!
//! Every recorded node keeps its forward value, which the banded VJPs need.
//! A tape is single-shot: after [`Tape::backward`] it refuses further use.
//!
//! Sensitivities of symmetric values follow the lower-band convention of
//! [`crate::grad`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::band::{
    cholesky, log_det_from_cholesky, outer_band, product_band_vec, product_band_vec_transposed,
    solve_vec, sparse_inverse_subset, BandedMatrix, SymmetricBandedMatrix,
};
use crate::error::{Error, Result};
use crate::grad;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
    Banded(BandedMatrix),
    Sym(SymmetricBandedMatrix),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Vector(_) => "vector",
            Value::Banded(_) => "banded",
            Value::Sym(_) => "symmetric banded",
        }
    }

    pub fn as_scalar(&self) -> Result<f64> {
        match self {
            Value::Scalar(x) => Ok(*x),
            v => Err(kind_err("scalar", v)),
        }
    }

    pub fn as_vector(&self) -> Result<&[f64]> {
        match self {
            Value::Vector(x) => Ok(x),
            v => Err(kind_err("vector", v)),
        }
    }

    pub fn as_banded(&self) -> Result<&BandedMatrix> {
        match self {
            Value::Banded(x) => Ok(x),
            v => Err(kind_err("banded", v)),
        }
    }

    pub fn as_sym(&self) -> Result<&SymmetricBandedMatrix> {
        match self {
            Value::Sym(x) => Ok(x),
            v => Err(kind_err("symmetric banded", v)),
        }
    }

    /// Zero of the same shape.
    pub fn zeros_like(&self) -> Value {
        match self {
            Value::Scalar(_) => Value::Scalar(0.0),
            Value::Vector(v) => Value::Vector(vec![0.0; v.len()]),
            Value::Banded(b) => Value::Banded(BandedMatrix::zeros(b.n(), b.lower_bw(), b.upper_bw())),
            Value::Sym(s) => Value::Sym(SymmetricBandedMatrix::zeros(s.n(), s.bandwidth())),
        }
    }

    /// Sum over stored cells of `self * other`.
    fn inner(&self, other: &Value) -> Result<f64> {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => Ok(a * b),
            (Value::Vector(a), Value::Vector(b)) => Ok(dot(a, b)),
            (Value::Banded(a), Value::Banded(b)) => a.band_inner(b),
            (Value::Sym(a), Value::Sym(b)) => a.lower().band_inner(b.lower()),
            (a, b) => Err(kind_err(a.kind(), b)),
        }
    }

    fn scaled(&self, c: f64) -> Value {
        match self {
            Value::Scalar(a) => Value::Scalar(a * c),
            Value::Vector(a) => Value::Vector(a.iter().map(|x| x * c).collect()),
            Value::Banded(a) => Value::Banded(a.scale(c)),
            Value::Sym(a) => Value::Sym(a.scale(c)),
        }
    }
}

fn kind_err(expected: &'static str, found: &Value) -> Error {
    Error::KindMismatch {
        expected,
        found: found.kind(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `g` restricted to the storage shape of `primal`, added into `acc`.
fn accumulate(acc: &mut Option<Value>, primal: &Value, g: Value) -> Result<()> {
    let g = match (primal, g) {
        (Value::Banded(p), Value::Banded(g)) if (g.lower_bw(), g.upper_bw()) != (p.lower_bw(), p.upper_bw()) => {
            Value::Banded(g.restricted(p.lower_bw(), p.upper_bw()))
        }
        (Value::Sym(p), Value::Sym(g)) if g.bandwidth() != p.bandwidth() => Value::Sym(
            SymmetricBandedMatrix::from_lower(g.into_lower().restricted(p.bandwidth(), 0))?,
        ),
        (p, g) if p.kind() != g.kind() => return Err(kind_err(p.kind(), &g)),
        (_, g) => g,
    };
    match acc {
        None => *acc = Some(g),
        Some(a) => match (a, g) {
            (Value::Scalar(a), Value::Scalar(g)) => *a += g,
            (Value::Vector(a), Value::Vector(g)) => a.iter_mut().zip(g).for_each(|(x, y)| *x += y),
            (Value::Banded(a), Value::Banded(g)) => {
                a.data_mut().iter_mut().zip(g.data()).for_each(|(x, y)| *x += y)
            }
            (Value::Sym(a), Value::Sym(g)) => a
                .lower_mut()
                .data_mut()
                .iter_mut()
                .zip(g.lower().data())
                .for_each(|(x, y)| *x += y),
            (a, g) => return Err(kind_err(a.kind(), &g)),
        },
    }
    Ok(())
}

/// Backward rule of a custom node: `(out_bar, output, inputs) -> input sensitivities`.
pub type CustomVjp = Box<dyn Fn(&Value, &Value, &[&Value]) -> Result<Vec<Value>>>;

enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    ScaleBy(usize, usize),
    ScaleConst(usize, f64),
    AddConst(usize),
    Exp(usize),
    Ln(usize),
    Dot(usize, usize),
    Sum(usize),
    Diag(usize),
    AddDiag(usize, usize),
    TraceProduct(usize, usize),
    Cholesky(usize),
    LogDetChol(usize),
    SolveVec(usize, usize, bool),
    SparseInverse(usize),
    ProductBandVec(usize, usize, bool),
    Gather(usize, Vec<usize>),
    Custom(Vec<usize>, CustomVjp),
}

struct Node {
    op: Op,
    value: Value,
}

/// Handle to a node on a specific tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    id: usize,
    tape: u64,
}

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    params: BTreeMap<String, usize>,
    consumed: bool,
}

/// Sensitivities of the output with respect to every named parameter.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub by_name: BTreeMap<String, Value>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.by_name.get(name)
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.value(name)?.as_scalar()
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        self.value(name)?.as_vector()
    }

    pub fn banded(&self, name: &str) -> Result<&BandedMatrix> {
        self.value(name)?.as_banded()
    }

    pub fn sym(&self, name: &str) -> Result<&SymmetricBandedMatrix> {
        self.value(name)?.as_sym()
    }

    fn value(&self, name: &str) -> Result<&Value> {
        self.by_name
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("no parameter named `{name}`")))
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            params: BTreeMap::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, v: Var) -> Result<usize> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if v.tape != self.id || v.id >= self.nodes.len() {
            return Err(Error::ForeignNode(v.id));
        }
        Ok(v.id)
    }

    fn push(&mut self, op: Op, value: Value) -> Result<Var> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        self.nodes.push(Node { op, value });
        Ok(Var {
            id: self.nodes.len() - 1,
            tape: self.id,
        })
    }

    /// Named leaf whose sensitivity is reported by `backward`.
    pub fn param(&mut self, name: &str, value: Value) -> Result<Var> {
        let v = self.push(Op::Leaf, value)?;
        self.params.insert(name.to_string(), v.id);
        Ok(v)
    }

    /// Leaf that receives no reported sensitivity.
    pub fn constant(&mut self, value: Value) -> Result<Var> {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, v: Var) -> Result<&Value> {
        let id = self.check(v)?;
        Ok(&self.nodes[id].value)
    }

    pub fn scalar(&self, v: Var) -> Result<f64> {
        self.value(v)?.as_scalar()
    }

    fn val(&self, v: Var) -> Result<(usize, &Value)> {
        let id = self.check(v)?;
        Ok((id, &self.nodes[id].value))
    }

    /// Elementwise `a + b`; symmetric/banded operands may differ in band.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let out = combine(va, vb, 1.0)?;
        self.push(Op::Add(ia, ib), out)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let out = combine(va, vb, -1.0)?;
        self.push(Op::Sub(ia, ib), out)
    }

    /// Scalar product `a * b`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let out = va.as_scalar()? * vb.as_scalar()?;
        self.push(Op::Mul(ia, ib), Value::Scalar(out))
    }

    /// Scalar quotient `a / b`.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let out = va.as_scalar()? / vb.as_scalar()?;
        self.push(Op::Div(ia, ib), Value::Scalar(out))
    }

    /// Any value times a scalar node.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (is, vs) = self.val(s)?;
        let out = va.scaled(vs.as_scalar()?);
        self.push(Op::ScaleBy(ia, is), out)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = va.scaled(c);
        self.push(Op::ScaleConst(ia, c), out)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = va.as_scalar()? + c;
        self.push(Op::AddConst(ia), Value::Scalar(out))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = va.as_scalar()?.exp();
        self.push(Op::Exp(ia), Value::Scalar(out))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = va.as_scalar()?.ln();
        self.push(Op::Ln(ia), Value::Scalar(out))
    }

    /// Vector inner product.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let (x, y) = (va.as_vector()?, vb.as_vector()?);
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("dot of lengths {} and {}", x.len(), y.len())));
        }
        let out = dot(x, y);
        self.push(Op::Dot(ia, ib), Value::Scalar(out))
    }

    pub fn sum_squares(&mut self, a: Var) -> Result<Var> {
        self.dot(a, a)
    }

    /// Sum of vector entries.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = va.as_vector()?.iter().sum();
        self.push(Op::Sum(ia), Value::Scalar(out))
    }

    /// Diagonal of a banded or symmetric banded matrix.
    pub fn diag(&mut self, a: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let out = match va {
            Value::Banded(b) => b.diagonal(),
            Value::Sym(s) => s.diagonal(),
            v => return Err(kind_err("banded", v)),
        };
        self.push(Op::Diag(ia), Value::Vector(out))
    }

    /// Symmetric `a + diag(d)`.
    pub fn add_diag(&mut self, a: Var, d: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (id, vd) = self.val(d)?;
        let out = va.as_sym()?.add_diagonal(vd.as_vector()?)?;
        self.push(Op::AddDiag(ia, id), Value::Sym(out))
    }

    /// `tr(A B)` for symmetric banded `A`, `B`, over the shared band.
    pub fn trace_product(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, va) = self.val(a)?;
        let (ib, vb) = self.val(b)?;
        let out = trace_product(va.as_sym()?, vb.as_sym()?)?;
        self.push(Op::TraceProduct(ia, ib), Value::Scalar(out))
    }

    pub fn cholesky(&mut self, q: Var) -> Result<Var> {
        let (iq, vq) = self.val(q)?;
        let out = cholesky(vq.as_sym()?)?;
        self.push(Op::Cholesky(iq), Value::Banded(out))
    }

    /// `sum_i log L_ii`.
    pub fn log_det_chol(&mut self, l: Var) -> Result<Var> {
        let (il, vl) = self.val(l)?;
        let out = log_det_from_cholesky(vl.as_banded()?)?;
        self.push(Op::LogDetChol(il), Value::Scalar(out))
    }

    pub fn solve_vec(&mut self, l: Var, v: Var, transpose_l: bool) -> Result<Var> {
        let (il, vl) = self.val(l)?;
        let (iv, vv) = self.val(v)?;
        let out = solve_vec(vl.as_banded()?, vv.as_vector()?, transpose_l)?;
        self.push(Op::SolveVec(il, iv, transpose_l), Value::Vector(out))
    }

    pub fn sparse_inverse(&mut self, l: Var) -> Result<Var> {
        let (il, vl) = self.val(l)?;
        let out = sparse_inverse_subset(vl.as_banded()?)?;
        self.push(Op::SparseInverse(il), Value::Sym(out))
    }

    /// `B v`, or `B^T v` when `transpose_b`.
    pub fn product_band_vec(&mut self, b: Var, v: Var, transpose_b: bool) -> Result<Var> {
        let (ib, vb) = self.val(b)?;
        let (iv, vv) = self.val(v)?;
        let (bm, x) = (vb.as_banded()?, vv.as_vector()?);
        let out = if transpose_b {
            product_band_vec_transposed(bm, x)?
        } else {
            product_band_vec(bm, x)?
        };
        self.push(Op::ProductBandVec(ib, iv, transpose_b), Value::Vector(out))
    }

    /// `x[idx]`.
    pub fn gather(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let (ix, vx) = self.val(x)?;
        let xs = vx.as_vector()?;
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            out.push(*xs.get(i).ok_or(Error::IndexOutOfRange { index: i, len: xs.len() })?);
        }
        self.push(Op::Gather(ix, idx.to_vec()), Value::Vector(out))
    }

    /// Node with a caller-supplied forward value and backward rule.
    pub fn custom(&mut self, inputs: &[Var], value: Value, vjp: CustomVjp) -> Result<Var> {
        let ids = inputs.iter().map(|&v| self.check(v)).collect::<Result<Vec<_>>>()?;
        self.push(Op::Custom(ids, vjp), value)
    }

    /// Reverse sweep from scalar `out`. Consumes the tape.
    pub fn backward(&mut self, out: Var) -> Result<Gradients> {
        let io = self.check(out)?;
        if !matches!(self.nodes[io].value, Value::Scalar(_)) {
            return Err(Error::NonScalarOutput);
        }
        self.consumed = true;
        let mut bars: Vec<Option<Value>> = (0..=io).map(|_| None).collect();
        bars[io] = Some(Value::Scalar(1.0));
        for k in (0..=io).rev() {
            let Some(bar) = bars[k].take() else { continue };
            let contribs = self.node_vjp(k, &bar)?;
            for (i, g) in contribs {
                accumulate(&mut bars[i], &self.nodes[i].value, g)?;
            }
            bars[k] = Some(bar);
        }
        let mut by_name = BTreeMap::new();
        for (name, &id) in &self.params {
            let g = if id <= io { bars[id].take() } else { None };
            by_name.insert(
                name.clone(),
                g.unwrap_or_else(|| self.nodes[id].value.zeros_like()),
            );
        }
        Ok(Gradients { by_name })
    }

    fn node_vjp(&self, k: usize, bar: &Value) -> Result<Vec<(usize, Value)>> {
        let val = |i: usize| &self.nodes[i].value;
        let out = &self.nodes[k].value;
        Ok(match &self.nodes[k].op {
            Op::Leaf => vec![],
            Op::Add(a, b) => vec![(*a, bar.clone()), (*b, bar.clone())],
            Op::Sub(a, b) => vec![(*a, bar.clone()), (*b, bar.scaled(-1.0))],
            Op::Mul(a, b) => {
                let g = bar.as_scalar()?;
                let (x, y) = (val(*a).as_scalar()?, val(*b).as_scalar()?);
                vec![(*a, Value::Scalar(g * y)), (*b, Value::Scalar(g * x))]
            }
            Op::Div(a, b) => {
                let g = bar.as_scalar()?;
                let y = val(*b).as_scalar()?;
                let q = out.as_scalar()?;
                vec![(*a, Value::Scalar(g / y)), (*b, Value::Scalar(-g * q / y))]
            }
            Op::ScaleBy(a, s) => {
                let c = val(*s).as_scalar()?;
                vec![(*a, bar.scaled(c)), (*s, Value::Scalar(bar.inner(val(*a))?))]
            }
            Op::ScaleConst(a, c) => vec![(*a, bar.scaled(*c))],
            Op::AddConst(a) => vec![(*a, bar.clone())],
            Op::Exp(a) => vec![(*a, Value::Scalar(bar.as_scalar()? * out.as_scalar()?))],
            Op::Ln(a) => vec![(*a, Value::Scalar(bar.as_scalar()? / val(*a).as_scalar()?))],
            Op::Dot(a, b) => {
                let g = bar.as_scalar()?;
                let ga: Vec<f64> = val(*b).as_vector()?.iter().map(|y| g * y).collect();
                let gb: Vec<f64> = val(*a).as_vector()?.iter().map(|x| g * x).collect();
                vec![(*a, Value::Vector(ga)), (*b, Value::Vector(gb))]
            }
            Op::Sum(a) => {
                let g = bar.as_scalar()?;
                vec![(*a, Value::Vector(vec![g; val(*a).as_vector()?.len()]))]
            }
            Op::Diag(a) => {
                let g = bar.as_vector()?;
                let d = match val(*a) {
                    Value::Banded(b) => {
                        let mut z = BandedMatrix::zeros(b.n(), b.lower_bw(), b.upper_bw());
                        (0..b.n()).for_each(|i| *z.at_mut(i, i) = g[i]);
                        Value::Banded(z)
                    }
                    Value::Sym(s) => {
                        let mut z = SymmetricBandedMatrix::zeros(s.n(), s.bandwidth());
                        (0..s.n()).for_each(|i| *z.at_mut(i, i) = g[i]);
                        Value::Sym(z)
                    }
                    v => return Err(kind_err("banded", v)),
                };
                vec![(*a, d)]
            }
            Op::AddDiag(a, d) => vec![(*a, bar.clone()), (*d, Value::Vector(bar.as_sym()?.diagonal()))],
            Op::TraceProduct(a, b) => {
                let g = bar.as_scalar()?;
                let (sa, sb) = (val(*a).as_sym()?, val(*b).as_sym()?);
                vec![
                    (*a, Value::Sym(trace_product_grad(sb, sa.bandwidth(), g)?)),
                    (*b, Value::Sym(trace_product_grad(sa, sb.bandwidth(), g)?)),
                ]
            }
            Op::Cholesky(q) => {
                let l = out.as_banded()?;
                vec![(*q, Value::Sym(grad::vjp_cholesky(l, bar.as_banded()?.clone())?))]
            }
            Op::LogDetChol(l) => vec![(
                *l,
                Value::Banded(grad::vjp_log_det_from_cholesky(val(*l).as_banded()?, bar.as_scalar()?)?),
            )],
            Op::SolveVec(l, v, t) => {
                let (lb, vb) = grad::vjp_solve_vec(
                    val(*l).as_banded()?,
                    val(*v).as_vector()?,
                    out.as_vector()?,
                    bar.as_vector()?,
                    *t,
                )?;
                vec![(*l, Value::Banded(lb)), (*v, Value::Vector(vb))]
            }
            Op::SparseInverse(l) => {
                let lb = grad::vjp_sparse_inverse_subset(
                    val(*l).as_banded()?,
                    out.as_sym()?,
                    bar.as_sym()?.clone(),
                )?;
                vec![(*l, Value::Banded(lb))]
            }
            Op::ProductBandVec(b, v, t) => {
                let bm = val(*b).as_banded()?;
                let x = val(*v).as_vector()?;
                let g = bar.as_vector()?;
                if *t {
                    // p = B^T v: B_bar = v g^T on band(B), v_bar = B g.
                    let bb = outer_band(x, g, bm.lower_bw(), bm.upper_bw())?;
                    vec![(*b, Value::Banded(bb)), (*v, Value::Vector(product_band_vec(bm, g)?))]
                } else {
                    let (bb, vb) = grad::vjp_product_band_vec(bm, x, g)?;
                    vec![(*b, Value::Banded(bb)), (*v, Value::Vector(vb))]
                }
            }
            Op::Gather(x, idx) => {
                let g = bar.as_vector()?;
                let mut full = vec![0.0; val(*x).as_vector()?.len()];
                for (&i, &gi) in idx.iter().zip(g) {
                    full[i] += gi;
                }
                vec![(*x, Value::Vector(full))]
            }
            Op::Custom(ids, vjp) => {
                let inputs: Vec<&Value> = ids.iter().map(|&i| val(i)).collect();
                let gs = vjp(bar, out, &inputs)?;
                if gs.len() != ids.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "custom backward returned {} sensitivities for {} inputs",
                        gs.len(),
                        ids.len()
                    )));
                }
                ids.iter().copied().zip(gs).collect()
            }
        })
    }
}

/// `a + sign * b` with band widening.
fn combine(a: &Value, b: &Value, sign: f64) -> Result<Value> {
    Ok(match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x + sign * y),
        (Value::Vector(x), Value::Vector(y)) => {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch(format!("add of lengths {} and {}", x.len(), y.len())));
            }
            Value::Vector(x.iter().zip(y).map(|(p, q)| p + sign * q).collect())
        }
        (Value::Banded(x), Value::Banded(y)) => Value::Banded(x.add(&y.scale(sign))?),
        (Value::Sym(x), Value::Sym(y)) => Value::Sym(x.add(&y.scale(sign))?),
        (x, y) => return Err(kind_err(x.kind(), y)),
    })
}

/// `tr(A B)` of two symmetric bands, using only cells in both bands.
pub fn trace_product(a: &SymmetricBandedMatrix, b: &SymmetricBandedMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!("trace of sizes {} and {}", a.n(), b.n())));
    }
    let l = a.bandwidth().min(b.bandwidth());
    let mut s = 0.0;
    for j in 0..a.n() {
        s += a.at(j, j) * b.at(j, j);
        for i in j + 1..(j + l + 1).min(a.n()) {
            s += 2.0 * a.at(i, j) * b.at(i, j);
        }
    }
    Ok(s)
}

/// Lower-convention sensitivity of `tr(A B)` with respect to `A` (bandwidth `la`).
fn trace_product_grad(b: &SymmetricBandedMatrix, la: usize, g: f64) -> Result<SymmetricBandedMatrix> {
    let mut out = SymmetricBandedMatrix::zeros(b.n(), la);
    let l = la.min(b.bandwidth());
    for j in 0..b.n() {
        *out.at_mut(j, j) = g * b.at(j, j);
        for i in j + 1..(j + l + 1).min(b.n()) {
            *out.at_mut(i, j) = 2.0 * g * b.at(i, j);
        }
    }
    Ok(out)
}
