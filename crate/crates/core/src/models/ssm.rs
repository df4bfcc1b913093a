//! Linear-Gaussian state-space models for 1-D Matérn kernels.
//!
//! States `F_0 .. F_T` with `F_t = A_t F_{t-1} + b_t + N(0, Q_t)` and
//! observations `Y_t = H F_t + c + N(0, R)` for `t = 1..T`. The observation
//! times map to `F_1 .. F_T`; `F_0` is a virtual state decoupled from the rest
//! (`A_1 = 0`), so `F_1` starts from the stationary covariance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dual::{Scalar, SmallMat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel<S = f64> {
    /// State dimension.
    pub d: usize,
    /// Observation dimension.
    pub e: usize,
    /// `A_1 .. A_T`.
    pub a: Vec<SmallMat<S>>,
    pub b: Vec<Vec<S>>,
    pub q: Vec<SmallMat<S>>,
    pub h: SmallMat<S>,
    pub c: Vec<S>,
    pub r: SmallMat<S>,
    pub mu0: Vec<S>,
    pub sigma0: SmallMat<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Matern12,
    Matern32,
}

impl KernelKind {
    pub fn state_dim(self) -> usize {
        match self {
            KernelKind::Matern12 => 1,
            KernelKind::Matern32 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Matern12 => "matern12",
            KernelKind::Matern32 => "matern32",
        }
    }

    /// Covariance at distance `r`.
    pub fn eval(self, r: f64, variance: f64, lengthscale: f64) -> f64 {
        let r = r.abs();
        match self {
            KernelKind::Matern12 => variance * (-r / lengthscale).exp(),
            KernelKind::Matern32 => {
                let z = 3f64.sqrt() * r / lengthscale;
                variance * (1.0 + z) * (-z).exp()
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "matern12" | "matern1/2" | "exp" => Ok(KernelKind::Matern12),
            "matern32" | "matern3/2" => Ok(KernelKind::Matern32),
            other => Err(Error::InvalidConfig(format!("unknown kernel `{other}`"))),
        }
    }
}

pub fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidConfig("at least one time stamp is required".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonIncreasingTimes(k + 1));
        }
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig("time stamps must be finite".into()));
    }
    Ok(())
}

fn check_positive<S: Scalar>(name: &'static str, v: S) -> Result<()> {
    if !(v.value() > 0.0) || !v.value().is_finite() {
        return Err(Error::NonPositiveParam { name, value: v.value() });
    }
    Ok(())
}

/// Steps between consecutive states; `None` marks the decoupled first step.
fn gaps(times: &[f64]) -> impl Iterator<Item = Option<f64>> + '_ {
    std::iter::once(None).chain(times.windows(2).map(|w| Some(w[1] - w[0])))
}

impl<S: Scalar> StateSpaceModel<S> {
    pub fn num_steps(&self) -> usize {
        self.a.len()
    }

    fn from_transitions(d: usize, a: Vec<SmallMat<S>>, q: Vec<SmallMat<S>>, p_inf: SmallMat<S>, h: SmallMat<S>) -> Self {
        let t = a.len();
        Self {
            d,
            e: 1,
            a,
            b: vec![vec![S::zero(); d]; t],
            q,
            h,
            c: vec![S::zero()],
            r: SmallMat::identity(1),
            mu0: vec![S::zero(); d],
            sigma0: p_inf,
        }
    }

    /// Observation noise `R = noise * I`.
    pub fn with_noise(mut self, noise: S) -> Result<Self> {
        check_positive("noise variance", noise)?;
        self.r = SmallMat::identity(self.e).scaled(noise);
        Ok(self)
    }

    /// The same model evaluated in `f64`.
    pub fn to_f64(&self) -> StateSpaceModel<f64> {
        StateSpaceModel {
            d: self.d,
            e: self.e,
            a: self.a.iter().map(SmallMat::map_value).collect(),
            b: self.b.iter().map(|v| v.iter().map(|x| x.value()).collect()).collect(),
            q: self.q.iter().map(SmallMat::map_value).collect(),
            h: self.h.map_value(),
            c: self.c.iter().map(|x| x.value()).collect(),
            r: self.r.map_value(),
            mu0: self.mu0.iter().map(|x| x.value()).collect(),
            sigma0: self.sigma0.map_value(),
        }
    }
}

/// Matérn-½: `A_t = exp(-dt / l)`, `Q_t = s2 (1 - A_t^2)`, `Sigma_0 = s2`.
pub fn matern12_ssm<S: Scalar>(times: &[f64], variance: S, lengthscale: S) -> Result<StateSpaceModel<S>> {
    check_times(times)?;
    check_positive("variance", variance)?;
    check_positive("lengthscale", lengthscale)?;
    let mut a = Vec::with_capacity(times.len());
    let mut q = Vec::with_capacity(times.len());
    for gap in gaps(times) {
        let at = match gap {
            None => S::zero(),
            Some(dt) => (-(S::cst(dt) / lengthscale)).exp(),
        };
        a.push(SmallMat::from_rows(1, 1, vec![at]));
        q.push(SmallMat::from_rows(1, 1, vec![variance * (S::one() - at * at)]));
    }
    let p_inf = SmallMat::from_rows(1, 1, vec![variance]);
    Ok(StateSpaceModel::from_transitions(1, a, q, p_inf, SmallMat::from_rows(1, 1, vec![S::one()])))
}

/// Matérn-3/2 in companion form with `lam = sqrt(3) / l` and stationary
/// covariance `diag(s2, lam^2 s2)`; `Q_t = P - A_t P A_t^T`.
pub fn matern32_ssm<S: Scalar>(times: &[f64], variance: S, lengthscale: S) -> Result<StateSpaceModel<S>> {
    check_times(times)?;
    check_positive("variance", variance)?;
    check_positive("lengthscale", lengthscale)?;
    let lam = S::cst(3f64.sqrt()) / lengthscale;
    let p_inf = SmallMat::from_diag(&[variance, lam * lam * variance]);
    let mut a = Vec::with_capacity(times.len());
    let mut q = Vec::with_capacity(times.len());
    for gap in gaps(times) {
        let at = match gap {
            None => SmallMat::zeros(2, 2),
            Some(dt) => {
                let dt = S::cst(dt);
                let ld = lam * dt;
                let e = (-ld).exp();
                SmallMat::from_rows(
                    2,
                    2,
                    vec![e * (S::one() + ld), e * dt, -(e * lam * ld), e * (S::one() - ld)],
                )
            }
        };
        let qt = p_inf.sub(&at.matmul(&p_inf).matmul(&at.transpose()));
        a.push(at);
        q.push(qt);
    }
    let h = SmallMat::from_rows(1, 2, vec![S::one(), S::zero()]);
    Ok(StateSpaceModel::from_transitions(2, a, q, p_inf, h))
}

pub fn kernel_ssm<S: Scalar>(kind: KernelKind, times: &[f64], variance: S, lengthscale: S) -> Result<StateSpaceModel<S>> {
    match kind {
        KernelKind::Matern12 => matern12_ssm(times, variance, lengthscale),
        KernelKind::Matern32 => matern32_ssm(times, variance, lengthscale),
    }
}

fn block_diag<S: Scalar>(blocks: &[&SmallMat<S>]) -> SmallMat<S> {
    let rows: usize = blocks.iter().map(|b| b.rows).sum();
    let cols: usize = blocks.iter().map(|b| b.cols).sum();
    let mut out = SmallMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for i in 0..b.rows {
            for j in 0..b.cols {
                out[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
        r0 += b.rows;
        c0 += b.cols;
    }
    out
}

/// Sum of independent processes: block-diagonal states, `H` concatenated so the
/// observed function is the sum of the components. Observation noise is taken
/// from the first model.
pub fn ssm_stack<S: Scalar>(models: &[StateSpaceModel<S>]) -> Result<StateSpaceModel<S>> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidConfig("cannot stack an empty list of models".into()))?;
    let t = first.num_steps();
    if models.iter().any(|m| m.num_steps() != t || m.e != first.e) {
        return Err(Error::TimeGridMismatch);
    }
    if models.len() == 1 {
        return Ok(first.clone());
    }
    let d = models.iter().map(|m| m.d).sum();
    let mut h = SmallMat::zeros(first.e, d);
    let mut c0 = 0;
    for m in models {
        for i in 0..m.e {
            for j in 0..m.d {
                h[(i, c0 + j)] = m.h[(i, j)];
            }
        }
        c0 += m.d;
    }
    let mut c = vec![S::zero(); first.e];
    for m in models {
        c.iter_mut().zip(&m.c).for_each(|(x, &y)| *x = *x + y);
    }
    Ok(StateSpaceModel {
        d,
        e: first.e,
        a: (0..t).map(|k| block_diag(&models.iter().map(|m| &m.a[k]).collect::<Vec<_>>())).collect(),
        b: (0..t).map(|k| models.iter().flat_map(|m| m.b[k].iter().copied()).collect()).collect(),
        q: (0..t).map(|k| block_diag(&models.iter().map(|m| &m.q[k]).collect::<Vec<_>>())).collect(),
        h,
        c,
        r: first.r.clone(),
        mu0: models.iter().flat_map(|m| m.mu0.iter().copied()).collect(),
        sigma0: block_diag(&models.iter().map(|m| &m.sigma0).collect::<Vec<_>>()),
    })
}

/// A sum of Matérn components plus Gaussian noise on a fixed time grid.
///
/// Hyperparameters are `[log s2_1, log l_1, log s2_2, log l_2, ..., log noise]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub components: Vec<KernelKind>,
}

impl KernelSpec {
    pub fn new(components: Vec<KernelKind>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("kernel needs at least one component".into()));
        }
        Ok(Self { components })
    }

    /// Parses `matern12`, `matern32+matern12`, ...
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(s.split('+').map(KernelKind::parse).collect::<Result<_>>()?)
    }

    pub fn name(&self) -> String {
        self.components.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
    }

    pub fn state_dim(&self) -> usize {
        self.components.iter().map(|k| k.state_dim()).sum()
    }

    pub fn num_kernel_params(&self) -> usize {
        2 * self.components.len()
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, k) in self.components.iter().enumerate() {
            names.push(format!("{}_{i}.variance", k.name()));
            names.push(format!("{}_{i}.lengthscale", k.name()));
        }
        names.push("noise".into());
        names
    }

    /// State-space model for kernel log-parameters (noise excluded).
    pub fn build<S: Scalar>(&self, times: &[f64], log_kernel_params: &[S]) -> Result<StateSpaceModel<S>> {
        if log_kernel_params.len() != self.num_kernel_params() {
            return Err(Error::DimensionMismatch(format!(
                "kernel `{}` takes {} parameters, got {}",
                self.name(),
                self.num_kernel_params(),
                log_kernel_params.len()
            )));
        }
        let models = self
            .components
            .iter()
            .enumerate()
            .map(|(i, &k)| kernel_ssm(k, times, log_kernel_params[2 * i].exp(), log_kernel_params[2 * i + 1].exp()))
            .collect::<Result<Vec<_>>>()?;
        ssm_stack(&models)
    }

    /// Dense covariance of the observed function at `times`.
    pub fn gram(&self, times: &[f64], kernel_params: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = times.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            self.components
                .iter()
                .enumerate()
                .map(|(c, k)| k.eval(times[i] - times[j], kernel_params[2 * c], kernel_params[2 * c + 1]))
                .sum()
        })
    }
}

/// Draws states and observations `Y_1 .. Y_T` (flattened, `T e` values).
pub fn simulate<R: Rng>(ssm: &StateSpaceModel<f64>, rng: &mut R) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let draw = |cov: &SmallMat<f64>, rng: &mut R, what: &'static str| -> Result<Vec<f64>> {
        let l = cov.cholesky(what)?;
        let z: Vec<f64> = (0..cov.rows).map(|_| rng.sample(StandardNormal)).collect();
        Ok(l.matvec(&z))
    };
    let mut states = Vec::with_capacity(ssm.num_steps() + 1);
    let x0: Vec<f64> = draw(&ssm.sigma0, rng, "Sigma0")?
        .iter()
        .zip(&ssm.mu0)
        .map(|(a, b)| a + b)
        .collect();
    states.push(x0);
    let mut y = Vec::with_capacity(ssm.num_steps() * ssm.e);
    for t in 0..ssm.num_steps() {
        let prev = states.last().expect("initial state pushed");
        let mean = ssm.a[t].matvec(prev);
        let noise = draw(&ssm.q[t], rng, "Q_t")?;
        let x: Vec<f64> = (0..ssm.d).map(|i| mean[i] + ssm.b[t][i] + noise[i]).collect();
        let obs = ssm.h.matvec(&x);
        let eps = draw(&ssm.r, rng, "R")?;
        y.extend((0..ssm.e).map(|i| obs[i] + ssm.c[i] + eps[i]));
        states.push(x);
    }
    Ok((states, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matern12_structure() {
        let m = matern12_ssm(&[0.0, 1.0, 3.0], 2.0, 1.0).unwrap();
        assert_eq!(m.num_steps(), 3);
        assert_eq!(m.a[0][(0, 0)], 0.0);
        assert!((m.a[1][(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert!((m.q[2][(0, 0)] - 2.0 * (1.0 - (-4f64).exp())).abs() < 1e-15);
        assert_eq!(m.sigma0[(0, 0)], 2.0);
    }

    #[test]
    fn matern32_is_stationary() {
        let times = [0.0, 0.3, 0.35, 2.0];
        let m = matern32_ssm(&times, 1.7, 0.8).unwrap();
        let mut p = m.sigma0.clone();
        for t in 0..m.num_steps() {
            p = m.a[t].matmul(&p).matmul(&m.a[t].transpose()).add(&m.q[t]);
            assert!((p[(0, 0)] - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(matern12_ssm(&[0.0, 0.0], 1.0, 1.0).unwrap_err(), Error::NonIncreasingTimes(1));
        assert!(matches!(matern32_ssm(&[0.0], -1.0, 1.0), Err(Error::NonPositiveParam { .. })));
        let a = matern12_ssm(&[0.0, 1.0], 1.0, 1.0).unwrap();
        let b = matern12_ssm(&[0.0, 1.0, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(ssm_stack(&[a, b]).unwrap_err(), Error::TimeGridMismatch);
    }

    #[test]
    fn stack_dims() {
        let spec = KernelSpec::parse("matern32+matern12+matern12").unwrap();
        let m = spec.build(&[0.0, 1.0], &[0.0, 0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(m.d, 4);
        assert_eq!(m.h.data, vec![1.0, 0.0, 1.0, 1.0]);
        let single = KernelSpec::parse("matern12").unwrap().build(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(single, matern12_ssm(&[0.0, 1.0], 1.0, 1.0).unwrap());
    }
}
