//! Randomized finite-difference suite for the reverse-mode kernels.
//!
//! Each instance draws random inputs and a random weight `W` of the output's
//! shape, and compares the VJP of `c = <W, F(X)>` against central differences.
//! Instances are seeded independently so results do not depend on the
//! execution mode.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::band::{
    cholesky, outer_band, product_band_band, product_band_vec, solve_mat, solve_vec,
    sparse_inverse_subset, BandedMatrix, SymmetricBandedMatrix,
};
use crate::error::Result;
use crate::exec::{self, Mode};
use crate::grad::{self, finite_diff_check, FD_ATOL, FD_EPS, FD_RTOL};

/// Operations covered by the suite.
pub const OPS: &[&str] = &[
    "product_band_band",
    "product_band_vec",
    "outer",
    "solve_vec",
    "solve_vec_transposed",
    "solve_mat",
    "cholesky",
    "sparse_inverse_subset",
    "sparse_inverse_dense_adjoint",
];

#[derive(Debug, Clone, Serialize)]
pub struct OpReport {
    pub op: String,
    pub instances: usize,
    pub failures: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
    pub ops: Vec<OpReport>,
    pub passed: bool,
}

/// Error summary of one instance: (passed, max relative error above the
/// absolute floor, max absolute error).
type Outcome = (bool, f64, f64);

/// Runs `reps` instances of every op whose name contains `filter`.
pub fn run_suite(filter: Option<&str>, seed: u64, reps: usize, mode: Mode) -> SuiteReport {
    let ops: Vec<OpReport> = OPS
        .iter()
        .filter(|op| filter.is_none_or(|f| op.contains(f)))
        .map(|op| run_op(op, seed, reps, mode))
        .collect();
    let passed = ops.iter().all(|r| r.passed);
    SuiteReport {
        seed,
        rtol: FD_RTOL,
        atol: FD_ATOL,
        ops,
        passed,
    }
}

pub fn run_op(op: &str, seed: u64, reps: usize, mode: Mode) -> OpReport {
    let salt = OPS.iter().position(|o| *o == op).unwrap_or(OPS.len()) as u64;
    let outcomes: Vec<Outcome> = exec::map_range(mode, reps, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (salt << 40) ^ (k as u64).wrapping_mul(0x9E37_79B9));
        check_instance(op, &mut rng).unwrap_or((false, f64::INFINITY, f64::INFINITY))
    });
    let failures = outcomes.iter().filter(|o| !o.0).count();
    OpReport {
        op: op.to_string(),
        instances: reps,
        failures,
        max_rel_err: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        max_abs_err: outcomes.iter().map(|o| o.2).fold(0.0, f64::max),
        passed: failures == 0 && OPS.contains(&op),
    }
}

/// Random band with entries uniform in `[-scale, scale]`.
pub fn random_band<R: Rng>(rng: &mut R, n: usize, lower: usize, upper: usize, scale: f64) -> BandedMatrix {
    let mut b = BandedMatrix::zeros(n, lower, upper);
    for (i, j) in cells(&b) {
        *b.at_mut(i, j) = rng.random_range(-scale..=scale);
    }
    b
}

/// Well-conditioned lower-triangular factor: diagonal in `[1, 2]`, off-diagonal
/// entries in `[-0.3, 0.3]`.
pub fn random_lower_factor<R: Rng>(rng: &mut R, n: usize, l: usize) -> BandedMatrix {
    let mut b = random_band(rng, n, l, 0, 0.3);
    for i in 0..n {
        *b.at_mut(i, i) = rng.random_range(1.0..2.0);
    }
    b
}

/// Strictly diagonally dominant symmetric band, hence SPD.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, l: usize) -> SymmetricBandedMatrix {
    let mut q = SymmetricBandedMatrix::zeros(n, l);
    let mut row_abs = vec![0.0; n];
    for j in 0..n {
        for i in j + 1..(j + l + 1).min(n) {
            let v: f64 = rng.random_range(-1.0..1.0);
            *q.at_mut(i, j) = v;
            row_abs[i] += v.abs();
            row_abs[j] += v.abs();
        }
    }
    for i in 0..n {
        *q.at_mut(i, i) = row_abs[i] + rng.random_range(1.0..2.0);
    }
    q
}

fn random_band_any<R: Rng>(rng: &mut R, n: usize, max_bw: usize) -> BandedMatrix {
    let lower = rng.random_range(0..max_bw);
    let upper = rng.random_range(0..max_bw);
    random_band(rng, n, lower, upper, 1.0)
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// In-band `(i, j)` cells in storage order.
pub fn cells(b: &BandedMatrix) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(b.n() * b.width());
    for j in 0..b.n() {
        let (lo, hi) = b.col_rows(j);
        out.extend((lo..hi).map(|i| (i, j)));
    }
    out
}

fn pack(b: &BandedMatrix) -> Vec<f64> {
    cells(b).into_iter().map(|(i, j)| b.at(i, j)).collect()
}

fn unpack(template: &BandedMatrix, x: &[f64]) -> BandedMatrix {
    let mut b = BandedMatrix::zeros(template.n(), template.lower_bw(), template.upper_bw());
    for (&(i, j), &v) in cells(template).iter().zip(x) {
        *b.at_mut(i, j) = v;
    }
    b
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn compare<F>(f: F, x0: &[f64], g: &[f64]) -> Outcome
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let r = finite_diff_check(f, x0, g, FD_EPS);
    (r.passes(FD_RTOL, FD_ATOL), r.max_rel_err, r.max_abs_err)
}

fn merge(a: Outcome, b: Outcome) -> Outcome {
    (a.0 && b.0, a.1.max(b.1), a.2.max(b.2))
}

fn check_instance(op: &str, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let n = rng.random_range(1..=24usize);
    match op {
        "product_band_band" => {
            let a = random_band_any(rng, n, 4);
            let b = random_band_any(rng, n, 4);
            let p = product_band_band(&a, &b)?;
            let w = random_band(rng, n, p.lower_bw(), p.upper_bw(), 1.0);
            let (a_bar, b_bar) = grad::vjp_product_band_band(&a, &b, &w)?;
            let fa = |x: &[f64]| product_band_band(&unpack(&a, x), &b)?.band_inner(&w);
            let fb = |x: &[f64]| product_band_band(&a, &unpack(&b, x))?.band_inner(&w);
            Ok(merge(
                compare(fa, &pack(&a), &pack(&a_bar)),
                compare(fb, &pack(&b), &pack(&b_bar)),
            ))
        }
        "product_band_vec" => {
            let b = random_band_any(rng, n, 4);
            let v = random_vec(rng, n);
            let w = random_vec(rng, n);
            let (b_bar, v_bar) = grad::vjp_product_band_vec(&b, &v, &w)?;
            let fb = |x: &[f64]| Ok(dot(&w, &product_band_vec(&unpack(&b, x), &v)?));
            let fv = |x: &[f64]| Ok(dot(&w, &product_band_vec(&b, x)?));
            Ok(merge(compare(fb, &pack(&b), &pack(&b_bar)), compare(fv, &v, &v_bar)))
        }
        "outer" => {
            let (lo, up) = (rng.random_range(0..4), rng.random_range(0..4));
            let m = random_vec(rng, n);
            let v = random_vec(rng, n);
            let w = random_band(rng, n, lo, up, 1.0);
            let (m_bar, v_bar) = grad::vjp_outer(&m, &v, &w)?;
            let fm = |x: &[f64]| outer_band(x, &v, lo, up)?.band_inner(&w);
            let fv = |x: &[f64]| outer_band(&m, x, lo, up)?.band_inner(&w);
            Ok(merge(compare(fm, &m, &m_bar), compare(fv, &v, &v_bar)))
        }
        "solve_vec" | "solve_vec_transposed" => {
            let t = op == "solve_vec_transposed";
            let l = { let k = rng.random_range(0..5); random_lower_factor(rng, n, k) };
            let v = random_vec(rng, n);
            let w = random_vec(rng, n);
            let s = solve_vec(&l, &v, t)?;
            let (l_bar, v_bar) = grad::vjp_solve_vec(&l, &v, &s, &w, t)?;
            let fl = |x: &[f64]| Ok(dot(&w, &solve_vec(&unpack(&l, x), &v, t)?));
            let fv = |x: &[f64]| Ok(dot(&w, &solve_vec(&l, x, t)?));
            Ok(merge(compare(fl, &pack(&l), &pack(&l_bar)), compare(fv, &v, &v_bar)))
        }
        "solve_mat" => {
            let l = { let k = rng.random_range(0..4); random_lower_factor(rng, n, k) };
            let r = random_band_any(rng, n, 4);
            // Output band may truncate the (dense) lower part of L^{-1} R.
            let (lo, up) = (rng.random_range(0..6), rng.random_range(0..4));
            let s = solve_mat(&l, &r, lo, up)?;
            let w = random_band(rng, n, lo, up, 1.0);
            let (l_bar, r_bar) = grad::vjp_solve_mat(&l, &r, &s, &w)?;
            let fl = |x: &[f64]| solve_mat(&unpack(&l, x), &r, lo, up)?.band_inner(&w);
            let fr = |x: &[f64]| solve_mat(&l, &unpack(&r, x), lo, up)?.band_inner(&w);
            Ok(merge(
                compare(fl, &pack(&l), &pack(&l_bar)),
                compare(fr, &pack(&r), &pack(&r_bar)),
            ))
        }
        "cholesky" => {
            let n = rng.random_range(1..=50usize);
            let k = rng.random_range(0..5);
            let q = random_spd(rng, n, k);
            let l = cholesky(&q)?;
            let w = random_band(rng, n, l.lower_bw(), 0, 1.0);
            let q_bar = grad::vjp_cholesky(&l, w.clone())?;
            let f = |x: &[f64]| {
                let q = SymmetricBandedMatrix::from_lower(unpack(q.lower(), x))?;
                cholesky(&q)?.band_inner(&w)
            };
            Ok(compare(f, &pack(q.lower()), &pack(q_bar.lower())))
        }
        "sparse_inverse_subset" => {
            let n = rng.random_range(1..=40usize);
            let l = { let k = rng.random_range(0..4); random_lower_factor(rng, n, k) };
            let s = sparse_inverse_subset(&l)?;
            let w = SymmetricBandedMatrix::from_lower(random_band(rng, n, l.lower_bw(), 0, 1.0))?;
            let l_bar = grad::vjp_sparse_inverse_subset(&l, &s, w.clone())?;
            let f = |x: &[f64]| sparse_inverse_subset(&unpack(&l, x))?.lower().band_inner(w.lower());
            Ok(compare(f, &pack(&l), &pack(&l_bar)))
        }
        "sparse_inverse_dense_adjoint" => {
            let n = rng.random_range(1..=10usize);
            let l = { let k = rng.random_range(0..4); random_lower_factor(rng, n, k) };
            let s = sparse_inverse_subset(&l)?;
            let w = SymmetricBandedMatrix::from_lower(random_band(rng, n, l.lower_bw(), 0, 1.0))?;
            let l_bar = grad::vjp_sparse_inverse_subset(&l, &s, w.clone())?;
            let dense = dense_sparse_inverse_adjoint(&l, &w);
            let mut worst: Outcome = (true, 0.0, 0.0);
            for (i, j) in cells(&l) {
                let (a, d) = (l_bar.at(i, j), dense[(i, j)]);
                let abs = (a - d).abs();
                let rel = if abs == 0.0 { 0.0 } else { abs / a.abs().max(d.abs()) };
                let ok = abs <= 1e-10 || rel <= 1e-8;
                worst = merge(worst, (ok, if abs > FD_ATOL { rel } else { 0.0 }, abs));
            }
            Ok(worst)
        }
        _ => Ok((false, f64::INFINITY, f64::INFINITY)),
    }
}

/// Dense adjoint of `L -> band((L L^T)^{-1})`: with `Sigma = (L L^T)^{-1}` and
/// `W` the logical symmetric weight, `L_bar = -2 Sigma W Sigma L` (lower part).
pub fn dense_sparse_inverse_adjoint(l: &BandedMatrix, w: &SymmetricBandedMatrix) -> DMatrix<f64> {
    let ld = l.to_dense();
    let sigma = (&ld * ld.transpose())
        .try_inverse()
        .expect("factor with positive diagonal is invertible");
    // Off-diagonal stored weights count both (i, j) and (j, i).
    let mut wd = w.to_dense();
    for i in 0..wd.nrows() {
        for j in 0..wd.ncols() {
            if i != j {
                wd[(i, j)] *= 0.5;
            }
        }
    }
    let full = -2.0 * &sigma * wd * &sigma * ld;
    full.lower_triangle()
}
