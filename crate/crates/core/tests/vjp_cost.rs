//! Reverse-mode cost: every VJP runs within a constant factor of its forward
//! op. Kept in its own binary so no other test competes for the CPU.

use std::time::Instant;

use bandgp::band::{
    cholesky, outer_band, product_band_band, product_band_vec, solve_mat, solve_vec, sparse_inverse_subset,
    SymmetricBandedMatrix,
};
use bandgp::grad::{
    vjp_cholesky, vjp_outer, vjp_product_band_band, vjp_product_band_vec, vjp_solve_mat, vjp_solve_vec,
    vjp_sparse_inverse_subset,
};
use bandgp::gradcheck::{random_band, random_lower_factor, random_spd, random_vec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Median seconds per call, timing batches so short ops stay measurable.
fn median_secs(mut f: impl FnMut()) -> f64 {
    f();
    let start = Instant::now();
    let mut batch = 1;
    while start.elapsed().as_secs_f64() < 2e-3 {
        f();
        batch += 1;
    }
    let mut ts: Vec<f64> = (0..7)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..batch {
                f();
            }
            t.elapsed().as_secs_f64() / batch as f64
        })
        .collect();
    ts.sort_by(f64::total_cmp);
    ts[3]
}

#[test]
fn vjp_cost_is_proportional_to_forward() {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst = (0.0, "", 0);
    for bw in [1, 5, 15] {
        let l = random_lower_factor(&mut rng, n, bw);
        let q = random_spd(&mut rng, n, bw);
        let lq = cholesky(&q).unwrap();
        let a = random_band(&mut rng, n, bw, bw, 1.0);
        let v = random_vec(&mut rng, n);
        let m = random_vec(&mut rng, n);
        let r = random_band(&mut rng, n, bw, 0, 1.0);
        let s = solve_vec(&l, &v, false).unwrap();
        let sm = solve_mat(&l, &r, bw, 0).unwrap();
        let z = sparse_inverse_subset(&l).unwrap();
        let p = product_band_band(&a, &a).unwrap();
        let pb = random_band(&mut rng, n, p.lower_bw(), p.upper_bw(), 1.0);
        let lb = random_band(&mut rng, n, bw, 0, 1.0);
        let sb = random_band(&mut rng, n, bw, 0, 1.0);
        let ob = random_band(&mut rng, n, bw, bw, 1.0);

        let mut ratio = |name: &'static str, fwd: &mut dyn FnMut(), bwd: &mut dyn FnMut()| {
            // Noise only inflates a ratio, so keep the best of three.
            let x = (0..3)
                .map(|_| median_secs(&mut *bwd) / median_secs(&mut *fwd))
                .fold(f64::INFINITY, f64::min);
            println!("n={n} l={bw} {name}: vjp/forward = {x:.2}");
            if x > worst.0 {
                worst = (x, name, bw);
            }
        };
        ratio(
            "product_band_band",
            &mut || drop(product_band_band(&a, &a).unwrap()),
            &mut || drop(vjp_product_band_band(&a, &a, &pb).unwrap()),
        );
        ratio(
            "product_band_vec",
            &mut || drop(product_band_vec(&a, &v).unwrap()),
            &mut || drop(vjp_product_band_vec(&a, &v, &m).unwrap()),
        );
        ratio(
            "outer",
            &mut || drop(outer_band(&m, &v, bw, bw).unwrap()),
            &mut || drop(vjp_outer(&m, &v, &ob).unwrap()),
        );
        ratio(
            "solve_vec",
            &mut || drop(solve_vec(&l, &v, false).unwrap()),
            &mut || drop(vjp_solve_vec(&l, &v, &s, &m, false).unwrap()),
        );
        ratio(
            "solve_mat",
            &mut || drop(solve_mat(&l, &r, bw, 0).unwrap()),
            &mut || drop(vjp_solve_mat(&l, &r, &sm, &sb).unwrap()),
        );
        ratio(
            "cholesky",
            &mut || drop(cholesky(&q).unwrap()),
            &mut || drop(vjp_cholesky(&lq, lb.clone()).unwrap()),
        );
        ratio(
            "sparse_inverse_subset",
            &mut || drop(sparse_inverse_subset(&l).unwrap()),
            &mut || drop(vjp_sparse_inverse_subset(&l, &z, SymmetricBandedMatrix::from_lower(lb.clone()).unwrap()).unwrap()),
        );
    }
    assert!(worst.0 <= 5.0, "{} at l = {} costs {:.2}x its forward op", worst.1, worst.2, worst.0);
}
