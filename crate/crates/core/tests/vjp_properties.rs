//! Structural properties of the VJPs: exact linearity in the incoming
//! sensitivity and band closure.

use bandgp::band::{
    cholesky, outer_band, product_band_band, solve_mat, solve_vec, sparse_inverse_subset,
    BandedMatrix, SymmetricBandedMatrix,
};
use bandgp::grad::{
    vjp_cholesky, vjp_outer, vjp_product_band_band, vjp_product_band_vec, vjp_solve_mat, vjp_solve_vec,
    vjp_sparse_inverse_subset,
};
use bandgp::gradcheck::{random_band, random_lower_factor, random_spd, random_vec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scaled(b: &BandedMatrix, a: f64) -> BandedMatrix {
    b.scale(a)
}

fn scaled_vec(v: &[f64], a: f64) -> Vec<f64> {
    v.iter().map(|x| a * x).collect()
}

fn shape(b: &BandedMatrix) -> (usize, usize, usize) {
    (b.n(), b.lower_bw(), b.upper_bw())
}

/// Scaling by a power of two commutes exactly with every rounding step, so
/// linearity can be asserted bit for bit.
const ALPHAS: [f64; 3] = [4.0, 0.25, -2.0];

#[test]
fn linear_and_band_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = 30;
        let a = random_band(&mut rng, n, 2, 1, 1.0);
        let b = random_band(&mut rng, n, 1, 3, 1.0);
        let l = random_lower_factor(&mut rng, n, 3);
        let v = random_vec(&mut rng, n);
        let m = random_vec(&mut rng, n);

        let p = product_band_band(&a, &b).unwrap();
        let pb = random_band(&mut rng, n, p.lower_bw(), p.upper_bw(), 1.0);
        let (ab, bb) = vjp_product_band_band(&a, &b, &pb).unwrap();
        assert_eq!((shape(&ab), shape(&bb)), (shape(&a), shape(&b)));

        let pv = random_vec(&mut rng, n);
        let (bvb, vb) = vjp_product_band_vec(&a, &v, &pv).unwrap();
        assert_eq!(shape(&bvb), shape(&a));

        let o = outer_band(&m, &v, 2, 1).unwrap();
        let ob = random_band(&mut rng, n, 2, 1, 1.0);
        let (mb, vb2) = vjp_outer(&m, &v, &ob).unwrap();
        assert_eq!(shape(&o), shape(&ob));

        let s = solve_vec(&l, &v, false).unwrap();
        let (lsb, svb) = vjp_solve_vec(&l, &v, &s, &pv, false).unwrap();
        assert_eq!(shape(&lsb), shape(&l));

        let r = random_band(&mut rng, n, 1, 2, 1.0);
        let sm = solve_mat(&l, &r, 4, 2).unwrap();
        let smb = random_band(&mut rng, n, 4, 2, 1.0);
        let (lmb, rmb) = vjp_solve_mat(&l, &r, &sm, &smb).unwrap();
        assert_eq!((shape(&lmb), shape(&rmb)), (shape(&l), shape(&r)));

        let q = random_spd(&mut rng, n, 3);
        let lq = cholesky(&q).unwrap();
        let lqb = random_band(&mut rng, n, 3, 0, 1.0);
        let qb = vjp_cholesky(&lq, lqb.clone()).unwrap();
        assert_eq!(shape(qb.lower()), shape(q.lower()));

        let z = sparse_inverse_subset(&l).unwrap();
        let zb = SymmetricBandedMatrix::from_lower(random_band(&mut rng, n, 3, 0, 1.0)).unwrap();
        let lzb = vjp_sparse_inverse_subset(&l, &z, zb.clone()).unwrap();
        assert_eq!(shape(&lzb), shape(&l));

        for alpha in ALPHAS {
            let (x, y) = vjp_product_band_band(&a, &b, &scaled(&pb, alpha)).unwrap();
            assert_eq!((x, y), (scaled(&ab, alpha), scaled(&bb, alpha)));
            let (x, y) = vjp_product_band_vec(&a, &v, &scaled_vec(&pv, alpha)).unwrap();
            assert_eq!((x, y), (scaled(&bvb, alpha), scaled_vec(&vb, alpha)));
            let (x, y) = vjp_outer(&m, &v, &scaled(&ob, alpha)).unwrap();
            assert_eq!((x, y), (scaled_vec(&mb, alpha), scaled_vec(&vb2, alpha)));
            let (x, y) = vjp_solve_vec(&l, &v, &s, &scaled_vec(&pv, alpha), false).unwrap();
            assert_eq!((x, y), (scaled(&lsb, alpha), scaled_vec(&svb, alpha)));
            let (x, y) = vjp_solve_mat(&l, &r, &sm, &scaled(&smb, alpha)).unwrap();
            assert_eq!((x, y), (scaled(&lmb, alpha), scaled(&rmb, alpha)));
            let x = vjp_cholesky(&lq, scaled(&lqb, alpha)).unwrap();
            assert_eq!(x.lower(), &scaled(qb.lower(), alpha));
            let x = vjp_sparse_inverse_subset(&l, &z, zb.scale(alpha)).unwrap();
            assert_eq!(x, scaled(&lzb, alpha));
        }
    }
}
