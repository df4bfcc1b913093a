//! Gauss-Hermite quadrature for one-dimensional Gaussian expectations.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for `int exp(-x^2) g(x) dx`, by Golub-Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one quadrature point");
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Rule for `E[g(f)]` with `f ~ N(mu, s2)`: `f_k = mu + sqrt(2 s2) x_k` and
/// weights normalized to sum to one.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianQuadrature {
    pub fn new(points: usize) -> Self {
        let (x, w) = gauss_hermite(points);
        let pi_sqrt = std::f64::consts::PI.sqrt();
        Self {
            nodes: x.iter().map(|x| std::f64::consts::SQRT_2 * x).collect(),
            weights: w.iter().map(|w| w / pi_sqrt).collect(),
        }
    }

    /// `E[g(f)]` and its derivatives with respect to `mu` and `s2`, where `g`
    /// returns `(g(f), g'(f))`. The derivatives are those of the rule itself.
    pub fn expect<G: Fn(f64) -> (f64, f64)>(&self, mu: f64, s2: f64, g: G) -> (f64, f64, f64) {
        let sd = s2.sqrt();
        let (mut v, mut dmu, mut dsd) = (0.0, 0.0, 0.0);
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let (gv, gd) = g(mu + sd * z);
            v += w * gv;
            dmu += w * gd;
            dsd += w * gd * z;
        }
        let ds2 = if sd > 0.0 { dsd / (2.0 * sd) } else { 0.0 };
        (v, dmu, ds2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_are_exact() {
        let q = GaussianQuadrature::new(20);
        let (m0, _, _) = q.expect(0.0, 1.0, |_| (1.0, 0.0));
        let (m2, _, _) = q.expect(0.0, 1.0, |f| (f * f, 2.0 * f));
        let (m4, _, _) = q.expect(0.0, 1.0, |f| (f.powi(4), 4.0 * f.powi(3)));
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-11);
        let (x, w) = gauss_hermite(1);
        assert!(x[0].abs() < 1e-15 && (w[0] - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lognormal_mean_and_derivatives() {
        let q = GaussianQuadrature::new(20);
        let (mu, s2) = (0.3, 0.5);
        let (v, dmu, ds2) = q.expect(mu, s2, |f| (f.exp(), f.exp()));
        let exact = (mu + s2 / 2.0).exp();
        assert!((v - exact).abs() < 1e-12);
        assert!((dmu - exact).abs() < 1e-12);
        assert!((ds2 - exact / 2.0).abs() < 1e-11);
    }
}
