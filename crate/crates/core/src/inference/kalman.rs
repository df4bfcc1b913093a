//! Kalman-filter log likelihood; small dense blocks only.

use crate::dual::SmallMat;
use crate::error::{Error, Result};
use crate::models::ssm::StateSpaceModel;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `sum_t log N(Y_t; H mu_t + c, H Sigma_t H^T + R)` from one filtering pass.
/// `y` holds `Y_1 .. Y_T` flattened.
pub fn kalman_loglik(ssm: &StateSpaceModel<f64>, y: &[f64]) -> Result<f64> {
    let (d, e, t_len) = (ssm.d, ssm.e, ssm.num_steps());
    if y.len() != t_len * e {
        return Err(Error::DimensionMismatch(format!("expected {} observations, got {}", t_len * e, y.len())));
    }
    let ht = ssm.h.transpose();
    let mut mu = ssm.mu0.clone();
    let mut sigma = ssm.sigma0.clone();
    let mut total = 0.0;
    for t in 0..t_len {
        // Predict F_{t+1} from the filtered F_t.
        let a = &ssm.a[t];
        sigma = a.matmul(&sigma).matmul(&a.transpose()).add(&ssm.q[t]);
        mu = a.matvec(&mu).iter().zip(&ssm.b[t]).map(|(x, b)| x + b).collect();

        let pred = ssm.h.matvec(&mu);
        let resid: Vec<f64> = (0..e).map(|i| y[t * e + i] - pred[i] - ssm.c[i]).collect();
        let s = ssm.h.matmul(&sigma).matmul(&ht).add(&ssm.r);
        let (s_inv, s_logdet) = s.spd_inverse("innovation").map_err(|_| Error::SingularInnovation(t))?;
        let sr = s_inv.matvec(&resid);
        let quad: f64 = resid.iter().zip(&sr).map(|(a, b)| a * b).sum();
        total += -0.5 * (e as f64 * LN_2PI + s_logdet + quad);

        let k = sigma.matmul(&ht).matmul(&s_inv);
        mu = mu.iter().zip(k.matvec(&resid)).map(|(m, u)| m + u).collect();
        let ikh = SmallMat::identity(d).sub(&k.matmul(&ssm.h));
        sigma = ikh.matmul(&sigma);
        // Keep the filtered covariance exactly symmetric.
        sigma = sigma.add(&sigma.transpose()).scaled(0.5);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ssm::matern12_ssm;

    #[test]
    fn single_step_is_gaussian_density() {
        let ssm = matern12_ssm(&[0.0], 2.0, 1.0).unwrap().with_noise(0.5).unwrap();
        let v = kalman_loglik(&ssm, &[1.0]).unwrap();
        let var: f64 = 2.5;
        let exact = -0.5 * (LN_2PI + var.ln() + 1.0 / var);
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn white_noise_factorizes() {
        // Far-apart times decorrelate completely.
        let ssm = matern12_ssm(&[0.0, 1e6], 1.0, 1.0).unwrap().with_noise(1.0).unwrap();
        let v = kalman_loglik(&ssm, &[0.5, -1.0]).unwrap();
        let one = |y: f64| -0.5 * (LN_2PI + 2f64.ln() + y * y / 2.0);
        assert!((v - one(0.5) - one(-1.0)).abs() < 1e-12);
    }
}
