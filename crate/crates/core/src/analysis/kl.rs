use crate::error::Result;
use crate::objectives::Objective;
use crate::ratio::RatioModel;
use crate::tensor::Tensor;

use super::toy::{bivariate_pdf, check_rho, std_normal_pdf, Population, Quadrature};

#[derive(Debug, Clone, PartialEq)]
pub struct KlDvReport {
    /// `KL[p ‖ p_m]` with `p_m(x,u) ∝ p(x) p(u) e^{r(x,u)}`.
    pub kl: f64,
    pub mi: f64,
    pub j_dv: f64,
    /// `KL − I − J_DV`.
    pub residual: f64,
}

/// Checks `KL[p‖p_m] = I(X,U) + J_DV(r)` for a fixed scalar-pair model on the Gaussian toy.
pub fn kl_dv_identity_check(model: &RatioModel, rho: f64, q: &Quadrature) -> Result<KlDvReport> {
    check_rho(rho)?;
    let pop = Population::clean(rho, q)?;
    let eval = |x: &[f64], u: &[f64]| -> Result<Vec<f64>> {
        let n = x.len();
        model.eval_r(&Tensor::matrix(n, 1, x.to_vec())?, &Tensor::matrix(n, 1, u.to_vec())?)
    };
    let rp = eval(&pop.pos.x, &pop.pos.u)?;
    let rn = eval(&pop.neg.x, &pop.neg.u)?;
    let j_dv = Objective::Dv.on_scores(&rp, &pop.pos.w, &rn, &pop.neg.w)?.loss;
    let log_z = rn.iter().zip(&pop.neg.w).map(|(r, w)| w * r.exp()).sum::<f64>().ln();
    // KL straight from the two densities
    let kl: f64 = (0..pop.pos.len())
        .map(|k| {
            let (x, u) = (pop.pos.x[k], pop.pos.u[k]);
            let log_p = bivariate_pdf(rho, x, u).ln();
            let log_pm = std_normal_pdf(x).ln() + std_normal_pdf(u).ln() + rp[k] - log_z;
            pop.pos.w[k] * (log_p - log_pm)
        })
        .sum();
    let mi = -0.5 * (1.0 - rho * rho).ln();
    Ok(KlDvReport { kl, mi, j_dv, residual: kl - mi - j_dv })
}
