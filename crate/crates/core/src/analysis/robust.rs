use crate::error::{Error, Result};
use crate::objectives::Objective;

use super::argmin::population_argmin_1d;
use super::toy::{Contamination, Marginal, Population, Quadrature, ScalarFamily};

#[derive(Debug, Clone, PartialEq)]
pub struct StrongRobustnessReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub offset: f64,
    /// `(θ, J̄γ(θ), Jγ(θ) − (1/γ) log(1−ε))` over the θ grid.
    pub grid: Vec<(f64, f64, f64)>,
    /// `max_θ |J̄γ(θ) − Jγ(θ) + (1/γ) log(1−ε)|`.
    pub residual: f64,
    pub argmin_shift: f64,
    pub lr_argmin_shift: f64,
}

/// Compares the contaminated γ objective with the clean one shifted by
/// `−(1/γ) log(1−ε)`. Outliers follow contamination model 1 with `u ~ N(offset, 1)`.
pub fn strong_robustness_check(gamma: f64, epsilon: f64, offset: f64, rho: f64, q: &Quadrature) -> Result<StrongRobustnessReport> {
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let c = Contamination { model: 1, epsilon, x_out: Marginal::point(0.0), u_out: Marginal::gaussian(offset, 1.0, 60) };
    let clean = Population::clean(rho, q)?;
    let dirty = Population::contaminated(rho, q, &c)?;
    let t0 = ScalarFamily::true_theta(rho);
    let shift = -(1.0 - epsilon).ln() / gamma;

    let obj = Objective::Gamma(gamma);
    let fam = ScalarFamily::matched(rho, obj)?;
    let mut grid = Vec::new();
    let mut residual: f64 = 0.0;
    for i in 0..=30 {
        let t = t0 - 0.3 + 0.02 * i as f64;
        let lhs = dirty.objective(obj, &fam, t)?.0;
        let rhs = clean.objective(obj, &fam, t)?.0 + shift;
        residual = residual.max((lhs - rhs).abs());
        grid.push((t, lhs, rhs));
    }

    let argmin_shift_for = |obj: Objective| -> Result<f64> {
        let fam = ScalarFamily::matched(rho, obj)?;
        let a = population_argmin_1d(|t| clean.objective(obj, &fam, t), t0 - 1.0, t0 + 1.0)?.theta;
        let b = population_argmin_1d(|t| dirty.objective(obj, &fam, t), t0 - 1.0, t0 + 1.0)?.theta;
        Ok((b - a).abs())
    };
    Ok(StrongRobustnessReport {
        gamma,
        epsilon,
        offset,
        grid,
        residual,
        argmin_shift: argmin_shift_for(obj)?,
        lr_argmin_shift: argmin_shift_for(Objective::Lr)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Quadrature {
        Quadrature { nodes: 120, ..Quadrature::default() }
    }

    #[test]
    fn zero_epsilon_has_zero_residual() {
        let r = strong_robustness_check(2.0, 0.0, 8.0, 0.5, &small()).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.argmin_shift, 0.0);
    }

    #[test]
    fn gamma_moves_less_than_lr() {
        let r = strong_robustness_check(2.0, 0.2, 8.0, 0.8, &small()).unwrap();
        assert!(r.argmin_shift < 0.02, "{r:?}");
        assert!(r.lr_argmin_shift > 5.0 * r.argmin_shift, "{r:?}");
    }
}
