use crate::error::{Error, Result};
use crate::nn::softplus;
use crate::objectives::Objective;

use super::argmin::population_argmin_1d;
use super::toy::{Contamination, Joint, Marginal, Population, Quadrature, ScalarFamily};

/// Half-width of the θ search interval around the true coefficient.
const SEARCH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceSetup {
    pub objective: Objective,
    pub rho: f64,
    pub model: u8,
    pub x_bar: f64,
    pub u_bar: f64,
    pub epsilon: f64,
    /// Width of the narrow Gaussian standing in for the point mass; `None` uses a single atom.
    pub width: Option<f64>,
    pub quadrature: Quadrature,
}

impl InfluenceSetup {
    pub fn new(objective: Objective, rho: f64, model: u8, x_bar: f64, u_bar: f64) -> Self {
        InfluenceSetup { objective, rho, model, x_bar, u_bar, epsilon: 1e-3, width: Some(1e-3), quadrature: Quadrature::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub x_bar: f64,
    pub u_bar: f64,
    pub epsilon: f64,
    pub theta_star: f64,
    pub theta_eps: f64,
    /// `(θ* − θ_ε)/ε`.
    pub empirical_if: f64,
    pub formula_if: f64,
    pub rel_error: f64,
}

/// Everything the closed-form influence functions need at θ*.
#[derive(Debug, Clone)]
pub struct IfFormulaContext {
    pub objective: Objective,
    pub theta: f64,
    pub family: ScalarFamily,
    /// `V_DV = −E[g gᵀ] + E[g]E[g]ᵀ`, or `V_γ = −E_xu[η^{γ/(1+γ)} S^{1/(1+γ)} g gᵀ]`.
    pub v: f64,
    px: Marginal,
    joint: Joint,
    product: Joint,
}

impl IfFormulaContext {
    pub fn new(objective: Objective, rho: f64, theta: f64, q: &Quadrature) -> Result<Self> {
        let family = ScalarFamily::matched(rho, objective)?;
        let clean = Population::clean(rho, q)?;
        let mut ctx = IfFormulaContext { objective, theta, family, v: 0.0, px: Marginal::standard_normal(q), joint: clean.pos, product: clean.neg };
        ctx.v = match objective {
            Objective::Dv => {
                let m = ctx.joint.expect(ScalarFamily::g);
                -ctx.joint.expect(|x, u| ScalarFamily::g(x, u).powi(2)) + m * m
            }
            Objective::Gamma(_) => -ctx.joint.expect(|x, u| ctx.pos_weight(x, u) * ScalarFamily::g(x, u).powi(2)),
            o => return Err(Error::Config(format!("no closed-form influence function for objective {}", o.name()))),
        };
        Ok(ctx)
    }

    fn k(&self) -> f64 {
        match self.objective {
            Objective::Gamma(g) => 1.0 + g,
            _ => 1.0,
        }
    }

    /// `S = 1/(1+e^{(1+γ) r})`.
    pub fn s(&self, x: f64, u: f64) -> f64 {
        (-softplus(self.k() * self.family.r(self.theta, x, u))).exp()
    }

    /// `η = S(1−S)`.
    pub fn eta(&self, x: f64, u: f64) -> f64 {
        let s = self.s(x, u);
        s * (1.0 - s)
    }

    fn log_s(&self, x: f64, u: f64) -> (f64, f64) {
        let kr = self.k() * self.family.r(self.theta, x, u);
        (-softplus(kr), -softplus(-kr))
    }

    /// `η^q S^{1/k}`, computed in logs.
    fn pos_weight(&self, x: f64, u: f64) -> f64 {
        let (ls, l1s) = self.log_s(x, u);
        let k = self.k();
        ((k - 1.0) / k * (ls + l1s) + ls / k).exp()
    }

    /// `η^q (1−S)^{1/k}`.
    fn neg_weight(&self, x: f64, u: f64) -> f64 {
        let (ls, l1s) = self.log_s(x, u);
        let k = self.k();
        ((k - 1.0) / k * (ls + l1s) + l1s / k).exp()
    }

    pub fn formula(&self, model: u8, x_bar: f64, u_bar: f64) -> Result<f64> {
        let g = ScalarFamily::g;
        let r = |x: f64, u: f64| self.family.r(self.theta, x, u);
        let num = match (self.objective, model) {
            (Objective::Dv, 1) => self.px.expect(|x| g(x, u_bar) - r(x, u_bar).exp() * g(x, u_bar)),
            (Objective::Dv, 2) => {
                g(x_bar, u_bar) + self.joint.expect(g)
                    - self.px.expect(|x| r(x, u_bar).exp() * g(x, u_bar))
                    - self.px.expect(|u| r(x_bar, u).exp() * g(x_bar, u))
            }
            (Objective::Gamma(_), 1) => self.px.expect(|x| (self.pos_weight(x, u_bar) - self.neg_weight(x, u_bar)) * g(x, u_bar)),
            (Objective::Gamma(_), 2) => {
                self.pos_weight(x_bar, u_bar) * g(x_bar, u_bar)
                    - self.px.expect(|x| self.neg_weight(x, u_bar) * g(x, u_bar))
                    - self.px.expect(|u| self.neg_weight(x_bar, u) * g(x_bar, u))
                    + self.product.expect(|x, u| self.neg_weight(x, u) * g(x, u))
            }
            (_, m) => return Err(Error::Config(format!("contamination model must be 1 or 2, got {m}"))),
        };
        Ok(num / self.v)
    }
}

/// Clean population argmin, checked against the known true coefficient.
pub fn clean_argmin(objective: Objective, rho: f64, q: &Quadrature) -> Result<f64> {
    let family = ScalarFamily::matched(rho, objective)?;
    let pop = Population::clean(rho, q)?;
    let t0 = ScalarFamily::true_theta(rho);
    let a = population_argmin_1d(|t| pop.objective(objective, &family, t), t0 - SEARCH, t0 + SEARCH)?;
    if (a.theta - t0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "quadrature did not converge (argmin {} vs {t0}); refine the grid beyond {} nodes",
            a.theta, q.nodes
        )));
    }
    Ok(a.theta)
}

pub fn empirical_influence(setup: &InfluenceSetup) -> Result<InfluenceReport> {
    let q = &setup.quadrature;
    let obj = setup.objective;
    let theta_star = clean_argmin(obj, setup.rho, q)?;
    let family = ScalarFamily::matched(setup.rho, obj)?;
    let c = Contamination {
        model: setup.model,
        epsilon: setup.epsilon,
        x_out: Marginal::point_mass(setup.x_bar, setup.width),
        u_out: Marginal::point_mass(setup.u_bar, setup.width),
    };
    let pop = Population::contaminated(setup.rho, q, &c)?;
    let theta_eps = population_argmin_1d(|t| pop.objective(obj, &family, t), theta_star - SEARCH, theta_star + SEARCH)?.theta;
    let empirical_if = (theta_star - theta_eps) / setup.epsilon;
    let formula_if = IfFormulaContext::new(obj, setup.rho, theta_star, q)?.formula(setup.model, setup.x_bar, setup.u_bar)?;
    let rel_error = (empirical_if - formula_if).abs() / formula_if.abs().max(1e-12);
    Ok(InfluenceReport { x_bar: setup.x_bar, u_bar: setup.u_bar, epsilon: setup.epsilon, theta_star, theta_eps, empirical_if, formula_if, rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Quadrature {
        Quadrature { nodes: 160, ..Quadrature::default() }
    }

    #[test]
    fn weights_are_bounded() {
        let ctx = IfFormulaContext::new(Objective::Gamma(2.0), 0.5, ScalarFamily::true_theta(0.5), &small()).unwrap();
        for (x, u) in [(0.0, 0.0), (3.0, -2.0), (8.0, 8.0), (-8.0, 8.0)] {
            let s = ctx.s(x, u);
            assert!((0.0..=1.0).contains(&s));
            assert!(ctx.eta(x, u) <= 0.25);
        }
        assert!(ctx.v < 0.0);
    }

    #[test]
    fn dv_model1_closed_form() {
        // E_x[g − e^r g](X,ū) = −ρ ū², V = −(1+ρ²)
        let rho = 0.5;
        let ctx = IfFormulaContext::new(Objective::Dv, rho, ScalarFamily::true_theta(rho), &small()).unwrap();
        assert!((ctx.v + 1.0 + rho * rho).abs() < 1e-10);
        let f = ctx.formula(1, 0.0, 3.0).unwrap();
        assert!((f - rho * 9.0 / (1.0 + rho * rho)).abs() < 1e-9, "{f}");
    }

    #[test]
    fn gamma_model1_agrees() {
        let mut s = InfluenceSetup::new(Objective::Gamma(2.0), 0.5, 1, 0.0, 4.0);
        s.quadrature = small();
        let r = empirical_influence(&s).unwrap();
        assert!(r.rel_error < 0.05, "{r:?}");
    }

    #[test]
    fn fdiv_has_no_closed_form() {
        assert!(IfFormulaContext::new(Objective::Fdiv, 0.5, 0.6, &small()).is_err());
    }
}
