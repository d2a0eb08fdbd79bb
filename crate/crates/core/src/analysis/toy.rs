//! The scalar Gaussian toy: densities as weighted atoms on a Gauss-Legendre grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub nodes: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { nodes: 400, lo: -8.0, hi: 8.0 }
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn bivariate_pdf(rho: f64, x: f64, u: f64) -> f64 {
    let det = 1.0 - rho * rho;
    (-(x * x - 2.0 * rho * x * u + u * u) / (2.0 * det)).exp() / (2.0 * PI * det.sqrt())
}

/// `r_θ(x,u) = θ x u + quad·(x² + u²) + constant`, with `g = ∂r/∂θ = x u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFamily {
    pub quad: f64,
    pub constant: f64,
}

impl ScalarFamily {
    /// Quadratic and constant terms of the true log-ratio, shifted by the additive
    /// constant the objective recovers (+1 for the f-divergence bound).
    pub fn matched(rho: f64, obj: Objective) -> Result<Self> {
        check_rho(rho)?;
        let det = 1.0 - rho * rho;
        let shift = if matches!(obj, Objective::Fdiv) { 1.0 } else { 0.0 };
        Ok(ScalarFamily { quad: -rho * rho / (2.0 * det), constant: -0.5 * det.ln() + shift })
    }

    pub fn true_theta(rho: f64) -> f64 {
        rho / (1.0 - rho * rho)
    }

    pub fn r(&self, theta: f64, x: f64, u: f64) -> f64 {
        theta * x * u + self.quad * (x * x + u * u) + self.constant
    }

    pub fn g(x: f64, u: f64) -> f64 {
        x * u
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation must satisfy |rho| < 1, got {rho}")))
    }
}

/// A one-dimensional distribution as weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub at: Vec<f64>,
    pub w: Vec<f64>,
}

impl Marginal {
    pub fn standard_normal(q: &Quadrature) -> Self {
        let (at, nw) = gauss_legendre(q.nodes, q.lo, q.hi);
        let w = at.iter().zip(&nw).map(|(&x, &w)| w * std_normal_pdf(x)).collect();
        Marginal { at, w }
    }

    pub fn point(c: f64) -> Self {
        Marginal { at: vec![c], w: vec![1.0] }
    }

    /// `N(mean, sd²)` on its own local grid of ±8 sd.
    pub fn gaussian(mean: f64, sd: f64, nodes: usize) -> Self {
        let (z, nw) = gauss_legendre(nodes, -8.0, 8.0);
        let at = z.iter().map(|&z| mean + sd * z).collect();
        let w = z.iter().zip(&nw).map(|(&z, &w)| w * std_normal_pdf(z)).collect();
        Marginal { at, w }
    }

    /// A point mass, or a narrow Gaussian of the given width standing in for it.
    pub fn point_mass(c: f64, width: Option<f64>) -> Self {
        match width {
            Some(sd) if sd > 0.0 => Self::gaussian(c, sd, 40),
            _ => Self::point(c),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Marginal { at: self.at.clone(), w: self.w.iter().map(|w| w * s).collect() }
    }

    pub fn mixture(&self, other: &Marginal, eps: f64) -> Self {
        let mut m = self.scaled(1.0 - eps);
        if eps > 0.0 {
            m.at.extend_from_slice(&other.at);
            m.w.extend(other.w.iter().map(|w| w * eps));
        }
        m
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.at.iter().zip(&self.w).map(|(&a, &w)| w * f(a)).sum()
    }
}

/// A two-dimensional distribution as weighted atoms `(x, u, w)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Joint {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Joint {
    pub fn bivariate_normal(rho: f64, q: &Quadrature) -> Result<Self> {
        check_rho(rho)?;
        let (nodes, nw) = gauss_legendre(q.nodes, q.lo, q.hi);
        let mut j = Joint::default();
        for (&x, &wx) in nodes.iter().zip(&nw) {
            for (&u, &wu) in nodes.iter().zip(&nw) {
                j.push(x, u, wx * wu * bivariate_pdf(rho, x, u));
            }
        }
        Ok(j)
    }

    pub fn product(a: &Marginal, b: &Marginal) -> Self {
        let mut j = Joint::default();
        for (&x, &wx) in a.at.iter().zip(&a.w) {
            for (&u, &wu) in b.at.iter().zip(&b.w) {
                j.push(x, u, wx * wu);
            }
        }
        j
    }

    fn push(&mut self, x: f64, u: f64, w: f64) {
        if w > 0.0 {
            self.x.push(x);
            self.u.push(u);
            self.w.push(w);
        }
    }

    pub fn mixture(&self, other: &Joint, eps: f64) -> Self {
        let mut j = Joint::default();
        for k in 0..self.w.len() {
            j.push(self.x[k], self.u[k], (1.0 - eps) * self.w[k]);
        }
        if eps > 0.0 {
            for k in 0..other.w.len() {
                j.push(other.x[k], other.u[k], eps * other.w[k]);
            }
        }
        j
    }

    pub fn expect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        (0..self.w.len()).map(|k| self.w[k] * f(self.x[k], self.u[k])).sum()
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Outliers for the two contamination models.
///
/// Model 1: `p̄(x,u) = (1−ε)p(x,u) + ε p(x)δ(u)`, `p̄(x) = p(x)`.
/// Model 2: `p̄(x,u) = (1−ε)p(x,u) + ε δ(x)δ(u)`, both marginals contaminated.
#[derive(Debug, Clone, PartialEq)]
pub struct Contamination {
    pub model: u8,
    pub epsilon: f64,
    pub x_out: Marginal,
    pub u_out: Marginal,
}

/// Joint (positive) and product-of-marginals (negative) distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub pos: Joint,
    pub neg: Joint,
}

impl Population {
    pub fn clean(rho: f64, q: &Quadrature) -> Result<Self> {
        let m = Marginal::standard_normal(q);
        Ok(Population { pos: Joint::bivariate_normal(rho, q)?, neg: Joint::product(&m, &m) })
    }

    pub fn contaminated(rho: f64, q: &Quadrature, c: &Contamination) -> Result<Self> {
        if !(0.0..1.0).contains(&c.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1), got {}", c.epsilon)));
        }
        let px = Marginal::standard_normal(q);
        let clean = Joint::bivariate_normal(rho, q)?;
        let eps = c.epsilon;
        let (outliers, bar_x) = match c.model {
            1 => (Joint::product(&px, &c.u_out), px.clone()),
            2 => (Joint::product(&c.x_out, &c.u_out), px.mixture(&c.x_out, eps)),
            m => return Err(Error::Config(format!("contamination model must be 1 or 2, got {m}"))),
        };
        let bar_u = px.mixture(&c.u_out, eps);
        Ok(Population { pos: clean.mixture(&outliers, eps), neg: Joint::product(&bar_x, &bar_u) })
    }

    /// Objective value and its derivative in θ.
    pub fn objective(&self, obj: Objective, family: &ScalarFamily, theta: f64) -> Result<(f64, f64)> {
        let rp: Vec<f64> = (0..self.pos.len()).map(|k| family.r(theta, self.pos.x[k], self.pos.u[k])).collect();
        let rn: Vec<f64> = (0..self.neg.len()).map(|k| family.r(theta, self.neg.x[k], self.neg.u[k])).collect();
        let lg = obj.on_scores(&rp, &self.pos.w, &rn, &self.neg.w)?;
        let d = lg.dpos.iter().enumerate().map(|(k, dp)| dp * ScalarFamily::g(self.pos.x[k], self.pos.u[k])).sum::<f64>()
            + lg.dneg.iter().enumerate().map(|(k, dn)| dn * ScalarFamily::g(self.neg.x[k], self.neg.u[k])).sum::<f64>();
        Ok((lg.loss, d))
    }
}
