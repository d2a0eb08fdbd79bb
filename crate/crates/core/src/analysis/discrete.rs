use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objectives::Objective;

/// A joint distribution over an `nx × nu` grid of discrete values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    pub nx: usize,
    pub nu: usize,
    pub p: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(nx: usize, nu: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != nx * nu {
            return Err(Error::shape("discrete joint", nx * nu, p.len()));
        }
        let total: f64 = p.iter().sum();
        if p.iter().any(|&v| !(v > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config("discrete joint must be strictly positive and sum to 1".into()));
        }
        Ok(DiscreteJoint { nx, nu, p })
    }

    /// `p(x) p(u)` per cell.
    pub fn product(&self) -> Vec<f64> {
        let px: Vec<f64> = (0..self.nx).map(|i| self.p[i * self.nu..(i + 1) * self.nu].iter().sum()).collect();
        let pu: Vec<f64> = (0..self.nu).map(|j| (0..self.nx).map(|i| self.p[i * self.nu + j]).sum()).collect();
        (0..self.nx * self.nu).map(|c| px[c / self.nu] * pu[c % self.nu]).collect()
    }

    pub fn log_ratio(&self) -> Vec<f64> {
        self.p.iter().zip(self.product()).map(|(p, q)| (p / q).ln()).collect()
    }
}

/// Minimizes the population objective over a free score per cell by damped
/// Newton steps (finite-difference Hessian) with backtracking.
pub fn discrete_minimizer(obj: Objective, joint: &DiscreteJoint) -> Result<Vec<f64>> {
    let q = joint.product();
    let n = joint.p.len();
    let eval = |r: &[f64]| -> Result<(f64, Vec<f64>)> {
        let lg = obj.on_scores(r, &joint.p, r, &q)?;
        Ok((lg.loss, lg.dpos.iter().zip(&lg.dneg).map(|(a, b)| a + b).collect()))
    };
    let precond: Vec<f64> = joint.p.iter().zip(&q).map(|(a, b)| 1.0 / (a + b)).collect();
    let mut r = vec![0.0; n];
    let (mut f, mut g) = eval(&r)?;
    for _ in 0..500 {
        if g.iter().zip(&precond).all(|(g, p)| (g * p).abs() < 1e-11) {
            return Ok(r);
        }
        let h = 1e-6;
        let mut hess = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut rp = r.clone();
            rp[c] += h;
            let gp = eval(&rp)?.1;
            rp[c] -= 2.0 * h;
            let gm = eval(&rp)?.1;
            for k in 0..n {
                hess[(k, c)] = (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5 + DMatrix::identity(n, n) * 1e-10;
        let grad = DVector::from_vec(g.clone());
        let mut dir: Vec<f64> = match hess.cholesky() {
            Some(ch) => (-ch.solve(&grad)).iter().copied().collect(),
            None => g.iter().zip(&precond).map(|(g, p)| -g * p).collect(),
        };
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            dir = g.iter().zip(&precond).map(|(g, p)| -g * p).collect();
            slope = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        }
        let mut step = 1.0;
        loop {
            let cand: Vec<f64> = r.iter().zip(&dir).map(|(r, d)| r + step * d).collect();
            let (fc, gc) = eval(&cand)?;
            // near the optimum the loss is flat to rounding; a smaller gradient is progress then
            let gnorm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let flat = fc <= f + 1e-12 * f.abs().max(1.0) && gnorm(&gc) < gnorm(&g);
            if fc <= f + 1e-4 * step * slope || flat || step < 1e-12 {
                r = cand;
                f = fc;
                g = gc;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::Numerical(format!("{} discrete minimizer did not converge", obj.name())))
}

/// Largest deviation of the minimizer from the log-ratio after removing the
/// objective's additive constant (0 for lr and γ, 1 for fdiv, the mean offset for DV).
pub fn discrete_oracle_deviation(obj: Objective, joint: &DiscreteJoint) -> Result<f64> {
    let r = discrete_minimizer(obj, joint)?;
    let truth = joint.log_ratio();
    let diff: Vec<f64> = r.iter().zip(&truth).map(|(a, b)| a - b).collect();
    let c = match obj {
        Objective::Fdiv => 1.0,
        Objective::Dv => diff.iter().sum::<f64>() / diff.len() as f64,
        _ => 0.0,
    };
    Ok(diff.iter().fold(0.0f64, |m, d| m.max((d - c).abs())))
}

/// A fixed, clearly dependent 3×3 joint.
pub fn example_joint() -> DiscreteJoint {
    let raw = [0.20, 0.05, 0.02, 0.04, 0.18, 0.06, 0.03, 0.07, 0.35];
    let total: f64 = raw.iter().sum();
    DiscreteJoint::new(3, 3, raw.iter().map(|v| v / total).collect()).expect("valid joint")
}
