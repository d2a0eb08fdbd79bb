use crate::error::{Error, Result};
use crate::ratio::RatioModel;
use crate::tensor::Tensor;

/// True `log p(x,u) / (p(x) p(u))` for a standard bivariate normal with correlation ρ.
pub fn analytic_gaussian_ratio(rho: f64, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    if x.len() != u.len() {
        return Err(Error::shape("analytic_gaussian_ratio", x.len(), u.len()));
    }
    let r2 = rho * rho;
    let c = -0.5 * (1.0 - r2).ln();
    Ok(x.iter().zip(u).map(|(&x, &u)| c - (r2 * x * x - 2.0 * rho * x * u + r2 * u * u) / (2.0 * (1.0 - r2))).collect())
}

/// Mutual information of the same pair, `−½ log(1−ρ²)`.
pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

/// Square evaluation grid, `n×n` points evenly spaced over `[lo, hi]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Grid { lo, hi, n }
    }

    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        let step = if self.n > 1 { (self.hi - self.lo) / (self.n - 1) as f64 } else { 0.0 };
        let axis: Vec<f64> = (0..self.n).map(|i| self.lo + step * i as f64).collect();
        let mut xs = Vec::with_capacity(self.n * self.n);
        let mut us = Vec::with_capacity(self.n * self.n);
        for &x in &axis {
            for &u in &axis {
                xs.push(x);
                us.push(u);
            }
        }
        (xs, us)
    }
}

/// RMSE of `a − b` once the best additive constant is removed, i.e. the std of the difference.
pub fn rmse_up_to_constant(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(a, b)| a - b).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    (diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diff.len() as f64).sqrt()
}

pub fn ratio_rmse(model: &RatioModel, rho: f64, grid: &Grid) -> Result<f64> {
    let (xs, us) = grid.points();
    let truth = analytic_gaussian_ratio(rho, &xs, &us)?;
    let n = xs.len();
    let r = model.eval_r(&Tensor::matrix(n, 1, xs)?, &Tensor::matrix(n, 1, us)?)?;
    Ok(rmse_up_to_constant(&r, &truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::FeedforwardNet;
    use crate::quadrature::gauss_legendre;
    use crate::ratio::{Head, Psi};

    #[test]
    fn independence_is_zero() {
        let r = analytic_gaussian_ratio(0.0, &[1.0, -2.0, 0.3], &[0.5, 4.0, -1.0]).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn origin_value() {
        let r = analytic_gaussian_ratio(0.8, &[0.0], &[0.0]).unwrap()[0];
        assert!((r - 0.5108256237659907).abs() < 1e-12);
    }

    #[test]
    fn domain_error() {
        assert!(matches!(analytic_gaussian_ratio(1.0, &[0.0], &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn quadrature_mi() {
        let rho: f64 = 0.8;
        let (nodes, w) = gauss_legendre(200, -10.0, 10.0);
        let det = 1.0 - rho * rho;
        let mut mi = 0.0;
        for (i, &x) in nodes.iter().enumerate() {
            for (j, &u) in nodes.iter().enumerate() {
                let p = (-(x * x - 2.0 * rho * x * u + u * u) / (2.0 * det)).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
                mi += w[i] * w[j] * p * analytic_gaussian_ratio(rho, &[x], &[u]).unwrap()[0];
            }
        }
        assert!((mi - gaussian_mi(rho)).abs() < 1e-3, "{mi}");
    }

    fn quadratic_model(lin: f64, quad: f64, w: f64, bias: f64) -> RatioModel {
        let mut a = Head::quadratic(1);
        let mut b = Head::quadratic(1);
        for head in [&mut a, &mut b] {
            if let Head::Quadratic { lin: l, quad: q, bias: c } = head {
                l.data_mut()[0] = lin;
                q.data_mut()[0] = quad;
                c.data_mut()[0] = bias;
            }
        }
        let mut psi = Psi::bilinear_zero(1, 1);
        if let Psi::Bilinear { w: wt } = &mut psi {
            wt.data_mut()[0] = w;
        }
        RatioModel::new(FeedforwardNet::identity(1), None, psi, a, b).unwrap()
    }

    #[test]
    fn shifted_truth_has_zero_rmse() {
        let rho: f64 = 0.8;
        let det = 1.0 - rho * rho;
        // a(x) + b(u) + w x u with matching quadratic terms; constants differ by +3
        let m = quadratic_model(0.0, -rho * rho / (2.0 * det), rho / det, 0.5 * (gaussian_mi(rho) + 3.0));
        let rmse = ratio_rmse(&m, rho, &Grid::square(-2.0, 2.0, 21)).unwrap();
        assert!(rmse < 1e-12, "{rmse}");
    }

    #[test]
    fn zero_model_gives_truth_std() {
        let rho = 0.8;
        let grid = Grid::square(-2.0, 2.0, 11);
        let m = quadratic_model(0.0, 0.0, 0.0, 0.0);
        let (xs, us) = grid.points();
        let t = analytic_gaussian_ratio(rho, &xs, &us).unwrap();
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        let std = (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t.len() as f64).sqrt();
        assert!((ratio_rmse(&m, rho, &grid).unwrap() - std).abs() < 1e-12);
    }
}
