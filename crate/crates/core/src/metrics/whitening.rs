use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub mean: Vec<f64>,
    /// Symmetric inverse square root of the (robust) covariance, `D×D`.
    pub matrix: Tensor,
    /// The covariance estimate itself.
    pub covariance: Tensor,
    pub gamma_used: f64,
    pub iterations: usize,
}

impl WhiteningTransform {
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let d = self.mean.len();
        if x.cols() != d {
            return Err(Error::shape("whitening", d, x.cols()));
        }
        let w = self.matrix.data();
        let mut out = Vec::with_capacity(x.len());
        let mut c = vec![0.0; d];
        for t in 0..x.rows() {
            for (j, cj) in c.iter_mut().enumerate() {
                *cj = x.get(t, j) - self.mean[j];
            }
            for i in 0..d {
                out.push((0..d).map(|j| w[i * d + j] * c[j]).sum());
            }
        }
        Tensor::matrix(x.rows(), d, out)
    }
}

/// Weighted mean and `scale · Σ w (x−μ)(x−μ)ᵀ / Σ w`.
fn weighted_moments(x: &Tensor, w: &[f64], scale: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = x.cols();
    let sw: f64 = w.iter().sum();
    let mut mean = DVector::zeros(d);
    for (t, &wt) in w.iter().enumerate() {
        for j in 0..d {
            mean[j] += wt * x.get(t, j);
        }
    }
    mean /= sw;
    let mut cov = DMatrix::zeros(d, d);
    let mut c = vec![0.0; d];
    for (t, &wt) in w.iter().enumerate() {
        for j in 0..d {
            c[j] = x.get(t, j) - mean[j];
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += wt * c[a] * c[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = scale * cov[(a, b)] / sw;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

fn inverse_sqrt(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = cov.nrows();
    let mut cov = cov.clone();
    let mut eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Numerical("covariance has no positive eigenvalue".into()));
    }
    if eig.eigenvalues.min() <= 1e-12 * max {
        let ridge = 1e-8 * cov.trace() / d as f64;
        warn!("covariance is numerically singular; adding ridge {ridge:e}");
        cov += DMatrix::identity(d, d) * ridge;
        eig = SymmetricEigen::new(cov.clone());
    }
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((&eig.eigenvectors * inv * eig.eigenvectors.transpose(), cov))
}

fn mahalanobis(x: &Tensor, mean: &DVector<f64>, prec: &DMatrix<f64>) -> Vec<f64> {
    let d = x.cols();
    let mut c = DVector::zeros(d);
    (0..x.rows())
        .map(|t| {
            for j in 0..d {
                c[j] = x.get(t, j) - mean[j];
            }
            c.dot(&(prec * &c))
        })
        .collect()
}

fn to_tensor(m: &DMatrix<f64>) -> Tensor {
    let d = m.nrows();
    Tensor::matrix(d, d, (0..d * d).map(|k| m[(k / d, k % d)]).collect()).expect("square")
}

/// Iteratively reweighted whitening: sample weights `exp(−(γ/2) m_t)` from the
/// current Mahalanobis distances, covariance `(1+γ)·` weighted covariance.
/// With γ = 0 every weight is exactly 1 and this is ordinary whitening.
pub fn robust_whiten(x: &Tensor, gamma: f64) -> Result<(WhiteningTransform, Tensor)> {
    let (t, d) = (x.rows(), x.cols());
    if t <= d {
        return Err(Error::Config(format!("whitening needs more rows ({t}) than columns ({d})")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!("whitening gamma must be >= 0, got {gamma}")));
    }
    let mut w = vec![1.0; t];
    let (mut mean, mut cov) = weighted_moments(x, &w, 1.0 + gamma);
    let mut iterations = 1;
    if gamma > 0.0 {
        while iterations < MAX_ITER {
            let prec = cov.clone().try_inverse().ok_or_else(|| Error::Numerical("singular covariance".into()))?;
            let m = mahalanobis(x, &mean, &prec);
            // shift by the minimum so the weights cannot all underflow
            let m0 = m.iter().copied().fold(f64::INFINITY, f64::min);
            w.iter_mut().zip(&m).for_each(|(wt, &mt)| *wt = (-0.5 * gamma * (mt - m0)).exp());
            let (nm, nc) = weighted_moments(x, &w, 1.0 + gamma);
            iterations += 1;
            let change = ((&nm - &mean).norm() + (&nc - &cov).norm()) / (mean.norm() + cov.norm()).max(1e-300);
            mean = nm;
            cov = nc;
            if change < TOL {
                break;
            }
        }
    }
    let (wm, cov) = inverse_sqrt(&cov)?;
    let tr = WhiteningTransform {
        mean: mean.iter().copied().collect(),
        matrix: to_tensor(&wm),
        covariance: to_tensor(&cov),
        gamma_used: gamma,
        iterations,
    };
    let white = tr.apply(x)?;
    Ok((tr, white))
}

/// Ordinary empirical whitening.
pub fn whiten(x: &Tensor) -> Result<(WhiteningTransform, Tensor)> {
    robust_whiten(x, 0.0)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &Tensor) -> Vec<f64> {
    let d = m.rows();
    let mat = DMatrix::from_row_slice(d, d, m.data());
    let mut e: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(t: usize, d: usize, seed: u64) -> Tensor {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Tensor::matrix(t, d, (0..t * d).map(|_| StandardNormal.sample(&mut r)).collect()).unwrap()
    }

    #[test]
    fn clean_normal_gives_near_identity() {
        let x = normal(100_000, 3, 1);
        let (tr, white) = robust_whiten(&x, 0.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((tr.matrix.get(i, j) - want).abs() < 0.05, "{:?}", tr.matrix);
            }
        }
        let (_, c) = weighted_moments(&white, &vec![1.0; white.rows()], 1.0);
        assert!((c[(0, 1)]).abs() < 0.05);
    }

    #[test]
    fn robust_to_far_outliers() {
        let mut x = normal(20_000, 3, 2);
        let clean = robust_whiten(&x, 0.0).unwrap().0;
        for t in 0..4000 {
            for j in 0..3 {
                let v = x.get(t, j) + 10.0;
                x.set(t, j, v);
            }
        }
        let plain = sym_eigenvalues(&whiten(&x).unwrap().0.covariance);
        let robust = sym_eigenvalues(&robust_whiten(&x, 0.5).unwrap().0.covariance);
        let base = sym_eigenvalues(&clean.covariance);
        for k in 0..3 {
            assert!((robust[k] / base[k] - 1.0).abs() < 0.2, "{robust:?} vs {base:?}");
        }
        assert!(plain[2] / base[2] > 2.0, "{plain:?}");
    }

    #[test]
    fn gamma_zero_is_plain_whitening() {
        let x = normal(500, 4, 3);
        let a = robust_whiten(&x, 0.0).unwrap();
        let (mean, cov) = weighted_moments(&x, &vec![1.0; 500], 1.0);
        let (wm, _) = inverse_sqrt(&cov).unwrap();
        assert_eq!(a.0.mean, mean.iter().copied().collect::<Vec<_>>());
        assert_eq!(a.0.matrix, to_tensor(&wm));
        assert_eq!(a.1, whiten(&x).unwrap().1);
    }

    #[test]
    fn singular_covariance_gets_ridge() {
        let base = normal(200, 2, 4);
        let x = Tensor::hstack(&[&base, &base.slice_cols(0, 1)]).unwrap();
        let (tr, _) = robust_whiten(&x, 0.0).unwrap();
        assert!(tr.matrix.is_finite());
    }

    #[test]
    fn too_few_rows() {
        assert!(robust_whiten(&normal(3, 3, 0), 0.1).is_err());
    }
}
