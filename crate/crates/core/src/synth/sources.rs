use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::contamination::ContaminationSpec;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub(crate) const BURN_IN: usize = 1000;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A second, independent stream derived from `seed`.
pub(crate) fn side_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}

/// Laplace(0, b) by inverting the CDF.
pub fn laplace(b: f64, rng: &mut impl Rng) -> f64 {
    let v: f64 = rng.random::<f64>() - 0.5;
    -b * v.signum() * (1.0 - 2.0 * v.abs()).max(f64::MIN_POSITIVE).ln()
}

/// CDF of the density `1/(π cosh z)`.
pub fn sech_cdf(z: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * z.exp().atan()
}

/// Inverse of [`sech_cdf`]: `ln tan(πp/2)`.
pub fn sech_inv_cdf(p: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * p).tan().ln()
}

pub fn sech_variate(rng: &mut impl Rng) -> f64 {
    let mut p: f64 = rng.random();
    while p == 0.0 {
        p = rng.random();
    }
    sech_inv_cdf(p)
}

/// Temporally dependent sources `s_i(t) = ρ s_i(t−1) + Laplace((1−ρ²)/√2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArLaplace {
    pub rho: f64,
    pub dim: usize,
}

impl ArLaplace {
    pub fn new(rho: f64, dim: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Config(format!("rho must lie in [0,1), got {rho}")));
        }
        if dim == 0 {
            return Err(Error::Config("source dimension must be positive".into()));
        }
        Ok(Self { rho, dim })
    }

    pub fn scale(&self) -> f64 {
        (1.0 - self.rho * self.rho) / std::f64::consts::SQRT_2
    }

    fn step(&self, prev: &[f64], out: &mut [f64], rng: &mut impl Rng) {
        let b = self.scale();
        for (o, p) in out.iter_mut().zip(prev) {
            *o = self.rho * p + laplace(b, rng);
        }
    }

    fn burn_in(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut cur = vec![0.0; self.dim];
        let mut next = vec![0.0; self.dim];
        for _ in 0..BURN_IN {
            self.step(&cur, &mut next, rng);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn generate(&self, t: usize, seed: u64) -> Result<Tensor> {
        Ok(self.generate_contaminated(t, &ContaminationSpec::clean(), seed)?.0)
    }

    /// At each step the next state comes from the outlier conditional with
    /// probability ε. Returns sources and per-row outlier flags.
    pub fn generate_contaminated(&self, t: usize, spec: &ContaminationSpec, seed: u64) -> Result<(Tensor, Vec<bool>)> {
        if t < 2 {
            return Err(Error::Config(format!("need at least 2 time steps, got {t}")));
        }
        spec.validate()?;
        let mut main = rng(seed);
        let mut side = side_rng(seed, 1);
        let d = self.dim;
        let mut data = vec![0.0; t * d];
        let mut flags = vec![false; t];
        let first = self.burn_in(&mut main);
        data[..d].copy_from_slice(&first);
        let mut clean = vec![0.0; d];
        for k in 1..t {
            let (before, after) = data.split_at_mut(k * d);
            let prev = &before[(k - 1) * d..];
            self.step(prev, &mut clean, &mut main);
            let row = &mut after[..d];
            if spec.epsilon > 0.0 && side.random::<f64>() < spec.epsilon {
                flags[k] = true;
                row.copy_from_slice(&gen_outlier_conditional(prev, self.rho, &mut side));
            } else {
                row.copy_from_slice(&clean);
            }
        }
        Ok((Tensor::matrix(t, d, data)?, flags))
    }
}

pub fn gen_ar_laplace(rho: f64, dim: usize, t: usize, seed: u64) -> Result<Tensor> {
    ArLaplace::new(rho, dim)?.generate(t, seed)
}

/// One draw from the sign-flipped conditional `N(−ρ s_prev, I)`.
pub fn gen_outlier_conditional(s_prev: &[f64], rho: f64, rng: &mut impl Rng) -> Vec<f64> {
    s_prev
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            -rho * p + z
        })
        .collect()
}

pub fn contaminate_timeseries(gen: &ArLaplace, t: usize, spec: &ContaminationSpec, seed: u64) -> Result<(Tensor, Vec<bool>)> {
    gen.generate_contaminated(t, spec, seed)
}

/// Sources with `p(s|u) ∝ Π_i 1/cosh(s_i − w_iᵀu)` and `u ~ U[0,1]^{D_u}`.
/// `w_s` is `D_x × D_u`. Returns `(s, u)`.
pub fn gen_logcosh_sources(w_s: &Tensor, t: usize, seed: u64) -> Result<(Tensor, Tensor)> {
    if w_s.data().iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::Config("W_s entries must lie in [-1, 1]".into()));
    }
    let (dx, du) = (w_s.rows(), w_s.cols());
    let mut r = rng(seed);
    let mut s = Vec::with_capacity(t * dx);
    let mut u = Vec::with_capacity(t * du);
    for _ in 0..t {
        let row: Vec<f64> = (0..du).map(|_| r.random::<f64>()).collect();
        for i in 0..dx {
            let loc: f64 = w_s.row(i).iter().zip(&row).map(|(a, b)| a * b).sum();
            s.push(loc + sech_variate(&mut r));
        }
        u.extend(row);
    }
    Ok((Tensor::matrix(t, dx, s)?, Tensor::matrix(t, du, u)?))
}

/// `D_x × D_u` matrix with entries uniform on [−1, 1].
pub fn random_source_weights(dx: usize, du: usize, seed: u64) -> Tensor {
    let mut r = rng(seed);
    Tensor::matrix(dx, du, (0..dx * du).map(|_| r.random_range(-1.0..=1.0)).collect()).expect("positive dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag1(col: &[f64]) -> f64 {
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let v: f64 = col.iter().map(|x| (x - m).powi(2)).sum();
        let c: f64 = col.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        c / v
    }

    #[test]
    fn ar_autocorrelation() {
        let s = gen_ar_laplace(0.7, 3, 100_000, 11).unwrap();
        for j in 0..3 {
            let a = lag1(&s.column(j));
            assert!((a - 0.7).abs() < 0.03, "channel {j}: {a}");
        }
    }

    #[test]
    fn rho_zero_is_unit_variance_laplace() {
        let s = gen_ar_laplace(0.0, 2, 100_000, 12).unwrap();
        for j in 0..2 {
            let c = s.column(j);
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64;
            assert!((v - 1.0).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn seed_determinism() {
        assert_eq!(gen_ar_laplace(0.7, 2, 50, 3).unwrap(), gen_ar_laplace(0.7, 2, 50, 3).unwrap());
        assert_ne!(gen_ar_laplace(0.7, 2, 50, 3).unwrap(), gen_ar_laplace(0.7, 2, 50, 4).unwrap());
    }

    #[test]
    fn outlier_conditional_moments() {
        let mut r = rng(5);
        let draws: Vec<f64> = (0..10_000).map(|_| gen_outlier_conditional(&[1.0], 0.7, &mut r)[0]).collect();
        let m = draws.iter().sum::<f64>() / 1e4;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 1e4;
        assert!((m + 0.7).abs() < 0.05, "{m}");
        assert!((v - 1.0).abs() < 0.05, "{v}");
        let zero: f64 = (0..10_000).map(|_| gen_outlier_conditional(&[0.0], 0.7, &mut r)[0]).sum::<f64>() / 1e4;
        assert!(zero.abs() < 0.05);
    }

    #[test]
    fn contamination_fraction_and_identity() {
        let g = ArLaplace::new(0.7, 2).unwrap();
        let clean = g.generate(1000, 9).unwrap();
        let (same, flags) = contaminate_timeseries(&g, 1000, &ContaminationSpec::clean(), 9).unwrap();
        assert_eq!(clean, same);
        assert!(flags.iter().all(|f| !f));
        let spec = ContaminationSpec::timeseries(0.2, 0.7).unwrap();
        let (_, flags) = contaminate_timeseries(&g, 100_000, &spec, 9).unwrap();
        let frac = flags.iter().filter(|&&f| f).count() as f64 / 100_000.0;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
        assert!(ContaminationSpec::timeseries(1.0, 0.7).is_err());
    }

    #[test]
    fn sech_inverse_round_trip() {
        let mut z = -10.0;
        while z <= 10.0 {
            assert!((sech_inv_cdf(sech_cdf(z)) - z).abs() < 1e-10, "{z}");
            z += 0.05;
        }
    }

    #[test]
    fn sech_variance() {
        let w = Tensor::zeros(&[1, 2]);
        let (s, _) = gen_logcosh_sources(&w, 200_000, 4).unwrap();
        let c = s.column(0);
        let n = c.len() as f64;
        let m = c.iter().sum::<f64>() / n;
        let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let want = std::f64::consts::PI.powi(2) / 4.0;
        assert!((v - want).abs() < 0.05, "{v}");
    }

    #[test]
    fn logcosh_conditional_location() {
        let w = random_source_weights(3, 4, 1);
        let (s, u) = gen_logcosh_sources(&w, 50_000, 2).unwrap();
        for i in 0..3 {
            let resid: f64 = (0..s.rows())
                .map(|t| s.get(t, i) - w.row(i).iter().zip(u.row(t)).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>()
                / s.rows() as f64;
            assert!(resid.abs() < 0.02, "{resid}");
        }
        assert!(u.data().iter().all(|v| (0.0..1.0).contains(v)));
    }
}
