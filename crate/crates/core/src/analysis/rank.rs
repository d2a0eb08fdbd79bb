use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `log p(s|u) = Σ_i Σ_k λ_ik(u) q_ik(s_i) − log Z(u)` with
/// `λ_ik(u) = tanh(a_ikᵀu + b_ik)` and `q_ik(s) = sin(ω_ik s + φ_ik)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilySpec {
    pub k: usize,
    pub d_x: usize,
    pub d_u: usize,
    /// `a_ik`, flattened `[i][k][j]`; all zero when λ does not depend on `u`.
    pub lambda_w: Vec<f64>,
    pub lambda_b: Vec<f64>,
    pub freq: Vec<f64>,
    pub phase: Vec<f64>,
}

impl ExpFamilySpec {
    pub fn random(k: usize, d_x: usize, d_u: usize, seed: u64) -> Result<Self> {
        if k == 0 || d_x == 0 || d_u == 0 {
            return Err(Error::Config(format!("exponential family needs K, D_x, D_u >= 1, got {k}, {d_x}, {d_u}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = d_x * k;
        Ok(ExpFamilySpec {
            k,
            d_x,
            d_u,
            lambda_w: (0..n * d_u).map(|_| rng.random_range(-1.0..1.0)).collect(),
            lambda_b: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
            freq: (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
            phase: (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
        })
    }

    /// Same family with λ constant in `u`.
    pub fn constant_lambda(mut self) -> Self {
        self.lambda_w.iter_mut().for_each(|w| *w = 0.0);
        self
    }

    fn lambda(&self, i: usize, k: usize, u: &[f64]) -> f64 {
        let idx = i * self.k + k;
        let a = &self.lambda_w[idx * self.d_u..(idx + 1) * self.d_u];
        (a.iter().zip(u).map(|(a, u)| a * u).sum::<f64>() + self.lambda_b[idx]).tanh()
    }

    /// `w(v,u) = (∂_{v_i} log p, ∂²_{v_i} log p)_i`, length `2·D_x`.
    pub fn w(&self, v: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.d_x];
        for i in 0..self.d_x {
            for k in 0..self.k {
                let idx = i * self.k + k;
                let (om, ph) = (self.freq[idx], self.phase[idx]);
                let l = self.lambda(i, k, u);
                out[i] += l * om * (om * v[i] + ph).cos();
                out[self.d_x + i] -= l * om * om * (om * v[i] + ph).sin();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub step: f64,
}

fn jacobian(spec: &ExpFamilySpec, v: &[f64], u: &[f64], h: f64) -> DMatrix<f64> {
    let rows = 2 * spec.d_x;
    let mut j = DMatrix::zeros(rows, spec.d_u);
    let mut up = u.to_vec();
    for c in 0..spec.d_u {
        up[c] = u[c] + h;
        let plus = spec.w(v, &up);
        up[c] = u[c] - h;
        let minus = spec.w(v, &up);
        up[c] = u[c];
        for r in 0..rows {
            j[(r, c)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    j
}

/// Numerical rank of `∇_u w(v,u)` from central differences, threshold `1e-8·σ_max`.
pub fn rank_condition(spec: &ExpFamilySpec, v: &[f64], u: &[f64]) -> Result<RankReport> {
    if v.len() != spec.d_x || u.len() != spec.d_u {
        return Err(Error::shape("rank probe point", format!("{}/{}", spec.d_x, spec.d_u), format!("{}/{}", v.len(), u.len())));
    }
    for h in [1e-5, 1e-4, 1e-3] {
        let j = jacobian(spec, v, u, h);
        let j2 = jacobian(spec, v, u, 2.0 * h);
        let scale = j.amax().max(1e-300);
        if !j.iter().all(|x| x.is_finite()) || (&j - &j2).amax() > 1e-6 * scale {
            continue;
        }
        let mut sv: Vec<f64> = j.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let max = sv.first().copied().unwrap_or(0.0);
        let rank = if max > 0.0 { sv.iter().filter(|&&s| s > 1e-8 * max).count() } else { 0 };
        return Ok(RankReport { rank, singular_values: sv, step: h });
    }
    Err(Error::Numerical("derivative of w is ill-conditioned at every probed step size".into()))
}

/// Random probe points `(v, u)` in `[−2, 2]`.
pub fn random_probes(spec: &ExpFamilySpec, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v = (0..spec.d_x).map(|_| rng.random_range(-2.0..2.0)).collect();
            let u = (0..spec.d_u).map(|_| rng.random_range(-2.0..2.0)).collect();
            (v, u)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_rank_at_most_dx() {
        let spec = ExpFamilySpec::random(1, 3, 6, 1).unwrap();
        for (v, u) in random_probes(&spec, 10, 2) {
            let r = rank_condition(&spec, &v, &u).unwrap();
            assert!(r.rank <= 3, "{r:?}");
        }
    }

    #[test]
    fn three_components_reach_full_rank() {
        let spec = ExpFamilySpec::random(3, 3, 6, 3).unwrap();
        let best = random_probes(&spec, 10, 4).iter().map(|(v, u)| rank_condition(&spec, v, u).unwrap().rank).max().unwrap();
        assert_eq!(best, 6);
    }

    #[test]
    fn constant_lambda_has_rank_zero() {
        let spec = ExpFamilySpec::random(3, 2, 4, 5).unwrap().constant_lambda();
        let (v, u) = &random_probes(&spec, 1, 6)[0];
        assert_eq!(rank_condition(&spec, v, u).unwrap().rank, 0);
    }
}
