use rand_distr::{Distribution, StandardNormal};

use super::mixing::{MixingNet, DEFAULT_MAX_CONDITION};
use super::sources::{gen_logcosh_sources, random_source_weights, side_rng};
use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Pairs `(x(t), x(t−1))`. Sources and flags follow the `x` rows.
pub fn make_pcl_pairs(x: &Tensor) -> Result<PairedBatch> {
    make_lagged_pairs(x, None, None)
}

pub fn make_lagged_pairs(x: &Tensor, s: Option<&Tensor>, flags: Option<&[bool]>) -> Result<PairedBatch> {
    let t = x.rows();
    if t < 2 {
        return Err(Error::Config(format!("lagged pairs need at least 2 rows, got {t}")));
    }
    let mut b = PairedBatch::new(x.slice_rows(1, t), x.slice_rows(0, t - 1))?;
    if let Some(s) = s {
        b = b.with_sources(s.slice_rows(1, t))?;
    }
    b.outlier = flags.map(|f| f[1..].to_vec());
    Ok(b)
}

/// `x = f([s; n])` with `s` depending on `u` through the log-cosh conditional and
/// `n` standard normal, independent of both. `layers = 0` makes `f` the identity.
pub fn gen_nuisance_scenario(d_x: usize, big_dx: usize, d_u: usize, t: usize, layers: usize, seed: u64) -> Result<PairedBatch> {
    if d_x == 0 || d_x >= big_dx {
        return Err(Error::Config(format!("need 0 < d_x < D_x, got d_x={d_x}, D_x={big_dx}")));
    }
    let w = random_source_weights(d_x, d_u, seed ^ 0x5eed);
    let (s, u) = gen_logcosh_sources(&w, t, seed)?;
    let dn = big_dx - d_x;
    let mut r = side_rng(seed, 3);
    let n = Tensor::matrix(t, dn, (0..t * dn).map(|_| StandardNormal.sample(&mut r)).collect())?;
    let latent = Tensor::hstack(&[&s, &n])?;
    let x = if layers == 0 { latent } else { MixingNet::random(big_dx, layers, DEFAULT_MAX_CONDITION, seed ^ 0xf00d)?.mix(&latent)? };
    let mut b = PairedBatch::new(x, u)?.with_sources(s)?;
    b.n = Some(n);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pearson;

    #[test]
    fn pcl_pairs_shift_by_one() {
        let x = Tensor::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let b = make_pcl_pairs(&x).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.x.data(), &[2.0, 3.0]);
        assert_eq!(b.u.data(), &[1.0, 2.0]);
        let two = make_pcl_pairs(&x.slice_rows(0, 2)).unwrap();
        assert_eq!((two.x.data(), two.u.data()), (&[2.0][..], &[1.0][..]));
        assert!(make_pcl_pairs(&x.slice_rows(0, 1)).is_err());
    }

    #[test]
    fn lag_two_by_composition() {
        let x = Tensor::matrix(6, 1, (0..6).map(f64::from).collect()).unwrap();
        let once = make_pcl_pairs(&x).unwrap();
        let twice = make_pcl_pairs(&once.u).unwrap();
        assert_eq!(twice.x.data(), &x.data()[1..5]);
        assert_eq!(twice.u.data(), &x.data()[..4]);
    }

    #[test]
    fn nuisance_independent_of_u() {
        let b = gen_nuisance_scenario(2, 5, 3, 20_000, 1, 7).unwrap();
        let n = b.n.as_ref().unwrap();
        for i in 0..n.cols() {
            for j in 0..b.u.cols() {
                assert!(pearson(&n.column(i), &b.u.column(j)).abs() < 0.02);
            }
        }
    }

    #[test]
    fn identity_mixing_exposes_sources() {
        let b = gen_nuisance_scenario(2, 4, 3, 100, 0, 1).unwrap();
        assert_eq!(b.x.slice_cols(0, 2), *b.s.as_ref().unwrap());
    }

    #[test]
    fn sources_depend_on_u() {
        let b = gen_nuisance_scenario(3, 5, 3, 5000, 1, 3).unwrap();
        let dc = crate::metrics::distance_correlation(&b.s.as_ref().unwrap().slice_rows(0, 1500), &b.u.slice_rows(0, 1500));
        assert!(dc > 0.05, "{dc}");
    }
}
