use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ratiorep::metrics::{hungarian, mean_abs_correlation, pearson, rmse_up_to_constant, whiten};
use ratiorep::tensor::Tensor;

fn normal(t: usize, d: usize, seed: u64) -> Tensor {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Tensor::matrix(t, d, (0..t * d).map(|_| StandardNormal.sample(&mut r)).collect()).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn hungarian_matches_brute_force(n in 1usize..6, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cost: Vec<f64> = (0..n * n).map(|_| r.random_range(-3.0..3.0)).collect();
        let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>();
        let a = hungarian(&cost, n);
        let mut seen = a.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let best = permutations(n).iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
        prop_assert!((total(&a) - best).abs() < 1e-9);
    }

    #[test]
    fn correlation_ignores_order_sign_and_scale(d in 1usize..5, seed in any::<u64>()) {
        let s = normal(300, d, seed);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let noise = normal(300, d, seed ^ 2);
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let base_feat = Tensor::matrix(300, d, (0..300 * d).map(|k| s.data()[k] + 0.5 * noise.data()[k]).collect()).unwrap();
        let scale: Vec<f64> = (0..d).map(|_| if r.random::<bool>() { -1.0 } else { 1.0 } * r.random_range(0.1..10.0)).collect();
        let mut feat = Tensor::zeros(&[300, d]);
        for t in 0..300 {
            for j in 0..d {
                feat.set(t, j, scale[j] * base_feat.get(t, perm[j]) + 3.0);
            }
        }
        let a = mean_abs_correlation(&base_feat, &s).unwrap().mean_abs_corr;
        let b = mean_abs_correlation(&feat, &s).unwrap().mean_abs_corr;
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((mean_abs_correlation(&s, &s).unwrap().mean_abs_corr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_bounded(a in prop::collection::vec(-1e3..1e3f64, 2..40), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|_| r.random_range(-5.0..5.0)).collect();
        let p = pearson(&a, &b);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn rmse_up_to_constant_ignores_shift(a in prop::collection::vec(-5.0..5.0f64, 1..30), c in -50.0..50.0f64) {
        let b: Vec<f64> = a.iter().map(|v| v + c).collect();
        prop_assert!(rmse_up_to_constant(&a, &b) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn whitened_data_has_identity_covariance(d in 1usize..5, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let raw = normal(500, d, seed);
        let mix: Vec<f64> = (0..d * d).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut x = Tensor::zeros(&[500, d]);
        for t in 0..500 {
            for i in 0..d {
                let v: f64 = (0..d).map(|j| mix[i * d + j] * raw.get(t, j)).sum::<f64>() + 10.0 * i as f64 + raw.get(t, i) * 0.1;
                x.set(t, i, v);
            }
        }
        let (_, w) = whiten(&x).unwrap();
        for i in 0..d {
            for j in 0..d {
                let ci: Vec<f64> = w.column(i);
                let cj: Vec<f64> = w.column(j);
                let mi = ci.iter().sum::<f64>() / 500.0;
                let mj = cj.iter().sum::<f64>() / 500.0;
                let c = ci.iter().zip(&cj).map(|(a, b)| (a - mi) * (b - mj)).sum::<f64>() / 500.0;
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((c - want).abs() < 1e-6, "{} {} {}", i, j, c);
            }
        }
    }
}
