use approx::assert_relative_eq;
use proptest::prelude::*;
use ratiorep::objectives::scores::{dv, fdiv, gamma, infonce, lr, uniform};
use ratiorep::tensor::Tensor;

fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0..6.0f64, 1..max)
}

proptest! {
    #[test]
    fn dv_ignores_additive_constants(pos in scores(12), neg in scores(12), c in -20.0..20.0f64) {
        let (wp, wn) = (uniform(pos.len()), uniform(neg.len()));
        let base = dv(&pos, &wp, &neg, &wn).unwrap().loss;
        let shift = |v: &[f64]| v.iter().map(|r| r + c).collect::<Vec<_>>();
        let moved = dv(&shift(&pos), &wp, &shift(&neg), &wn).unwrap().loss;
        prop_assert!((moved - base).abs() < 1e-12);
    }

    #[test]
    fn lr_and_gamma_are_label_symmetric(pos in scores(10), neg in scores(10), g in 0.05..6.0f64) {
        // swapping the roles of the two samples and negating r leaves the loss unchanged
        let (wp, wn) = (uniform(pos.len()), uniform(neg.len()));
        let flip = |v: &[f64]| v.iter().map(|r| -r).collect::<Vec<_>>();
        let a = lr(&pos, &wp, &neg, &wn).unwrap().loss;
        let b = lr(&flip(&neg), &wn, &flip(&pos), &wp).unwrap().loss;
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let a = gamma(&pos, &wp, &neg, &wn, g).unwrap().loss;
        let b = gamma(&flip(&neg), &wn, &flip(&pos), &wp, g).unwrap().loss;
        assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-12);
    }

    #[test]
    fn raising_a_positive_score_never_hurts(pos in scores(8), neg in scores(8), g in 0.1..4.0f64) {
        let (wp, wn) = (uniform(pos.len()), uniform(neg.len()));
        for l in [lr(&pos, &wp, &neg, &wn), gamma(&pos, &wp, &neg, &wn, g), dv(&pos, &wp, &neg, &wn), fdiv(&pos, &wp, &neg, &wn)] {
            let l = l.unwrap();
            prop_assert!(l.dpos.iter().all(|&d| d <= 0.0));
            prop_assert!(l.dneg.iter().all(|&d| d >= 0.0));
            prop_assert!(l.loss.is_finite());
        }
    }

    #[test]
    fn gamma_normalised_gap_is_first_order(pos in scores(8), neg in scores(8)) {
        // Ĵγ + log 2/γ − Ĵ_LR/2 = O(γ), so shrinking γ tenfold shrinks the gap about tenfold
        let (wp, wn) = (uniform(pos.len()), uniform(neg.len()));
        let j_lr = lr(&pos, &wp, &neg, &wn).unwrap().loss;
        let gap = |g: f64| (gamma(&pos, &wp, &neg, &wn, g).unwrap().loss + std::f64::consts::LN_2 / g - 0.5 * j_lr).abs();
        let (a, b) = (gap(1e-3), gap(1e-4));
        prop_assert!(b <= a / 5.0 + 1e-9, "{} {}", a, b);
    }

    #[test]
    fn infonce_is_row_shift_invariant_and_bounded_below(k in 2usize..7, seed in any::<u64>(), c in -5.0..5.0f64) {
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((x >> 11) as f64 / (1u64 << 53) as f64) * 8.0 - 4.0 };
        let data: Vec<f64> = (0..k * k).map(|_| next()).collect();
        let r = Tensor::matrix(k, k, data.clone()).unwrap();
        let (base, grad) = infonce(&r).unwrap();
        // each row contributes −log softmax_ii ≥ 0, offset by −log K
        prop_assert!(base >= -(k as f64).ln() - 1e-12);
        let mut shifted = data;
        shifted[..k].iter_mut().for_each(|v| *v += c);
        let (moved, _) = infonce(&Tensor::matrix(k, k, shifted).unwrap()).unwrap();
        prop_assert!((moved - base).abs() < 1e-12);
        for i in 0..k {
            prop_assert!(grad.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
