use proptest::prelude::*;
use ratiorep::data::PairedBatch;
use ratiorep::objectives::{gamma_at_epoch, GammaConfig};
use ratiorep::quadrature::gauss_legendre;
use ratiorep::synth::{
    contaminate_pairs, gen_ar_laplace, make_lagged_pairs, outlier_fraction, sech_cdf, sech_inv_cdf, ContaminationSpec, MixingNet,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixing_is_invertible(dim in 1usize..6, layers in 1usize..4, seed in any::<u64>()) {
        let s = gen_ar_laplace(0.7, dim, 50, seed).unwrap();
        let net = MixingNet::random(dim, layers, 10.0, seed ^ 7).unwrap();
        let back = net.invert(&net.mix(&s).unwrap()).unwrap();
        for (a, b) in s.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lagged_pairs_line_up(dim in 1usize..4, t in 3usize..40, seed in any::<u64>()) {
        let x = gen_ar_laplace(0.5, dim, t, seed).unwrap();
        let p = make_lagged_pairs(&x, None, None).unwrap();
        prop_assert_eq!(p.len(), t - 1);
        for i in 0..t - 1 {
            prop_assert_eq!(p.x.row(i), x.row(i + 1));
            prop_assert_eq!(p.u.row(i), x.row(i));
        }
    }

    #[test]
    fn contamination_touches_only_flagged_rows(eps in 0.0..0.9f64, model in 1u8..3, seed in any::<u64>()) {
        let x = gen_ar_laplace(0.5, 3, 400, seed).unwrap();
        let batch = make_lagged_pairs(&x, None, None).unwrap();
        let spec = ContaminationSpec::gaussian(eps, model, 5.0).unwrap();
        let dirty = contaminate_pairs(&batch, &spec, seed).unwrap();
        let flags = dirty.outlier.clone().unwrap_or_else(|| vec![false; batch.len()]);
        for t in 0..batch.len() {
            if !flags[t] {
                prop_assert_eq!(dirty.x.row(t), batch.x.row(t));
                prop_assert_eq!(dirty.u.row(t), batch.u.row(t));
            } else if model == 1 {
                prop_assert_eq!(dirty.x.row(t), batch.x.row(t));
            }
        }
        // Bernoulli(ε) flags: 5 standard deviations of slack
        let sd = (eps * (1.0 - eps) / batch.len() as f64).sqrt();
        prop_assert!((outlier_fraction(&flags) - eps).abs() <= 5.0 * sd + 1e-12);
        prop_assert_eq!(contaminate_pairs(&batch, &spec, seed).unwrap(), dirty);
    }

    #[test]
    fn sech_quantiles_round_trip(p in 1e-9..(1.0 - 1e-9f64)) {
        prop_assert!((sech_cdf(sech_inv_cdf(p)) - p).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree(n in 2usize..20, k in 0u32..6, lo in -3.0..0.0f64, width in 0.1..5.0f64) {
        prop_assume!((k as usize) < 2 * n);
        let hi = lo + width;
        let (x, w) = gauss_legendre(n, lo, hi);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
        let want = (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / (k as f64 + 1.0);
        prop_assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn ramp_schedule_is_monotone(from in 0.0..3.0f64, to in 0.0..6.0f64, steps in 1usize..20, every in 1usize..50) {
        let cfg = GammaConfig::ramp(from, to, steps, every);
        let vals: Vec<f64> = (0..steps * every + 5).map(|e| gamma_at_epoch(&cfg, e).unwrap()).collect();
        prop_assert_eq!(vals[0], from);
        prop_assert!((vals.last().unwrap() - to).abs() < 1e-12);
        let rising = to >= from;
        let monotone = vals.windows(2).all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] });
        prop_assert!(monotone);
    }
}

#[test]
fn paired_batch_keeps_rows_aligned() {
    let x = gen_ar_laplace(0.5, 2, 10, 1).unwrap();
    let b = PairedBatch::new(x.clone(), x.clone()).unwrap();
    let s = b.select(&[3, 1]);
    assert_eq!(s.x.row(0), x.row(3));
    assert_eq!(s.u.row(1), x.row(1));
}
