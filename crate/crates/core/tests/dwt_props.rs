use proptest::prelude::*;
use wfa_core::dwt::{dwt_forward, dwt_inverse, make_filter, Wavelet};
use wfa_core::shrink::{hard_threshold, shrink_decomposition, ThresholdPlan};

fn signal() -> impl Strategy<Value = Vec<f64>> {
    (1u32..=10).prop_flat_map(|j| prop::collection::vec(-1e3f64..1e3, 1usize << j))
}

fn wavelet() -> impl Strategy<Value = Wavelet> {
    prop_oneof![Just(Wavelet::Haar), Just(Wavelet::D4), Just(Wavelet::D8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reconstruction_and_parseval(y in signal(), w in wavelet(), frac in 0.0f64..1.0) {
        let f = w.filter();
        let levels = y.len().trailing_zeros() as usize;
        let j0 = ((levels as f64) * frac) as usize;
        let d = dwt_forward(&y, &f, j0).unwrap();
        let back = dwt_inverse(&d, &f).unwrap();
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in y.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        let e: f64 = y.iter().map(|v| v * v).sum();
        prop_assert!((d.energy() - e).abs() <= 1e-12 * e.max(1.0));
        prop_assert_eq!(d.flatten().len(), y.len());
    }

    #[test]
    fn linearity(y in signal(), a in -5.0f64..5.0, w in wavelet()) {
        let f = w.filter();
        let z: Vec<f64> = y.iter().rev().copied().collect();
        let combo: Vec<f64> = y.iter().zip(&z).map(|(u, v)| a * u + v).collect();
        let (dy, dz, dc) = (
            dwt_forward(&y, &f, 0).unwrap().flatten(),
            dwt_forward(&z, &f, 0).unwrap().flatten(),
            dwt_forward(&combo, &f, 0).unwrap().flatten(),
        );
        for i in 0..y.len() {
            prop_assert!((a * dy[i] + dz[i] - dc[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn thresholding_invariants(y in signal(), lambda in 0.0f64..500.0) {
        prop_assume!(y.len() >= 2);
        let f = Wavelet::D4.filter();
        let d = dwt_forward(&y, &f, 0).unwrap();
        let plan = ThresholdPlan::new(y.len(), d.details().len(), lambda).unwrap();
        let s = hard_threshold(&d, &plan).unwrap();
        prop_assert!(s.kept.iter().all(|v| v * v > lambda * lambda));
        prop_assert!(s.energy() <= d.energy());
        let once = shrink_decomposition(&d, &plan).unwrap();
        prop_assert_eq!(&shrink_decomposition(&once, &plan).unwrap(), &once);
    }
}

#[test]
fn filter_taps_are_orthonormal() {
    for name in ["haar", "d4", "d8"] {
        let f = make_filter(name).unwrap();
        let l = f.len();
        assert!((f.low.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs() < 1e-14);
        for m in 0..l / 2 {
            let dot: f64 = (0..l - 2 * m).map(|k| f.low[k] * f.low[k + 2 * m]).sum();
            assert!((dot - if m == 0 { 1.0 } else { 0.0 }).abs() < 1e-14, "{name} m={m}");
        }
        for k in 0..l {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(f.high[k], sign * f.low[l - 1 - k]);
        }
    }
    assert!(make_filter("sym4").is_err());
}
