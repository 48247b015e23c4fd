mod common;

use wfa_core::dist::{pi_nonzero, KappaDist};
use wfa_core::mc::{adequacy, ks_distance, simulate_dataset, simulate_null, SimSpec};
use wfa_core::kappa::compute_kappa;

#[test]
fn survivor_counts_follow_binomial() {
    let spec = SimSpec { treatments: 2, replicates: 5, n: 128, reps: 2000, seed: 5, ..SimSpec::default() };
    let samples = simulate_null(&spec).unwrap();
    let (p_slots, _) = spec.slots().unwrap();
    let pi = pi_nonzero(spec.n).unwrap();
    let expected = p_slots as f64 * pi;
    let se = (p_slots as f64 * pi * (1.0 - pi) / spec.reps as f64).sqrt();
    for i in 0..spec.treatments {
        let mean = samples.iter().map(|s| s.survivors[i] as f64).sum::<f64>() / spec.reps as f64;
        assert!((mean - expected).abs() < 3.0 * se, "treatment {i}: {mean} vs {expected}");
    }
}

#[test]
fn relabeling_leaves_null_distribution_unchanged() {
    let spec = SimSpec { treatments: 3, replicates: 4, n: 64, reps: 300, seed: 21, ..SimSpec::default() };
    let cfg = spec.config();
    let (a, b): (Vec<f64>, Vec<f64>) = (0..spec.reps as u64)
        .map(|rep| {
            let ps = simulate_dataset(&spec, rep, None).unwrap();
            let swapped = ps.permuted(&[2, 0, 1]).unwrap();
            (compute_kappa(&ps, &cfg).unwrap().value, compute_kappa(&swapped, &cfg).unwrap().value)
        })
        .unzip();
    assert_eq!(a, b);
    // the KS distance between the two runs is then exactly zero
    let mut sa = a.clone();
    sa.sort_by(f64::total_cmp);
    let mut sb = b.clone();
    sb.sort_by(f64::total_cmp);
    assert_eq!(sa, sb);
}

#[test]
fn self_consistency_report() {
    let d = KappaDist::new(5.0, 7.0, 1.2).unwrap();
    let xs = wfa_core::mc::sample_kappa_dist(&d, 10_000, 4).unwrap();
    let r = adequacy(&xs, &d, None).unwrap();
    assert!(r.ks_distance < r.ks_critical_1pct);
    assert_eq!(r.ks_distance, ks_distance(&xs, &d).unwrap());
    assert!(r.moment_gaps.mean.gap.abs() < 4.0 * r.moment_gaps.mean.std_error);
    assert_eq!(r.quantile_table.len(), 3);
    assert!(r.survivor_rate.is_none());
}
