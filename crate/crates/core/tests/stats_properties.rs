use bandit_trust_core::*;
use proptest::prelude::*;

fn arms() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((1usize..6, -2.0f64..2.0, 0.1f64..3.0), 1..8)
}

fn stats_of(rows: &[(usize, f64, f64)]) -> ArmStats {
    ArmStats::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect())
        .unwrap()
}

#[test]
fn reference_policy_examples() {
    let s = ArmStats::new(vec![1, 1], vec![0.0; 2], vec![1.0, 2.0]).unwrap();
    let w = reference_policy(&s);
    assert!((w.weights()[0] - 0.8).abs() < 1e-15 && (w.weights()[1] - 0.2).abs() < 1e-15);
    let s = ArmStats::new(vec![3, 1], vec![0.0; 2], vec![1.0, 1.0]).unwrap();
    assert_eq!(reference_policy(&s).weights(), &[0.75, 0.25]);
}

#[test]
fn compute_stats_examples() {
    let ds = ArmDataset::new(vec![("A".into(), vec![1.0, 3.0]), ("B".into(), vec![2.0])]).unwrap();
    let s = compute_stats(&ds, &SigmaMode::Fixed(1.0)).unwrap();
    assert_eq!((s.counts(), s.r_hat(), s.sigma()), (&[2, 1][..], &[2.0, 2.0][..], &[1.0, 1.0][..]));
    // The single-sample arm borrows the largest estimable deviation.
    let e = compute_stats(&ds, &SigmaMode::EmpiricalStd).unwrap();
    assert_eq!(e.sigma(), &[2f64.sqrt(), 2f64.sqrt()]);
    let one = ArmDataset::new(vec![("x".into(), vec![0.5])]).unwrap();
    assert_eq!(compute_stats(&one, &SigmaMode::BoundedQuarter).unwrap().sigma(), &[0.5]);
    assert_eq!(compute_stats(&one, &SigmaMode::EmpiricalStd).unwrap_err(), Error::UnestimableSigma);
}

#[test]
fn dataset_validation() {
    assert!(matches!(ArmDataset::new(vec![("a".into(), vec![])]), Err(Error::EmptyArm { .. })));
    assert!(matches!(
        ArmDataset::new(vec![("a".into(), vec![1.0]), ("a".into(), vec![2.0])]),
        Err(Error::DuplicateArm { .. })
    ));
    assert!(matches!(ArmDataset::new(vec![("a".into(), vec![f64::NAN])]), Err(Error::NonFinite { .. })));
    let kept = ArmDataset::new_dropping_empty(vec![("a".into(), vec![]), ("b".into(), vec![1.0])]).unwrap();
    assert_eq!(kept.arm_ids().collect::<Vec<_>>(), vec!["b"]);
}

proptest! {
    #[test]
    fn reference_policy_sums_to_one_and_ignores_common_scale(rows in arms(), k in 0.01f64..100.0) {
        let s = stats_of(&rows);
        let w = reference_policy(&s);
        prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let scaled: Vec<_> = rows.iter().map(|r| (r.0, r.1, r.2 * k)).collect();
        let v = reference_policy(&stats_of(&scaled));
        for (a, b) in w.weights().iter().zip(v.weights()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn empirical_value_is_linear(rows in arms(), t in 0.0f64..1.0, seed in 0usize..1000) {
        let s = stats_of(&rows);
        let d = s.d();
        let w1 = StochasticPolicy::one_hot(d, seed % d);
        let w2 = reference_policy(&s);
        let mix: Vec<f64> = w1.weights().iter().zip(w2.weights()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let mix = StochasticPolicy::new(mix).unwrap();
        let lhs = policy_value_empirical(&mix, &s).unwrap();
        let rhs = t * policy_value_empirical(&w1, &s).unwrap() + (1.0 - t) * policy_value_empirical(&w2, &s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn compute_stats_is_permutation_equivariant(
        samples in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2..5), 2..6),
        shift in 1usize..5,
    ) {
        let arms: Vec<(String, Vec<f64>)> = samples.iter().enumerate().map(|(i, s)| (i.to_string(), s.clone())).collect();
        let mut rotated = arms.clone();
        let k = shift % arms.len();
        rotated.rotate_left(k);
        for mode in [SigmaMode::Fixed(0.7), SigmaMode::EmpiricalStd, SigmaMode::BoundedQuarter] {
            let a = compute_stats(&ArmDataset::new(arms.clone()).unwrap(), &mode).unwrap();
            let b = compute_stats(&ArmDataset::new(rotated.clone()).unwrap(), &mode).unwrap();
            for i in 0..a.d() {
                let j = (i + a.d() - k) % a.d();
                prop_assert_eq!(a.counts()[i], b.counts()[j]);
                prop_assert_eq!(a.r_hat()[i], b.r_hat()[j]);
                prop_assert_eq!(a.sigma()[i], b.sigma()[j]);
            }
        }
    }
}
