use bandit_trust::simulate::*;
use bandit_trust_core::{reference_policy, Method, StochasticPolicy, TrustConfig};

#[test]
fn data_starved_layout() {
    let (inst, ds) = gen_data_starved(10_000, 2023).unwrap();
    assert_eq!(inst.means.iter().filter(|&&m| m == 1.0).count(), 5000);
    assert_eq!(inst.means.iter().filter(|&&m| m == 0.0).count(), 5000);
    let r: Vec<f64> = ds.arms().iter().map(|(_, s)| s[0]).collect();
    assert!(ds.arms().iter().all(|(_, s)| s.len() == 1));
    let good_mean = r[..5000].iter().sum::<f64>() / 5000.0;
    assert!((good_mean - 1.0).abs() < 0.02);
    assert!(r[..5000].iter().all(|&x| (0.5..1.5).contains(&x)));
    assert!(r[5000..].iter().cloned().fold(f64::MIN, f64::max) > 1.5);
    let (small, _) = gen_data_starved(2, 0).unwrap();
    assert_eq!(small.means, vec![1.0, 0.0]);
    assert!(gen_data_starved(3, 0).is_err());
}

#[test]
fn generators_replay_under_seed() {
    let (a, da) = gen_linear_means(50, 9).unwrap();
    let (b, db) = gen_linear_means(50, 9).unwrap();
    let (c, dc) = gen_linear_means(50, 10).unwrap();
    assert_eq!((a.clone(), da.clone()), (b, db));
    assert_eq!(a.means, c.means);
    assert_ne!(da, dc);
}

#[test]
fn linear_means_values() {
    let (inst, ds) = gen_linear_means(1000, 1).unwrap();
    assert_eq!(inst.means[999], 1.0);
    assert!((inst.means.iter().sum::<f64>() / 1000.0 - 0.5005).abs() < 1e-12);
    for d in [1usize, 7, 1000] {
        let (inst, ds) = gen_linear_means(d, 1).unwrap();
        let mu = reference_policy(&inst.stats(&ds).unwrap());
        let v = true_value(&mu, &inst).unwrap();
        assert!((v - (d as f64 + 1.0) / (2.0 * d as f64)).abs() < 1e-12);
    }
    assert!(true_value(&StochasticPolicy::uniform(3), &inst).is_err());
    assert_eq!(ds.len(), 1000);
}

#[test]
fn data_starved_values() {
    let (inst, _) = gen_data_starved(10_000, 4).unwrap();
    assert!((true_value(&StochasticPolicy::uniform(10_000), &inst).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(true_value(&StochasticPolicy::one_hot(10_000, 0), &inst).unwrap(), 1.0);
    let mut w = vec![0.0; 10_000];
    w[0] = 0.58;
    w[9_999] = 0.42;
    assert!((true_value(&StochasticPolicy::new(w).unwrap(), &inst).unwrap() - 0.58).abs() < 1e-12);
}

#[test]
fn strong_signal_construction() {
    let (inst, ds) = gen_strong_signal(1000, 0.1, 5).unwrap();
    assert_eq!(ds.len(), 2000);
    assert_eq!(inst.means.iter().sum::<f64>(), 1000.0);
    let good: f64 = ds.arms()[..1000].iter().map(|(_, s)| s[0]).sum::<f64>() / 1000.0;
    assert!((good - 1.0).abs() < 3.0 * 0.1 / 1000f64.sqrt());
}

#[test]
fn strong_signal_check_cases() {
    let r = strong_signal_check(1000, 0.1, 0.1, &[1, 2, 3, 4]).unwrap();
    assert!(r.pass && !r.vacuous);
    assert!((r.bound - 0.3).abs() < 1e-15);
    let v = strong_signal_check(100, 0.3, 0.1, &[1]).unwrap();
    assert!(v.vacuous && v.pass);
    assert!(strong_signal_check(10, 0.1, 0.1, &[1]).is_err());
}

#[test]
fn two_arm_smoke_run() {
    let cfg = TrustConfig { grid_size: 6, ..Default::default() };
    let summary = run_experiment(Generator::DataStarved, 2, &[1, 2, 3], &cfg).unwrap();
    assert_eq!(summary.methods.len(), 5);
    assert_eq!(summary.runs.len(), 3);
    for run in &summary.runs {
        for m in &run.methods {
            assert!(m.true_value.is_finite() && m.empirical_value.is_finite());
            if let Some(lb) = m.lower_bound {
                assert!(lb <= m.empirical_value);
            }
        }
        assert_eq!(run.get(Method::Greedy).lower_bound, None);
    }
    assert_eq!(summary.m_used, cfg.effective_m());
    let text = serde_json::to_string(&summary).unwrap();
    let back: ExperimentSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back.runs, summary.runs);
}

#[test]
fn summaries_do_not_depend_on_seed_order() {
    let cfg = TrustConfig { grid_size: 8, ..Default::default() };
    let a = run_experiment(Generator::LinearMeans, 30, &[5, 6, 7], &cfg).unwrap();
    let b = run_experiment(Generator::LinearMeans, 30, &[7, 5, 6], &cfg).unwrap();
    assert_eq!(a.runs, b.runs);
    assert_eq!(a.methods, b.methods);
}

#[test]
fn sweep_endpoints() {
    let cfg = TrustConfig { seed: 3, grid_size: 30, ..Default::default() };
    let rows = sweep_radius(Generator::LinearMeans, 200, &cfg).unwrap();
    assert_eq!(rows.len(), 30);
    assert_eq!(rows[0].eps_over_eps0, 1.0);
    assert!(rows.iter().all(|r| r.eps_over_eps0 > 0.0 && r.eps_over_eps0 <= 1.0 && r.true_value.is_some()));
    let smallest = rows.last().unwrap().true_value.unwrap();
    assert!((smallest - 201.0 / 400.0).abs() < 0.01);
}
