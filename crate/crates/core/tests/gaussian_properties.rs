use bandit_trust_core::*;
use num_bigint::BigUint;
use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Exact `M0` for `delta' = num / den` by integer arithmetic:
/// `sum_j C(M, j) (den - num)^j num^(M - j) <= num den^(M - 1)`.
fn m0_exact(m: usize, num: u64, den: u64) -> usize {
    let (p, q) = (BigUint::from(num), BigUint::from(den - num));
    let limit = &p * BigUint::from(den).pow(m as u32 - 1);
    let mut binom = BigUint::from(1u32);
    let mut tail = BigUint::from(0u32);
    let mut best = 0;
    for k in 0..m {
        // Term with j = m - k successes.
        if k > 0 {
            binom = binom * BigUint::from((m - k + 1) as u64) / BigUint::from(k as u64);
        }
        tail += &binom * q.pow((m - k) as u32) * p.pow(k as u32);
        if tail > limit {
            break;
        }
        best = k + 1;
    }
    best
}

#[test]
fn m0_matches_exact_tail() {
    for &(num, den) in &[(1, 2), (1, 10), (1, 20), (1, 100), (1, 1000)] {
        let dp = num as f64 / den as f64;
        for m in 1..=500 {
            assert_eq!(compute_m0(m, dp), m0_exact(m, num, den), "M = {m}, delta' = {dp}");
        }
    }
}

#[test]
fn closed_form_two_arm_quantile() {
    // mu = (1/2, 1/2), a = (1, 1): X(eps) = eps |eta_1 - eta_2| / sqrt 2 = eps |Z|.
    let stats = ArmStats::new(vec![1, 1], vec![0.0; 2], vec![1.0; 2]).unwrap();
    let mu = reference_policy(&stats);
    let eps = 0.1;
    let grid = build_grid(eps, 2.0, 1).unwrap();
    let m = 4000;
    let delta = 0.2;
    let dp = delta / 2.0;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let abs_cdf = |x: f64| 2.0 * std_normal.cdf(x) - 1.0;
    let abs_quantile = |u: f64| std_normal.inverse_cdf(0.5 + u / 2.0);
    for seed in 0..5 {
        let table = estimate_g(&stats, &mu, &grid, m, delta, seed).unwrap();
        let k = (m - table.m0 + 1) as f64;
        // The k-th smallest of m uniforms is Beta(k, m - k + 1).
        let beta = Beta::new(k, m as f64 - k + 1.0).unwrap();
        let (lo, hi) = (beta.inverse_cdf(0.00135), beta.inverse_cdf(0.99865));
        let level = abs_cdf(table.g_hat[0] / eps);
        assert!(level > lo && level < hi, "seed {seed}: level {level} outside [{lo}, {hi}]");
        // Three standard errors around the analytic value of the same order statistic.
        let centre = abs_quantile(k / (m as f64 + 1.0));
        let var = k * (m as f64 - k + 1.0) / ((m as f64 + 1.0).powi(2) * (m as f64 + 2.0));
        let density = 2.0 * (-centre * centre / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let se = var.sqrt() / density;
        assert!((table.g_hat[0] / eps - centre).abs() <= 3.0 * se);
        assert!(abs_quantile(1.0 - dp) <= abs_quantile(k / (m as f64 + 1.0)));
    }
}

#[test]
fn full_radius_is_the_best_vertex_maximum() {
    // For eps >= eps0 every sample's supremum is max_i eta_i - mean(eta); with
    // M0 = 1 the estimate is the largest of M such values, whose law is
    // close to Phi(x / 0.5)^(d M).
    let d = 10_000;
    let stats = ArmStats::new(vec![1; d], vec![0.0; d], vec![0.5; d]).unwrap();
    let mu = reference_policy(&stats);
    let eps0 = max_radius(&stats, &mu);
    let grid = build_grid(eps0, 1.3, 40).unwrap();
    let cfg = TrustConfig::default();
    let table = estimate_g(&stats, &mu, &grid, cfg.effective_m(), cfg.delta, 3).unwrap();
    assert_eq!(table.m0, 1);
    let g = table.g_hat[0];
    let upper_tail = Normal::new(0.0, 0.5).unwrap().sf(g);
    let log_cdf = (d * table.m) as f64 * (-upper_tail).ln_1p();
    let p = log_cdf.exp();
    assert!(p > 0.00135 && p < 0.99865, "G(eps0) = {g}, P = {p}");
    assert!((g - 2.78).abs() < 0.3, "G(eps0) = {g}");
}

#[test]
fn suprema_are_monotone_in_radius_sample_by_sample() {
    for (d, seed) in [(7, 1u64), (60, 2), (300, 3)] {
        let n: Vec<usize> = (0..d).map(|i| 1 + i % 4).collect();
        let sigma: Vec<f64> = (0..d).map(|i| 0.3 + 0.1 * (i % 5) as f64).collect();
        let stats = ArmStats::new(n, vec![0.0; d], sigma).unwrap();
        let mu = reference_policy(&stats);
        let grid = build_grid(max_radius(&stats, &mu), 1.3, 25).unwrap();
        let rows = sample_suprema(&stats, &mu, grid.values(), 200, seed).unwrap();
        for row in &rows {
            // Grid is decreasing, so each row must be non-increasing.
            assert!(row.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            assert!(row.iter().all(|&x| x >= -1e-15));
        }
    }
}

#[test]
fn path_and_solver_agree_on_monte_carlo_suprema() {
    let stats = ArmStats::new(vec![1, 3, 2, 5], vec![0.0; 4], vec![0.5, 1.0, 0.7, 1.5]).unwrap();
    let mu = reference_policy(&stats);
    let a = stats.curvature();
    let grid = build_grid(max_radius(&stats, &mu), 1.5, 12).unwrap();
    let rows = sample_suprema(&stats, &mu, grid.values(), 50, 9).unwrap();
    let spec = TrustRegionSpec::new(mu.clone(), a, 0.0).unwrap();
    for (s, row) in rows.iter().enumerate() {
        let eta = sample_noise(&stats, &mut NoiseStream::new(9, s as u64));
        for (&eps, &x) in grid.values().iter().zip(row) {
            let sol = solve_trust_region(&spec.with_eps(eps).unwrap(), &eta).unwrap();
            assert!((sol.objective - x).abs() < 1e-9);
        }
    }
}

#[test]
fn estimates_are_reproducible() {
    let stats = ArmStats::new(vec![2, 1, 1], vec![0.0; 3], vec![1.0, 0.5, 2.0]).unwrap();
    let mu = reference_policy(&stats);
    let grid = build_grid(max_radius(&stats, &mu), 1.3, 10).unwrap();
    let a = estimate_g(&stats, &mu, &grid, 3000, 0.1, 42).unwrap();
    let b = estimate_g(&stats, &mu, &grid, 3000, 0.1, 42).unwrap();
    assert_eq!(a, b);
    let c = estimate_g(&stats, &mu, &grid, 3000, 0.1, 43).unwrap();
    assert_ne!(a.g_raw, c.g_raw);
}

#[cfg(feature = "parallel")]
#[test]
fn estimates_do_not_depend_on_worker_count() {
    let stats = ArmStats::new(vec![1; 40], vec![0.0; 40], vec![0.5; 40]).unwrap();
    let mu = reference_policy(&stats);
    let grid = build_grid(max_radius(&stats, &mu), 1.3, 10).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_g(&stats, &mu, &grid, 2500, 0.1, 5).unwrap())
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn table_is_nonnegative_and_monotone(
        rows in prop::collection::vec((1usize..5, 0.2f64..2.0), 2..10),
        seed in 0u64..1000,
    ) {
        let stats = ArmStats::new(
            rows.iter().map(|r| r.0).collect(),
            vec![0.0; rows.len()],
            rows.iter().map(|r| r.1).collect(),
        ).unwrap();
        let mu = reference_policy(&stats);
        let grid = build_grid(max_radius(&stats, &mu), 1.3, 8).unwrap();
        let t = estimate_g(&stats, &mu, &grid, 800, 0.2, seed).unwrap();
        prop_assert!(t.m0 >= 1);
        prop_assert!(t.g_hat.iter().all(|&g| g >= 0.0));
        prop_assert!(t.g_hat.windows(2).all(|w| w[0] >= w[1]));
        // Common random numbers already make the raw column monotone.
        prop_assert!(t.g_raw.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn m0_is_monotone_in_m_and_level(m in 1usize..400, dp in 0.001f64..0.6) {
        let k = compute_m0(m, dp);
        prop_assert!(k <= m);
        prop_assert!(compute_m0(m + 1, dp) >= k);
        prop_assert!(compute_m0(m, (dp * 1.1).min(0.99)) >= k);
    }
}
