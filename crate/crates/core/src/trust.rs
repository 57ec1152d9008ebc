//! Trust-region policy search with a data-dependent certificate.
//!
//! Starting from the reference policy `mu`, the best improvement `delta_eps`
//! is computed on every radius of a geometric grid, each radius is penalized
//! by its complexity quantile `G(eps)`, and the radius with the largest
//! penalized improvement is kept.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian::{estimate_g, min_samples, ComplexityTable};
use crate::math;
use crate::solver::{max_radius, solve_trust_region, TrustRegionSpec};
use crate::stats::{reference_noise_width, reference_policy, ArmStats, ImprovementVector, StochasticPolicy};

/// Geometric radius grid `eps0, eps0/alpha, ..., eps0/alpha^(size-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusGrid {
    eps0: f64,
    alpha: f64,
    values: Vec<f64>,
}

impl RadiusGrid {
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Radii, largest first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of the smallest grid radius that is at least `eps`.
    pub fn ceil_index(&self, eps: f64) -> Result<usize> {
        if !(eps >= 0.0) || eps > self.eps0 {
            return Err(Error::InvalidParameter { name: "eps", value: eps, reason: "must lie in [0, eps0]" });
        }
        // values are decreasing: count how many are >= eps.
        Ok(self.values.partition_point(|&v| v >= eps) - 1)
    }
}

pub fn build_grid(eps0: f64, alpha: f64, size: usize) -> Result<RadiusGrid> {
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::InvalidParameter { name: "eps0", value: eps0, reason: "must be positive" });
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::InvalidParameter { name: "alpha", value: alpha, reason: "decay rate must exceed 1" });
    }
    if size == 0 {
        return Err(Error::InvalidParameter { name: "grid_size", value: 0.0, reason: "need at least one radius" });
    }
    let mut values = Vec::with_capacity(size);
    let mut v = eps0;
    for _ in 0..size {
        values.push(v);
        v /= alpha;
    }
    if values.last().is_some_and(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter { name: "grid_size", value: size as f64, reason: "radii underflow to zero" });
    }
    Ok(RadiusGrid { eps0, alpha, values })
}

/// `inf { e in grid : e >= eps }`.
pub fn ceil_eps(eps: f64, grid: &RadiusGrid) -> Result<f64> {
    grid.ceil_index(eps).map(|i| grid.values[i])
}

/// Grid position maximizing `objective - g_hat`; ties go to the smaller radius.
///
/// Both slices are aligned with the grid (largest radius first).
pub fn critical_radius(objectives: &[f64], g_hat: &[f64]) -> Result<usize> {
    if objectives.len() != g_hat.len() {
        return Err(Error::DimensionMismatch { expected: objectives.len(), found: g_hat.len() });
    }
    if objectives.is_empty() {
        return Err(Error::InvalidParameter { name: "grid_size", value: 0.0, reason: "empty grid" });
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, (o, g)) in objectives.iter().zip(g_hat).enumerate() {
        let v = o - g;
        if v >= best_val {
            best = i;
            best_val = v;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustConfig {
    /// Failure probability.
    pub delta: f64,
    /// Grid decay rate.
    pub alpha: f64,
    /// Number of grid radii `|E|`.
    pub grid_size: usize,
    /// Requested Monte-Carlo sample count; raised to the minimum that makes
    /// the order-statistic threshold positive.
    pub m: usize,
    pub seed: u64,
}

impl Default for TrustConfig {
    fn default() -> Self {
        Self { delta: 0.1, alpha: 1.3, grid_size: 40, m: 200, seed: 0 }
    }
}

impl TrustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter { name: "delta", value: self.delta, reason: "must lie in (0, 1)" });
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::InvalidParameter { name: "alpha", value: self.alpha, reason: "must exceed 1" });
        }
        if self.grid_size == 0 {
            return Err(Error::InvalidParameter { name: "grid_size", value: 0.0, reason: "must be at least 1" });
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter { name: "m", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    /// Per-radius level `delta / (2 |E|)`.
    pub fn delta_prime(&self) -> f64 {
        self.delta / (2.0 * self.grid_size as f64)
    }

    /// Sample count actually used: `max(m, smallest M with M0 >= 1)`.
    pub fn effective_m(&self) -> usize {
        self.m.max(min_samples(self.delta_prime()))
    }
}

/// Per-radius record kept for sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusTrace {
    pub eps: f64,
    /// `delta_eps^T r_hat`.
    pub objective: f64,
    pub g_hat: f64,
    /// `objective - g_hat`.
    pub penalized: f64,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustOutcome {
    pub mu_hat: StochasticPolicy,
    pub grid: RadiusGrid,
    pub star_index: usize,
    pub eps_star: f64,
    pub delta_star: ImprovementVector,
    pub policy: StochasticPolicy,
    pub empirical_value: f64,
    pub certificate: f64,
    pub per_radius: Vec<RadiusTrace>,
    pub table: ComplexityTable,
    pub config: TrustConfig,
}

impl TrustOutcome {
    /// Certificate of the policy found at grid position `index`, as if that
    /// radius had been selected.
    pub fn certificate_at(&self, index: usize, stats: &ArmStats) -> f64 {
        let value = self.mu_hat.weights().iter().zip(stats.r_hat()).map(|(m, r)| m * r).sum::<f64>()
            + self.per_radius[index].objective;
        value - self.table.g_hat[index] - reference_noise_width(stats, self.config.delta)
    }
}

/// Runs the full trust-region search on `stats`.
pub fn run_trust(stats: &ArmStats, config: &TrustConfig) -> Result<TrustOutcome> {
    config.validate()?;
    let mu_hat = reference_policy(stats);
    let a = stats.curvature();
    // With one arm every region is {0}; any positive radius gives the same answer.
    let eps0 = match max_radius(stats, &mu_hat) {
        e if e > 0.0 => e,
        _ => 1.0,
    };
    let grid = build_grid(eps0, config.alpha, config.grid_size)?;

    let spec = TrustRegionSpec::new(mu_hat.clone(), a, 0.0)?;
    let solves = grid
        .values()
        .iter()
        .map(|&eps| solve_trust_region(&spec.with_eps(eps)?, stats.r_hat()))
        .collect::<Result<Vec<_>>>()?;

    let table = estimate_g(stats, &mu_hat, &grid, config.effective_m(), config.delta, config.seed)?;
    let objectives: Vec<f64> = solves.iter().map(|s| s.objective).collect();
    let star_index = critical_radius(&objectives, &table.g_hat)?;

    let per_radius: Vec<RadiusTrace> = grid
        .values()
        .iter()
        .zip(solves)
        .zip(&table.g_hat)
        .map(|((&eps, s), &g)| RadiusTrace {
            eps,
            objective: s.objective,
            g_hat: g,
            penalized: s.objective - g,
            delta: s.delta.delta,
        })
        .collect();

    let delta_star = ImprovementVector::from_delta(per_radius[star_index].delta.clone(), spec.curvature());
    let policy = delta_star.apply(&mu_hat)?;
    let empirical_value = math::dot(policy.weights(), stats.r_hat());
    let mut outcome = TrustOutcome {
        mu_hat,
        eps_star: grid.values()[star_index],
        grid,
        star_index,
        delta_star,
        policy,
        empirical_value,
        certificate: f64::NAN,
        per_radius,
        table,
        config: config.clone(),
    };
    outcome.certificate = certified_lower_bound(&outcome, &outcome.table, stats, config.delta)?;
    Ok(outcome)
}

/// `pi^T r_hat - G(ceil(eps_star)) - sqrt(2 log(1/delta) / sum_j N_j / sigma_j^2)`.
pub fn certified_lower_bound(outcome: &TrustOutcome, table: &ComplexityTable, stats: &ArmStats, delta: f64) -> Result<f64> {
    if outcome.policy.len() != stats.d() {
        return Err(Error::DimensionMismatch { expected: stats.d(), found: outcome.policy.len() });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter { name: "delta", value: delta, reason: "must lie in (0, 1]" });
    }
    let value = math::dot(outcome.policy.weights(), stats.r_hat());
    Ok(value - table.at_ceil(outcome.eps_star)? - reference_noise_width(stats, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_examples() {
        let g = build_grid(1.0, 2.0, 3).unwrap();
        assert_eq!(g.values(), &[1.0, 0.5, 0.25]);
        assert_eq!(build_grid(0.7, 1.3, 1).unwrap().values(), &[0.7]);
        let g = build_grid(0.5, 1.3, 40).unwrap();
        let smallest = *g.values().last().unwrap();
        assert!((smallest - 0.5 / 1.3f64.powi(39)).abs() < 1e-18);
        assert!((smallest - 1.8e-5).abs() < 1e-6);
        assert!(g.values().windows(2).all(|w| w[0] > w[1]));
        assert!(build_grid(0.0, 2.0, 3).is_err());
        assert!(build_grid(1.0, 1.0, 3).is_err());
        assert!(build_grid(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn ceil_examples() {
        let g = build_grid(1.0, 2.0, 3).unwrap();
        assert_eq!(ceil_eps(0.3, &g).unwrap(), 0.5);
        assert_eq!(ceil_eps(0.5, &g).unwrap(), 0.5);
        assert_eq!(ceil_eps(0.0, &g).unwrap(), 0.25);
        assert_eq!(ceil_eps(1.0, &g).unwrap(), 1.0);
        assert!(ceil_eps(1.01, &g).is_err());
    }

    #[test]
    fn critical_radius_examples() {
        assert_eq!(critical_radius(&[0.9, 0.5, 0.1], &[0.0; 3]).unwrap(), 0);
        let g = [0.0; 3];
        assert_eq!(critical_radius(&[-1.0, 0.3, 0.1], &g).unwrap(), 1);
        // Equal penalized values: smaller radius wins.
        assert_eq!(critical_radius(&[0.4, 0.4, 0.1], &g).unwrap(), 1);
        assert!(critical_radius(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn two_arm_shifts_toward_better_arm() {
        let s = ArmStats::new(vec![1, 1], vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let cfg = TrustConfig { grid_size: 10, m: 100, ..TrustConfig::default() };
        let out = run_trust(&s, &cfg).unwrap();
        let w = out.policy.weights();
        assert!(w[0] > 0.5 - 1e-12 && w[0] <= 1.0);
        assert!(out.certificate <= out.empirical_value);
    }

    #[test]
    fn equal_means_keep_reference() {
        let s = ArmStats::new(vec![1, 2, 3], vec![0.4; 3], vec![1.0; 3]).unwrap();
        let cfg = TrustConfig { grid_size: 8, ..TrustConfig::default() };
        let out = run_trust(&s, &cfg).unwrap();
        assert!(out.delta_star.delta.iter().all(|&x| x == 0.0));
        assert_eq!(out.policy, out.mu_hat);
    }

    #[test]
    fn single_arm_is_trivial() {
        let s = ArmStats::new(vec![5], vec![0.7], vec![1.0]).unwrap();
        let out = run_trust(&s, &TrustConfig { grid_size: 5, ..TrustConfig::default() }).unwrap();
        assert_eq!(out.policy.weights(), &[1.0]);
        assert!(out.table.g_hat.iter().all(|&g| g == 0.0));
        let expected = 0.7 - (2.0 * 10f64.ln() / 5.0).sqrt();
        assert!((out.certificate - expected).abs() < 1e-12);
    }

    #[test]
    fn effective_m_is_raised() {
        let cfg = TrustConfig::default();
        assert_eq!(cfg.effective_m(), 5345);
        let cfg = TrustConfig { m: 10_000, ..TrustConfig::default() };
        assert_eq!(cfg.effective_m(), 10_000);
    }
}
