//! Per-arm statistics, stochastic policies and the reference policy.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Slack on simplex membership when validating solver output.
pub const TOL_SIMPLEX: f64 = 1e-9;
/// Slack on the trust-region ball constraint.
pub const TOL_FEAS: f64 = 1e-8;

/// Raw per-arm reward samples in ingestion order.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmDataset {
    arms: Vec<(String, Vec<f64>)>,
}

impl ArmDataset {
    /// Builds a dataset, rejecting empty arms, duplicate ids and non-finite rewards.
    pub fn new(arms: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for (i, (id, samples)) in arms.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateArm { arm: id.clone() });
            }
            if samples.is_empty() {
                return Err(Error::EmptyArm { arm: id.clone() });
            }
            if samples.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "reward", index: i });
            }
        }
        Ok(Self { arms })
    }

    /// Like [`ArmDataset::new`] but silently removes arms without samples.
    pub fn new_dropping_empty(arms: Vec<(String, Vec<f64>)>) -> Result<Self> {
        Self::new(arms.into_iter().filter(|(_, s)| !s.is_empty()).collect())
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[(String, Vec<f64>)] {
        &self.arms
    }

    pub fn arm_ids(&self) -> impl Iterator<Item = &str> {
        self.arms.iter().map(|(id, _)| id.as_str())
    }

    pub fn total_samples(&self) -> usize {
        self.arms.iter().map(|(_, s)| s.len()).sum()
    }
}

/// How per-arm noise scales are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaMode {
    /// The same known scale for every arm.
    Fixed(f64),
    /// Known per-arm scales, in arm order.
    PerArm(Vec<f64>),
    /// Sample standard deviation per arm. Arms with a single sample (or zero
    /// spread) borrow the largest estimate available from the other arms.
    EmpiricalStd,
    /// `sigma = 1/2`, the variance bound for rewards supported on `[0, 1]`.
    BoundedQuarter,
}

/// Sufficient statistics of an offline bandit dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    n: Vec<usize>,
    r_hat: Vec<f64>,
    sigma: Vec<f64>,
    n_total: usize,
}

impl ArmStats {
    /// Builds statistics directly. All three vectors must have the same
    /// non-zero length, counts must be positive and scales positive and finite.
    pub fn new(n: Vec<usize>, r_hat: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let d = n.len();
        if d == 0 {
            return Err(Error::EmptyDataset);
        }
        for len in [r_hat.len(), sigma.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        if n.contains(&0) {
            return Err(Error::InvalidParameter { name: "N_i", value: 0.0, reason: "every arm needs a sample" });
        }
        if let Some(i) = r_hat.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "empirical mean", index: i });
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter { name: "sigma_i", value: sigma[i], reason: "must be positive and finite" });
        }
        let n_total = n.iter().sum();
        Ok(Self { n, r_hat, sigma, n_total })
    }

    pub fn d(&self) -> usize {
        self.n.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.n
    }

    pub fn r_hat(&self) -> &[f64] {
        &self.r_hat
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Variance of each empirical mean, `sigma_i^2 / N_i`. These are the
    /// weights of the trust-region norm.
    pub fn curvature(&self) -> Vec<f64> {
        self.sigma.iter().zip(&self.n).map(|(s, &n)| s * s / n as f64).collect()
    }

    /// Total precision `sum_j N_j / sigma_j^2`.
    pub fn total_precision(&self) -> f64 {
        self.sigma.iter().zip(&self.n).map(|(s, &n)| n as f64 / (s * s)).sum()
    }

    /// Returns a copy with different empirical means (same counts and scales).
    pub fn with_r_hat(&self, r_hat: Vec<f64>) -> Result<Self> {
        Self::new(self.n.clone(), r_hat, self.sigma.clone())
    }

    /// FNV-1a digest of every field, used to check that two reports come from
    /// the same statistics.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: [u8; 8]| {
            for b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat((self.d() as u64).to_le_bytes());
        for i in 0..self.d() {
            eat((self.n[i] as u64).to_le_bytes());
            eat(self.r_hat[i].to_bits().to_le_bytes());
            eat(self.sigma[i].to_bits().to_le_bytes());
        }
        h
    }
}

/// Computes counts, empirical means and noise scales.
pub fn compute_stats(dataset: &ArmDataset, sigma_mode: &SigmaMode) -> Result<ArmStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = dataset.len();
    let n: Vec<usize> = dataset.arms().iter().map(|(_, s)| s.len()).collect();
    let r_hat: Vec<f64> = dataset.arms().iter().map(|(_, s)| mean(s)).collect();
    let sigma = match sigma_mode {
        SigmaMode::Fixed(s) => {
            check_scale("sigma", *s)?;
            alloc::vec![*s; d]
        }
        SigmaMode::PerArm(v) => {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            for &s in v {
                check_scale("sigma_i", s)?;
            }
            v.clone()
        }
        SigmaMode::BoundedQuarter => alloc::vec![0.5; d],
        SigmaMode::EmpiricalStd => {
            let est: Vec<Option<f64>> = dataset
                .arms()
                .iter()
                .map(|(_, s)| sample_std(s).filter(|sd| *sd > 0.0))
                .collect();
            let fallback = est.iter().flatten().copied().fold(f64::NAN, f64::max);
            if !fallback.is_finite() {
                return Err(Error::UnestimableSigma);
            }
            est.into_iter().map(|e| e.unwrap_or(fallback)).collect()
        }
    };
    ArmStats::new(n, r_hat, sigma)
}

fn check_scale(name: &'static str, s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value: s, reason: "must be positive and finite" })
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(math::sqrt(ss / (xs.len() - 1) as f64))
}

/// A probability distribution over arms.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    w: Vec<f64>,
}

impl StochasticPolicy {
    /// Accepts weights within [`TOL_SIMPLEX`] of the simplex.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(i) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "policy weight", index: i });
        }
        if let Some(&x) = w.iter().find(|&&x| x < -TOL_SIMPLEX) {
            return Err(Error::InvalidParameter { name: "policy weight", value: x, reason: "negative" });
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > TOL_SIMPLEX {
            return Err(Error::InvalidParameter { name: "policy mass", value: total, reason: "weights must sum to 1" });
        }
        Ok(Self { w })
    }

    /// The deterministic policy that always plays `arm`.
    pub fn one_hot(d: usize, arm: usize) -> Self {
        let mut w = alloc::vec![0.0; d];
        w[arm] = 1.0;
        Self { w }
    }

    pub fn uniform(d: usize) -> Self {
        Self { w: alloc::vec![1.0 / d as f64; d] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.w
    }

    /// Index of the only arm with positive weight, if the policy is deterministic.
    pub fn support_singleton(&self) -> Option<usize> {
        let mut it = self.w.iter().enumerate().filter(|(_, &x)| x > TOL_SIMPLEX);
        match (it.next(), it.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }
}

/// `delta = w - mu_hat` together with the smallest radius containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementVector {
    pub delta: Vec<f64>,
    pub eps_used: f64,
}

impl ImprovementVector {
    pub fn zero(d: usize) -> Self {
        Self { delta: alloc::vec![0.0; d], eps_used: 0.0 }
    }

    /// Wraps `delta`, computing its weighted norm with curvature `a`.
    pub fn from_delta(delta: Vec<f64>, a: &[f64]) -> Self {
        let eps_used = weighted_norm(&delta, a);
        Self { delta, eps_used }
    }

    /// Adds the improvement to `mu_hat`, clamping round-off below zero.
    pub fn apply(&self, mu_hat: &StochasticPolicy) -> Result<StochasticPolicy> {
        if self.delta.len() != mu_hat.len() {
            return Err(Error::DimensionMismatch { expected: mu_hat.len(), found: self.delta.len() });
        }
        let w = mu_hat
            .weights()
            .iter()
            .zip(&self.delta)
            .map(|(m, dl)| (m + dl).max(0.0))
            .collect();
        StochasticPolicy::new(w)
    }
}

/// `sqrt(sum_i a_i x_i^2)`.
pub fn weighted_norm(x: &[f64], a: &[f64]) -> f64 {
    math::sqrt(x.iter().zip(a).map(|(v, w)| w * v * v).sum())
}

/// Noise-weighted behavioral cloning policy `mu_i ∝ N_i / sigma_i^2`.
pub fn reference_policy(stats: &ArmStats) -> StochasticPolicy {
    let precision: Vec<f64> =
        stats.sigma().iter().zip(stats.counts()).map(|(s, &n)| n as f64 / (s * s)).collect();
    let total: f64 = precision.iter().sum();
    StochasticPolicy { w: precision.into_iter().map(|p| p / total).collect() }
}

/// High-probability deviation of `mu_hat^T r_hat` for the reference policy:
/// `sqrt(2 log(1/delta) / sum_j N_j / sigma_j^2)`.
pub fn reference_noise_width(stats: &ArmStats, delta: f64) -> f64 {
    math::sqrt(2.0 * math::ln(1.0 / delta) / stats.total_precision())
}

/// Empirical value `w^T r_hat`.
pub fn policy_value_empirical(policy: &StochasticPolicy, stats: &ArmStats) -> Result<f64> {
    if policy.len() != stats.d() {
        return Err(Error::DimensionMismatch { expected: stats.d(), found: policy.len() });
    }
    Ok(math::dot(policy.weights(), stats.r_hat()))
}
