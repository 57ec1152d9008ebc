//! Deterministic and behavioral baselines, and the LCB-augmented policy.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;
use crate::stats::{reference_noise_width, reference_policy, ArmStats, StochasticPolicy};
use crate::trust::TrustOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lcb,
    Greedy,
    Behavior,
    Trust,
    Combined,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lcb => "lcb",
            Method::Greedy => "greedy",
            Method::Behavior => "behavior",
            Method::Trust => "trust",
            Method::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lcb" => Method::Lcb,
            "greedy" => Method::Greedy,
            "behavior" => Method::Behavior,
            "trust" => Method::Trust,
            "combined" => Method::Combined,
            _ => return None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-arm confidence interval `[l_i, r_hat_i + b_i]` with `l_i = r_hat_i - b_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmDiagnostic {
    pub r_hat: f64,
    pub half_width: f64,
    pub lower: f64,
}

/// Output shared by every method.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    pub method: Method,
    pub policy: StochasticPolicy,
    pub empirical_value: f64,
    /// Certified lower bound on the true value; `-inf` when the method certifies nothing.
    pub lower_bound: f64,
    pub chosen_arm: Option<usize>,
    pub diagnostics: Vec<ArmDiagnostic>,
    /// For the combined policy: which of its inputs was selected.
    pub selected_from: Option<Method>,
    pub delta: Option<f64>,
    pub stats_fingerprint: u64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "delta", value: delta, reason: "must lie in (0, 1)" })
    }
}

/// Half-widths `b_i = sqrt(2 sigma_i^2 / N_i log(2 d / delta))`.
pub fn lcb_half_widths(stats: &ArmStats, delta: f64) -> Vec<f64> {
    let log_term = math::ln(2.0 * stats.d() as f64 / delta);
    stats.curvature().iter().map(|a| math::sqrt(2.0 * a * log_term)).collect()
}

/// Picks the arm with the largest lower confidence bound (lowest index on ties).
pub fn run_lcb(stats: &ArmStats, delta: f64) -> Result<PolicyReport> {
    check_delta(delta)?;
    let diagnostics: Vec<ArmDiagnostic> = stats
        .r_hat()
        .iter()
        .zip(lcb_half_widths(stats, delta))
        .map(|(&r, b)| ArmDiagnostic { r_hat: r, half_width: b, lower: r - b })
        .collect();
    let lowers: Vec<f64> = diagnostics.iter().map(|x| x.lower).collect();
    let arm = math::argmax(&lowers).ok_or(Error::EmptyDataset)?;
    Ok(PolicyReport {
        method: Method::Lcb,
        policy: StochasticPolicy::one_hot(stats.d(), arm),
        empirical_value: stats.r_hat()[arm],
        lower_bound: lowers[arm],
        chosen_arm: Some(arm),
        diagnostics,
        selected_from: None,
        delta: Some(delta),
        stats_fingerprint: stats.fingerprint(),
    })
}

/// Picks the arm with the largest empirical mean. Certifies nothing.
pub fn run_greedy(stats: &ArmStats) -> PolicyReport {
    let arm = math::argmax(stats.r_hat()).expect("stats are never empty");
    PolicyReport {
        method: Method::Greedy,
        policy: StochasticPolicy::one_hot(stats.d(), arm),
        empirical_value: stats.r_hat()[arm],
        lower_bound: f64::NEG_INFINITY,
        chosen_arm: Some(arm),
        diagnostics: Vec::new(),
        selected_from: None,
        delta: None,
        stats_fingerprint: stats.fingerprint(),
    }
}

/// The reference policy with its Hoeffding-type lower bound.
pub fn run_behavior(stats: &ArmStats, delta: f64) -> Result<PolicyReport> {
    check_delta(delta)?;
    let policy = reference_policy(stats);
    let value = math::dot(policy.weights(), stats.r_hat());
    Ok(PolicyReport {
        method: Method::Behavior,
        policy,
        empirical_value: value,
        lower_bound: value - reference_noise_width(stats, delta),
        chosen_arm: None,
        diagnostics: Vec::new(),
        selected_from: None,
        delta: Some(delta),
        stats_fingerprint: stats.fingerprint(),
    })
}

impl PolicyReport {
    /// Report view of a trust-region outcome computed on `stats`.
    pub fn from_trust(outcome: &TrustOutcome, stats: &ArmStats) -> Self {
        PolicyReport {
            method: Method::Trust,
            policy: outcome.policy.clone(),
            empirical_value: outcome.empirical_value,
            lower_bound: outcome.certificate,
            chosen_arm: outcome.policy.support_singleton(),
            diagnostics: Vec::new(),
            selected_from: None,
            delta: Some(outcome.config.delta),
            stats_fingerprint: stats.fingerprint(),
        }
    }
}

/// Keeps whichever of the two policies carries the larger certified lower
/// bound; LCB wins ties.
pub fn run_combined(trust: &PolicyReport, lcb: &PolicyReport) -> Result<PolicyReport> {
    if trust.stats_fingerprint != lcb.stats_fingerprint || trust.delta != lcb.delta {
        return Err(Error::MismatchedReports);
    }
    let winner = if lcb.lower_bound >= trust.lower_bound { lcb } else { trust };
    Ok(PolicyReport {
        method: Method::Combined,
        selected_from: Some(winner.method),
        ..winner.clone()
    })
}
