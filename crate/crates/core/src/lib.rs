//! Certified stochastic policies for data-starved offline multi-armed bandits.
//!
//! The crate is `no_std` (with `alloc`). It covers the whole numerical
//! pipeline: per-arm statistics and the noise-weighted reference policy
//! ([`stats`]), an exact solver for linear objectives over the simplex
//! intersected with a weighted ball ([`solver`]), Monte-Carlo quantiles of the
//! localized Gaussian supremum ([`gaussian`]), the trust-region policy search
//! with its data-dependent certificate ([`trust`]) and the classical baselines
//! ([`baselines`]).
//!
//! File formats, the command line and the experiment harness live in the
//! `bandit-trust` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod gaussian;
mod math;
pub mod solver;
pub mod stats;
pub mod trust;

pub use baselines::{lcb_half_widths, run_behavior, run_combined, run_greedy, run_lcb, ArmDiagnostic, Method, PolicyReport};
pub use error::{Error, Result};
pub use gaussian::{
    analytic_g_bound, compute_d_bound, compute_m0, estimate_g, min_samples, sample_noise, sample_suprema,
    ComplexityTable, NoiseStream,
};
pub use solver::{feasibility_residuals, max_radius, solve_trust_region, BallState, SolutionPath, SolveResult, TrustRegionSpec};
pub use stats::{
    compute_stats, policy_value_empirical, reference_noise_width, reference_policy, ArmDataset, ArmStats, ImprovementVector, SigmaMode,
    StochasticPolicy, TOL_FEAS, TOL_SIMPLEX,
};
pub use trust::{
    build_grid, ceil_eps, certified_lower_bound, critical_radius, run_trust, RadiusGrid, RadiusTrace, TrustConfig,
    TrustOutcome,
};
