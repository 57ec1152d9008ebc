//! Synthetic instances and the experiment harness.
//!
//! Reward draws come from a ChaCha stream reserved for data so they never
//! overlap the Monte-Carlo noise streams of the same seed.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use bandit_trust_core::{
    compute_stats, run_behavior, run_combined, run_greedy, run_lcb, run_trust, solve_trust_region, ArmDataset, ArmStats,
    Method, PolicyReport, SigmaMode, StochasticPolicy, TrustConfig, TrustOutcome, TrustRegionSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

const DATA_STREAM: u64 = u64::MAX;

fn data_rng(seed: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Half the arms `U(0.5, 1.5)` (mean 1), half `N(0, 1/4)`.
    DataStarved,
    /// Arm `i` (1-based) draws from `N(i/d, 1/4)`.
    LinearMeans,
    /// Half the arms `N(1, sigma^2)`, half `N(0, sigma^2)`.
    StrongSignal,
    Custom,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::DataStarved => "data-starved",
            Generator::LinearMeans => "linear-means",
            Generator::StrongSignal => "strong-signal",
            Generator::Custom => "custom",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Generator {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data-starved" => Ok(Generator::DataStarved),
            "linear-means" => Ok(Generator::LinearMeans),
            "strong-signal" => Ok(Generator::StrongSignal),
            _ => Err(AppError::Config(format!("unknown instance `{s}`"))),
        }
    }
}

/// Known means and noise scales behind a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub means: Vec<f64>,
    pub noise_sigma: Vec<f64>,
    pub generator: Generator,
    pub seed: u64,
}

impl SyntheticInstance {
    pub fn d(&self) -> usize {
        self.means.len()
    }

    /// Statistics with the true noise scales.
    pub fn stats(&self, dataset: &ArmDataset) -> Result<ArmStats> {
        Ok(compute_stats(dataset, &SigmaMode::PerArm(self.noise_sigma.clone()))?)
    }
}

fn one_sample_dataset(samples: Vec<f64>) -> Result<ArmDataset> {
    Ok(ArmDataset::new(samples.into_iter().enumerate().map(|(i, x)| (i.to_string(), vec![x])).collect())?)
}

pub fn gen_data_starved(d: usize, seed: u64) -> Result<(SyntheticInstance, ArmDataset)> {
    if d < 2 || d % 2 != 0 {
        return Err(AppError::Config(format!("data-starved instance needs an even d >= 2, got {d}")));
    }
    let mut rng = data_rng(seed);
    let bad = Normal::new(0.0, 0.5).expect("valid normal");
    let samples = (0..d)
        .map(|i| if i < d / 2 { rng.random_range(0.5..1.5) } else { bad.sample(&mut rng) })
        .collect();
    let means = (0..d).map(|i| if i < d / 2 { 1.0 } else { 0.0 }).collect();
    let instance = SyntheticInstance { means, noise_sigma: vec![0.5; d], generator: Generator::DataStarved, seed };
    Ok((instance, one_sample_dataset(samples)?))
}

pub fn gen_linear_means(d: usize, seed: u64) -> Result<(SyntheticInstance, ArmDataset)> {
    if d == 0 {
        return Err(AppError::Config("linear-means instance needs d >= 1".into()));
    }
    let mut rng = data_rng(seed);
    let means: Vec<f64> = (1..=d).map(|i| i as f64 / d as f64).collect();
    let samples = means.iter().map(|&m| Normal::new(m, 0.5).expect("valid normal").sample(&mut rng)).collect();
    let instance = SyntheticInstance { means, noise_sigma: vec![0.5; d], generator: Generator::LinearMeans, seed };
    Ok((instance, one_sample_dataset(samples)?))
}

pub fn gen_strong_signal(d_half: usize, sigma: f64, seed: u64) -> Result<(SyntheticInstance, ArmDataset)> {
    if d_half == 0 || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AppError::Config(format!("strong-signal instance needs d_half >= 1 and sigma > 0, got {d_half}, {sigma}")));
    }
    let mut rng = data_rng(seed);
    let noise = Normal::new(0.0, sigma).expect("valid normal");
    let means: Vec<f64> = (0..2 * d_half).map(|i| if i < d_half { 1.0 } else { 0.0 }).collect();
    let samples = means.iter().map(|m| m + noise.sample(&mut rng)).collect();
    let instance =
        SyntheticInstance { means, noise_sigma: vec![sigma; 2 * d_half], generator: Generator::StrongSignal, seed };
    Ok((instance, one_sample_dataset(samples)?))
}

/// Generates the instance named by `generator`; strong-signal instances use
/// `sigma = 0.1` and `d / 2` arms per half.
pub fn generate(generator: Generator, d: usize, seed: u64) -> Result<(SyntheticInstance, ArmDataset)> {
    match generator {
        Generator::DataStarved => gen_data_starved(d, seed),
        Generator::LinearMeans => gen_linear_means(d, seed),
        Generator::StrongSignal => gen_strong_signal(d / 2, 0.1, seed),
        Generator::Custom => Err(AppError::Config("custom instances cannot be generated".into())),
    }
}

/// `w^T r`.
pub fn true_value(policy: &StochasticPolicy, instance: &SyntheticInstance) -> Result<f64> {
    if policy.len() != instance.d() {
        return Err(bandit_trust_core::Error::DimensionMismatch { expected: instance.d(), found: policy.len() }.into());
    }
    Ok(policy.weights().iter().zip(&instance.means).map(|(w, r)| w * r).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: String,
    pub true_value: f64,
    pub empirical_value: f64,
    /// `None` when the method certifies nothing.
    pub lower_bound: Option<f64>,
    pub chosen_arm: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_from: Option<String>,
}

impl MethodRun {
    fn new(report: &PolicyReport, instance: &SyntheticInstance) -> Result<Self> {
        Ok(Self {
            method: report.method.as_str().to_owned(),
            true_value: true_value(&report.policy, instance)?,
            empirical_value: report.empirical_value,
            lower_bound: report.lower_bound.is_finite().then_some(report.lower_bound),
            chosen_arm: report.chosen_arm,
            selected_from: report.selected_from.map(|m| m.as_str().to_owned()),
        })
    }
}

/// Every method on one generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub eps_star_over_eps0: f64,
    pub methods: Vec<MethodRun>,
}

impl SeedRun {
    pub fn get(&self, method: Method) -> &MethodRun {
        self.methods.iter().find(|m| m.method == method.as_str()).expect("every method is recorded")
    }

    pub fn improvement(&self) -> f64 {
        self.get(Method::Trust).true_value - self.get(Method::Behavior).true_value
    }
}

/// Runs behavior, greedy, LCB, TRUST and the combined rule on one dataset.
/// The TRUST outcome is returned alongside for sweeps.
pub fn run_methods(
    instance: &SyntheticInstance,
    dataset: &ArmDataset,
    config: &TrustConfig,
) -> Result<(SeedRun, TrustOutcome)> {
    let stats = instance.stats(dataset)?;
    let outcome = run_trust(&stats, config)?;
    let trust = PolicyReport::from_trust(&outcome, &stats);
    let lcb = run_lcb(&stats, config.delta)?;
    let reports = [
        run_behavior(&stats, config.delta)?,
        run_greedy(&stats),
        run_combined(&trust, &lcb)?,
        lcb,
        trust,
    ];
    let mut methods = reports.iter().map(|r| MethodRun::new(r, instance)).collect::<Result<Vec<_>>>()?;
    methods.sort_by_key(|m| Method::parse(&m.method).map(method_rank));
    let run = SeedRun { seed: instance.seed, eps_star_over_eps0: outcome.eps_star / outcome.grid.eps0(), methods };
    Ok((run, outcome))
}

fn method_rank(m: Method) -> u8 {
    match m {
        Method::Behavior => 0,
        Method::Greedy => 1,
        Method::Lcb => 2,
        Method::Trust => 3,
        Method::Combined => 4,
    }
}

/// Across-seed statistics for one method. Variance uses the `n - 1` divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_true_value: f64,
    pub mean_lower_bound: Option<f64>,
    pub variance_true_value: f64,
    pub std_true_value: f64,
    pub min_true_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub instance: Generator,
    pub d: usize,
    pub seeds: Vec<u64>,
    pub delta: f64,
    pub alpha: f64,
    pub grid_size: usize,
    pub m_requested: usize,
    pub m_used: usize,
    pub methods: Vec<MethodSummary>,
    pub mean_improvement_over_behavior: f64,
    pub runs: Vec<SeedRun>,
    pub wall_clock_secs: f64,
}

impl ExperimentSummary {
    pub fn method(&self, method: Method) -> &MethodSummary {
        self.methods.iter().find(|m| m.method == method.as_str()).expect("every method is summarized")
    }
}

pub const DEFAULT_SEEDS: [u64; 8] = [2023, 2024, 2025, 2026, 2027, 2028, 2029, 2030];

fn summarize(method: &str, runs: &[SeedRun]) -> MethodSummary {
    let picked: Vec<&MethodRun> = runs.iter().flat_map(|r| r.methods.iter().filter(|m| m.method == method)).collect();
    let n = picked.len() as f64;
    let values: Vec<f64> = picked.iter().map(|m| m.true_value).collect();
    let mean = values.iter().sum::<f64>() / n;
    let variance = if picked.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let bounds: Option<Vec<f64>> = picked.iter().map(|m| m.lower_bound).collect();
    MethodSummary {
        method: method.to_owned(),
        mean_true_value: mean,
        mean_lower_bound: bounds.map(|b| b.iter().sum::<f64>() / n),
        variance_true_value: variance,
        std_true_value: variance.sqrt(),
        min_true_value: values.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Runs every method on `seeds` fresh datasets. `config.seed` is replaced by
/// each dataset seed. Seeds run concurrently; results are ordered by seed.
pub fn run_experiment(generator: Generator, d: usize, seeds: &[u64], config: &TrustConfig) -> Result<ExperimentSummary> {
    if seeds.is_empty() {
        return Err(AppError::Config("at least one seed is required".into()));
    }
    config.validate()?;
    let start = Instant::now();
    let mut runs = seeds
        .par_iter()
        .map(|&seed| {
            let (instance, dataset) = generate(generator, d, seed)?;
            Ok(run_methods(&instance, &dataset, &TrustConfig { seed, ..config.clone() })?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.seed);
    let methods = runs[0].methods.iter().map(|m| summarize(&m.method, &runs)).collect();
    let mean_improvement_over_behavior = runs.iter().map(SeedRun::improvement).sum::<f64>() / runs.len() as f64;
    Ok(ExperimentSummary {
        instance: generator,
        d,
        seeds: runs.iter().map(|r| r.seed).collect(),
        delta: config.delta,
        alpha: config.alpha,
        grid_size: config.grid_size,
        m_requested: config.m,
        m_used: config.effective_m(),
        methods,
        mean_improvement_over_behavior,
        runs,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// One grid radius of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub eps_over_eps0: f64,
    /// `delta_eps^T r_hat`.
    pub objective: f64,
    pub g_hat: f64,
    pub penalized_value: f64,
    /// `(mu_hat + delta_eps)^T r` when the means are known.
    pub true_value: Option<f64>,
    /// Certificate of the radius-`eps` policy.
    pub certificate: f64,
}

/// Per-radius trace of a finished run, largest radius first.
pub fn sweep_rows(outcome: &TrustOutcome, stats: &ArmStats, means: Option<&[f64]>) -> Vec<SweepRow> {
    let eps0 = outcome.grid.eps0();
    outcome
        .per_radius
        .iter()
        .enumerate()
        .map(|(k, t)| SweepRow {
            eps: t.eps,
            eps_over_eps0: t.eps / eps0,
            objective: t.objective,
            g_hat: t.g_hat,
            penalized_value: t.penalized,
            true_value: means.map(|r| {
                outcome.mu_hat.weights().iter().zip(&t.delta).zip(r).map(|((m, dl), r)| (m + dl) * r).sum()
            }),
            certificate: outcome.certificate_at(k, stats),
        })
        .collect()
}

/// Generates one dataset and returns the radius sweep of its TRUST run.
pub fn sweep_radius(generator: Generator, d: usize, config: &TrustConfig) -> Result<Vec<SweepRow>> {
    let (instance, dataset) = generate(generator, d, config.seed)?;
    let stats = instance.stats(&dataset)?;
    let outcome = run_trust(&stats, config)?;
    Ok(sweep_rows(&outcome, &stats, Some(&instance.means)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongSignalReport {
    pub d_half: usize,
    pub sigma: f64,
    pub delta: f64,
    pub eps: f64,
    /// `1/2 - 2 sigma`.
    pub bound: f64,
    /// The bound is non-positive, so the check holds trivially.
    pub vacuous: bool,
    pub improvements: Vec<f64>,
    pub passes: usize,
    pub required: usize,
    pub pass: bool,
}

/// Solves at `eps = 1/sqrt(d_half)` with unit curvature around the uniform
/// policy on `2 d_half` arms and compares the true improvement with
/// `1/2 - 2 sigma`.
pub fn strong_signal_check(d_half: usize, sigma: f64, delta: f64, seeds: &[u64]) -> Result<StrongSignalReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AppError::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let floor = 8.0 * (2.0 / delta).ln();
    if (d_half as f64) < floor {
        return Err(AppError::Config(format!("d_half = {d_half} is below 8 log(2/delta) = {floor:.3}")));
    }
    let d = 2 * d_half;
    let eps = 1.0 / (d_half as f64).sqrt();
    let spec = TrustRegionSpec::new(StochasticPolicy::uniform(d), vec![1.0; d], eps)?;
    let improvements = seeds
        .par_iter()
        .map(|&seed| {
            let (instance, dataset) = gen_strong_signal(d_half, sigma, seed)?;
            let r_hat: Vec<f64> = dataset.arms().iter().map(|(_, s)| s[0]).collect();
            let sol = solve_trust_region(&spec, &r_hat)?;
            Ok(sol.delta.delta.iter().zip(&instance.means).map(|(dl, r)| dl * r).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let bound = 0.5 - 2.0 * sigma;
    let passes = improvements.iter().filter(|&&v| v >= bound).count();
    let required = ((1.0 - delta) * seeds.len() as f64).ceil() as usize;
    let vacuous = bound <= 0.0;
    Ok(StrongSignalReport {
        d_half,
        sigma,
        delta,
        eps,
        bound,
        vacuous,
        improvements,
        passes,
        required,
        pass: vacuous || passes >= required,
    })
}
