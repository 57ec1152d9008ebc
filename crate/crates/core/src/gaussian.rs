//! Monte-Carlo quantiles of the localized Gaussian supremum.
//!
//! For noise `eta_i ~ N(0, sigma_i^2 / N_i)` the quantity of interest is
//! `X(eps) = sup_{delta in C(eps)} delta^T eta`. [`estimate_g`] draws `M` noise
//! vectors, evaluates `X(eps)` on every grid radius with the same draws, and
//! keeps the `M0`-th largest value per radius, where `M0` is the order
//! statistic index that upper-bounds the `1 - delta'` quantile with
//! probability `1 - delta'` ([`compute_m0`]).

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::solver::{solve_trust_region, SolutionPath, TrustRegionSpec};
use crate::stats::{ArmStats, StochasticPolicy};
use crate::trust::RadiusGrid;

/// Counter-based noise stream: sample `index` under `seed` always produces the
/// same draws, whatever order or thread evaluates it.
#[derive(Debug, Clone)]
pub struct NoiseStream(ChaCha12Rng);

impl NoiseStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self(rng)
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// One noise vector with `eta_i ~ N(0, sigma_i^2 / N_i)`.
pub fn sample_noise<R: RngCore + ?Sized>(stats: &ArmStats, rng: &mut R) -> Vec<f64> {
    stats
        .curvature()
        .iter()
        .map(|&var| {
            let z: f64 = StandardNormal.sample(rng);
            math::sqrt(var) * z
        })
        .collect()
}

/// Tolerance on the log-tail comparison so exact ties (e.g. `p = 1/2`) are
/// not lost to rounding in the recurrence.
const M0_LOG_SLACK: f64 = 1e-10;

/// Largest `M0` in `0..=m` with
/// `sum_{j = m - M0 + 1}^{m} C(m, j) (1 - p)^j p^(m - j) <= p`, `p = delta_prime`.
///
/// Terms are built in log space from `j = m` downwards with the ratio
/// recurrence and accumulated with a running log-sum-exp.
pub fn compute_m0(m: usize, delta_prime: f64) -> usize {
    if m == 0 || !(delta_prime > 0.0 && delta_prime < 1.0) {
        return 0;
    }
    let ln_p = math::ln(delta_prime);
    let ln_q = math::ln_1p(-delta_prime);
    let ln_odds = ln_p - ln_q;
    let mf = m as f64;

    let mut log_term = mf * ln_q;
    let mut log_tail = f64::NEG_INFINITY;
    for m0 in 1..=m {
        let j = m - m0 + 1;
        if m0 > 1 {
            // term_{j} from term_{j+1}: C(m, j) / C(m, j+1) = (j + 1) / (m - j).
            log_term += math::ln((j + 1) as f64 / (m - j) as f64) + ln_odds;
        }
        log_tail = log_add_exp(log_tail, log_term);
        if log_tail > ln_p + M0_LOG_SLACK {
            return m0 - 1;
        }
    }
    m
}

fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi + math::ln_1p(math::exp(lo - hi))
}

/// Smallest `M` for which [`compute_m0`] is at least one at level `delta_prime`.
pub fn min_samples(delta_prime: f64) -> usize {
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return usize::MAX;
    }
    let guess = libm::ceil(math::ln(delta_prime) / math::ln_1p(-delta_prime)).max(1.0) as usize;
    let mut m = guess.saturating_sub(2).max(1);
    while compute_m0(m, delta_prime) == 0 {
        m += 1;
    }
    m
}

/// Per-radius Monte-Carlo quantiles of the localized Gaussian supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityTable {
    pub grid: RadiusGrid,
    /// Isotonic (non-decreasing in eps) quantile estimates, aligned with `grid.values()`.
    pub g_hat: Vec<f64>,
    /// Order statistics before the running maximum.
    pub g_raw: Vec<f64>,
    pub m: usize,
    pub m0: usize,
    pub delta: f64,
    pub seed: u64,
}

impl ComplexityTable {
    /// Estimate at grid position `index` (grid order: decreasing radius).
    pub fn at_index(&self, index: usize) -> f64 {
        self.g_hat[index]
    }

    /// Estimate at an exact grid radius, `None` if `eps` is not on the grid.
    pub fn at(&self, eps: f64) -> Option<f64> {
        self.grid.values().iter().position(|&e| e == eps).map(|i| self.g_hat[i])
    }

    /// Estimate at the smallest grid radius not below `eps`.
    pub fn at_ceil(&self, eps: f64) -> Result<f64> {
        let i = self.grid.ceil_index(eps)?;
        Ok(self.g_hat[i])
    }
}

/// Suprema `X_s(eps)` for `m` noise samples, one row per sample, columns in
/// the order of `radii`. Sample `s` uses [`NoiseStream::new(seed, s)`].
pub fn sample_suprema(
    stats: &ArmStats,
    mu_hat: &StochasticPolicy,
    radii: &[f64],
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if mu_hat.len() != stats.d() {
        return Err(Error::DimensionMismatch { expected: stats.d(), found: mu_hat.len() });
    }
    let a = stats.curvature();
    let use_path = SolutionPath::supports(mu_hat, &a);
    let one = |s: usize| -> Result<Vec<f64>> {
        let eta = sample_noise(stats, &mut NoiseStream::new(seed, s as u64));
        if use_path {
            let path = SolutionPath::new(mu_hat, &a, &eta)
                .map_err(|e| Error::SampleSolve { eps: f64::NAN, sample: s, source: Box::new(e) })?;
            return Ok(radii.iter().map(|&e| path.objective(e)).collect());
        }
        let spec = TrustRegionSpec::new(mu_hat.clone(), a.clone(), 0.0)?;
        radii
            .iter()
            .map(|&eps| {
                spec.with_eps(eps)
                    .and_then(|sp| solve_trust_region(&sp, &eta))
                    .map(|r| r.objective.max(0.0))
                    .map_err(|e| Error::SampleSolve { eps, sample: s, source: Box::new(e) })
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(one).collect()
    }
}

/// Monte-Carlo estimate of the localized complexity on every grid radius.
///
/// The per-radius level is `delta / (2 |E|)`. The same `m` noise vectors are
/// shared by all radii, so each sample's supremum is non-decreasing in eps.
pub fn estimate_g(
    stats: &ArmStats,
    mu_hat: &StochasticPolicy,
    grid: &RadiusGrid,
    m: usize,
    delta: f64,
    seed: u64,
) -> Result<ComplexityTable> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter { name: "delta", value: delta, reason: "must lie in (0, 1)" });
    }
    let delta_prime = delta / (2.0 * grid.len() as f64);
    let m0 = compute_m0(m, delta_prime);
    if m0 == 0 {
        return Err(Error::InsufficientSamples { m, delta_prime, minimum: min_samples(delta_prime) });
    }
    let rows = sample_suprema(stats, mu_hat, grid.values(), m, seed)?;

    let mut column = Vec::with_capacity(m);
    let g_raw: Vec<f64> = (0..grid.len())
        .map(|k| {
            column.clear();
            column.extend(rows.iter().map(|r| r[k]));
            column.sort_unstable_by(f64::total_cmp);
            column[m - m0]
        })
        .collect();

    // Grid is stored largest radius first; sweep from the smallest radius up.
    let mut g_hat = g_raw.clone();
    let mut running = 0.0f64;
    for g in g_hat.iter_mut().rev() {
        running = running.max(*g);
        *g = running;
    }
    Ok(ComplexityTable { grid: grid.clone(), g_hat, g_raw, m, m0, delta, seed })
}

/// `sqrt(max(0, max_i [sigma_i^2/N_i - 2 sigma_i^2/N]) + sum_j N_j sigma_j^2 / N^2)`.
pub fn compute_d_bound(stats: &ArmStats) -> f64 {
    let n = stats.n_total() as f64;
    let peak = stats
        .sigma()
        .iter()
        .zip(stats.counts())
        .map(|(s, &ni)| s * s / ni as f64 - 2.0 * s * s / n)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let spread: f64 = stats.sigma().iter().zip(stats.counts()).map(|(s, &ni)| ni as f64 * s * s).sum::<f64>() / (n * n);
    math::sqrt(peak + spread)
}

/// Analytic upper bound on the complexity quantile at radius `eps`:
///
/// ```text
/// min{ eps sqrt(d), 4 D sqrt(log+(4 e d eps^2 / D^2)) } + sqrt(2 eps^2 log(2 |E| / delta))
/// ```
///
/// with `log+(x) = max(1, log x)` and `D` from [`compute_d_bound`].
pub fn analytic_g_bound(stats: &ArmStats, eps: f64, grid_size: usize, delta: f64) -> f64 {
    if !(eps > 0.0) {
        return 0.0;
    }
    let d = stats.d() as f64;
    let big_d = compute_d_bound(stats);
    let log_plus = math::ln(4.0 * core::f64::consts::E * d * eps * eps / (big_d * big_d)).max(1.0);
    let width = (eps * math::sqrt(d)).min(4.0 * big_d * math::sqrt(log_plus));
    width + math::sqrt(2.0 * eps * eps * math::ln(2.0 * grid_size as f64 / delta))
}
