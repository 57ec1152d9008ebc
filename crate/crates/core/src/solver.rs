//! Linear maximization over the simplex intersected with a weighted ball.
//!
//! The feasible set around a reference policy `mu` is
//!
//! ```text
//! C(eps) = { delta : mu_i + delta_i >= 0, sum_i delta_i = 0, sum_i a_i delta_i^2 <= eps^2 }
//! ```
//!
//! (`sum_i delta_i = 0` is what `||mu + delta||_1 = 1` reduces to once the
//! weights are non-negative). Two routes are provided:
//!
//! * [`solve_trust_region`] works for any reference policy. It solves the KKT
//!   system `delta_i = max((c_i - nu) / (2 lambda a_i), -mu_i)`: `nu` exactly
//!   through the piecewise-linear balance equation, `lambda` by bisection on
//!   the ball constraint.
//! * [`SolutionPath`] covers the geometry produced by the noise-weighted
//!   reference policy, where `mu_i a_i` is the same for every arm. The free set
//!   is then always the top-`m` arms by `c`, and the optimum has a closed form
//!   on each segment, so one sort answers every radius at once.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;
use crate::stats::{weighted_norm, ArmStats, ImprovementVector, StochasticPolicy};

const MAX_BISECTION: usize = 200;
const BALL_REL_TOL: f64 = 1e-10;
const LAMBDA_FLOOR: f64 = 1e-12;

/// Center, curvature weights and radius of a trust region.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionSpec {
    mu_hat: StochasticPolicy,
    a: Vec<f64>,
    eps: f64,
}

impl TrustRegionSpec {
    pub fn new(mu_hat: StochasticPolicy, a: Vec<f64>, eps: f64) -> Result<Self> {
        if a.len() != mu_hat.len() {
            return Err(Error::DimensionMismatch { expected: mu_hat.len(), found: a.len() });
        }
        if let Some(&x) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidParameter { name: "a_i", value: x, reason: "must be positive and finite" });
        }
        check_eps(eps)?;
        Ok(Self { mu_hat, a, eps })
    }

    /// Region with weights `a_i = sigma_i^2 / N_i` taken from `stats`.
    pub fn from_stats(stats: &ArmStats, mu_hat: &StochasticPolicy, eps: f64) -> Result<Self> {
        Self::new(mu_hat.clone(), stats.curvature(), eps)
    }

    pub fn mu_hat(&self) -> &StochasticPolicy {
        &self.mu_hat
    }

    pub fn curvature(&self) -> &[f64] {
        &self.a
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    /// Same center and weights, different radius.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self { mu_hat: self.mu_hat.clone(), a: self.a.clone(), eps })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "eps", value: eps, reason: "radius must be finite and non-negative" })
    }
}

/// Whether the ball constraint binds at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallState {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub delta: ImprovementVector,
    /// `delta^T c`.
    pub objective: f64,
    /// Largest of the stationarity, balance and complementary-slackness residuals.
    pub kkt_residual: f64,
    pub active: BallState,
    /// Ball multiplier (zero when the ball is inactive).
    pub lambda: f64,
    /// Multiplier of the balance constraint `sum_i delta_i = 0`.
    pub nu: f64,
    pub iterations: usize,
}

/// Maximizes `delta^T c` over the trust region described by `spec`.
pub fn solve_trust_region(spec: &TrustRegionSpec, c: &[f64]) -> Result<SolveResult> {
    let d = spec.d();
    if c.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: c.len() });
    }
    if let Some(i) = c.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "objective coefficient", index: i });
    }
    let mu = spec.mu_hat.weights();
    let a = &spec.a;
    let eps = spec.eps;

    let (c_min, c_max) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if eps == 0.0 || d == 1 || c_min == c_max {
        return Ok(SolveResult {
            delta: ImprovementVector::zero(d),
            objective: 0.0,
            kkt_residual: 0.0,
            active: BallState::Inactive,
            lambda: 0.0,
            nu: c_max,
            iterations: 0,
        });
    }

    // Greedy vertex first: if it fits, it is the linear-program optimum.
    let best = math::argmax(c).expect("non-empty");
    let mut vertex: Vec<f64> = mu.iter().map(|m| -m).collect();
    vertex[best] += 1.0;
    if weighted_sq(&vertex, a) <= eps * eps {
        let objective = math::dot(&vertex, c);
        let residual = kkt_residual(c, mu, a, &vertex, 0.0, c[best], eps);
        return Ok(SolveResult {
            delta: ImprovementVector::from_delta(vertex, a),
            objective,
            kkt_residual: residual,
            active: BallState::Inactive,
            lambda: 0.0,
            nu: c[best],
            iterations: 0,
        });
    }

    let target = eps * eps;
    let mut scratch = BalanceScratch::new(d);
    let mut iterations = 0;

    let (floor_delta, floor_nu) = scratch.solve(c, mu, a, LAMBDA_FLOOR);
    if weighted_sq(&floor_delta, a) <= target {
        // Only reachable with ties in `c`: a face of optimal vertices meets the ball.
        let objective = math::dot(&floor_delta, c);
        let residual = kkt_residual(c, mu, a, &floor_delta, LAMBDA_FLOOR, floor_nu, eps);
        return Ok(SolveResult {
            delta: ImprovementVector::from_delta(floor_delta, a),
            objective,
            kkt_residual: residual,
            active: BallState::Inactive,
            lambda: LAMBDA_FLOOR,
            nu: floor_nu,
            iterations: 1,
        });
    }

    // Bracket: ball(lo) > eps^2 >= ball(hi); ball(lambda) is non-increasing.
    let mut lo = LAMBDA_FLOOR;
    let mut hi = 1.0;
    let (mut hi_delta, mut hi_nu) = scratch.solve(c, mu, a, hi);
    let mut doublings = 0;
    while weighted_sq(&hi_delta, a) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 4096 {
            return Err(Error::NoConvergence {
                eps,
                residual: weighted_sq(&hi_delta, a) - target,
                iterations: doublings,
            });
        }
        (hi_delta, hi_nu) = scratch.solve(c, mu, a, hi);
    }

    let mut converged = false;
    while iterations < MAX_BISECTION {
        iterations += 1;
        let ball_hi = weighted_sq(&hi_delta, a);
        if target - ball_hi <= BALL_REL_TOL * target {
            converged = true;
            break;
        }
        let mid = math::sqrt(lo * hi);
        if !(mid > lo && mid < hi) {
            converged = true;
            break;
        }
        let (mid_delta, mid_nu) = scratch.solve(c, mu, a, mid);
        if weighted_sq(&mid_delta, a) > target {
            lo = mid;
        } else {
            hi = mid;
            hi_delta = mid_delta;
            hi_nu = mid_nu;
        }
    }

    let ball = weighted_sq(&hi_delta, a);
    let rel = (target - ball).abs() / target;
    if !converged && rel > BALL_REL_TOL {
        return Err(Error::NoConvergence { eps, residual: rel, iterations });
    }
    let objective = math::dot(&hi_delta, c);
    let residual = kkt_residual(c, mu, a, &hi_delta, hi, hi_nu, eps);
    Ok(SolveResult {
        delta: ImprovementVector::from_delta(hi_delta, a),
        objective,
        kkt_residual: residual,
        active: BallState::Active,
        lambda: hi,
        nu: hi_nu,
        iterations,
    })
}

fn weighted_sq(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(v, w)| w * v * v).sum()
}

/// Reusable buffers for the balance step.
struct BalanceScratch {
    order: Vec<usize>,
    breaks: Vec<f64>,
}

impl BalanceScratch {
    fn new(d: usize) -> Self {
        Self { order: (0..d).collect(), breaks: vec![0.0; d] }
    }

    /// For fixed `lambda`, finds `nu` with `sum_i max(t (c_i - nu) / a_i, -mu_i) = 0`
    /// where `t = 1 / (2 lambda)`, and returns the corresponding `delta`.
    ///
    /// Arm `i` is clipped once `nu` passes `c_i + mu_i a_i / t`; sorting those
    /// breakpoints makes the balance equation linear on each interval. With
    /// the top `m` arms free, `nu = mean - tail / (t W)` where `mean` is the
    /// `1/a`-weighted mean of their `c`, `W` their total weight and `tail` the
    /// clipped mass. Free entries are formed as `t (c_i - mean) + tail / W`
    /// rather than `t (c_i - nu)`, which cancels catastrophically for large `t`.
    fn solve(&mut self, c: &[f64], mu: &[f64], a: &[f64], lambda: f64) -> (Vec<f64>, f64) {
        let d = c.len();
        let t = 0.5 / lambda;
        for i in 0..d {
            self.breaks[i] = c[i] + mu[i] * a[i] / t;
        }
        let breaks = &self.breaks;
        self.order.sort_unstable_by(|&i, &j| breaks[j].total_cmp(&breaks[i]).then(i.cmp(&j)));

        // Mass of the clipped suffix, summed from the back to avoid `1 - prefix`.
        let mut tail = vec![0.0; d + 1];
        for k in (0..d).rev() {
            tail[k] = tail[k + 1] + mu[self.order[k]];
        }
        let mut mean = 0.0;
        let mut weight = 0.0;
        let mut free = d;
        for m in 1..=d {
            let i = self.order[m - 1];
            let w = 1.0 / a[i];
            weight += w;
            // `w / weight` is exactly 1 for the first arm, so ties keep `mean` exact.
            mean += (c[i] - mean) * (w / weight);
            if m == d {
                break;
            }
            // Next arm stays clipped iff its unclipped value is at most -mu_j.
            let j = self.order[m];
            if t * (c[j] - mean) + tail[m] / weight <= -mu[j] * a[j] {
                free = m;
                break;
            }
        }
        let shift = tail[free] / weight;
        let mut delta = vec![0.0; d];
        for (k, &i) in self.order.iter().enumerate() {
            delta[i] = if k < free { ((t * (c[i] - mean) + shift) / a[i]).max(-mu[i]) } else { -mu[i] };
        }
        (delta, mean - shift / t)
    }
}

fn kkt_residual(c: &[f64], mu: &[f64], a: &[f64], delta: &[f64], lambda: f64, nu: f64, eps: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..c.len() {
        let g = c[i] - nu - 2.0 * lambda * a[i] * delta[i];
        let r = if delta[i] > -mu[i] { g.abs() } else { g.max(0.0) };
        worst = worst.max(r);
    }
    let balance: f64 = delta.iter().sum::<f64>().abs();
    let slack = lambda * (weighted_sq(delta, a) - eps * eps).abs();
    worst.max(balance).max(slack)
}

/// Largest weighted distance from `mu_hat` to a vertex of the simplex.
///
/// Every radius at or above this value makes the whole simplex reachable.
pub fn max_radius(stats: &ArmStats, mu_hat: &StochasticPolicy) -> f64 {
    let a = stats.curvature();
    let mu = mu_hat.weights();
    let spread: f64 = mu.iter().zip(&a).map(|(m, w)| m * m * w).sum();
    let worst = (0..mu.len())
        .map(|i| spread - mu[i] * mu[i] * a[i] + (1.0 - mu[i]) * (1.0 - mu[i]) * a[i])
        .fold(0.0, f64::max);
    math::sqrt(worst.max(0.0))
}

/// Exact solution of the trust-region program for every radius, given one
/// objective `c`, when `mu_i a_i` is constant across arms.
///
/// Sorting `c` in decreasing order (ties by index), the optimum at a given
/// radius puts weight `(c_i - tau) / (u a_i)` on the top `m` arms and zero on
/// the rest. With `B_m = sum 1/a`, the weighted mean `cbar_m` and the weighted
/// spread `V_m = sum (c_i - cbar_m)^2 / a_i` of the top `m` arms, the objective
/// on segment `m` is
///
/// ```text
/// sqrt(V_m (eps^2 + 1/Z - 1/B_m)) + cbar_m - c^T mu,      Z = sum 1/a_i
/// ```
///
/// and segment `m` is selected by thresholds on `eps^2` computed once.
#[derive(Debug, Clone)]
pub struct SolutionPath {
    order: Vec<usize>,
    c: Vec<f64>,
    a: Vec<f64>,
    mu: Vec<f64>,
    /// Per prefix length `m` (index `m - 1`).
    weight: Vec<f64>,
    mean: Vec<f64>,
    spread: Vec<f64>,
    /// Smallest `eps^2` at which the optimum has at most `m` free arms.
    threshold: Vec<f64>,
    inv_z: f64,
    base: f64,
}

impl SolutionPath {
    /// Tolerance on `mu_i a_i` being constant.
    pub const GEOMETRY_TOL: f64 = 1e-9;

    /// True when `mu_i a_i` is constant, i.e. `mu` is the noise-weighted
    /// reference policy for weights `a`.
    pub fn supports(mu_hat: &StochasticPolicy, a: &[f64]) -> bool {
        let mu = mu_hat.weights();
        if mu.len() != a.len() || mu.iter().any(|&m| m <= 0.0) {
            return false;
        }
        let k: Vec<f64> = mu.iter().zip(a).map(|(m, w)| m * w).collect();
        let mean = k.iter().sum::<f64>() / k.len() as f64;
        k.iter().all(|x| ((x - mean) / mean).abs() <= Self::GEOMETRY_TOL)
    }

    pub fn new(mu_hat: &StochasticPolicy, a: &[f64], c: &[f64]) -> Result<Self> {
        let d = a.len();
        if mu_hat.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mu_hat.len() });
        }
        if c.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: c.len() });
        }
        if let Some(i) = c.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "objective coefficient", index: i });
        }
        if !Self::supports(mu_hat, a) {
            return Err(Error::InvalidParameter {
                name: "mu_hat",
                value: f64::NAN,
                reason: "solution path needs mu_i * a_i constant across arms",
            });
        }
        let mu = mu_hat.weights().to_vec();

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_unstable_by(|&i, &j| match c[j].total_cmp(&c[i]) {
            Ordering::Equal => i.cmp(&j),
            o => o,
        });

        let mut weight = Vec::with_capacity(d);
        let mut mean = Vec::with_capacity(d);
        let mut spread = Vec::with_capacity(d);
        let (mut b, mut m_run, mut v_run) = (0.0, 0.0, 0.0);
        for &i in &order {
            let w = 1.0 / a[i];
            b += w;
            let prev = m_run;
            m_run += w * (c[i] - prev) / b;
            v_run += w * (c[i] - prev) * (c[i] - m_run);
            weight.push(b);
            mean.push(m_run);
            spread.push(v_run.max(0.0));
        }
        let inv_z: f64 = mu.iter().zip(a).map(|(m, w)| m * m * w).sum();

        let mut threshold = vec![0.0; d];
        for k in 0..d.saturating_sub(1) {
            let next = c[order[k + 1]];
            let u = weight[k] * (mean[k] - next);
            let base = 1.0 / weight[k] - inv_z;
            threshold[k] = if spread[k] > 0.0 && u > 0.0 { spread[k] / (u * u) + base } else { base };
        }
        for k in (0..d.saturating_sub(1)).rev() {
            threshold[k] = threshold[k].max(threshold[k + 1]).max(0.0);
        }
        let base = math::dot(c, &mu);
        Ok(Self { order, c: c.to_vec(), a: a.to_vec(), mu, weight, mean, spread, threshold, inv_z, base })
    }

    pub fn d(&self) -> usize {
        self.c.len()
    }

    /// Prefix length of the segment containing radius `eps`.
    fn segment(&self, eps: f64) -> usize {
        let e2 = eps * eps;
        self.threshold.partition_point(|&g| g > e2) + 1
    }

    /// Optimal value `max_{delta in C(eps)} delta^T c`.
    pub fn objective(&self, eps: f64) -> f64 {
        if !(eps > 0.0) || self.d() == 1 {
            return 0.0;
        }
        let m = self.segment(eps);
        let k = m - 1;
        let gap = eps * eps + self.inv_z - 1.0 / self.weight[k];
        let value = math::sqrt((self.spread[k] * gap).max(0.0)) + self.mean[k] - self.base;
        value.clamp(0.0, self.c[self.order[0]] - self.base)
    }

    /// Optimal improvement vector at radius `eps`.
    pub fn delta(&self, eps: f64) -> Vec<f64> {
        let d = self.d();
        if !(eps > 0.0) || d == 1 {
            return vec![0.0; d];
        }
        let m = self.segment(eps);
        let k = m - 1;
        let mut w = vec![0.0; d];
        let gap = eps * eps + self.inv_z - 1.0 / self.weight[k];
        if self.spread[k] > 0.0 && gap > 0.0 {
            let u = math::sqrt(self.spread[k] / gap);
            let tau = self.mean[k] - u / self.weight[k];
            for &i in &self.order[..m] {
                w[i] = ((self.c[i] - tau) / (u * self.a[i])).max(0.0);
            }
        } else {
            for &i in &self.order[..m] {
                w[i] = 1.0 / (self.a[i] * self.weight[k]);
            }
        }
        w.iter().zip(&self.mu).map(|(wi, mi)| wi - mi).collect()
    }
}

/// Feasibility residuals `(|sum delta|, max negative weight, ball excess)`.
pub fn feasibility_residuals(delta: &[f64], mu_hat: &StochasticPolicy, a: &[f64], eps: f64) -> (f64, f64, f64) {
    let balance = delta.iter().sum::<f64>().abs();
    let negativity = delta
        .iter()
        .zip(mu_hat.weights())
        .map(|(dl, m)| (-(dl + m)).max(0.0))
        .fold(0.0, f64::max);
    let norm = weighted_norm(delta, a);
    let excess = (norm * norm - eps * eps).max(0.0);
    (balance, negativity, excess)
}
