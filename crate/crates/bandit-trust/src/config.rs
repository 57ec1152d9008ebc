//! Run configuration shared by the CLI, the simulation harness and reports.

use std::fmt;
use std::str::FromStr;

use bandit_trust_core::{Method, SigmaMode, TrustConfig};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// How per-arm noise scales are obtained. Parsed from `fixed:<s>`, a bare
/// number, `per-arm:<s1>,<s2>,...`, `empirical-std` or `bounded-quarter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SigmaSpec(pub SigmaMode);

impl FromStr for SigmaSpec {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || AppError::Config(format!("unrecognised sigma mode `{s}`"));
        let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let mode = match s {
            "empirical-std" | "empirical_std" => SigmaMode::EmpiricalStd,
            "bounded-quarter" | "bounded_quarter" => SigmaMode::BoundedQuarter,
            _ => {
                if let Some(v) = s.strip_prefix("fixed:") {
                    SigmaMode::Fixed(number(v)?)
                } else if let Some(v) = s.strip_prefix("per-arm:").or_else(|| s.strip_prefix("per_arm:")) {
                    SigmaMode::PerArm(v.split(',').map(number).collect::<Result<_>>()?)
                } else {
                    SigmaMode::Fixed(number(s)?)
                }
            }
        };
        Ok(SigmaSpec(mode))
    }
}

impl fmt::Display for SigmaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            SigmaMode::Fixed(s) => write!(f, "fixed:{s}"),
            SigmaMode::PerArm(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "per-arm:{}", parts.join(","))
            }
            SigmaMode::EmpiricalStd => f.write_str("empirical-std"),
            SigmaMode::BoundedQuarter => f.write_str("bounded-quarter"),
        }
    }
}

impl TryFrom<String> for SigmaSpec {
    type Error = AppError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SigmaSpec> for String {
    fn from(s: SigmaSpec) -> String {
        s.to_string()
    }
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: String,
    pub delta: f64,
    pub sigma: SigmaSpec,
    pub alpha: f64,
    pub grid_size: usize,
    /// Requested Monte-Carlo sample count.
    pub m: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrustConfig::default();
        Self {
            method: Method::Trust.as_str().to_owned(),
            delta: t.delta,
            sigma: SigmaSpec(SigmaMode::BoundedQuarter),
            alpha: t.alpha,
            grid_size: t.grid_size,
            m: t.m,
            seed: t.seed,
        }
    }
}

impl RunConfig {
    pub fn method(&self) -> Result<Method> {
        Method::parse(&self.method).ok_or_else(|| AppError::Config(format!("unknown method `{}`", self.method)))
    }

    pub fn trust(&self) -> TrustConfig {
        TrustConfig { delta: self.delta, alpha: self.alpha, grid_size: self.grid_size, m: self.m, seed: self.seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.method()?;
        self.trust().validate()?;
        Ok(())
    }
}
