//! File formats, configuration and the experiment harness around
//! [`bandit_trust_core`].

pub mod config;
pub mod error;
pub mod io;
pub mod simulate;

pub use bandit_trust_core as core;
pub use config::{RunConfig, SigmaSpec};
pub use error::{AppError, Result};
