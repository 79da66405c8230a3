//! Streaming change-point detection by testing exchangeability.
//!
//! A data stream that stays exchangeable produces conformal p-values that
//! are independent and uniform on [0,1]. Betting against that uniformity
//! builds a martingale; when the distribution changes, the p-values
//! concentrate and the martingale leaves its typical range. This crate
//! implements the pipeline end to end:
//!
//! * [`nonconformity`]: nearest-neighbor strangeness scores, pluggable
//!   through a trait
//! * [`conformal`]: full and inductive conformal p-values with seeded
//!   tie-breaking
//! * [`betting`]: power, mixture-power, shifted-odd and plug-in Beta
//!   betting functions
//! * [`beta_stats`]: online (Welford and sliding-window) moments and
//!   Beta moment matching for the plug-in bet
//! * [`martingale`]: the additive martingale `S_n = Σ f_i(p_i)` and the
//!   classical multiplicative one in log scale
//! * [`detector`]: Hoeffding-Azuma and Doob-Kolmogorov alarm thresholds
//! * [`pipeline`]: the single-pass streaming detector
//! * [`harness`]: synthetic scenarios and experiment runs
//! * [`config`], [`output`]: CLI-facing configuration and file formats
//!
//! # Example
//!
//! ```
//! use exmart::harness::{run_experiment, ScenarioSpec};
//! use exmart::config::RunConfig;
//!
//! // 2σ mean shift after 700 samples; detector defaults (plug-in betting,
//! // inductive p-values, Azuma test, W = 100, α = 0.05).
//! let config = RunConfig { seed: Some(7), ..Default::default() };
//! let resolved = config.resolve().unwrap();
//! let scenario = ScenarioSpec::desk_default(7);
//! let trace = run_experiment(&scenario, &resolved.stream).unwrap();
//! assert!(!trace.alarms.is_empty());
//! ```

pub mod beta_stats;
pub mod betting;
pub mod config;
pub mod conformal;
pub mod detector;
pub mod error;
pub mod harness;
pub mod martingale;
pub mod nonconformity;
pub mod output;
pub mod pipeline;

pub use error::{Error, Result};
