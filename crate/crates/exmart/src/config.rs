//! Run configuration: a single TOML-serializable struct that the CLI
//! merges from flags, an optional config file, and defaults.
//!
//! Every field is optional; [`RunConfig::resolve`] fills defaults and
//! produces the concrete [`StreamConfig`]. CLI flags override file values
//! field by field.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::betting::{BettingSpec, MixtureGrid, OddFunction};
use crate::conformal::DenominatorMode;
use crate::detector::{DetectorConfig, TestKind};
use crate::error::{Error, Result};
use crate::pipeline::{EstimatorChoice, PvalueMode, StreamConfig, DEFAULT_PLUGIN_CLIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Inductive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BettingFamily {
    Power,
    Mixture,
    Odd,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Windowed,
    Cumulative,
}

pub const DEFAULT_TRAIN_SIZE: usize = 200;
pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.92;

/// Partial run configuration; unset fields fall back to defaults at
/// resolution time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub train_size: Option<usize>,
    pub window: Option<usize>,
    pub alpha: Option<f64>,
    pub test: Option<TestKind>,
    pub betting: Option<BettingFamily>,
    pub epsilon: Option<f64>,
    pub bound: Option<f64>,
    pub seed: Option<u64>,
    pub trace: Option<PathBuf>,
    pub alarms: Option<PathBuf>,
    pub continue_after_alarm: Option<bool>,
    pub estimator: Option<EstimatorKind>,
    pub estimator_window: Option<usize>,
    pub denominator: Option<DenominatorMode>,
}

/// A resolved run: the pipeline configuration plus output destinations.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub stream: StreamConfig,
    pub trace_path: Option<PathBuf>,
    pub alarms_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    /// Field-wise merge: values in `self` win over `base`.
    pub fn merged_over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            mode: self.mode.or(base.mode),
            train_size: self.train_size.or(base.train_size),
            window: self.window.or(base.window),
            alpha: self.alpha.or(base.alpha),
            test: self.test.or(base.test),
            betting: self.betting.or(base.betting),
            epsilon: self.epsilon.or(base.epsilon),
            bound: self.bound.or(base.bound),
            seed: self.seed.or(base.seed),
            trace: self.trace.or(base.trace),
            alarms: self.alarms.or(base.alarms),
            continue_after_alarm: self.continue_after_alarm.or(base.continue_after_alarm),
            estimator: self.estimator.or(base.estimator),
            estimator_window: self.estimator_window.or(base.estimator_window),
            denominator: self.denominator.or(base.denominator),
        }
    }

    /// Fills defaults and validates. The seed must have been provided by a
    /// flag, the config file, or the `EXMART_SEED` environment variable —
    /// traces are only reproducible with an explicit seed.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let seed = self.seed.ok_or_else(|| {
            Error::InvalidConfig("no seed given (use --seed, a config file, or EXMART_SEED)".into())
        })?;
        let betting_family = self.betting.unwrap_or(BettingFamily::Plugin);
        let betting = match betting_family {
            BettingFamily::Power => BettingSpec::Power {
                epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            },
            BettingFamily::Mixture => BettingSpec::MixturePower {
                grid: MixtureGrid::default_trapezoid(),
            },
            BettingFamily::Odd => BettingSpec::ShiftedOdd {
                g: OddFunction::neg_identity(),
            },
            BettingFamily::Plugin => BettingSpec::PluginBeta,
        };
        let bound = self.bound.unwrap_or(match betting_family {
            BettingFamily::Plugin => DEFAULT_PLUGIN_CLIP,
            _ => 1.0,
        });
        let stream = StreamConfig {
            mode: match self.mode.unwrap_or(Mode::Inductive) {
                Mode::Full => PvalueMode::Full,
                Mode::Inductive => PvalueMode::Inductive,
            },
            train_size: self.train_size.unwrap_or(DEFAULT_TRAIN_SIZE),
            detector: DetectorConfig {
                alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
                window: self.window.unwrap_or(DEFAULT_WINDOW),
                test: self.test.unwrap_or(TestKind::Azuma),
                bound,
            },
            betting,
            estimator: match self.estimator.unwrap_or(EstimatorKind::Windowed) {
                EstimatorKind::Windowed => EstimatorChoice::Windowed(self.estimator_window),
                EstimatorKind::Cumulative => EstimatorChoice::Cumulative,
            },
            denominator: self.denominator.unwrap_or_default(),
            seed,
            continue_after_alarm: self.continue_after_alarm.unwrap_or(false),
        };
        stream.validate()?;
        Ok(ResolvedRun {
            stream,
            trace_path: self.trace.clone(),
            alarms_path: self.alarms.clone(),
        })
    }
}
