//! C ABI for the exmart streaming change-point detector.
//!
//! The detector is exposed as an opaque handle created from a plain-old-data
//! configuration struct. Every function returns an [`ExmartStatus`] code
//! (or a plain value for the pure threshold helpers); no Rust panic crosses
//! the boundary. The matching header is generated into
//! `include/exmart.h` at build time.
//!
//! Lifecycle:
//!
//! ```c
//! ExmartConfig cfg;
//! exmart_config_default(&cfg);
//! cfg.seed = 42;
//! ExmartDetector *det = NULL;
//! if (exmart_detector_new(&cfg, &det) != EXMART_STATUS_OK) { ... }
//! ExmartStep step;
//! double features[1] = {0.3};
//! exmart_detector_push(det, features, 1, &step);
//! exmart_detector_free(det);
//! ```

use std::panic::{catch_unwind, AssertUnwindSafe};

use exmart::betting::{BettingSpec, MixtureGrid, OddFunction};
use exmart::conformal::DenominatorMode;
use exmart::detector::{DetectorConfig, TestKind};
use exmart::nonconformity::Sample;
use exmart::pipeline::{
    EstimatorChoice, PushOutcome, PvalueMode, StreamConfig, StreamDetector, DEFAULT_PLUGIN_CLIP,
};

/// Result of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExmartStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The configuration failed validation.
    InvalidConfig = 2,
    /// The pushed sample was rejected (non-finite value, dimension change,
    /// empty feature vector).
    InvalidData = 3,
    /// An internal invariant failed; the handle is still safe to free.
    Panic = 4,
}

/// p-value computation mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExmartMode {
    Full = 0,
    Inductive = 1,
}

/// Concentration-inequality test backing the alarm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExmartTest {
    Azuma = 0,
    Doob = 1,
}

/// Betting-function family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExmartBetting {
    Power = 0,
    Mixture = 1,
    Odd = 2,
    Plugin = 3,
}

/// Plain-old-data detector configuration.
///
/// Numeric fields accept 0 (or a non-positive value) to request the
/// built-in default noted on each field.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ExmartConfig {
    pub mode: ExmartMode,
    /// Leading samples consumed as the training set (inductive mode).
    pub train_size: usize,
    /// Sliding window W; 0 selects 100.
    pub window: usize,
    /// Significance level; must lie in (0,1).
    pub alpha: f64,
    pub test: ExmartTest,
    pub betting: ExmartBetting,
    /// Power betting epsilon; non-positive selects 0.92.
    pub epsilon: f64,
    /// Increment bound / plug-in clip; non-positive selects the family
    /// default (3 for plugin, 1 otherwise).
    pub bound: f64,
    /// Seed of the tie-break randomization.
    pub seed: u64,
    /// Reset the martingale after an alarm instead of halting.
    pub continue_after_alarm: bool,
    /// Use cumulative instead of windowed density moments.
    pub cumulative_estimator: bool,
    /// Density-estimation window; 0 shares `window`.
    pub estimator_window: usize,
    /// Divide inductive p-values by the literal stream index instead of
    /// training size + 1.
    pub literal_denominator: bool,
}

/// What one pushed sample produced.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ExmartStep {
    /// 1-based p-value step index; 0 while training or halted.
    pub step: u64,
    pub p_value: f64,
    pub increment: f64,
    /// `S_n` for additive betting, `log S_n` for multiplicative.
    pub martingale: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// True when this step raised an alarm.
    pub alarm: bool,
    /// Statistic and threshold of the alarm (0 when `alarm` is false).
    pub statistic: f64,
    pub threshold: f64,
    /// True while the sample was absorbed into the training set.
    pub in_training: bool,
    /// True when an earlier alarm halted the detector and the sample was
    /// ignored.
    pub halted: bool,
}

impl ExmartStep {
    fn empty() -> Self {
        ExmartStep {
            step: 0,
            p_value: 0.0,
            increment: 0.0,
            martingale: 0.0,
            alpha_hat: 1.0,
            beta_hat: 1.0,
            alarm: false,
            statistic: 0.0,
            threshold: 0.0,
            in_training: false,
            halted: false,
        }
    }
}

/// Opaque detector handle.
pub struct ExmartDetector {
    inner: StreamDetector,
}

fn build_stream_config(config: &ExmartConfig) -> StreamConfig {
    let betting = match config.betting {
        ExmartBetting::Power => BettingSpec::Power {
            epsilon: if config.epsilon > 0.0 {
                config.epsilon
            } else {
                0.92
            },
        },
        ExmartBetting::Mixture => BettingSpec::MixturePower {
            grid: MixtureGrid::default_trapezoid(),
        },
        ExmartBetting::Odd => BettingSpec::ShiftedOdd {
            g: OddFunction::neg_identity(),
        },
        ExmartBetting::Plugin => BettingSpec::PluginBeta,
    };
    let bound = if config.bound > 0.0 {
        config.bound
    } else if matches!(config.betting, ExmartBetting::Plugin) {
        DEFAULT_PLUGIN_CLIP
    } else {
        1.0
    };
    StreamConfig {
        mode: match config.mode {
            ExmartMode::Full => PvalueMode::Full,
            ExmartMode::Inductive => PvalueMode::Inductive,
        },
        train_size: config.train_size,
        detector: DetectorConfig {
            alpha: config.alpha,
            window: if config.window > 0 {
                config.window
            } else {
                100
            },
            test: match config.test {
                ExmartTest::Azuma => TestKind::Azuma,
                ExmartTest::Doob => TestKind::Doob,
            },
            bound,
        },
        betting,
        estimator: if config.cumulative_estimator {
            EstimatorChoice::Cumulative
        } else if config.estimator_window > 0 {
            EstimatorChoice::Windowed(Some(config.estimator_window))
        } else {
            EstimatorChoice::Windowed(None)
        },
        denominator: if config.literal_denominator {
            DenominatorMode::StreamIndex
        } else {
            DenominatorMode::TrainingPlusOne
        },
        seed: config.seed,
        continue_after_alarm: config.continue_after_alarm,
    }
}

/// Fills `out` with the default configuration: inductive mode, training
/// size 200, W = 100, α = 0.05, Azuma test, plug-in betting, seed 0.
///
/// # Safety
/// `out` must be null or point to writable storage for one `ExmartConfig`.
#[no_mangle]
pub unsafe extern "C" fn exmart_config_default(out: *mut ExmartConfig) -> ExmartStatus {
    if out.is_null() {
        return ExmartStatus::NullPointer;
    }
    let config = ExmartConfig {
        mode: ExmartMode::Inductive,
        train_size: 200,
        window: 100,
        alpha: 0.05,
        test: ExmartTest::Azuma,
        betting: ExmartBetting::Plugin,
        epsilon: 0.92,
        bound: 0.0,
        seed: 0,
        continue_after_alarm: false,
        cumulative_estimator: false,
        estimator_window: 0,
        literal_denominator: false,
    };
    unsafe { out.write(config) };
    ExmartStatus::Ok
}

/// Creates a detector. On success `*out` owns the handle; release it with
/// [`exmart_detector_free`].
///
/// # Safety
/// `config` must point to a valid `ExmartConfig` and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn exmart_detector_new(
    config: *const ExmartConfig,
    out: *mut *mut ExmartDetector,
) -> ExmartStatus {
    if config.is_null() || out.is_null() {
        return ExmartStatus::NullPointer;
    }
    let config = unsafe { &*config };
    let result = catch_unwind(AssertUnwindSafe(|| {
        StreamDetector::new(build_stream_config(config))
    }));
    match result {
        Ok(Ok(inner)) => {
            let handle = Box::into_raw(Box::new(ExmartDetector { inner }));
            unsafe { out.write(handle) };
            ExmartStatus::Ok
        }
        Ok(Err(_)) => ExmartStatus::InvalidConfig,
        Err(_) => ExmartStatus::Panic,
    }
}

/// Feeds one sample of `len` features and fills `out` with the step
/// outcome. Training samples set `in_training`; after a halting alarm the
/// call returns `Ok` with `halted` set and the sample is ignored.
///
/// # Safety
/// `detector` must be a live handle from [`exmart_detector_new`];
/// `features` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn exmart_detector_push(
    detector: *mut ExmartDetector,
    features: *const f64,
    len: usize,
    out: *mut ExmartStep,
) -> ExmartStatus {
    if detector.is_null() || features.is_null() || out.is_null() {
        return ExmartStatus::NullPointer;
    }
    if len == 0 {
        return ExmartStatus::InvalidData;
    }
    let detector = unsafe { &mut *detector };
    let features = unsafe { std::slice::from_raw_parts(features, len) };
    let result = catch_unwind(AssertUnwindSafe(|| {
        let sample = Sample::new(features.to_vec())?;
        detector.inner.push(sample)
    }));
    let mut step = ExmartStep::empty();
    let status = match result {
        Ok(Ok(PushOutcome::Step(record))) => {
            step.step = record.step;
            step.p_value = record.p_value;
            step.increment = record.increment;
            step.martingale = record.martingale;
            step.alpha_hat = record.alpha_hat;
            step.beta_hat = record.beta_hat;
            step.alarm = record.alarm;
            if record.alarm {
                if let Some(alarm) = detector.inner.alarms().last() {
                    step.statistic = alarm.statistic;
                    step.threshold = alarm.threshold;
                }
            }
            ExmartStatus::Ok
        }
        Ok(Ok(PushOutcome::Training)) => {
            step.in_training = true;
            ExmartStatus::Ok
        }
        Ok(Ok(PushOutcome::Halted)) => {
            step.halted = true;
            ExmartStatus::Ok
        }
        Ok(Err(_)) => ExmartStatus::InvalidData,
        Err(_) => ExmartStatus::Panic,
    };
    unsafe { out.write(step) };
    status
}

/// Number of alarms raised so far; 0 for a null handle.
///
/// # Safety
/// `detector` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn exmart_detector_alarm_count(detector: *const ExmartDetector) -> u64 {
    if detector.is_null() {
        return 0;
    }
    unsafe { &*detector }.inner.alarms().len() as u64
}

/// True when a halting alarm stopped the detector.
///
/// # Safety
/// `detector` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn exmart_detector_halted(detector: *const ExmartDetector) -> bool {
    if detector.is_null() {
        return false;
    }
    unsafe { &*detector }.inner.halted()
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `detector` must be null or a handle from [`exmart_detector_new`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn exmart_detector_free(detector: *mut ExmartDetector) {
    if detector.is_null() {
        return;
    }
    drop(unsafe { Box::from_raw(detector) });
}

/// `√(2W·ln(2/α))` — the windowed Hoeffding–Azuma threshold for b = 1.
#[no_mangle]
pub extern "C" fn exmart_azuma_threshold(window: usize, alpha: f64) -> f64 {
    exmart::detector::azuma_threshold(window, alpha)
}

/// `√(W/(12α))` — the windowed Doob–Kolmogorov threshold.
#[no_mangle]
pub extern "C" fn exmart_doob_threshold(window: usize, alpha: f64) -> f64 {
    exmart::detector::doob_threshold(window, alpha)
}

/// ABI version: major·10000 + minor·100 + patch.
#[no_mangle]
pub extern "C" fn exmart_ffi_version() -> u32 {
    100
}
