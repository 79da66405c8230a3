//! Alarm decisions from concentration inequalities on the additive
//! martingale.
//!
//! Two windowed tests are offered:
//!
//! * Hoeffding–Azuma: reject when `|S_m − S_{m−W}| > b·√(2W·ln(2/α))`,
//!   valid for any additive bet with increments bounded by `b`.
//! * Doob–Kolmogorov: reject when the re-based `max |S_k|` over the
//!   trailing window exceeds `√(W/(12α))`. The 1/12 variance constant
//!   comes from the bet `f(p) = −p + 1/2`, so this test is only valid with
//!   that betting function; other pairings are rejected at configuration
//!   time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::AdditiveMartingale;

/// Which concentration inequality drives the alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Azuma,
    Doob,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Azuma => "azuma",
            TestKind::Doob => "doob",
        }
    }
}

/// Detector settings: significance level, window, test, increment bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Significance level α ∈ (0,1).
    pub alpha: f64,
    /// Sliding window size W ≥ 2.
    pub window: usize,
    pub test: TestKind,
    /// Bound b on |increment|. The paper's thresholds correspond to b = 1;
    /// plug-in increments are clipped to this bound upstream.
    pub bound: f64,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "significance level must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.window < 2 {
            return Err(Error::InvalidConfig(format!(
                "window must be >= 2, got {}",
                self.window
            )));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "increment bound must be positive, got {}",
                self.bound
            )));
        }
        Ok(())
    }
}

/// A raised alarm: the statistic strictly exceeded the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alarm {
    pub step: u64,
    pub statistic: f64,
    pub threshold: f64,
    pub test: TestKind,
}

/// `√(2W·ln(2/α))`, the windowed Hoeffding–Azuma rejection threshold for
/// unit-bounded increments. Evaluated as printed; argument ranges are
/// checked by [`DetectorConfig::validate`], not here.
pub fn azuma_threshold(window: usize, alpha: f64) -> f64 {
    (2.0 * window as f64 * (2.0 / alpha).ln()).sqrt()
}

/// `√(W/(12α))`, the windowed Doob–Kolmogorov rejection threshold for the
/// bet `f(p) = −p + 1/2`.
pub fn doob_threshold(window: usize, alpha: f64) -> f64 {
    (window as f64 / (12.0 * alpha)).sqrt()
}

/// Cumulative (unwindowed) Azuma test: true iff `|S_m| > b·√(2m·ln(2/α))`.
pub fn cumulative_azuma_test(s_m: f64, m: u64, alpha: f64, bound: f64) -> bool {
    s_m.abs() > bound * azuma_threshold(m as usize, alpha)
}

/// Evaluates the configured test against the martingale's trailing window
/// and returns an alarm on strict exceedance.
///
/// For the Azuma test the effective window is `min(step, W)`, so the
/// warm-up phase is tested against its own (smaller) bound.
pub fn step_decision(
    config: &DetectorConfig,
    martingale: &AdditiveMartingale,
    step: u64,
) -> Option<Alarm> {
    let (statistic, threshold) = match config.test {
        TestKind::Azuma => {
            let effective = martingale.effective_window();
            (
                martingale.window_delta().abs(),
                config.bound * azuma_threshold(effective, config.alpha),
            )
        }
        TestKind::Doob => (
            martingale.window_max_abs(),
            doob_threshold(config.window, config.alpha),
        ),
    };
    if statistic > threshold {
        Some(Alarm {
            step,
            statistic,
            threshold,
            test: config.test,
        })
    } else {
        None
    }
}
