//! Martingale sequences over the p-value stream.
//!
//! The additive martingale accumulates `S_n = Σ f_i(p_i)` for an
//! additive-valid betting function; the multiplicative martingale is
//! tracked in log scale, `log S_n = Σ log f_i(p_i)`, either for a single
//! power bet or for a grid of them (the mixture).
//!
//! The additive state keeps a fixed-capacity ring of recent `S` values so
//! the windowed test statistics — `S_m − S_{m−W}` and the re-based
//! `max |S_k|` over the trailing window — cost O(1) memory per step.

use std::collections::VecDeque;

use crate::beta_stats::{BetaFit, PvalueDensityEstimator};
use crate::betting::{plugin_bet, power_bet, shifted_odd_bet, MixtureGrid, OddFunction};

/// Additive martingale with `S_0 = 0` and a trace of the last `W+1`
/// partial sums.
#[derive(Debug, Clone)]
pub struct AdditiveMartingale {
    value: f64,
    steps: u64,
    trace: VecDeque<f64>,
    capacity: usize,
}

impl AdditiveMartingale {
    /// `window` is the detector window W; the trace holds W+1 partial sums
    /// so both windowed statistics are available.
    pub fn new(window: usize) -> Self {
        let capacity = (window + 1).max(2);
        let mut trace = VecDeque::with_capacity(capacity);
        trace.push_back(0.0);
        AdditiveMartingale {
            value: 0.0,
            steps: 0,
            trace,
            capacity,
        }
    }

    pub fn step(&mut self, increment: f64) -> f64 {
        self.value += increment;
        self.steps += 1;
        if self.trace.len() == self.capacity {
            self.trace.pop_front();
        }
        self.trace.push_back(self.value);
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Number of increments covered by the trace window: min(n, W).
    pub fn effective_window(&self) -> usize {
        self.trace.len() - 1
    }

    /// `S_m − S_{m−W}`; before W steps the delta is taken against `S_0 = 0`.
    pub fn window_delta(&self) -> f64 {
        let oldest = *self.trace.front().expect("trace holds S_0");
        self.value - oldest
    }

    /// `max |S_k − S_{m−W}|` over the trailing window; partial sums are
    /// re-based to zero at the window start.
    pub fn window_max_abs(&self) -> f64 {
        let base = *self.trace.front().expect("trace holds S_0");
        self.trace
            .iter()
            .map(|s| (s - base).abs())
            .fold(0.0, f64::max)
    }

    /// Drops all accumulated state, as if freshly constructed. Used by the
    /// continue-after-alarm mode.
    pub fn reset(&mut self) {
        self.value = 0.0;
        self.steps = 0;
        self.trace.clear();
        self.trace.push_back(0.0);
    }
}

/// Additive betting choice with resolved parameters.
#[derive(Debug, Clone)]
pub enum AdditiveBetting {
    ShiftedOdd(OddFunction),
    /// Plug-in bet with increments hard-clipped to `[−clip, clip]` so the
    /// Azuma bounded-increment premise holds.
    Plugin {
        clip: f64,
    },
}

/// What one additive step produced.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    /// Increment actually added to the martingale (after any clipping).
    pub increment: f64,
    /// Bet value before clipping.
    pub raw_increment: f64,
    pub value: f64,
    /// Density fit that was in effect when the bet was computed (fitted
    /// from p_1…p_{n−1} only).
    pub fit: BetaFit,
    /// True when the plug-in increment was clipped.
    pub clipped: bool,
}

/// One additive martingale step.
///
/// Ordering is the martingale property's causality requirement: the fit is
/// read and the bet computed *before* `p` is handed to the estimator, so
/// the bet at step n is a function of p_1…p_{n−1} and is evaluated at p_n.
pub fn additive_step(
    martingale: &mut AdditiveMartingale,
    betting: &AdditiveBetting,
    estimator: &mut PvalueDensityEstimator,
    p: f64,
) -> StepOutcome {
    let fit = estimator.fit();
    let (increment, raw_increment) = match betting {
        AdditiveBetting::ShiftedOdd(g) => {
            let bet = shifted_odd_bet(p, g);
            (bet, bet)
        }
        AdditiveBetting::Plugin { clip } => {
            let raw = plugin_bet(p, fit.params);
            (raw.clamp(-clip, *clip), raw)
        }
    };
    estimator.observe(p);
    let value = martingale.step(increment);
    StepOutcome {
        increment,
        raw_increment,
        value,
        fit,
        clipped: increment != raw_increment,
    }
}

/// Single-ε power martingale in log scale.
#[derive(Debug, Clone)]
pub struct PowerMartingale {
    epsilon: f64,
    log_value: f64,
    steps: u64,
    floored_steps: u64,
}

impl PowerMartingale {
    pub fn new(epsilon: f64) -> Self {
        PowerMartingale {
            epsilon,
            log_value: 0.0,
            steps: 0,
            floored_steps: 0,
        }
    }

    /// Adds `log f(p)` and returns the increment.
    pub fn step(&mut self, p: f64) -> f64 {
        if self.epsilon < 1.0 && p == 0.0 {
            self.floored_steps += 1;
        }
        let increment = power_bet(p, self.epsilon).ln();
        self.log_value += increment;
        self.steps += 1;
        increment
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Steps where p hit the singularity floor; large negative log
    /// increments were produced there.
    pub fn floored_steps(&self) -> u64 {
        self.floored_steps
    }
}

/// Mixture power martingale: one running log product per grid node.
#[derive(Debug, Clone)]
pub struct MixturePowerMartingale {
    grid: MixtureGrid,
    log_products: Vec<f64>,
    steps: u64,
    floored_steps: u64,
}

impl MixturePowerMartingale {
    pub fn new(grid: MixtureGrid) -> Self {
        let log_products = vec![0.0; grid.len()];
        MixturePowerMartingale {
            grid,
            log_products,
            steps: 0,
            floored_steps: 0,
        }
    }

    pub fn step(&mut self, p: f64) {
        if p == 0.0 {
            self.floored_steps += 1;
        }
        for (log_product, &epsilon) in self.log_products.iter_mut().zip(self.grid.epsilons()) {
            *log_product += power_bet(p, epsilon).ln();
        }
        self.steps += 1;
    }

    pub fn value(&self) -> f64 {
        crate::betting::mixture_power_martingale_value(&self.grid, &self.log_products)
    }

    pub fn log_value(&self) -> f64 {
        crate::betting::mixture_power_log_value(&self.grid, &self.log_products)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Steps where p hit the singularity floor.
    pub fn floored_steps(&self) -> u64 {
        self.floored_steps
    }

    pub fn log_products(&self) -> &[f64] {
        &self.log_products
    }
}
