//! Online estimation of the p-value density as a Beta distribution.
//!
//! The p-value stream is summarized by its running mean and variance,
//! cumulatively (Welford's recursion) or over a sliding window, and the
//! Beta shape parameters are recovered by moment matching:
//!
//! ```text
//! α̂ = p̄ · (p̄(1−p̄)/s − 1)        β̂ = (1−p̄) · (p̄(1−p̄)/s − 1)
//! ```
//!
//! where `p̄` is the sample mean and `s` the sample variance. A uniform
//! fit (1,1) is returned whenever the moments are degenerate, which makes
//! the plug-in bet vanish until the estimate is informative.

use std::collections::VecDeque;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shape parameters of a Beta distribution, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaParams { alpha, beta })
    }

    /// The uniform density on [0,1].
    pub fn uniform() -> Self {
        BetaParams {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn beta(self) -> f64 {
        self.beta
    }
}

/// Bounds applied to fitted shapes; keeps the plug-in bet's density
/// evaluations from exploding at the interval ends.
pub const SHAPE_MIN: f64 = 1e-3;
pub const SHAPE_MAX: f64 = 1e3;

/// Evaluation points are pulled this far into the interior when a shape
/// parameter below one would make the density blow up at 0 or 1.
pub const PDF_EVAL_MARGIN: f64 = 1e-6;

/// Result of a moment-matching fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub params: BetaParams,
    /// True when the moments were unusable and the uniform fallback was
    /// returned instead.
    pub fallback: bool,
    /// True when a fitted shape hit the [`SHAPE_MIN`], [`SHAPE_MAX`] clamp.
    pub clamped: bool,
}

impl BetaFit {
    fn uniform_fallback() -> Self {
        BetaFit {
            params: BetaParams::uniform(),
            fallback: true,
            clamped: false,
        }
    }
}

/// Cumulative mean and sum of squared deviations, updated by Welford's
/// recursion:
///
/// ```text
/// p̄_n = p̄_{n−1} + (p_n − p̄_{n−1})/n
/// M_n = M_{n−1} + (p_n − p̄_{n−1})(p_n − p̄_n)
/// ```
#[derive(Debug, Clone, Copy, Default)]
pub struct CumStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl CumStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, p: f64) {
        self.n += 1;
        let delta_old = p - self.mean;
        self.mean += delta_old / self.n as f64;
        self.m2 += delta_old * (p - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance, defined for n ≥ 2.
    pub fn variance(&self) -> Option<f64> {
        if self.n >= 2 {
            Some((self.m2 / (self.n - 1) as f64).max(0.0))
        } else {
            None
        }
    }
}

/// Sliding-window mean and sum of squared deviations over the last `W`
/// values.
///
/// Until the window fills, updates fall back to the cumulative recursion;
/// once full, the closed-form window recursions apply:
///
/// ```text
/// p̄_n = p̄_{n−1} + (p_n − p_{n−W})/W
/// M_n = M_{n−1} + (p_n + p_{n−W} − p̄_n − p̄_{n−1})(p_n − p_{n−W})
/// ```
#[derive(Debug, Clone)]
pub struct WindowStats {
    w: usize,
    buffer: VecDeque<f64>,
    mean: f64,
    m2: f64,
}

impl WindowStats {
    pub fn new(w: usize) -> Result<Self> {
        if w < 2 {
            return Err(Error::InvalidConfig(format!(
                "window size must be >= 2, got {w}"
            )));
        }
        Ok(WindowStats {
            w,
            buffer: VecDeque::with_capacity(w),
            mean: 0.0,
            m2: 0.0,
        })
    }

    pub fn window(&self) -> usize {
        self.w
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.w
    }

    pub fn update(&mut self, p: f64) {
        if self.buffer.len() < self.w {
            // warm-up: cumulative recursion over a partial window
            self.buffer.push_back(p);
            let n = self.buffer.len() as f64;
            let delta_old = p - self.mean;
            self.mean += delta_old / n;
            self.m2 += delta_old * (p - self.mean);
        } else {
            let dropped = self.buffer.pop_front().expect("window is full");
            self.buffer.push_back(p);
            let old_mean = self.mean;
            self.mean += (p - dropped) / self.w as f64;
            self.m2 += (p + dropped - self.mean - old_mean) * (p - dropped);
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    pub fn variance(&self) -> Option<f64> {
        let n = self.buffer.len();
        if n >= 2 {
            Some((self.m2 / (n - 1) as f64).max(0.0))
        } else {
            None
        }
    }
}

/// Moment-matching estimate of Beta shape parameters from a sample mean
/// and variance.
///
/// Degenerate moments (variance at least `mean(1−mean)` so the factor is
/// non-positive, zero variance, or a mean at the interval boundary) yield the uniform
/// fallback with the `fallback` flag set. Fitted shapes are clamped to
/// `[SHAPE_MIN, SHAPE_MAX]`.
pub fn fit_beta(mean: f64, variance: f64) -> BetaFit {
    let moments_usable = mean > 0.0 && mean < 1.0 && variance > 0.0;
    if !moments_usable {
        return BetaFit::uniform_fallback();
    }
    let factor = mean * (1.0 - mean) / variance - 1.0;
    if factor <= 0.0 {
        return BetaFit::uniform_fallback();
    }
    let alpha = mean * factor;
    let beta = (1.0 - mean) * factor;
    let clamped_alpha = alpha.clamp(SHAPE_MIN, SHAPE_MAX);
    let clamped_beta = beta.clamp(SHAPE_MIN, SHAPE_MAX);
    BetaFit {
        params: BetaParams {
            alpha: clamped_alpha,
            beta: clamped_beta,
        },
        fallback: false,
        clamped: clamped_alpha != alpha || clamped_beta != beta,
    }
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Beta density at `x`, computed through log-gamma.
///
/// When a shape parameter is below one the density diverges at the
/// corresponding boundary; evaluation points are then clamped into
/// `[PDF_EVAL_MARGIN, 1 − PDF_EVAL_MARGIN]` so the value stays finite.
pub fn beta_pdf(x: f64, params: BetaParams) -> f64 {
    let a = params.alpha();
    let b = params.beta();
    if a == 1.0 && b == 1.0 {
        // exactly uniform; log-gamma would leave ~1e-16 residue
        return 1.0;
    }
    let mut x = x.clamp(0.0, 1.0);
    if a < 1.0 || b < 1.0 {
        x = x.clamp(PDF_EVAL_MARGIN, 1.0 - PDF_EVAL_MARGIN);
    }
    // Boundary limits for shapes >= 1: x^(a-1) with a = 1 is 1, not 0^0.
    if x == 0.0 {
        return if a > 1.0 {
            0.0
        } else {
            (-ln_beta_fn(a, b)).exp()
        };
    }
    if x == 1.0 {
        return if b > 1.0 {
            0.0
        } else {
            (-ln_beta_fn(a, b)).exp()
        };
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta_fn(a, b)).exp()
}

/// Online Beta fit of the p-value stream, windowed or cumulative.
#[derive(Debug, Clone)]
pub enum PvalueDensityEstimator {
    Windowed(WindowStats),
    Cumulative(CumStats),
}

impl PvalueDensityEstimator {
    pub fn windowed(w: usize) -> Result<Self> {
        Ok(PvalueDensityEstimator::Windowed(WindowStats::new(w)?))
    }

    pub fn cumulative() -> Self {
        PvalueDensityEstimator::Cumulative(CumStats::new())
    }

    pub fn observe(&mut self, p: f64) {
        match self {
            PvalueDensityEstimator::Windowed(stats) => stats.update(p),
            PvalueDensityEstimator::Cumulative(stats) => stats.update(p),
        }
    }

    /// Moment-matching fit from the values observed so far. Before two
    /// observations the uniform fallback is returned.
    pub fn fit(&self) -> BetaFit {
        let (mean, variance) = match self {
            PvalueDensityEstimator::Windowed(stats) => (stats.mean(), stats.variance()),
            PvalueDensityEstimator::Cumulative(stats) => (stats.mean(), stats.variance()),
        };
        match variance {
            Some(v) => fit_beta(mean, v),
            None => BetaFit::uniform_fallback(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn batch_mean_m2(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (mean, m2)
    }

    #[test]
    fn welford_first_observation() {
        let mut stats = CumStats::new();
        stats.update(0.7);
        assert_eq!(stats.count(), 1);
        assert_eq!(stats.mean(), 0.7);
        assert_eq!(stats.sum_sq_dev(), 0.0);
        assert_eq!(stats.variance(), None);
    }

    #[test]
    fn welford_matches_batch_small() {
        let mut stats = CumStats::new();
        stats.update(0.2);
        stats.update(0.4);
        assert!((stats.mean() - 0.3).abs() < 1e-15);
        assert!((stats.sum_sq_dev() - 0.02).abs() < 1e-15);

        stats.update(0.6);
        assert!((stats.mean() - 0.4).abs() < 1e-15);
        assert!((stats.sum_sq_dev() - 0.08).abs() < 1e-15);
        assert!((stats.variance().unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn window_mean_recursion() {
        let mut stats = WindowStats::new(2).unwrap();
        stats.update(0.2);
        stats.update(0.4);
        assert!((stats.mean() - 0.3).abs() < 1e-15);
        stats.update(0.6);
        assert!((stats.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn window_noop_shift() {
        let mut stats = WindowStats::new(3).unwrap();
        for p in [0.2, 0.5, 0.8] {
            stats.update(p);
        }
        let (mean, m2) = (stats.mean(), stats.sum_sq_dev());
        stats.update(0.2); // equals the value being dropped
        assert!((stats.mean() - mean).abs() < 1e-15);
        assert!((stats.sum_sq_dev() - m2).abs() < 1e-15);
    }

    #[test]
    fn window_matches_batch_on_long_stream() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let w = 50;
        let mut stats = WindowStats::new(w).unwrap();
        for (i, &p) in values.iter().enumerate() {
            stats.update(p);
            let start = (i + 1).saturating_sub(w);
            let (mean, m2) = batch_mean_m2(&values[start..=i]);
            assert!((stats.mean() - mean).abs() < 1e-10, "step {i}");
            assert!((stats.sum_sq_dev() - m2).abs() < 1e-10, "step {i}");
        }
    }

    #[test]
    fn fit_beta_uniform_moments() {
        let fit = fit_beta(0.5, 1.0 / 12.0);
        assert!(!fit.fallback);
        assert!((fit.params.alpha() - 1.0).abs() < 1e-12);
        assert!((fit.params.beta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_beta_symmetric() {
        let fit = fit_beta(0.5, 0.05);
        assert!((fit.params.alpha() - 2.0).abs() < 1e-12);
        assert!((fit.params.beta() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_beta_skewed() {
        let fit = fit_beta(0.2, 0.01);
        assert!((fit.params.alpha() - 3.0).abs() < 1e-12);
        assert!((fit.params.beta() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn fit_beta_degenerate_cases() {
        // variance >= mean(1-mean) makes the factor non-positive
        assert!(fit_beta(0.5, 0.25).fallback);
        assert!(fit_beta(0.5, 0.3).fallback);
        assert!(fit_beta(0.5, 0.0).fallback);
        assert!(fit_beta(0.0, 0.01).fallback);
        assert!(fit_beta(1.0, 0.01).fallback);
        let fallback = fit_beta(0.5, 0.25);
        assert_eq!(fallback.params, BetaParams::uniform());
    }

    #[test]
    fn fit_beta_exact_moment_round_trip() {
        for &a in &[1.0, 2.0, 3.0, 5.0] {
            for &b in &[1.0, 2.0, 3.0, 5.0] {
                let mean = a / (a + b);
                let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
                let fit = fit_beta(mean, var);
                assert!((fit.params.alpha() - a).abs() < 1e-9, "a={a} b={b}");
                assert!((fit.params.beta() - b).abs() < 1e-9, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn beta_pdf_uniform_is_one() {
        for &x in &[0.0, 0.25, 0.5, 0.99, 1.0] {
            assert!((beta_pdf(x, BetaParams::uniform()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_pdf_symmetric_peak() {
        let params = BetaParams::new(2.0, 2.0).unwrap();
        assert!((beta_pdf(0.5, params) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn beta_pdf_integrates_to_one() {
        // Simpson's rule over [0,1].
        let params = BetaParams::new(2.0, 5.0).unwrap();
        let n = 10_000;
        let h = 1.0 / n as f64;
        let mut total = beta_pdf(0.0, params) + beta_pdf(1.0, params);
        for k in 1..n {
            let x = k as f64 * h;
            total += beta_pdf(x, params) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        total *= h / 3.0;
        assert!((total - 1.0).abs() < 1e-8, "integral {total}");
    }

    #[test]
    fn beta_pdf_boundaries() {
        // shapes >= 1: exact boundary limits
        let p21 = BetaParams::new(2.0, 1.0).unwrap();
        assert_eq!(beta_pdf(0.0, p21), 0.0);
        assert!((beta_pdf(1.0, p21) - 2.0).abs() < 1e-12);
        let p12 = BetaParams::new(1.0, 2.0).unwrap();
        assert!((beta_pdf(0.0, p12) - 2.0).abs() < 1e-12);
        // shape < 1: clamped interior evaluation keeps the value finite
        let p05 = BetaParams::new(0.5, 1.0).unwrap();
        let at_zero = beta_pdf(0.0, p05);
        assert!(at_zero.is_finite());
        assert!((at_zero - beta_pdf(PDF_EVAL_MARGIN, p05)).abs() < 1e-9);
    }

    #[test]
    fn estimator_cold_start_is_uniform() {
        let est = PvalueDensityEstimator::windowed(10).unwrap();
        let fit = est.fit();
        assert!(fit.fallback);
        assert_eq!(fit.params, BetaParams::uniform());
    }

    proptest! {
        #[test]
        fn welford_matches_batch(values in prop::collection::vec(0.0f64..=1.0, 1..200)) {
            let mut stats = CumStats::new();
            for &v in &values {
                stats.update(v);
            }
            let (mean, m2) = batch_mean_m2(&values);
            prop_assert!((stats.mean() - mean).abs() < 1e-10);
            prop_assert!((stats.sum_sq_dev() - m2).abs() < 1e-10);
        }

        #[test]
        fn window_matches_batch_every_step(
            values in prop::collection::vec(0.0f64..=1.0, 1..120),
            w in 2usize..12,
        ) {
            let mut stats = WindowStats::new(w).unwrap();
            for (i, &v) in values.iter().enumerate() {
                stats.update(v);
                let start = (i + 1).saturating_sub(w);
                let (mean, m2) = batch_mean_m2(&values[start..=i]);
                prop_assert!((stats.mean() - mean).abs() < 1e-10);
                prop_assert!((stats.sum_sq_dev() - m2).abs() < 1e-10);
            }
        }
    }
}
