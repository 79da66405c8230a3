//! Synthetic stream generation and end-to-end experiment runs.
//!
//! Streams are Gaussian with unit covariance before the change point and a
//! shifted mean (optionally rescaled standard deviation) after it. All
//! draws come from a seeded generator, so a `(seed, config)` pair yields a
//! bit-identical trace on every run; the statistics path sticks to plain
//! f64 adds and multiplies, with no fused-multiply-add contractions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beta_stats::PvalueDensityEstimator;
use crate::betting::{BettingSpec, OddFunction};
use crate::detector::{step_decision, Alarm};
use crate::error::{Error, Result};
use crate::martingale::{
    additive_step, AdditiveBetting, AdditiveMartingale, MixturePowerMartingale, PowerMartingale,
};
use crate::nonconformity::Sample;
use crate::pipeline::{
    EstimatorChoice, PushOutcome, PvalueMode, StepRecord, StreamConfig, StreamDetector,
    DEFAULT_PLUGIN_CLIP,
};

/// Stream id of the data-synthesis generator; θ draws use stream 1.
const DATA_STREAM: u64 = 0;

/// A two-phase Gaussian scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Samples before the change.
    pub n1: usize,
    /// Samples after the change.
    pub n2: usize,
    pub dim: usize,
    /// Pre-change mean vector; unit covariance.
    pub pre_mean: Vec<f64>,
    /// Added to the mean after the change.
    pub shift: Vec<f64>,
    /// Per-coordinate standard deviation after the change (1 = unchanged).
    pub post_std: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// One-dimensional zero-mean scenario with the given mean shift.
    pub fn gaussian_shift(n1: usize, n2: usize, dim: usize, shift: f64, seed: u64) -> Self {
        ScenarioSpec {
            n1,
            n2,
            dim,
            pre_mean: vec![0.0; dim],
            shift: vec![shift; dim],
            post_std: 1.0,
            seed,
        }
    }

    /// Desk-scale default mirroring the evaluation setup: 700 pre-change
    /// and 500 post-change samples in one dimension, 2σ mean shift.
    pub fn desk_default(seed: u64) -> Self {
        Self::gaussian_shift(700, 500, 1, 2.0, seed)
    }

    /// Three-dimensional stand-in for a multivariate monitoring stream: a
    /// joint mean shift and variance increase at the change point.
    pub fn multivariate_case(seed: u64) -> Self {
        ScenarioSpec {
            n1: 700,
            n2: 500,
            dim: 3,
            pre_mean: vec![0.0; 3],
            shift: vec![1.5, 1.0, 0.5],
            post_std: 1.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidScenario("dimension must be >= 1".into()));
        }
        if self.shift.len() != self.dim {
            return Err(Error::InvalidScenario(format!(
                "shift vector has dimension {}, stream has {}",
                self.shift.len(),
                self.dim
            )));
        }
        if self.pre_mean.len() != self.dim {
            return Err(Error::InvalidScenario(format!(
                "mean vector has dimension {}, stream has {}",
                self.pre_mean.len(),
                self.dim
            )));
        }
        if !self
            .shift
            .iter()
            .chain(&self.pre_mean)
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidScenario(
                "non-finite scenario parameter".into(),
            ));
        }
        if !(self.post_std > 0.0 && self.post_std.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "post-change std must be positive, got {}",
                self.post_std
            )));
        }
        Ok(())
    }

    /// Total stream length.
    pub fn len(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws the scenario's stream: `n1` samples from the base Gaussian, then
/// `n2` with the shifted mean. Deterministic for a fixed seed.
pub fn generate_stream(spec: &ScenarioSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(DATA_STREAM);
    let mut stream = Vec::with_capacity(spec.len());
    for i in 0..spec.len() {
        let post = i >= spec.n1;
        let features = (0..spec.dim)
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if post {
                    spec.pre_mean[d] + spec.shift[d] + spec.post_std * z
                } else {
                    spec.pre_mean[d] + z
                }
            })
            .collect();
        stream.push(Sample::new(features).expect("gaussian draws are finite"));
    }
    Ok(stream)
}

/// Per-step records of one experiment, plus its alarms.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    pub alarms: Vec<Alarm>,
    /// Last pre-change step index (0 when the stream starts post-change,
    /// `None` for a shift-free scenario).
    pub change_step: Option<u64>,
}

impl RunTrace {
    /// First alarm at a step strictly after the change point.
    pub fn first_alarm_after_change(&self) -> Option<&Alarm> {
        let change = self.change_step.unwrap_or(0);
        self.alarms.iter().find(|a| a.step > change)
    }
}

fn change_step_for(scenario: &ScenarioSpec, config: &StreamConfig) -> Option<u64> {
    let shift_free = scenario.shift.iter().all(|&s| s == 0.0) && scenario.post_std == 1.0;
    if scenario.n2 == 0 || shift_free {
        return None;
    }
    let consumed_by_training = match config.mode {
        PvalueMode::Inductive => config.train_size,
        PvalueMode::Full => 0,
    };
    Some(scenario.n1.saturating_sub(consumed_by_training) as u64)
}

/// Runs the full pipeline over a generated stream and returns the trace.
///
/// In inductive mode the training prefix must end before the change point.
pub fn run_experiment(scenario: &ScenarioSpec, config: &StreamConfig) -> Result<RunTrace> {
    if config.mode == PvalueMode::Inductive && config.train_size >= scenario.n1 {
        return Err(Error::InvalidConfig(format!(
            "training size {} must be smaller than the pre-change length {}",
            config.train_size, scenario.n1
        )));
    }
    let stream = generate_stream(scenario)?;
    let mut detector = StreamDetector::new(config.clone())?;
    let mut records = Vec::new();
    for sample in stream {
        match detector.push(sample)? {
            PushOutcome::Step(record) => records.push(record),
            PushOutcome::Training => {}
            PushOutcome::Halted => break,
        }
    }
    Ok(RunTrace {
        records,
        alarms: detector.alarms().to_vec(),
        change_step: change_step_for(scenario, config),
    })
}

/// Trace plus summary statistics for one betting choice.
#[derive(Debug, Clone)]
pub struct MartingaleSummary {
    pub betting: &'static str,
    pub trace: RunTrace,
    /// Largest martingale value at steps after the change (whole trace for
    /// shift-free scenarios).
    pub peak_post_change: f64,
    /// Variance of the martingale values at steps up to the change.
    pub pre_change_variance: f64,
}

/// Side-by-side comparison report.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub runs: Vec<MartingaleSummary>,
}

fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
}

fn summarize(betting: &'static str, trace: RunTrace) -> MartingaleSummary {
    let change = trace.change_step.unwrap_or(0);
    let peak_post_change = trace
        .records
        .iter()
        .filter(|r| r.step > change)
        .map(|r| r.martingale)
        .fold(f64::NEG_INFINITY, f64::max);
    let pre_change: Vec<f64> = trace
        .records
        .iter()
        .filter(|r| r.step <= change || trace.change_step.is_none())
        .map(|r| r.martingale)
        .collect();
    MartingaleSummary {
        betting,
        trace,
        peak_post_change,
        pre_change_variance: variance(&pre_change),
    }
}

/// Extracts the p-value sequence of a scenario under a configuration. The
/// sequence does not depend on the betting choice, only on the samples,
/// the p-value mode and the tie-break seed.
pub fn pvalue_stream(scenario: &ScenarioSpec, config: &StreamConfig) -> Result<Vec<f64>> {
    let mut probe = config.clone();
    probe.betting = BettingSpec::ShiftedOdd {
        g: OddFunction::neg_identity(),
    };
    probe.continue_after_alarm = true; // a halt would truncate the stream
    if probe.detector.test == crate::detector::TestKind::Doob {
        probe.detector.test = crate::detector::TestKind::Azuma;
    }
    let trace = run_experiment(scenario, &probe)?;
    Ok(trace.records.iter().map(|r| r.p_value).collect())
}

fn default_bound(spec: &BettingSpec) -> f64 {
    match spec {
        BettingSpec::PluginBeta => DEFAULT_PLUGIN_CLIP,
        _ => 1.0,
    }
}

/// Replays one p-value sequence through a fresh martingale engine, with
/// alarms evaluated but never allowed to halt or reset the sequence.
fn replay(
    spec: &BettingSpec,
    pvalues: &[f64],
    base: &StreamConfig,
    change_step: Option<u64>,
) -> Result<RunTrace> {
    let mut estimator = match base.estimator {
        EstimatorChoice::Windowed(size) => {
            PvalueDensityEstimator::windowed(size.unwrap_or(base.detector.window))?
        }
        EstimatorChoice::Cumulative => PvalueDensityEstimator::cumulative(),
    };
    let mut detector_config = base.detector;
    detector_config.bound = default_bound(spec);
    let mut records = Vec::with_capacity(pvalues.len());
    let mut alarms = Vec::new();

    match spec {
        BettingSpec::ShiftedOdd { .. } | BettingSpec::PluginBeta => {
            let betting = match spec {
                BettingSpec::ShiftedOdd { g } => AdditiveBetting::ShiftedOdd(g.clone()),
                _ => AdditiveBetting::Plugin {
                    clip: detector_config.bound,
                },
            };
            let mut martingale = AdditiveMartingale::new(detector_config.window);
            for (i, &p) in pvalues.iter().enumerate() {
                let step = i as u64 + 1;
                let outcome = additive_step(&mut martingale, &betting, &mut estimator, p);
                let alarm = step_decision(&detector_config, &martingale, step);
                if let Some(alarm) = alarm {
                    alarms.push(alarm);
                }
                records.push(StepRecord {
                    step,
                    p_value: p,
                    increment: outcome.increment,
                    martingale: outcome.value,
                    alpha_hat: outcome.fit.params.alpha(),
                    beta_hat: outcome.fit.params.beta(),
                    alarm: alarm.is_some(),
                });
            }
        }
        BettingSpec::Power { epsilon } => {
            let mut martingale = PowerMartingale::new(*epsilon);
            for (i, &p) in pvalues.iter().enumerate() {
                let fit = estimator.fit();
                let increment = martingale.step(p);
                estimator.observe(p);
                records.push(StepRecord {
                    step: i as u64 + 1,
                    p_value: p,
                    increment,
                    martingale: martingale.log_value(),
                    alpha_hat: fit.params.alpha(),
                    beta_hat: fit.params.beta(),
                    alarm: false,
                });
            }
        }
        BettingSpec::MixturePower { grid } => {
            let mut martingale = MixturePowerMartingale::new(grid.clone());
            for (i, &p) in pvalues.iter().enumerate() {
                let fit = estimator.fit();
                let before = martingale.log_value();
                martingale.step(p);
                estimator.observe(p);
                records.push(StepRecord {
                    step: i as u64 + 1,
                    p_value: p,
                    increment: martingale.log_value() - before,
                    martingale: martingale.log_value(),
                    alpha_hat: fit.params.alpha(),
                    beta_hat: fit.params.beta(),
                    alarm: false,
                });
            }
        }
    }
    Ok(RunTrace {
        records,
        alarms,
        change_step,
    })
}

/// Runs every betting choice over the *same* p-value sequence and
/// summarizes each trajectory.
///
/// The p-values (θ draws included) are computed once and replayed, so the
/// comparison is exact: no spec can see a different stream. Alarms are
/// evaluated along the way but never interrupt a trajectory, matching how
/// the martingale curves are compared side by side.
pub fn compare_martingales(
    scenario: &ScenarioSpec,
    base: &StreamConfig,
    specs: &[BettingSpec],
) -> Result<ComparisonReport> {
    for spec in specs {
        spec.validate()?;
    }
    let pvalues = pvalue_stream(scenario, base)?;
    let change_step = change_step_for(scenario, base);
    let mut runs = Vec::with_capacity(specs.len());
    for spec in specs {
        let trace = replay(spec, &pvalues, base, change_step)?;
        runs.push(summarize(spec.family_name(), trace));
    }
    Ok(ComparisonReport { runs })
}
