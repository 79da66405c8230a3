//! Single-pass detection pipeline over a sample stream.
//!
//! Wiring order per step: score the sample, compute its p-value, read the
//! current density fit, compute the bet, hand the p-value to the estimator,
//! advance the martingale, test for an alarm. The fit read at step n thus
//! never sees p_n, which is what keeps the plug-in sequence a martingale.
//!
//! Memory is O(training size + window) in inductive mode; full mode keeps
//! the whole history by construction.

use crate::beta_stats::PvalueDensityEstimator;
use crate::betting::BettingSpec;
use crate::conformal::{DenominatorMode, FullConformal, InductiveConformal, TieBreaker};
use crate::detector::{step_decision, Alarm, DetectorConfig};
use crate::error::{Error, Result};
use crate::martingale::{
    additive_step, AdditiveBetting, AdditiveMartingale, MixturePowerMartingale, PowerMartingale,
};
use crate::nonconformity::{nn_score, score_batch, NearestNeighbor, Sample};

/// How p-values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PvalueMode {
    /// Algorithm-1 style: leave-one-out over the whole history. Exact but
    /// O(i) per step and O(n) memory.
    Full,
    /// Against a fixed training prefix of the stream. The default.
    #[default]
    Inductive,
}

/// Where the density estimate draws its moments from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    /// Sliding window; `None` shares the detector window size.
    Windowed(Option<usize>),
    Cumulative,
}

impl Default for EstimatorChoice {
    fn default() -> Self {
        EstimatorChoice::Windowed(None)
    }
}

/// Full configuration of one detection stream.
#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub mode: PvalueMode,
    /// Number of leading samples used as the training set (inductive mode).
    pub train_size: usize,
    pub detector: DetectorConfig,
    pub betting: BettingSpec,
    pub estimator: EstimatorChoice,
    pub denominator: DenominatorMode,
    /// Seed for the tie-break randomization θ.
    pub seed: u64,
    /// On alarm: reset the martingale and keep going instead of halting.
    pub continue_after_alarm: bool,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.betting.validate()?;
        if self.mode == PvalueMode::Inductive && self.train_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "inductive mode needs at least 2 training samples for leave-one-out scoring, got {}",
                self.train_size
            )));
        }
        if self.detector.test == crate::detector::TestKind::Doob {
            let valid =
                matches!(&self.betting, BettingSpec::ShiftedOdd { g } if g.is_neg_identity());
            if !valid {
                return Err(Error::InvalidConfig(
                    "the doob test is derived for the betting function f(p) = -p + 1/2; \
                     pair it with the default odd betting"
                        .into(),
                ));
            }
        }
        if let EstimatorChoice::Windowed(Some(w)) = self.estimator {
            if w < 2 {
                return Err(Error::InvalidConfig(format!(
                    "estimator window must be >= 2, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the per-step trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based p-value step index (training samples are not steps).
    pub step: u64,
    pub p_value: f64,
    /// Additive bet, or the change in the log-scale multiplicative value.
    pub increment: f64,
    /// Martingale value: `S_n` for additive betting, `log S_n` otherwise.
    pub martingale: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub alarm: bool,
}

/// Outcome of feeding one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PushOutcome {
    /// Sample absorbed into the training set; no p-value yet.
    Training,
    /// A full detection step happened.
    Step(StepRecord),
    /// An earlier alarm halted the detector; the sample was ignored.
    Halted,
}

enum Scorer {
    Collecting(Vec<Sample>),
    Inductive {
        training: Vec<Sample>,
        conformal: InductiveConformal,
    },
    Full(FullConformal),
}

enum Engine {
    Additive {
        martingale: AdditiveMartingale,
        betting: AdditiveBetting,
    },
    Power(PowerMartingale),
    Mixture(MixturePowerMartingale),
}

/// Streaming detector: feed samples, collect step records and alarms.
pub struct StreamDetector {
    config: StreamConfig,
    tie: TieBreaker,
    scorer: Scorer,
    engine: Engine,
    estimator: PvalueDensityEstimator,
    step: u64,
    dim: Option<usize>,
    alarms: Vec<Alarm>,
    halted: bool,
    clipped_steps: u64,
    clipped_mass: f64,
}

/// Default clip bound for plug-in increments when none is configured.
pub const DEFAULT_PLUGIN_CLIP: f64 = 3.0;

impl StreamDetector {
    pub fn new(config: StreamConfig) -> Result<Self> {
        config.validate()?;
        let scorer = match config.mode {
            PvalueMode::Inductive => Scorer::Collecting(Vec::with_capacity(config.train_size)),
            PvalueMode::Full => Scorer::Full(FullConformal::new()),
        };
        let engine = match &config.betting {
            BettingSpec::ShiftedOdd { g } => Engine::Additive {
                martingale: AdditiveMartingale::new(config.detector.window),
                betting: AdditiveBetting::ShiftedOdd(g.clone()),
            },
            BettingSpec::PluginBeta => Engine::Additive {
                martingale: AdditiveMartingale::new(config.detector.window),
                betting: AdditiveBetting::Plugin {
                    clip: config.detector.bound,
                },
            },
            BettingSpec::Power { epsilon } => Engine::Power(PowerMartingale::new(*epsilon)),
            BettingSpec::MixturePower { grid } => {
                Engine::Mixture(MixturePowerMartingale::new(grid.clone()))
            }
        };
        let estimator = match config.estimator {
            EstimatorChoice::Windowed(size) => {
                PvalueDensityEstimator::windowed(size.unwrap_or(config.detector.window))?
            }
            EstimatorChoice::Cumulative => PvalueDensityEstimator::cumulative(),
        };
        let tie = TieBreaker::new(config.seed);
        Ok(StreamDetector {
            config,
            tie,
            scorer,
            engine,
            estimator,
            step: 0,
            dim: None,
            alarms: Vec::new(),
            halted: false,
            clipped_steps: 0,
            clipped_mass: 0.0,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn alarms(&self) -> &[Alarm] {
        &self.alarms
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    /// Steps at which the plug-in increment hit the clip bound, and the
    /// total magnitude removed by clipping.
    pub fn clip_telemetry(&self) -> (u64, f64) {
        (self.clipped_steps, self.clipped_mass)
    }

    pub fn push(&mut self, sample: Sample) -> Result<PushOutcome> {
        if self.halted {
            return Ok(PushOutcome::Halted);
        }
        match self.dim {
            None => self.dim = Some(sample.dim()),
            Some(d) if d != sample.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: sample.dim(),
                })
            }
            _ => {}
        }

        // p-value for this sample
        let p = match &mut self.scorer {
            Scorer::Collecting(buffer) => {
                buffer.push(sample);
                if buffer.len() == self.config.train_size {
                    let training = std::mem::take(buffer);
                    let scores = score_batch(&training, &training, &NearestNeighbor)?;
                    let conformal = InductiveConformal::new(&scores, self.config.denominator)?;
                    self.scorer = Scorer::Inductive {
                        training,
                        conformal,
                    };
                }
                return Ok(PushOutcome::Training);
            }
            Scorer::Inductive {
                training,
                conformal,
            } => {
                let score = nn_score(&sample, training, None)?;
                conformal.next_pvalue(score, &mut self.tie)
            }
            Scorer::Full(full) => full.push(sample, &mut self.tie)?,
        };

        self.step += 1;
        let record = match &mut self.engine {
            Engine::Additive {
                martingale,
                betting,
            } => {
                let outcome = additive_step(martingale, betting, &mut self.estimator, p.value());
                if outcome.clipped {
                    self.clipped_steps += 1;
                    self.clipped_mass += (outcome.raw_increment - outcome.increment).abs();
                }
                let alarm = step_decision(&self.config.detector, martingale, self.step);
                if let Some(alarm) = alarm {
                    self.alarms.push(alarm);
                    if self.config.continue_after_alarm {
                        martingale.reset();
                    } else {
                        self.halted = true;
                    }
                }
                StepRecord {
                    step: self.step,
                    p_value: p.value(),
                    increment: outcome.increment,
                    martingale: outcome.value,
                    alpha_hat: outcome.fit.params.alpha(),
                    beta_hat: outcome.fit.params.beta(),
                    alarm: alarm.is_some(),
                }
            }
            Engine::Power(power) => {
                let fit = self.estimator.fit();
                let increment = power.step(p.value());
                self.estimator.observe(p.value());
                StepRecord {
                    step: self.step,
                    p_value: p.value(),
                    increment,
                    martingale: power.log_value(),
                    alpha_hat: fit.params.alpha(),
                    beta_hat: fit.params.beta(),
                    alarm: false,
                }
            }
            Engine::Mixture(mixture) => {
                let fit = self.estimator.fit();
                let before = mixture.log_value();
                mixture.step(p.value());
                let after = mixture.log_value();
                self.estimator.observe(p.value());
                StepRecord {
                    step: self.step,
                    p_value: p.value(),
                    increment: after - before,
                    martingale: after,
                    alpha_hat: fit.params.alpha(),
                    beta_hat: fit.params.beta(),
                    alarm: false,
                }
            }
        };
        Ok(PushOutcome::Step(record))
    }
}
