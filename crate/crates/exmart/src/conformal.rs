//! Conformal p-values from nonconformity scores.
//!
//! Two modes are provided:
//!
//! * **full**: at step `i` every score `α_j = A(z_j, {z_1,…,z_i})` is
//!   recomputed leave-one-out over the whole history, then
//!
//!   ```text
//!   p_i = (|{j: α_j > α_i}| + θ_i · |{j: α_j = α_i}|) / i
//!   ```
//!
//!   Under exchangeability the resulting p-values are independent and
//!   uniform on [0,1]. Full mode is exact but expensive; use it for
//!   offline analysis and validation.
//!
//! * **inductive**: scores are computed once against a fixed training set
//!   and the counts range over the precomputed training scores, which makes
//!   the per-step cost O(log m). This is the default for streams.
//!
//! Ties are smoothed by `θ_i`, a uniform draw from a seeded generator, so
//! every trace is reproducible given its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nonconformity::{squared_distance, NonconformityMeasure, Sample, Score};

/// Conformal p-value in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PValue(f64);

impl PValue {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidConfig(format!(
                "p-value {value} outside [0,1]"
            )));
        }
        Ok(PValue(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Seeded source of the tie-break randomization θ.
///
/// The draw sequence is bit-reproducible for a fixed seed. Stream `1` of
/// the generator is reserved for θ so that data synthesis (stream `0`,
/// see the harness) never shares draws with the tie-breaker.
#[derive(Debug, Clone)]
pub struct TieBreaker {
    rng: ChaCha8Rng,
}

const THETA_STREAM: u64 = 1;

impl TieBreaker {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(THETA_STREAM);
        TieBreaker { rng }
    }

    /// Next θ, uniform on [0,1); advances the generator state.
    pub fn draw(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Divisor used by the inductive p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// Training size + 1, counting the new sample among its own ties.
    /// Standard for inductive conformal prediction and the default.
    #[default]
    TrainingPlusOne,
    /// The literal stream index `i`. Kept for fidelity experiments; with a
    /// fixed training set this divisor breaks uniformity of the p-values,
    /// and early steps are clamped into [0,1].
    StreamIndex,
}

fn count_greater_and_ties(scores: &[Score], target: f64) -> (usize, usize) {
    let mut greater = 0;
    let mut ties = 0;
    for s in scores {
        if s.value() > target {
            greater += 1;
        } else if s.value() == target {
            ties += 1;
        }
    }
    (greater, ties)
}

/// One step of the full (transductive) p-value computation.
///
/// `history` holds all samples seen so far with the newest last. All
/// leave-one-out scores are recomputed with `measure`, so the cost is
/// quadratic in the history length for the nearest-neighbor measure.
pub fn full_pvalue_step<M: NonconformityMeasure + ?Sized>(
    history: &[Sample],
    measure: &M,
    tie: &mut TieBreaker,
) -> Result<PValue> {
    let i = history.len();
    if i == 0 {
        return Err(Error::NoReferenceSamples);
    }
    let theta = tie.draw();
    if i == 1 {
        // Sole sample ties with itself whatever its score is.
        return PValue::new(theta);
    }
    let scores: Vec<Score> = history
        .iter()
        .enumerate()
        .map(|(j, z)| measure.score(z, history, Some(j)))
        .collect::<Result<_>>()?;
    let newest = scores[i - 1].value();
    let (greater, ties) = count_greater_and_ties(&scores, newest);
    PValue::new((greater as f64 + theta * ties as f64) / i as f64)
}

/// Inductive p-value against precomputed training scores.
///
/// Strictly-greater counts range over the training scores; the new score is
/// counted among its own ties, so the tie count is at least one. The
/// divisor is chosen by `mode`: training size + 1 by default, or the
/// caller-supplied stream index `step` in the literal mode.
pub fn inductive_pvalue(
    score: Score,
    training_scores: &[Score],
    theta: f64,
    mode: DenominatorMode,
    step: u64,
) -> Result<PValue> {
    if training_scores.is_empty() {
        return Err(Error::EmptyTrainingScores);
    }
    let (greater, ties) = count_greater_and_ties(training_scores, score.value());
    let numerator = greater as f64 + theta * (ties + 1) as f64;
    let denominator = match mode {
        DenominatorMode::TrainingPlusOne => training_scores.len() as f64 + 1.0,
        DenominatorMode::StreamIndex => {
            if step == 0 {
                return Err(Error::InvalidConfig("stream index must be >= 1".into()));
            }
            step as f64
        }
    };
    PValue::new((numerator / denominator).clamp(0.0, 1.0))
}

/// Streaming inductive p-value calculator over a fixed training set.
///
/// Training scores are sorted once; each step costs two binary searches.
#[derive(Debug, Clone)]
pub struct InductiveConformal {
    sorted: Vec<f64>,
    mode: DenominatorMode,
    step: u64,
}

impl InductiveConformal {
    pub fn new(training_scores: &[Score], mode: DenominatorMode) -> Result<Self> {
        if training_scores.is_empty() {
            return Err(Error::EmptyTrainingScores);
        }
        let mut sorted: Vec<f64> = training_scores.iter().map(|s| s.value()).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(InductiveConformal {
            sorted,
            mode,
            step: 0,
        })
    }

    pub fn next_pvalue(&mut self, score: Score, tie: &mut TieBreaker) -> PValue {
        self.step += 1;
        let theta = tie.draw();
        let target = score.value();
        let at_most = self.sorted.partition_point(|&s| s <= target);
        let below = self.sorted.partition_point(|&s| s < target);
        let greater = self.sorted.len() - at_most;
        let ties = at_most - below;
        let numerator = greater as f64 + theta * (ties + 1) as f64;
        let denominator = match self.mode {
            DenominatorMode::TrainingPlusOne => self.sorted.len() as f64 + 1.0,
            DenominatorMode::StreamIndex => self.step as f64,
        };
        PValue((numerator / denominator).clamp(0.0, 1.0))
    }
}

/// Streaming full-conformal calculator specialized to the nearest-neighbor
/// measure.
///
/// Recomputing every `α_j` from scratch at step `i` costs O(i²) distance
/// evaluations; for the 1-NN measure the same values follow from keeping
/// each sample's current nearest distance and folding in the one new
/// candidate, which brings a step down to O(i). The resulting scores are
/// identical to the from-scratch recomputation (a minimum over the same
/// distance set), which unit tests assert.
#[derive(Debug, Clone, Default)]
pub struct FullConformal {
    history: Vec<Sample>,
    nn_distance: Vec<f64>,
}

impl FullConformal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, z: Sample, tie: &mut TieBreaker) -> Result<PValue> {
        if let Some(first) = self.history.first() {
            if first.dim() != z.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: z.dim(),
                });
            }
        }
        let mut newest = f64::INFINITY;
        for (j, old) in self.history.iter().enumerate() {
            let d = squared_distance(old.features(), z.features());
            self.nn_distance[j] = self.nn_distance[j].min(d);
            newest = newest.min(d);
        }
        self.history.push(z);
        self.nn_distance.push(newest);

        let i = self.history.len();
        let theta = tie.draw();
        if i == 1 {
            return PValue::new(theta);
        }
        let mut greater = 0usize;
        let mut ties = 0usize;
        for &d in &self.nn_distance {
            if d > newest {
                greater += 1;
            } else if d == newest {
                ties += 1;
            }
        }
        PValue::new((greater as f64 + theta * ties as f64) / i as f64)
    }
}
