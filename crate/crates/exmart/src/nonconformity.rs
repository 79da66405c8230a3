//! Nonconformity scoring of a sample against a reference set.
//!
//! A nonconformity measure maps a sample to a non-negative score reflecting
//! how strange it is relative to the reference samples. The shipped measure
//! is the distance to the nearest neighbor,
//!
//! ```text
//! α_i = min_{j ≠ i} d(z_i, z_j)
//! ```
//!
//! with `d` the Euclidean distance. Other measures plug in through the
//! [`NonconformityMeasure`] trait.

use crate::error::{Error, Result};

/// One observation from the stream: a real-valued feature vector.
///
/// Features are validated to be finite at construction; dimensionality
/// consistency across a stream is enforced by the consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    features: Vec<f64>,
}

impl Sample {
    pub fn new(features: Vec<f64>) -> Result<Self> {
        for (index, x) in features.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteFeature { index });
            }
        }
        Ok(Sample { features })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Non-negative nonconformity score.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidScore(value));
        }
        Ok(Score(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Pluggable scoring interface: one method, stateless, reentrant.
pub trait NonconformityMeasure {
    /// Scores `sample` against `reference`, skipping `exclude` if given
    /// (leave-one-out mode, used when the sample is itself part of the
    /// reference set).
    fn score(&self, sample: &Sample, reference: &[Sample], exclude: Option<usize>)
        -> Result<Score>;
}

/// Distance to the nearest neighbor under the Euclidean metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighbor;

impl NonconformityMeasure for NearestNeighbor {
    fn score(
        &self,
        sample: &Sample,
        reference: &[Sample],
        exclude: Option<usize>,
    ) -> Result<Score> {
        nn_score(sample, reference, exclude)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Minimum Euclidean distance from `z` to any non-excluded reference sample.
pub fn nn_score(z: &Sample, reference: &[Sample], exclude: Option<usize>) -> Result<Score> {
    let mut best = f64::INFINITY;
    let mut seen = false;
    for (j, r) in reference.iter().enumerate() {
        if exclude == Some(j) {
            continue;
        }
        if r.dim() != z.dim() {
            return Err(Error::DimensionMismatch {
                expected: z.dim(),
                got: r.dim(),
            });
        }
        best = best.min(squared_distance(z.features(), r.features()));
        seen = true;
    }
    if !seen {
        return Err(Error::NoReferenceSamples);
    }
    Ok(Score(best.sqrt()))
}

/// Scores every sample against the reference set.
///
/// When `samples` and `reference` are the same slice, each sample is scored
/// leave-one-out against the rest: element `i` excludes index `i`, so the
/// score is the distance to its nearest *other* neighbor.
pub fn score_batch<M: NonconformityMeasure + ?Sized>(
    samples: &[Sample],
    reference: &[Sample],
    measure: &M,
) -> Result<Vec<Score>> {
    let leave_one_out = std::ptr::eq(samples, reference);
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| measure.score(s, reference, if leave_one_out { Some(i) } else { None }))
        .collect()
}
