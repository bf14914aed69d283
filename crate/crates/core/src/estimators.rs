//! Median-of-means estimation at a confidence level.
//!
//! Samples are split, in observation order, into `m` contiguous blocks whose
//! sizes differ by at most one. With `n = q·m + r` the first `r` blocks hold
//! `q + 1` samples and the rest hold `q`. The estimate is the median of the
//! block means; an even number of blocks uses the mean of the two central
//! block means.

use thiserror::Error;

/// `sqrt(12 · 16)`, the deviation constant of the median-of-means bound.
pub const C1: f64 = 13.856_406_460_551_018;
/// `exp(1/8)`, the confidence constant of the median-of-means bound.
pub const C2: f64 = 1.133_148_453_066_826_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("no samples")]
    NoSamples,
    #[error("confidence level {0} outside (0, 1/2]")]
    InvalidDelta(f64),
    #[error("kurtosis bound {0} must be finite and at least 1")]
    InvalidKappa(f64),
}

/// Constants and levels shared by the median-of-means bound and the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams {
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl ConfidenceParams {
    pub fn new(delta: f64, kappa: f64) -> Result<Self, EstimatorError> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(EstimatorError::InvalidDelta(delta));
        }
        if !(kappa.is_finite() && kappa >= 1.0) {
            return Err(EstimatorError::InvalidKappa(kappa));
        }
        Ok(Self {
            c1: C1,
            c2: C2,
            delta,
            kappa,
        })
    }

    /// `ln(c2 / delta)`; at least `ln(2·e^(1/8))` for valid params.
    pub fn log_term(&self) -> f64 {
        (self.c2 / self.delta).ln()
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self, EstimatorError> {
        Self::new(delta, self.kappa)
    }
}

/// Number of median-of-means blocks: `min(n, ceil(8 · ln(C2 / delta)))`.
///
/// `n` must be at least one and `delta` in `(0, 1)`.
pub fn block_count(n: usize, delta: f64) -> usize {
    debug_assert!(n >= 1);
    debug_assert!(delta > 0.0 && delta < 1.0);
    let wanted = (8.0 * (C2 / delta).ln()).ceil();
    let wanted = if wanted.is_finite() && wanted < n as f64 {
        wanted as usize
    } else {
        n
    };
    wanted.max(1)
}

/// Contiguous block layout of `n` samples into `m` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    m: usize,
}

impl BlockPartition {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(m >= 1 && m <= n, "need 1 <= m <= n (m = {m}, n = {n})");
        Self { n, m }
    }

    pub fn blocks(&self) -> usize {
        self.m
    }

    /// Half-open sample range of block `j`.
    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        let q = self.n / self.m;
        let r = self.n % self.m;
        let start = j * q + j.min(r);
        let len = q + usize::from(j < r);
        start..start + len
    }

    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.m).map(move |j| self.range(j))
    }
}

/// Mean and (population) central second moment of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStat {
    pub mean: f64,
    pub spread: f64,
}

impl BlockStat {
    /// Mean of `(y - theta)^2` over the block.
    #[inline]
    pub fn shifted_second_moment(&self, theta: f64) -> f64 {
        let d = theta - self.mean;
        d * d + self.spread
    }
}

/// Append-only buffer of observations.
///
/// Alongside the raw values it keeps prefix sums of `y - anchor` and
/// `(y - anchor)^2`, with the anchor fixed to the first observation, so block
/// statistics for any partition cost `O(m)` instead of `O(n)`.
#[derive(Debug, Clone, Default)]
pub struct SampleBuffer {
    values: Vec<f64>,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl SampleBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, y: f64) {
        if self.values.is_empty() {
            self.prefix.push(0.0);
            self.prefix_sq.push(0.0);
        }
        let anchor = self.anchor_or(y);
        let d = y - anchor;
        let s = *self.prefix.last().unwrap() + d;
        let s2 = *self.prefix_sq.last().unwrap() + d * d;
        self.values.push(y);
        self.prefix.push(s);
        self.prefix_sq.push(s2);
    }

    fn anchor_or(&self, y: f64) -> f64 {
        self.values.first().copied().unwrap_or(y)
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Block statistics from the prefix sums, written into `out`.
    pub fn block_stats_into(&self, m: usize, out: &mut Vec<BlockStat>) {
        out.clear();
        let anchor = self.anchor_or(0.0);
        let partition = BlockPartition::new(self.count(), m);
        out.extend(partition.ranges().map(|range| {
            let len = range.len() as f64;
            let s = (self.prefix[range.end] - self.prefix[range.start]) / len;
            let s2 = (self.prefix_sq[range.end] - self.prefix_sq[range.start]) / len;
            BlockStat {
                mean: anchor + s,
                spread: (s2 - s * s).max(0.0),
            }
        }));
    }
}

impl From<Vec<f64>> for SampleBuffer {
    fn from(values: Vec<f64>) -> Self {
        let mut buf = SampleBuffer::new();
        for y in values {
            buf.push(y);
        }
        buf
    }
}

impl FromIterator<f64> for SampleBuffer {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut buf = SampleBuffer::new();
        for y in iter {
            buf.push(y);
        }
        buf
    }
}

impl AsRef<[f64]> for SampleBuffer {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Median of a scratch slice; reorders it. Even lengths average the two
/// central values.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (left, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median of block means with an explicit block count.
pub fn median_of_blocks(samples: &[f64], m: usize) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    let partition = BlockPartition::new(samples.len(), m);
    let mut means: Vec<f64> = partition
        .ranges()
        .map(|r| {
            let len = r.len() as f64;
            samples[r].iter().sum::<f64>() / len
        })
        .collect();
    Ok(median_in_place(&mut means))
}

/// Median-of-means estimate at confidence level `delta`.
pub fn median_of_means(samples: &[f64], delta: f64) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    median_of_blocks(samples, block_count(samples.len(), delta))
}

/// Median-of-means of `(y - center)^2` with an explicit block count.
pub fn second_moment_of_blocks(
    samples: &[f64],
    center: f64,
    m: usize,
) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    let squares: Vec<f64> = samples.iter().map(|y| (y - center) * (y - center)).collect();
    median_of_blocks(&squares, m)
}

/// Median-of-means of `(y - center)^2`, same block layout as
/// [`median_of_means`] on the same count and level.
pub fn mom_second_moment(
    samples: &[f64],
    center: f64,
    delta: f64,
) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    second_moment_of_blocks(samples, center, block_count(samples.len(), delta))
}

/// `(1/n) Σ y²` for already-centered observations.
pub fn naive_variance_estimate(samples: &[f64]) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    Ok(samples.iter().map(|y| y * y).sum::<f64>() / samples.len() as f64)
}

/// Block statistics computed directly from the samples (two-pass per block).
pub fn block_stats(samples: &[f64], m: usize) -> Result<Vec<BlockStat>, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    let partition = BlockPartition::new(samples.len(), m);
    Ok(partition
        .ranges()
        .map(|r| {
            let block = &samples[r];
            let len = block.len() as f64;
            let mean = block.iter().sum::<f64>() / len;
            let spread = block.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / len;
            BlockStat { mean, spread }
        })
        .collect())
}

/// Lemma-style deviation radius `C1 · sqrt(variance / n · ln(C2 / delta))`.
pub fn deviation_radius(variance: f64, n: usize, delta: f64) -> f64 {
    C1 * (variance / n as f64 * (C2 / delta).ln()).sqrt()
}
