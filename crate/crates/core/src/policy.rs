//! Round-by-round kurtosis UCB policy.
//!
//! Each round plays the arm with the largest optimistic mean at level
//! `δ_t = min(1/(t² ln(1+t)), 1/2)`, where `t` is the number of completed
//! rounds. Unpulled arms are played first in index order.

use crate::estimators::{ConfidenceParams, EstimatorError, SampleBuffer};
use crate::index::{IndexEvaluator, Solver};

/// `min(1/(t² ln(1+t)), 1/2)` for `t ≥ 1`.
pub fn delta_schedule(t: u64) -> f64 {
    debug_assert!(t >= 1);
    let t = t as f64;
    (1.0 / (t * t * t.ln_1p())).min(0.5)
}

/// Argmax with ties broken by fewest pulls, then lowest arm index.
/// `+∞` entries compare equal to each other.
pub fn argmax_tie_break(indices: &[f64], counts: &[usize]) -> usize {
    debug_assert_eq!(indices.len(), counts.len());
    let mut best = 0;
    for i in 1..indices.len() {
        let (a, b) = (indices[i], indices[best]);
        if a > b || (a == b && counts[i] < counts[best]) {
            best = i;
        }
    }
    best
}

/// Per-arm reward buffers plus the round counter.
#[derive(Debug)]
pub struct PolicyState {
    arms: Vec<SampleBuffer>,
    t: u64,
    kappa: f64,
    rng_tag: u64,
    evaluator: IndexEvaluator,
    scores: Vec<f64>,
    counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error(transparent)]
    Params(#[from] EstimatorError),
}

impl PolicyState {
    pub fn new(k: usize, kappa: f64) -> Result<Self, PolicyError> {
        Self::with_solver(k, kappa, Solver::default())
    }

    pub fn with_solver(k: usize, kappa: f64, solver: Solver) -> Result<Self, PolicyError> {
        if k < 2 {
            return Err(PolicyError::TooFewArms(k));
        }
        // validates kappa
        ConfidenceParams::new(0.5, kappa)?;
        Ok(Self {
            arms: vec![SampleBuffer::new(); k],
            t: 0,
            kappa,
            rng_tag: 0,
            evaluator: IndexEvaluator::new(solver),
            scores: vec![0.0; k],
            counts: vec![0; k],
        })
    }

    /// Tag recorded for audit; tie-breaking itself is deterministic.
    pub fn with_rng_tag(mut self, tag: u64) -> Self {
        self.rng_tag = tag;
        self
    }

    pub fn rng_tag(&self) -> u64 {
        self.rng_tag
    }

    pub fn arms(&self) -> &[SampleBuffer] {
        &self.arms
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn pull_counts(&self) -> Vec<usize> {
        self.arms.iter().map(SampleBuffer::count).collect()
    }

    /// Current optimistic means, at level `delta_schedule(t)`.
    /// Unpulled arms report `+∞`.
    pub fn indices(&mut self) -> Vec<f64> {
        self.refresh_scores();
        self.scores.clone()
    }

    fn refresh_scores(&mut self) {
        let params = ConfidenceParams::new(delta_schedule(self.t.max(1)), self.kappa)
            .expect("schedule stays in (0, 1/2]");
        for (i, arm) in self.arms.iter().enumerate() {
            self.counts[i] = arm.count();
            self.scores[i] = if arm.is_empty() {
                f64::INFINITY
            } else {
                self.evaluator
                    .evaluate(arm, &params)
                    .expect("non-empty buffer")
                    .value
            };
        }
    }

    pub fn select_action(&mut self) -> usize {
        if let Some(i) = self.arms.iter().position(SampleBuffer::is_empty) {
            return i;
        }
        self.refresh_scores();
        argmax_tie_break(&self.scores, &self.counts)
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.arms[arm].push(reward);
        self.t += 1;
    }
}
