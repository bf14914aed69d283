//! Reference policies: UCB with known variances and the `f(t)` index.

use crate::env::BanditInstance;
use crate::policy::{argmax_tie_break, PolicyState};

use super::{Algorithm, HarnessError};

/// A sequential decision rule.
pub trait Policy {
    fn select_action(&mut self) -> usize;
    fn update(&mut self, arm: usize, reward: f64);
}

impl Policy for PolicyState {
    fn select_action(&mut self) -> usize {
        PolicyState::select_action(self)
    }

    fn update(&mut self, arm: usize, reward: f64) {
        PolicyState::update(self, arm, reward)
    }
}

/// `mean + sqrt(2 σ² ln t / count)`; `+∞` for no samples.
pub fn baseline_known_variance_index(samples: &[f64], sigma2: f64, t: u64) -> f64 {
    debug_assert!(sigma2 > 0.0);
    if samples.is_empty() {
        return f64::INFINITY;
    }
    let n = samples.len() as f64;
    known_variance_index(samples.iter().sum::<f64>() / n, n, sigma2, (t as f64).ln())
}

/// `f(t) = ln t · ln ln(e + t)`, which grows faster than `ln t` and slower
/// than any power of `t`.
pub fn f_schedule(t: u64) -> f64 {
    f_of(t as f64)
}

fn f_of(t: f64) -> f64 {
    t.ln() * (std::f64::consts::E + t).ln().ln()
}

/// `mean + sqrt(f(t) / count)`; `+∞` for no samples.
pub fn baseline_f_index(samples: &[f64], t: u64) -> f64 {
    if samples.is_empty() {
        return f64::INFINITY;
    }
    let n = samples.len() as f64;
    f_index(samples.iter().sum::<f64>() / n, n, t)
}

fn known_variance_index(mean: f64, count: f64, sigma2: f64, ln_t: f64) -> f64 {
    mean + (2.0 * sigma2 * ln_t / count).sqrt()
}

fn f_index(mean: f64, count: f64, t: u64) -> f64 {
    mean + (f_schedule(t) / count).sqrt()
}

/// Running sums per arm; `t` counts completed rounds.
#[derive(Debug, Clone)]
struct Tally {
    sums: Vec<f64>,
    counts: Vec<usize>,
    scores: Vec<f64>,
    t: u64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self {
            sums: vec![0.0; k],
            counts: vec![0; k],
            scores: vec![0.0; k],
            t: 0,
        }
    }

    fn select(&mut self, index: impl Fn(usize, f64, f64, u64) -> f64) -> usize {
        if let Some(i) = self.counts.iter().position(|&c| c == 0) {
            return i;
        }
        for i in 0..self.counts.len() {
            let n = self.counts[i] as f64;
            self.scores[i] = index(i, self.sums[i] / n, n, self.t);
        }
        argmax_tie_break(&self.scores, &self.counts)
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.sums[arm] += reward;
        self.counts[arm] += 1;
        self.t += 1;
    }
}

/// UCB with the true per-arm variances supplied up front.
#[derive(Debug, Clone)]
pub struct KnownVarianceUcb {
    variances: Vec<f64>,
    tally: Tally,
}

impl KnownVarianceUcb {
    pub fn new(variances: Vec<f64>) -> Result<Self, HarnessError> {
        if variances.len() < 2 {
            return Err(HarnessError::Config("need at least two arms".into()));
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config(format!("known variance {v} must be positive")));
        }
        let k = variances.len();
        Ok(Self {
            variances,
            tally: Tally::new(k),
        })
    }
}

impl Policy for KnownVarianceUcb {
    fn select_action(&mut self) -> usize {
        let variances = &self.variances;
        self.tally
            .select(|i, mean, n, t| known_variance_index(mean, n, variances[i], (t as f64).ln()))
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.tally.update(arm, reward)
    }
}

/// Index `mean + sqrt(f(t)/count)`; needs no knowledge of the arms.
#[derive(Debug, Clone)]
pub struct FIndexUcb {
    tally: Tally,
}

impl FIndexUcb {
    pub fn new(k: usize) -> Result<Self, HarnessError> {
        if k < 2 {
            return Err(HarnessError::Config("need at least two arms".into()));
        }
        Ok(Self { tally: Tally::new(k) })
    }
}

impl Policy for FIndexUcb {
    fn select_action(&mut self) -> usize {
        self.tally.select(|_, mean, n, t| f_index(mean, n, t))
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.tally.update(arm, reward)
    }
}

impl Algorithm {
    /// Fresh policy for `instance`.
    pub fn build(self, instance: &BanditInstance) -> Result<Box<dyn Policy + Send>, HarnessError> {
        Ok(match self {
            Algorithm::KurtosisUcb => {
                Box::new(PolicyState::new(instance.len(), instance.kappa_bound())?)
            }
            Algorithm::KnownVarianceUcb => Box::new(KnownVarianceUcb::new(
                instance.arms().iter().map(|d| d.variance()).collect(),
            )?),
            Algorithm::FIndex => Box::new(FIndexUcb::new(instance.len())?),
        })
    }
}
