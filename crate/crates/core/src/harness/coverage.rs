//! Monte-Carlo coverage of the median-of-means deviation bound and of the
//! optimism of the index.

use crate::env::{arm_stream, ArmDistribution};
use crate::estimators::{deviation_radius, median_of_means, ConfidenceParams, SampleBuffer};
use crate::exec::Execution;
use crate::index::IndexEvaluator;

/// Fraction of trials in which the event of interest occurred, against the
/// level it should stay under.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub distribution: String,
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub failures: usize,
    pub frequency: f64,
    pub bound: f64,
}

impl CoverageRow {
    pub fn holds(&self) -> bool {
        self.frequency <= self.bound
    }
}

fn count(trials: usize, exec: Execution, hit: impl Fn(usize) -> bool + Sync + Send) -> usize {
    exec.map(trials, hit).into_iter().filter(|&b| b).count()
}

fn draws(dist: &ArmDistribution, n: usize, seed: u64, trial: usize) -> Vec<f64> {
    let mut rng = arm_stream(seed, trial as u64, 0);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Frequency of `|MM_δ − μ| ≥ C1 sqrt(σ²/n · ln(C2/δ))`; should be at most `δ`.
pub fn mom_coverage(
    name: &str,
    dist: &ArmDistribution,
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> CoverageRow {
    let radius = deviation_radius(dist.variance(), n, delta);
    let failures = count(trials, exec, |j| {
        let mm = median_of_means(&draws(dist, n, seed, j), delta).expect("n >= 1");
        (mm - dist.mean()).abs() >= radius
    });
    CoverageRow {
        distribution: name.to_string(),
        n,
        delta,
        trials,
        failures,
        frequency: failures as f64 / trials as f64,
        bound: delta,
    }
}

/// Frequency of `optimistic_mean ≤ μ` with `t` samples at level `δ` and the
/// distribution's own kurtosis; should be at most `2δ`.
pub fn optimism_coverage(
    name: &str,
    dist: &ArmDistribution,
    t: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> CoverageRow {
    let params = ConfidenceParams::new(delta, dist.kurtosis()).expect("valid level and kurtosis");
    let failures = count(trials, exec, |j| {
        let buffer: SampleBuffer = draws(dist, t, seed, j).into();
        let index = IndexEvaluator::default()
            .evaluate(&buffer, &params)
            .expect("t >= 1");
        index.value <= dist.mean()
    });
    CoverageRow {
        distribution: name.to_string(),
        n: t,
        delta,
        trials,
        failures,
        frequency: failures as f64 / trials as f64,
        bound: 2.0 * delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_agree_across_modes() {
        let d = ArmDistribution::exponential(1.0).unwrap();
        let a = mom_coverage("exp", &d, 30, 0.5, 200, 1, Execution::Sequential);
        let b = mom_coverage("exp", &d, 30, 0.5, 200, 1, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.bound, 0.5);
        assert!(a.holds());
        let o = optimism_coverage("exp", &d, 50, 0.1, 100, 1, Execution::Sequential);
        assert_eq!(o.bound, 0.2);
        // kappa = 9 at t = 50 leaves the index infinite
        assert_eq!(o.failures, 0);
    }
}
