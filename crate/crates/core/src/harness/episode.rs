//! One policy run against one instance, with the regret sampled on a
//! logarithmic grid of rounds.

use rand_chacha::ChaCha8Rng;

use crate::env::{arm_stream, BanditInstance};
use crate::exec::Execution;

use super::{Algorithm, HarnessError};

/// Everything needed to reproduce a batch of episodes.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub execution: Execution,
    /// Rounds recorded on top of [`checkpoint_grid`].
    pub extra_checkpoints: Vec<u64>,
}

impl ExperimentConfig {
    pub fn new(
        instance: BanditInstance,
        horizon: u64,
        replications: u64,
        seed: u64,
        algorithm: Algorithm,
    ) -> Result<Self, HarnessError> {
        let config = Self {
            instance,
            horizon,
            replications,
            seed,
            algorithm,
            execution: Execution::default(),
            extra_checkpoints: Vec::new(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon < self.instance.len() as u64 {
            return Err(HarnessError::Config(format!(
                "horizon {} is below the number of arms {}",
                self.horizon,
                self.instance.len()
            )));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config("need at least one replication".into()));
        }
        Ok(())
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        let mut extra = self.extra_checkpoints.clone();
        extra.extend(self.extra_checkpoints.iter().map(|h| h / 10));
        checkpoint_grid(self.horizon, &extra)
    }
}

/// Ten log-spaced rounds per decade up to `n`, plus `n`, every `n / 10^j`,
/// and any `extra` rounds in `1..=n`. Sorted and deduplicated.
pub fn checkpoint_grid(n: u64, extra: &[u64]) -> Vec<u64> {
    let mut grid = Vec::new();
    for j in 0.. {
        let r = 10f64.powf(j as f64 / 10.0).round() as u64;
        if r > n {
            break;
        }
        grid.push(r);
    }
    let mut d = n;
    while d >= 1 {
        grid.push(d);
        d /= 10;
    }
    grid.extend(extra.iter().copied().filter(|&r| r >= 1 && r <= n));
    grid.sort_unstable();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub round: u64,
    /// `Σ_i Δ_i · T_i(round)`.
    pub regret: f64,
    pub pulls: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub actions: Vec<usize>,
    pub pull_counts: Vec<u64>,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.regret)
    }

    pub fn regret_at(&self, round: u64) -> Option<f64> {
        self.checkpoint(round).map(|c| c.regret)
    }

    pub fn checkpoint(&self, round: u64) -> Option<&Checkpoint> {
        self.checkpoints
            .binary_search_by_key(&round, |c| c.round)
            .ok()
            .map(|i| &self.checkpoints[i])
    }
}

pub(crate) fn pseudo_regret(gaps: &[f64], pulls: &[u64]) -> f64 {
    gaps.iter().zip(pulls).map(|(d, &t)| d * t as f64).sum()
}

/// Simulates `config.horizon` rounds of replication `replication`.
/// Arm `i` draws from its own stream keyed by `(seed, replication, i)`.
pub fn run_episode(config: &ExperimentConfig, replication: u64) -> Result<Trajectory, HarnessError> {
    config.validate()?;
    let instance = &config.instance;
    let gaps = instance.gaps();
    let mut policy = config.algorithm.build(instance)?;
    let mut streams: Vec<ChaCha8Rng> = (0..instance.len())
        .map(|arm| arm_stream(config.seed, replication, arm))
        .collect();
    let grid = config.checkpoints();
    let mut next = grid.iter().peekable();
    let mut pulls = vec![0u64; instance.len()];
    let mut actions = Vec::with_capacity(config.horizon as usize);
    let mut checkpoints = Vec::with_capacity(grid.len());
    for round in 1..=config.horizon {
        let arm = policy.select_action();
        let reward = instance.arms()[arm].sample(&mut streams[arm]);
        policy.update(arm, reward);
        pulls[arm] += 1;
        actions.push(arm);
        if next.peek() == Some(&&round) {
            next.next();
            checkpoints.push(Checkpoint {
                round,
                regret: pseudo_regret(&gaps, &pulls),
                pulls: pulls.clone(),
            });
        }
    }
    Ok(Trajectory {
        actions,
        pull_counts: pulls,
        checkpoints,
    })
}

/// All replications of `config`, in replication order.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<Trajectory>, HarnessError> {
    config
        .execution
        .map(config.replications as usize, |r| run_episode(config, r as u64))
        .into_iter()
        .collect()
}

/// `Σ_{i: Δ_i > 0} Δ_i (κ − 1 + σ_i² / Δ_i²)`, the regret rate without its
/// universal constant.
pub fn theorem1_bound(instance: &BanditInstance, kappa: f64) -> Result<f64, HarnessError> {
    let gaps = instance.gaps();
    if gaps.iter().all(|&d| d <= 0.0) {
        return Err(HarnessError::TrivialInstance);
    }
    Ok(gaps
        .iter()
        .zip(instance.arms())
        .filter(|(&d, _)| d > 0.0)
        .map(|(&d, arm)| d * (kappa - 1.0 + arm.variance() / (d * d)))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ArmDistribution;

    fn gauss(means: &[f64]) -> BanditInstance {
        let arms = means
            .iter()
            .map(|&m| ArmDistribution::gaussian(m, 1.0).unwrap())
            .collect();
        BanditInstance::new("g", arms, None).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = checkpoint_grid(1000, &[]);
        assert_eq!(&g[..4], &[1, 2, 3, 4]);
        for r in [1, 10, 100, 1000, 316, 501] {
            assert!(g.contains(&r), "{r}");
        }
        assert_eq!(*g.last().unwrap(), 1000);
        let h = checkpoint_grid(250, &[7, 9999]);
        assert!(h.contains(&25) && h.contains(&7) && h.contains(&250));
        assert!(!h.contains(&9999));
    }

    #[test]
    fn first_rounds_are_forced() {
        for algo in Algorithm::ALL {
            let cfg = ExperimentConfig::new(gauss(&[1.0, 0.0]), 2, 1, 0, algo).unwrap();
            assert_eq!(run_episode(&cfg, 0).unwrap().actions, vec![0, 1]);
        }
    }

    #[test]
    fn identical_arms_have_no_regret() {
        let cfg = ExperimentConfig::new(gauss(&[0.5, 0.5]), 500, 1, 3, Algorithm::KurtosisUcb)
            .unwrap();
        let t = run_episode(&cfg, 0).unwrap();
        assert!(t.checkpoints.iter().all(|c| c.regret == 0.0));
    }

    #[test]
    fn regret_from_counts() {
        assert_eq!(pseudo_regret(&[0.0, 0.5], &[90, 10]), 5.0);
    }

    #[test]
    fn trajectory_invariants() {
        let cfg = ExperimentConfig::new(gauss(&[1.0, 0.0, 0.2]), 3000, 1, 9, Algorithm::FIndex)
            .unwrap();
        let t = run_episode(&cfg, 4).unwrap();
        assert_eq!(t.actions.len(), 3000);
        assert_eq!(t.pull_counts.iter().sum::<u64>(), 3000);
        assert!(t.checkpoints.windows(2).all(|w| w[0].regret <= w[1].regret));
        assert_eq!(t.checkpoints.last().unwrap().round, 3000);
        assert_eq!(run_episode(&cfg, 4).unwrap(), t);
        assert_ne!(run_episode(&cfg, 5).unwrap().actions, t.actions);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(gauss(&[1.0, 0.0]), 1, 1, 0, Algorithm::FIndex).is_err());
        assert!(ExperimentConfig::new(gauss(&[1.0, 0.0]), 10, 0, 0, Algorithm::FIndex).is_err());
    }

    #[test]
    fn bound_examples() {
        let g = gauss(&[1.0, 0.0]);
        assert_eq!(theorem1_bound(&g, 3.0).unwrap(), 3.0);
        let scaled = g.affine(4.0, 1.0).unwrap();
        assert_eq!(theorem1_bound(&scaled, 3.0).unwrap(), 12.0);
        assert_eq!(theorem1_bound(&gauss(&[1.0, 0.0, 1.0]), 3.0).unwrap(), 3.0);
        assert!(matches!(
            theorem1_bound(&gauss(&[2.0, 2.0]), 3.0),
            Err(HarnessError::TrivialInstance)
        ));
    }
}
