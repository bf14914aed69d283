//! Coupled-stream check that the policy ignores positive affine maps of
//! the rewards.

use crate::env::BanditInstance;

use super::episode::{run_episode, ExperimentConfig};
use super::{Algorithm, HarnessError};

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub horizon: u64,
    pub scale: f64,
    pub shift: f64,
    /// First round (1-based) where the actions differ.
    pub first_divergence: Option<u64>,
    pub regret: f64,
    pub regret_transformed: f64,
}

impl InvarianceReport {
    pub fn identical_actions(&self) -> bool {
        self.first_divergence.is_none()
    }

    /// Transformed regret equals `scale × regret` bit for bit.
    pub fn exact_scaling(&self) -> bool {
        self.regret_transformed == self.scale * self.regret
    }

    pub fn passed(&self) -> bool {
        self.identical_actions() && self.exact_scaling()
    }
}

/// Runs `algorithm` on `instance` and on its image under `x ↦ scale·x + shift`
/// with the same seed and replication, so both runs see the same uniforms.
pub fn invariance_check(
    instance: &BanditInstance,
    scale: f64,
    shift: f64,
    horizon: u64,
    seed: u64,
    algorithm: Algorithm,
) -> Result<InvarianceReport, HarnessError> {
    let transformed = instance.affine(scale, shift)?;
    let base = ExperimentConfig::new(instance.clone(), horizon, 1, seed, algorithm)?;
    let image = ExperimentConfig::new(transformed, horizon, 1, seed, algorithm)?;
    let a = run_episode(&base, 0)?;
    let b = run_episode(&image, 0)?;
    let first_divergence = a
        .actions
        .iter()
        .zip(&b.actions)
        .position(|(x, y)| x != y)
        .map(|i| i as u64 + 1);
    Ok(InvarianceReport {
        horizon,
        scale,
        shift,
        first_divergence,
        regret: a.final_regret(),
        regret_transformed: b.final_regret(),
    })
}
