//! Episodes, sweeps and reports: the policy against simulated instances.

mod baselines;
mod coverage;
mod episode;
mod invariance;
mod plot;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::InstanceError;
use crate::policy::PolicyError;

pub use baselines::{
    baseline_f_index, baseline_known_variance_index, f_schedule, FIndexUcb, KnownVarianceUcb,
    Policy,
};
pub use coverage::{mom_coverage, optimism_coverage, CoverageRow};
pub use episode::{
    checkpoint_grid, run_episode, run_replications, theorem1_bound, Checkpoint, ExperimentConfig, Trajectory,
};
pub use invariance::{invariance_check, InvarianceReport};
pub use plot::regret_svg;
pub use sweep::{sweep, write_csv, GridConfig, RegretCurve, SweepOutput, SweepRow, CSV_COLUMNS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trivial instance: every gap is zero")]
    TrivialInstance,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    KurtosisUcb,
    KnownVarianceUcb,
    FIndex,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::KurtosisUcb,
        Algorithm::KnownVarianceUcb,
        Algorithm::FIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::KurtosisUcb => "kurtosis_ucb",
            Algorithm::KnownVarianceUcb => "known_variance_ucb",
            Algorithm::FIndex => "f_index",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown algorithm `{s}` (expected kurtosis_ucb, known_variance_ucb or f_index)"
                ))
            })
    }
}
