//! Grid runs: every (instance, algorithm) cell over shared replications,
//! summarized per horizon.

use std::path::Path;

use serde::Deserialize;

use crate::env::{BanditInstance, InstanceConfig};
use crate::exec::Execution;

use super::episode::{run_episode, theorem1_bound, Checkpoint, ExperimentConfig};
use super::{Algorithm, HarnessError};

/// A resolved experiment grid.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub instances: Vec<BanditInstance>,
    pub algorithms: Vec<Algorithm>,
    pub horizons: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    seed: Option<u64>,
    reps: Option<u64>,
    horizons: Option<Vec<u64>>,
    algos: Option<Vec<Algorithm>>,
    instances: Vec<InstanceConfig>,
}

impl GridConfig {
    pub const DEFAULT_HORIZON: u64 = 10_000;
    pub const DEFAULT_REPS: u64 = 20;

    pub fn single(instance: BanditInstance) -> Self {
        Self {
            instances: vec![instance],
            algorithms: vec![Algorithm::KurtosisUcb],
            horizons: vec![Self::DEFAULT_HORIZON],
            replications: Self::DEFAULT_REPS,
            seed: 0,
        }
    }

    /// Parses either a grid file (top-level `instances`) or a single
    /// instance file (top-level `arms`).
    pub fn from_toml(text: &str, path: &str) -> Result<Self, HarnessError> {
        let bad = |e: toml::de::Error| HarnessError::Config(format!("{path}: {}", e.message()));
        let table: toml::Table = toml::from_str(text).map_err(bad)?;
        if !table.contains_key("instances") {
            return Ok(Self::single(BanditInstance::from_toml(text, path)?));
        }
        let raw: RawGrid = toml::from_str(text).map_err(bad)?;
        let instances = raw
            .instances
            .into_iter()
            .map(BanditInstance::from_config)
            .collect::<Result<Vec<_>, _>>()?;
        let grid = Self {
            instances,
            algorithms: raw.algos.unwrap_or_else(|| vec![Algorithm::KurtosisUcb]),
            horizons: raw.horizons.unwrap_or_else(|| vec![Self::DEFAULT_HORIZON]),
            replications: raw.reps.unwrap_or(Self::DEFAULT_REPS),
            seed: raw.seed.unwrap_or(0),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_toml(&text, &shown)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.instances.is_empty() {
            return Err(HarnessError::Config("no instances".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithms".into()));
        }
        if self.horizons.is_empty() {
            return Err(HarnessError::Config("no horizons".into()));
        }
        let mut ids: Vec<&str> = self.instances.iter().map(BanditInstance::id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(HarnessError::Config(format!("duplicate instance id `{}`", w[0])));
        }
        for instance in &self.instances {
            for &h in &self.horizons {
                self.cell(instance, Algorithm::KurtosisUcb, h).validate()?;
            }
        }
        Ok(())
    }

    fn max_horizon(&self) -> u64 {
        self.horizons.iter().copied().max().unwrap_or(0)
    }

    fn cell(&self, instance: &BanditInstance, algorithm: Algorithm, horizon: u64) -> ExperimentConfig {
        ExperimentConfig {
            instance: instance.clone(),
            horizon,
            replications: self.replications,
            seed: self.seed,
            algorithm,
            execution: Execution::Sequential,
            extra_checkpoints: self.horizons.clone(),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance_id: String,
    pub algo: Algorithm,
    pub n: u64,
    pub mean_regret: f64,
    /// NaN with a single replication.
    pub stderr_regret: f64,
    /// `(R̄_n − R̄_{n/10}) / ln 10`; NaN for `n < 10`.
    pub slope_last_decade: f64,
    /// NaN for an instance whose gaps are all zero.
    pub theorem1_bound: f64,
    pub mean_pulls: Vec<f64>,
}

/// Mean regret of one cell on its checkpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub instance_id: String,
    pub algo: Algorithm,
    pub rounds: Vec<u64>,
    pub mean_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub curves: Vec<RegretCurve>,
}

fn mean_and_stderr(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every cell once at the largest horizon and reads the smaller
/// horizons off the checkpoints. Work items are `(cell, replication)` pairs;
/// rows come back sorted by instance id, algorithm and horizon.
pub fn sweep(grid: &GridConfig, execution: Execution) -> Result<SweepOutput, HarnessError> {
    grid.validate()?;
    let horizon = grid.max_horizon();
    let cells: Vec<ExperimentConfig> = grid
        .instances
        .iter()
        .flat_map(|inst| grid.algorithms.iter().map(move |&a| (inst, a)))
        .map(|(inst, a)| grid.cell(inst, a, horizon))
        .collect();
    let reps = grid.replications as usize;
    let runs: Vec<Vec<Checkpoint>> = execution
        .map(cells.len() * reps, |job| {
            run_episode(&cells[job / reps], (job % reps) as u64).map(|t| t.checkpoints)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let runs = &runs[c * reps..(c + 1) * reps];
        let rounds: Vec<u64> = runs[0].iter().map(|p| p.round).collect();
        let at = |i: usize| runs.iter().map(move |r| r[i].regret);
        let mean_regret: Vec<f64> = (0..rounds.len()).map(|i| mean_and_stderr(at(i)).0).collect();
        let find = |round: u64| rounds.binary_search(&round).ok();
        let bound = theorem1_bound(&cell.instance, cell.instance.kappa_bound()).unwrap_or(f64::NAN);
        for &n in &grid.horizons {
            let i = find(n).expect("horizons are checkpoints");
            let (mean, stderr) = mean_and_stderr(at(i));
            let slope = match (n >= 10).then(|| find(n / 10)).flatten() {
                Some(j) => (mean - mean_regret[j]) / std::f64::consts::LN_10,
                None => f64::NAN,
            };
            let mean_pulls = (0..cell.instance.len())
                .map(|arm| runs.iter().map(|r| r[i].pulls[arm] as f64).sum::<f64>() / reps as f64)
                .collect();
            rows.push(SweepRow {
                instance_id: cell.instance.id().to_string(),
                algo: cell.algorithm,
                n,
                mean_regret: mean,
                stderr_regret: stderr,
                slope_last_decade: slope,
                theorem1_bound: bound,
                mean_pulls,
            });
        }
        curves.push(RegretCurve {
            instance_id: cell.instance.id().to_string(),
            algo: cell.algorithm,
            rounds,
            mean_regret,
        });
    }
    rows.sort_by(|a, b| (&a.instance_id, a.algo, a.n).cmp(&(&b.instance_id, b.algo, b.n)));
    rows.dedup_by(|a, b| (&a.instance_id, a.algo, a.n) == (&b.instance_id, b.algo, b.n));
    Ok(SweepOutput { rows, curves })
}

pub const CSV_COLUMNS: [&str; 7] = [
    "instance_id",
    "algo",
    "n",
    "mean_regret",
    "stderr_regret",
    "slope_last_decade",
    "theorem1_bound",
];

/// Writes rows with one `pulls_arm_i` column per arm of the widest instance;
/// narrower instances leave the extra cells empty.
pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let wrap = |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    };
    let width = rows.iter().map(|r| r.mean_pulls.len()).max().unwrap_or(0);
    let mut out = csv::Writer::from_path(path).map_err(wrap)?;
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..width).map(|i| format!("pulls_arm_{i}")));
    out.write_record(&header).map_err(wrap)?;
    for r in rows {
        let mut record = vec![
            r.instance_id.clone(),
            r.algo.to_string(),
            r.n.to_string(),
            r.mean_regret.to_string(),
            r.stderr_regret.to_string(),
            r.slope_last_decade.to_string(),
            r.theorem1_bound.to_string(),
        ];
        record.extend((0..width).map(|i| r.mean_pulls.get(i).map_or_else(String::new, f64::to_string)));
        out.write_record(&record).map_err(wrap)?;
    }
    out.flush().map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
