//! `kucb`: simulations, sweeps and checks for the kurtosis UCB policy.
//!
//! Exit codes: 0 success, 1 a check failed (or output could not be
//! written), 2 bad configuration or input.

mod lowerbound;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kurtosis_ucb::env::{ArmDistribution, DistributionError};
use kurtosis_ucb::harness::{
    invariance_check, mom_coverage, optimism_coverage, regret_svg, sweep, write_csv, Algorithm,
    CoverageRow, GridConfig, HarnessError, SweepOutput,
};
use kurtosis_ucb::lower_bound::DiscreteMeasure;
use kurtosis_ucb::Execution;

#[derive(Debug, Parser)]
#[command(name = "kucb", version, about = "Scale-free kurtosis UCB: simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run work items on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct Common {
    /// Instance or grid file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Horizon; replaces the grid's horizons.
    #[arg(long)]
    horizon: Option<u64>,
    /// Replications (trials for `estimator-bench`).
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Algorithms, comma separated: kurtosis_ucb, known_variance_ucb, f_index.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// Output file (or directory for `sweep`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one (instance, algorithm) cell and print its summary.
    Simulate(Common),
    /// Run a grid; writes `sweep.csv` and one SVG per instance into `--out`.
    Sweep(Common),
    /// Check that a positive affine map of the rewards leaves the actions
    /// unchanged and scales the regret exactly.
    InvarianceCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        scale: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        shift: f64,
    },
    /// Monte-Carlo coverage of the median-of-means radius and of the
    /// optimism of the index.
    EstimatorBench(Common),
    /// KL cost of mean shifts for a finite-support measure.
    Lowerbound(lowerbound::LowerboundArgs),
}

/// A failure with its exit code.
#[derive(Debug)]
pub(crate) struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub(crate) fn check(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_)
            | HarnessError::TrivialInstance
            | HarnessError::Instance(_)
            | HarnessError::Policy(_) => Failure::config(e.to_string()),
            HarnessError::Io { .. } | HarnessError::Csv { .. } => Failure::check(e.to_string()),
        }
    }
}

impl From<DistributionError> for Failure {
    fn from(e: DistributionError) -> Self {
        Failure::config(e.to_string())
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::check(format!("{}: {e}", path.display())))
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn parse_algos(names: &[String]) -> Result<Vec<Algorithm>, Failure> {
    names
        .iter()
        .map(|s| s.trim().parse::<Algorithm>().map_err(Failure::from))
        .collect()
}

/// Loads `--config` and applies the flag overrides.
fn grid(common: &Common) -> Result<GridConfig, Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::config("--config is required"))?;
    let mut grid = GridConfig::load(path).map_err(|e| match e {
        HarnessError::Io { path, source } => Failure::config(format!("{path}: {source}")),
        e => e.into(),
    })?;
    if let Some(h) = common.horizon {
        grid.horizons = vec![h];
    }
    if let Some(r) = common.reps {
        grid.replications = r;
    }
    if let Some(s) = common.seed {
        grid.seed = s;
    }
    if !common.algo.is_empty() {
        grid.algorithms = parse_algos(&common.algo)?;
    }
    grid.validate()?;
    Ok(grid)
}

fn print_rows(out: &SweepOutput) {
    println!(
        "{:<16} {:<20} {:>9} {:>12} {:>10} {:>10} {:>10}  pulls",
        "instance", "algo", "n", "mean_regret", "stderr", "slope", "bound"
    );
    for r in &out.rows {
        let pulls: Vec<String> = r.mean_pulls.iter().map(|p| format!("{p:.1}")).collect();
        println!(
            "{:<16} {:<20} {:>9} {:>12.3} {:>10.3} {:>10.3} {:>10.3}  [{}]",
            r.instance_id,
            r.algo,
            r.n,
            r.mean_regret,
            r.stderr_regret,
            r.slope_last_decade,
            r.theorem1_bound,
            pulls.join(", ")
        );
    }
}

fn simulate(common: &Common, exec: Execution) -> Result<(), Failure> {
    let mut grid = grid(common)?;
    if grid.instances.len() != 1 {
        return Err(Failure::config(format!(
            "simulate runs one instance; the config has {}",
            grid.instances.len()
        )));
    }
    grid.algorithms.truncate(1);
    let out = sweep(&grid, exec)?;
    print_rows(&out);
    if let Some(path) = &common.out {
        write_csv(path, &out.rows)?;
    }
    Ok(())
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn run_sweep(common: &Common, exec: Execution) -> Result<(), Failure> {
    let grid = grid(common)?;
    let dir = common
        .out
        .clone()
        .ok_or_else(|| Failure::config("sweep needs --out <directory>"))?;
    fs::create_dir_all(&dir).map_err(|e| Failure::check(format!("{}: {e}", dir.display())))?;
    let out = sweep(&grid, exec)?;
    print_rows(&out);
    let csv_path = dir.join("sweep.csv");
    write_csv(&csv_path, &out.rows)?;
    println!("wrote {}", csv_path.display());
    for instance in &grid.instances {
        let curves: Vec<_> = out
            .curves
            .iter()
            .filter(|c| c.instance_id == instance.id())
            .cloned()
            .collect();
        let path = dir.join(format!("regret_{}.svg", file_stem(instance.id())));
        write_file(&path, &regret_svg(instance.id(), &curves))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_invariance(common: &Common, scale: f64, shift: f64) -> Result<(), Failure> {
    let grid = grid(common)?;
    if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
        return Err(Failure::config(format!("need scale > 0, got {scale}")));
    }
    let horizon = common.horizon.unwrap_or(10_000);
    let mut all = true;
    for instance in &grid.instances {
        for &algo in &grid.algorithms {
            let r = invariance_check(instance, scale, shift, horizon, grid.seed, algo)?;
            let verdict = if r.passed() { "ok" } else { "FAILED" };
            println!(
                "{} {} n={} x -> {scale}x{shift:+}: first divergence {:?}, regret {} -> {} ({verdict})",
                instance.id(),
                algo,
                horizon,
                r.first_divergence,
                r.regret,
                r.regret_transformed
            );
            all &= r.passed();
        }
    }
    if all {
        Ok(())
    } else {
        Err(Failure::check("invariance check failed"))
    }
}

fn bench_distributions(common: &Common) -> Result<Vec<(String, ArmDistribution)>, Failure> {
    if common.config.is_some() {
        let grid = grid(common)?;
        return Ok(grid
            .instances
            .iter()
            .flat_map(|inst| {
                inst.arms()
                    .iter()
                    .enumerate()
                    .map(move |(i, d)| (format!("{}[{i}]:{}", inst.id(), d.kind_name()), d.clone()))
            })
            .collect());
    }
    let two_point = DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).expect("valid atoms");
    Ok(vec![
        ("gaussian".into(), ArmDistribution::gaussian(0.0, 1.0)?),
        ("exponential".into(), ArmDistribution::exponential(1.0)?),
        ("laplace".into(), ArmDistribution::laplace(0.0, 1.0)?),
        ("uniform".into(), ArmDistribution::uniform(0.0, 1.0)?),
        ("bernoulli(0.1)".into(), ArmDistribution::bernoulli(0.1)?),
        ("two-point".into(), ArmDistribution::discrete(two_point)?),
    ])
}

fn estimator_bench(common: &Common, exec: Execution) -> Result<(), Failure> {
    let dists = bench_distributions(common)?;
    let trials = common.reps.unwrap_or(10_000) as usize;
    if trials == 0 {
        return Err(Failure::config("--reps must be positive"));
    }
    let seed = common.seed.unwrap_or(1);
    let mut rows: Vec<(&str, CoverageRow)> = Vec::new();
    for (name, d) in &dists {
        for n in [30, 300, 3000] {
            for delta in [0.5, 0.1, 0.01] {
                rows.push(("median_of_means", mom_coverage(name, d, n, delta, trials, seed, exec)));
            }
        }
        for t in [50, 500, 5000] {
            for delta in [0.1, 0.01] {
                rows.push(("optimism", optimism_coverage(name, d, t, delta, trials, seed, exec)));
            }
        }
    }
    println!(
        "{:<16} {:<24} {:>6} {:>6} {:>8} {:>10} {:>6}",
        "bound", "distribution", "n", "delta", "failures", "frequency", "limit"
    );
    for (kind, r) in &rows {
        println!(
            "{:<16} {:<24} {:>6} {:>6} {:>8} {:>10.5} {:>6}{}",
            kind,
            r.distribution,
            r.n,
            r.delta,
            r.failures,
            r.frequency,
            r.bound,
            if r.holds() { "" } else { "  EXCEEDED" }
        );
    }
    if let Some(path) = &common.out {
        let wrap = |e: csv::Error| Failure::check(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        w.write_record(["bound", "distribution", "n", "delta", "trials", "failures", "frequency", "limit"])
            .map_err(wrap)?;
        for (kind, r) in &rows {
            w.write_record([
                kind.to_string(),
                r.distribution.clone(),
                r.n.to_string(),
                r.delta.to_string(),
                r.trials.to_string(),
                r.failures.to_string(),
                r.frequency.to_string(),
                r.bound.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush()
            .map_err(|e| Failure::check(format!("{}: {e}", path.display())))?;
    }
    if rows.iter().all(|(_, r)| r.holds()) {
        Ok(())
    } else {
        Err(Failure::check("a coverage frequency exceeded its limit"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = execution(cli.sequential);
    match &cli.command {
        Command::Simulate(c) => simulate(c, exec),
        Command::Sweep(c) => run_sweep(c, exec),
        Command::InvarianceCheck {
            common,
            scale,
            shift,
        } => run_invariance(common, *scale, *shift),
        Command::EstimatorBench(c) => estimator_bench(c, exec),
        Command::Lowerbound(args) => lowerbound::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kucb: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
