//! `kucb lowerbound`: the outlier and tilt constructions over a grid of
//! mean shifts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use kurtosis_ucb::env::ArmDistribution;
use kurtosis_ucb::lower_bound::{kl_inf, Branch, DiscreteMeasure, KlInf};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    /// Inline atoms `value:prob,value:prob,...`; masses are normalized.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "config")]
    atoms: Option<String>,
    /// Measure file (TOML): `atoms = [[v, p], ...]`, or a `[distribution]`
    /// table plus `grid = <atoms>` for a quantile-grid discretization.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mean shifts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0])]
    gaps: Vec<f64>,
    /// Kurtosis cap of the alternative class (at least 3.5).
    #[arg(long, default_value_t = 3.5)]
    cap: f64,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    atoms: Option<Vec<[f64; 2]>>,
    distribution: Option<ArmDistribution>,
    grid: Option<usize>,
}

const DEFAULT_GRID: usize = 2000;

fn parse_inline(text: &str) -> Result<DiscreteMeasure, Failure> {
    let atoms = text
        .split(',')
        .map(|pair| {
            let (v, p) = pair
                .split_once(':')
                .ok_or_else(|| Failure::config(format!("atom `{pair}` is not value:prob")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Failure::config(format!("atom `{pair}`: {e}")))
            };
            Ok((parse(v)?, parse(p)?))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    DiscreteMeasure::normalized(atoms).map_err(|e| Failure::config(e.to_string()))
}

fn load(args: &LowerboundArgs) -> Result<DiscreteMeasure, Failure> {
    if let Some(text) = &args.atoms {
        return parse_inline(text);
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Failure::config("give --atoms or --config"))?;
    let shown = path.display();
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{shown}: {e}")))?;
    let file: MeasureFile =
        toml::from_str(&text).map_err(|e| Failure::config(format!("{shown}: {}", e.message())))?;
    let measure = match (file.atoms, file.distribution) {
        (Some(atoms), None) => DiscreteMeasure::normalized(atoms.into_iter().map(|[v, p]| (v, p))),
        (None, Some(d)) => DiscreteMeasure::from_quantiles(|u| d.quantile(u), file.grid.unwrap_or(DEFAULT_GRID)),
        _ => {
            return Err(Failure::config(format!(
                "{shown}: give exactly one of `atoms` or `distribution`"
            )))
        }
    };
    measure.map_err(|e| Failure::config(format!("{shown}: {e}")))
}

#[derive(Default)]
struct Tally {
    exercised: usize,
    failed: usize,
}

fn summary(m: &DiscreteMeasure) -> String {
    format!(
        "{} atoms, mean {:.6}, kurtosis {:.6}",
        m.len(),
        m.mean(),
        m.kurtosis().unwrap_or(f64::NAN)
    )
}

pub fn run(args: &LowerboundArgs) -> Result<(), Failure> {
    let measure = load(args)?;
    if let Some(g) = args.gaps.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Failure::config(format!("mean shifts must be positive, got {g}")));
    }
    println!("measure: {}", summary(&measure));
    let mut results: Vec<(f64, KlInf)> = Vec::new();
    for &gap in &args.gaps {
        let r = kl_inf(&measure, gap, args.cap).map_err(|e| Failure::config(e.to_string()))?;
        results.push((gap, r));
    }

    println!(
        "{:>10} {:<18} {:>14} {:>14} {:>10}  witness",
        "delta", "branch", "kl", "1/kl", "outlier_p"
    );
    for (gap, r) in &results {
        println!(
            "{:>10} {:<18} {:>14.6e} {:>14.6e} {:>10.4}  {}",
            gap,
            r.branch.as_str(),
            r.value,
            1.0 / r.value,
            r.outlier.p,
            summary(&r.witness)
        );
    }

    let mut checks: BTreeMap<&str, Tally> = BTreeMap::new();
    for (_, r) in &results {
        for c in r.checks() {
            let t = checks.entry(c.name).or_default();
            t.exercised += 1;
            t.failed += usize::from(!c.holds());
        }
    }
    println!("assertions:");
    for (name, t) in &checks {
        println!("  {name}: {} exercised, {} failed", t.exercised, t.failed);
    }

    if let Some(path) = &args.out {
        let wrap = |e: csv::Error| Failure::check(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        w.write_record([
            "delta",
            "branch",
            "kl",
            "inv_kl",
            "outlier_p",
            "outlier_kl",
            "tilt_kl",
            "witness_atoms",
            "witness_mean",
            "witness_kurtosis",
        ])
        .map_err(wrap)?;
        for (gap, r) in &results {
            let tilt_kl = r.tilt.as_ref().map_or(f64::NAN, |t| t.kl);
            w.write_record([
                gap.to_string(),
                r.branch.as_str().to_string(),
                r.value.to_string(),
                (1.0 / r.value).to_string(),
                r.outlier.p.to_string(),
                r.outlier.kl.to_string(),
                tilt_kl.to_string(),
                r.witness.len().to_string(),
                r.witness.mean().to_string(),
                r.witness.kurtosis().map_or(f64::NAN, |k| k).to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush()
            .map_err(|e| Failure::check(format!("{}: {e}", path.display())))?;
    }

    let tilts = results.iter().filter(|(_, r)| r.branch == Branch::LinearTilt).count();
    println!("{tilts} of {} shifts won by the tilt", results.len());
    if checks.values().any(|t| t.failed > 0) {
        Err(Failure::check("an assertion failed"))
    } else {
        Ok(())
    }
}
