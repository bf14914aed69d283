//! Mean-raising perturbations of a standardized measure and the resulting
//! upper bounds on the smallest KL cost of a mean shift.
//!
//! Two constructions are provided. The outlier mixture adds an independent
//! `(Δ/p)·Bernoulli(p)` to `X`. The linear tilt reweights the measure by
//! `1 + α + βx` on the region `|x| ≤ sqrt(aκ)`. Every intermediate bound on
//! `α`, `β`, `g` and the divergences is reported as a [`Check`].

use thiserror::Error;

use super::measure::{chi_squared, kl_divergence, DiscreteMeasure, MeasureError};
use crate::env::kurtosis_of_sum;

const STANDARD_TOL: f64 = 1e-9;
const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbError {
    #[error("measure is not standardized (mean {mean}, variance {variance})")]
    NotStandardized { mean: f64, variance: f64 },
    #[error("mean shift must be positive and finite, got {0}")]
    BadGap(f64),
    #[error("kurtosis cap {0} is below 7/2")]
    CapTooSmall(f64),
    #[error("kurtosis {kurtosis} exceeds cap {cap}")]
    AboveCap { kurtosis: f64, cap: f64 },
    #[error("tilt region parameter {0} gives no usable coefficient bounds")]
    BadRegion(f64),
    #[error("degenerate tilt region")]
    DegenerateRegion,
    #[error("shift {gap} exceeds the tilt limit {limit}; use the outlier construction")]
    NotAdmissible { gap: f64, limit: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One numerically checked inequality `lhs ≤ rhs` (or `|lhs − rhs| ≤ tol`
/// for equalities, reported with `rhs = tol` and `lhs = |difference|`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Check {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs }
    }

    fn eq(name: &'static str, a: f64, b: f64, tol: f64) -> Self {
        Self {
            name,
            lhs: (a - b).abs(),
            rhs: tol,
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + CHECK_TOL
    }
}

fn require_standardized(m: &DiscreteMeasure) -> Result<(), PerturbError> {
    if m.is_standardized(STANDARD_TOL) {
        Ok(())
    } else {
        Err(PerturbError::NotStandardized {
            mean: m.mean(),
            variance: m.variance(),
        })
    }
}

fn require_gap(gap: f64) -> Result<(), PerturbError> {
    if gap > 0.0 && gap.is_finite() {
        Ok(())
    } else {
        Err(PerturbError::BadGap(gap))
    }
}

/// Outcome of the outlier mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierResult {
    pub perturbed: DiscreteMeasure,
    pub p: f64,
    pub kl_bound: f64,
    pub kl: f64,
    pub kurtosis_new: f64,
    /// Kurtosis of the sum from the independent-sum formula.
    pub kurtosis_composed: f64,
    pub checks: Vec<Check>,
}

/// Law of `X + (Δ/p)·B` with `B ~ Bernoulli(p)` independent of `X ~ m`,
/// `p = min(Δ, 1/κ∘)`.
pub fn bernoulli_outlier(
    m: &DiscreteMeasure,
    delta_gap: f64,
    kappa_cap: f64,
) -> Result<OutlierResult, PerturbError> {
    require_standardized(m)?;
    require_gap(delta_gap)?;
    if !(kappa_cap >= 3.5) {
        return Err(PerturbError::CapTooSmall(kappa_cap));
    }
    let p = delta_gap.min(1.0 / kappa_cap);
    let jump = delta_gap / p;
    let shifted = m.affine(1.0, jump)?;
    let perturbed = m.mixture(p, &shifted)?;
    let kl_bound = -(-p).ln_1p();
    let kl = kl_divergence(m, &perturbed);
    let kappa = m.kurtosis()?;
    let kurtosis_new = perturbed.kurtosis()?;

    let jump_variance = jump * jump * p * (1.0 - p);
    let jump_kurtosis = (1.0 - 3.0 * p * (1.0 - p)) / (p * (1.0 - p));
    let kurtosis_composed = kurtosis_of_sum(1.0, kappa, jump_variance, jump_kurtosis);

    let mut checks = vec![
        Check::eq("outlier: mean shift", perturbed.mean(), delta_gap, 1e-9),
        Check::le("outlier: KL <= ln(1/(1-p))", kl, kl_bound),
        Check::eq(
            "outlier: kurtosis matches independent-sum formula",
            kurtosis_new,
            kurtosis_composed,
            1e-9 * kurtosis_composed.abs().max(1.0),
        ),
    ];
    if kappa <= kappa_cap {
        checks.push(Check::le("outlier: kurtosis <= cap", kurtosis_new, kappa_cap));
    }
    Ok(OutlierResult {
        perturbed,
        p,
        kl_bound,
        kl,
        kurtosis_new,
        kurtosis_composed,
        checks,
    })
}

/// Outcome of the linear tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltResult {
    pub alpha: f64,
    pub beta: f64,
    pub perturbed: DiscreteMeasure,
    pub region_bound: f64,
    pub chi2: f64,
    pub kl: f64,
    pub kurtosis_new: f64,
    pub checks: Vec<Check>,
}

/// Coefficient bounds `(|α|/Δ, |β|/Δ)` for region parameter `a` and kurtosis
/// `κ`. At `a = 2` these are the relaxed constants `4/√κ` and `6`.
fn coefficient_bounds(a: f64, kappa: f64) -> Option<(f64, f64)> {
    if a == 2.0 {
        return Some((4.0 / kappa.sqrt(), 6.0));
    }
    let tail = 1.0 / (kappa * a * a);
    let alpha_den = a * ((1.0 - tail) * (1.0 - 1.0 / a) - tail);
    let beta_den = 1.0 - 1.0 / a - tail / (1.0 - tail);
    if alpha_den > 0.0 && beta_den > 0.0 && tail < 1.0 {
        Some((1.0 / (kappa.sqrt() * alpha_den), 1.0 / beta_den))
    } else {
        None
    }
}

/// Largest shift for which the tilt keeps `|g| ≤ 1/2`. At `a = 2`:
/// `√κ / (4(2 + 3√2·κ))`.
pub fn tilt_limit(kappa: f64, a: f64) -> Option<f64> {
    let (ca, cb) = coefficient_bounds(a, kappa)?;
    Some(0.5 / (ca + (a * kappa).sqrt() * cb))
}

/// Reweights `m` by `1 + (α + βx)·1{|x| ≤ sqrt(aκ)}`, with `α, β` chosen so
/// the total mass is unchanged and the mean moves by `delta_gap`.
pub fn tilt(m: &DiscreteMeasure, delta_gap: f64, a: f64) -> Result<TiltResult, PerturbError> {
    require_standardized(m)?;
    require_gap(delta_gap)?;
    let kappa = m.kurtosis()?;
    let limit = tilt_limit(kappa, a).ok_or(PerturbError::BadRegion(a))?;
    if delta_gap > limit {
        return Err(PerturbError::NotAdmissible {
            gap: delta_gap,
            limit,
        });
    }
    let (ca, cb) = coefficient_bounds(a, kappa).ok_or(PerturbError::BadRegion(a))?;
    let region_bound = (a * kappa).sqrt();
    let inside = |x: f64| x.abs() <= region_bound;

    let (mut n0, mut n1, mut n2) = (0.0, 0.0, 0.0);
    for (x, p) in m.atoms().filter(|a| inside(a.0)) {
        n0 += p;
        n1 += p * x;
        n2 += p * x * x;
    }
    let det = n0 * n2 - n1 * n1;
    if !(det > f64::EPSILON * n0 * n2) {
        return Err(PerturbError::DegenerateRegion);
    }
    let alpha = -delta_gap * n1 / det;
    let beta = delta_gap * n0 / det;
    let g = |x: f64| if inside(x) { alpha + beta * x } else { 0.0 };

    let perturbed = DiscreteMeasure::new(m.atoms().map(|(x, p)| (x, p * (1.0 + g(x)))))?;
    let chi2 = chi_squared(m, &perturbed);
    let kl = kl_divergence(m, &perturbed);
    let kurtosis_new = perturbed.kurtosis()?;
    let max_g = m.atoms().map(|a| g(a.0).abs()).fold(0.0, f64::max);
    let min_factor = m.atoms().map(|a| 1.0 + g(a.0)).fold(f64::INFINITY, f64::min);

    let mut checks = vec![
        Check::le("tilt: |alpha| bound", alpha.abs(), ca * delta_gap),
        Check::le("tilt: |beta| bound", beta.abs(), cb * delta_gap),
        Check::le("tilt: max |g| <= 1/2", max_g, 0.5),
        Check::le("tilt: 1 + g > 0", -min_factor, 0.0),
        Check::eq("tilt: mean shift", perturbed.mean(), delta_gap, 1e-9),
        Check::le("tilt: KL <= chi2", kl, chi2),
        Check::le("tilt: chi2 <= 4 alpha^2 + 4 beta^2", chi2, 4.0 * (alpha * alpha + beta * beta)),
    ];
    if m.is_symmetric() {
        let d2 = delta_gap * delta_gap;
        checks.push(Check::le("tilt: symmetric alpha = 0", alpha.abs(), 1e-12));
        checks.push(Check::le(
            "tilt: symmetric kurtosis bound",
            kurtosis_new,
            kappa + 6.0 * d2 / (1.0 - 2.0 * d2) + 2.0 * kappa * d2 / (1.0 - 2.0 * d2),
        ));
    }
    Ok(TiltResult {
        alpha,
        beta,
        perturbed,
        region_bound,
        chi2,
        kl,
        kurtosis_new,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    BernoulliOutlier,
    LinearTilt,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::BernoulliOutlier => "bernoulli_outlier",
            Branch::LinearTilt => "linear_tilt",
        }
    }
}

/// Cheapest witness found for a mean shift of `delta_gap` in the original
/// coordinates of the input measure.
#[derive(Debug, Clone, PartialEq)]
pub struct KlInf {
    pub value: f64,
    pub branch: Branch,
    /// Witness measure, mapped back to the input's coordinates.
    pub witness: DiscreteMeasure,
    pub outlier: OutlierResult,
    /// `None` when the tilt is inadmissible, degenerate or breaks the cap.
    pub tilt: Option<TiltResult>,
}

impl KlInf {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.outlier
            .checks
            .iter()
            .chain(self.tilt.iter().flat_map(|t| t.checks.iter()))
    }
}

/// Upper bound on `inf{KL(m, ν′) : kurt(ν′) ≤ κ∘, E ν′ ≥ E m + Δ}` from the
/// two constructions. Accepts any measure with positive variance; the shift
/// is rescaled with the standardizing map.
pub fn kl_inf(
    m: &DiscreteMeasure,
    delta_gap: f64,
    kappa_cap: f64,
) -> Result<KlInf, PerturbError> {
    require_gap(delta_gap)?;
    let (standard, scale, shift) = m.standardize()?;
    let kappa = standard.kurtosis()?;
    if kappa > kappa_cap + 1e-12 {
        return Err(PerturbError::AboveCap {
            kurtosis: kappa,
            cap: kappa_cap,
        });
    }
    let gap = delta_gap * scale;
    let outlier = bernoulli_outlier(&standard, gap, kappa_cap)?;
    let tilt = match tilt(&standard, gap, 2.0) {
        Ok(t) if t.kurtosis_new <= kappa_cap => Some(t),
        Ok(_) | Err(PerturbError::NotAdmissible { .. }) | Err(PerturbError::DegenerateRegion) => {
            None
        }
        Err(e) => return Err(e),
    };
    let (value, branch, standard_witness) = match &tilt {
        Some(t) if t.kl < outlier.kl => (t.kl, Branch::LinearTilt, &t.perturbed),
        _ => (outlier.kl, Branch::BernoulliOutlier, &outlier.perturbed),
    };
    let witness = standard_witness.affine(1.0 / scale, -shift / scale)?;
    Ok(KlInf {
        value,
        branch,
        witness,
        outlier,
        tilt,
    })
}
