//! Reward distributions with closed-form moments, sampled by inverse CDF.
//!
//! Every draw consumes exactly one uniform from the stream, so an affine
//! wrapper sees the same uniform as its inner law and the two draws are
//! coupled exactly.

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::normal::standard_normal_quantile;
use crate::lower_bound::{DiscreteMeasure, MeasureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("{kind}: invalid parameters ({detail})")]
    InvalidParameters { kind: &'static str, detail: String },
    #[error("distribution has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn invalid(kind: &'static str, detail: impl Into<String>) -> DistributionError {
    DistributionError::InvalidParameters {
        kind,
        detail: detail.into(),
    }
}

/// Serializable description of an arm, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Bernoulli {
        mean: f64,
    },
    Exponential {
        rate: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Atoms as `[value, probability]` pairs.
    Discrete {
        atoms: Vec<[f64; 2]>,
    },
    Affine {
        inner: Box<DistributionSpec>,
        scale: f64,
        shift: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { mean: f64 },
    Exponential { rate: f64 },
    Laplace { location: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
    Discrete { measure: DiscreteMeasure, cdf: Vec<f64> },
    Affine { inner: Box<ArmDistribution>, scale: f64, shift: f64 },
}

/// A sampleable reward law with cached mean, variance, skewness and kurtosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct ArmDistribution {
    kind: Kind,
    mean: f64,
    variance: f64,
    skewness: f64,
    kurtosis: f64,
}

impl ArmDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, DistributionError> {
        if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
            return Err(invalid("gaussian", format!("mean {mean}, variance {variance}")));
        }
        Ok(Self {
            kind: Kind::Gaussian {
                mean,
                sd: variance.sqrt(),
            },
            mean,
            variance,
            skewness: 0.0,
            kurtosis: 3.0,
        })
    }

    /// Rejects `mean ∈ {0, 1}`, which has zero variance.
    pub fn bernoulli(mean: f64) -> Result<Self, DistributionError> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(invalid("bernoulli", format!("mean {mean} outside (0, 1)")));
        }
        let v = mean * (1.0 - mean);
        Ok(Self {
            kind: Kind::Bernoulli { mean },
            mean,
            variance: v,
            skewness: (1.0 - 2.0 * mean) / v.sqrt(),
            kurtosis: (1.0 - 3.0 * v) / v,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistributionError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid("exponential", format!("rate {rate}")));
        }
        Ok(Self {
            kind: Kind::Exponential { rate },
            mean: 1.0 / rate,
            variance: 1.0 / (rate * rate),
            skewness: 2.0,
            kurtosis: 9.0,
        })
    }

    /// Laplace law; `E[(X − μ)⁴] = 24 b⁴` and `Var = 2 b²` give kurtosis 6.
    pub fn laplace(location: f64, scale: f64) -> Result<Self, DistributionError> {
        if !(location.is_finite() && scale.is_finite() && scale > 0.0) {
            return Err(invalid("laplace", format!("location {location}, scale {scale}")));
        }
        Ok(Self {
            kind: Kind::Laplace { location, scale },
            mean: location,
            variance: 2.0 * scale * scale,
            skewness: 0.0,
            kurtosis: 6.0,
        })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, DistributionError> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(invalid("uniform", format!("[{low}, {high}]")));
        }
        let w = high - low;
        Ok(Self {
            kind: Kind::Uniform { low, high },
            mean: 0.5 * (low + high),
            variance: w * w / 12.0,
            skewness: 0.0,
            kurtosis: 1.8,
        })
    }

    pub fn discrete(measure: DiscreteMeasure) -> Result<Self, DistributionError> {
        let variance = measure.variance();
        if !(variance > 0.0) {
            return Err(DistributionError::ZeroVariance);
        }
        let mut acc = 0.0;
        let cdf = measure
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            mean: measure.mean(),
            variance,
            skewness: measure.skewness()?,
            kurtosis: measure.kurtosis()?,
            kind: Kind::Discrete { measure, cdf },
        })
    }

    /// Law of `scale·X + shift`, `scale > 0`.
    pub fn affine(inner: ArmDistribution, scale: f64, shift: f64) -> Result<Self, DistributionError> {
        if !(scale.is_finite() && scale > 0.0 && shift.is_finite()) {
            return Err(invalid("affine", format!("scale {scale}, shift {shift}")));
        }
        Ok(Self {
            mean: scale * inner.mean + shift,
            variance: scale * scale * inner.variance,
            skewness: inner.skewness,
            kurtosis: inner.kurtosis,
            kind: Kind::Affine {
                inner: Box::new(inner),
                scale,
                shift,
            },
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn skewness(&self) -> f64 {
        self.skewness
    }

    /// Closed-form kurtosis `E[(X − μ)⁴] / Var²`; variance is positive by
    /// construction.
    pub fn kurtosis(&self) -> f64 {
        self.kurtosis
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Gaussian { .. } => "gaussian",
            Kind::Bernoulli { .. } => "bernoulli",
            Kind::Exponential { .. } => "exponential",
            Kind::Laplace { .. } => "laplace",
            Kind::Uniform { .. } => "uniform",
            Kind::Discrete { .. } => "discrete",
            Kind::Affine { .. } => "affine",
        }
    }

    /// Generalized inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mean, sd } => mean + sd * standard_normal_quantile(u),
            Kind::Bernoulli { mean } => {
                if u < 1.0 - mean {
                    0.0
                } else {
                    1.0
                }
            }
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
            Kind::Laplace { location, scale } => {
                if u < 0.5 {
                    location + scale * (2.0 * u).ln()
                } else {
                    location - scale * (2.0 * (1.0 - u)).ln()
                }
            }
            Kind::Uniform { low, high } => low + (high - low) * u,
            Kind::Discrete { measure, cdf } => {
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                measure.values()[i]
            }
            Kind::Affine {
                inner,
                scale,
                shift,
            } => scale * inner.quantile(u) + shift,
        }
    }

    /// One draw; consumes exactly one `u64` from the stream.
    pub fn sample<R: RngCore + ?Sized>(&self, stream: &mut R) -> f64 {
        self.quantile(open_unit(stream.next_u64()))
    }

    /// Exact discrete law for the discrete kind (and affine images of it).
    pub fn as_measure(&self) -> Option<DiscreteMeasure> {
        match &self.kind {
            Kind::Discrete { measure, .. } => Some(measure.clone()),
            Kind::Bernoulli { mean } => DiscreteMeasure::new([(0.0, 1.0 - mean), (1.0, *mean)]).ok(),
            Kind::Affine {
                inner,
                scale,
                shift,
            } => inner.as_measure()?.affine(*scale, *shift).ok(),
            _ => None,
        }
    }
}

/// Maps 64 random bits to the open interval `(0, 1)`: midpoints of a 2^-52
/// grid, so neither endpoint is reachable.
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl TryFrom<DistributionSpec> for ArmDistribution {
    type Error = DistributionError;

    fn try_from(spec: DistributionSpec) -> Result<Self, Self::Error> {
        match spec {
            DistributionSpec::Gaussian { mean, variance } => Self::gaussian(mean, variance),
            DistributionSpec::Bernoulli { mean } => Self::bernoulli(mean),
            DistributionSpec::Exponential { rate } => Self::exponential(rate),
            DistributionSpec::Laplace { location, scale } => Self::laplace(location, scale),
            DistributionSpec::Uniform { low, high } => Self::uniform(low, high),
            DistributionSpec::Discrete { atoms } => {
                Self::discrete(DiscreteMeasure::new(atoms.into_iter().map(|[x, p]| (x, p)))?)
            }
            DistributionSpec::Affine {
                inner,
                scale,
                shift,
            } => Self::affine(Self::try_from(*inner)?, scale, shift),
        }
    }
}

impl From<ArmDistribution> for DistributionSpec {
    fn from(d: ArmDistribution) -> Self {
        match d.kind {
            Kind::Gaussian { mean, .. } => DistributionSpec::Gaussian {
                mean,
                variance: d.variance,
            },
            Kind::Bernoulli { mean } => DistributionSpec::Bernoulli { mean },
            Kind::Exponential { rate } => DistributionSpec::Exponential { rate },
            Kind::Laplace { location, scale } => DistributionSpec::Laplace { location, scale },
            Kind::Uniform { low, high } => DistributionSpec::Uniform { low, high },
            Kind::Discrete { measure, .. } => DistributionSpec::Discrete {
                atoms: measure.atoms().map(|(x, p)| [x, p]).collect(),
            },
            Kind::Affine {
                inner,
                scale,
                shift,
            } => DistributionSpec::Affine {
                inner: Box::new((*inner).into()),
                scale,
                shift,
            },
        }
    }
}

/// Kurtosis of `X₁ + X₂` for independent summands:
/// `3 + (v₁²(κ₁ − 3) + v₂²(κ₂ − 3)) / (v₁ + v₂)²`.
pub fn kurtosis_of_sum(v1: f64, k1: f64, v2: f64, k2: f64) -> f64 {
    let total = v1 + v2;
    3.0 + (v1 * v1 * (k1 - 3.0) + v2 * v2 * (k2 - 3.0)) / (total * total)
}

/// `|skewness| ≤ sqrt(kurtosis − 1)`, up to `1e-12`.
pub fn skewness_bound_holds(dist: &ArmDistribution) -> bool {
    dist.skewness().abs() <= (dist.kurtosis() - 1.0).max(0.0).sqrt() + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Fixed(Vec<u64>);

    impl rand_chacha::rand_core::RngCore for Fixed {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0.remove(0)
        }
        fn fill_bytes(&mut self, _: &mut [u8]) {
            unimplemented!()
        }
    }

    fn bits_for(u: f64) -> u64 {
        ((u * (1u64 << 52) as f64) as u64) << 12
    }

    #[test]
    fn open_unit_stays_inside() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(bits_for(0.25)), 0.25 + 0.5 / (1u64 << 52) as f64);
    }

    #[test]
    fn inverse_cdf_examples() {
        let pm1 = ArmDistribution::discrete(
            DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        )
        .unwrap();
        assert_eq!(pm1.quantile(0.3), -1.0);
        assert_eq!(pm1.quantile(0.7), 1.0);
        let u = ArmDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.quantile(0.25), 0.25);
        assert_eq!(ArmDistribution::bernoulli(0.1).unwrap().quantile(0.95), 1.0);
        assert_eq!(ArmDistribution::bernoulli(0.1).unwrap().quantile(0.5), 0.0);
    }

    #[test]
    fn affine_draw_is_coupled() {
        let g = ArmDistribution::gaussian(0.0, 1.0).unwrap();
        let a = ArmDistribution::affine(g.clone(), 2.0, 3.0).unwrap();
        let bits = vec![0x1234_5678_9abc_def0, 0x0fed_cba9_8765_4321];
        let z: Vec<f64> = {
            let mut s = Fixed(bits.clone());
            (0..2).map(|_| g.sample(&mut s)).collect()
        };
        let mut s = Fixed(bits);
        for z in z {
            assert_eq!(a.sample(&mut s), 2.0 * z + 3.0);
        }
    }

    #[test]
    fn table_kurtosis() {
        assert_eq!(ArmDistribution::gaussian(-4.0, 9.0).unwrap().kurtosis(), 3.0);
        assert_eq!(ArmDistribution::uniform(2.0, 5.0).unwrap().kurtosis(), 1.8);
        assert_eq!(ArmDistribution::exponential(0.3).unwrap().kurtosis(), 9.0);
        let b = ArmDistribution::bernoulli(0.1).unwrap();
        assert!((b.kurtosis() - 0.73 / 0.09).abs() < 1e-13);
        assert_eq!(ArmDistribution::bernoulli(0.5).unwrap().kurtosis(), 1.0);
    }

    #[test]
    fn laplace_moments_from_quantile_grid() {
        let l = ArmDistribution::laplace(1.0, 2.0).unwrap();
        let m = DiscreteMeasure::from_quantiles(|u| l.quantile(u), 200_000).unwrap();
        assert!((m.mean() - 1.0).abs() < 1e-9);
        assert!((m.variance() / l.variance() - 1.0).abs() < 1e-3);
        assert!((m.kurtosis().unwrap() - l.kurtosis()).abs() < 0.05);
    }

    #[test]
    fn bad_parameters() {
        assert!(ArmDistribution::bernoulli(0.0).is_err());
        assert!(ArmDistribution::bernoulli(1.0).is_err());
        assert!(ArmDistribution::gaussian(0.0, 0.0).is_err());
        assert!(ArmDistribution::uniform(1.0, 1.0).is_err());
        assert!(ArmDistribution::exponential(-1.0).is_err());
        assert!(ArmDistribution::discrete(DiscreteMeasure::point(2.0).unwrap()).is_err());
        let g = ArmDistribution::gaussian(0.0, 1.0).unwrap();
        assert!(ArmDistribution::affine(g, -1.0, 0.0).is_err());
    }

    #[test]
    fn kurtosis_of_sum_examples() {
        assert_eq!(kurtosis_of_sum(1.0, 3.0, 1.0, 3.0), 3.0);
        assert!((kurtosis_of_sum(1.0, 3.0, 1.0, 1.8) - 2.7).abs() < 1e-15);
        assert!((kurtosis_of_sum(1e9, 7.0, 1.0, 1.8) - 7.0).abs() < 1e-8);
    }

    #[test]
    fn skewness_bound_examples() {
        assert!(skewness_bound_holds(&ArmDistribution::gaussian(0.0, 1.0).unwrap()));
        let e = ArmDistribution::exponential(1.0).unwrap();
        assert_eq!(e.skewness(), 2.0);
        assert!(skewness_bound_holds(&e));
        let b = ArmDistribution::bernoulli(0.1).unwrap();
        assert!((b.skewness() - 0.8 / 0.3).abs() < 1e-14);
        assert!((b.skewness() - (b.kurtosis() - 1.0).sqrt()).abs() < 1e-12);
        assert!(skewness_bound_holds(&b));
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"
            kind = "affine"
            scale = 2.0
            shift = -1.0
            inner = { kind = "discrete", atoms = [[-1.0, 0.5], [1.0, 0.5]] }
        "#;
        let d: ArmDistribution = toml::from_str(text).unwrap();
        assert_eq!(d.mean(), -1.0);
        assert_eq!(d.variance(), 4.0);
        assert_eq!(d.kurtosis(), 1.0);
        let back = toml::to_string(&d).unwrap();
        let again: ArmDistribution = toml::from_str(&back).unwrap();
        assert_eq!(d, again);
        assert!(toml::from_str::<ArmDistribution>("kind = \"bernoulli\"\nmean = 1.0").is_err());
    }

    fn any_distribution() -> impl Strategy<Value = ArmDistribution> {
        let leaf = prop_oneof![
            (-10.0f64..10.0, 0.01f64..10.0).prop_map(|(m, v)| ArmDistribution::gaussian(m, v).unwrap()),
            (0.001f64..0.999).prop_map(|m| ArmDistribution::bernoulli(m).unwrap()),
            (0.01f64..10.0).prop_map(|r| ArmDistribution::exponential(r).unwrap()),
            (-10.0f64..10.0, 0.01f64..10.0).prop_map(|(m, b)| ArmDistribution::laplace(m, b).unwrap()),
            (-10.0f64..0.0, 0.01f64..10.0).prop_map(|(a, w)| ArmDistribution::uniform(a, a + w).unwrap()),
            prop::collection::vec((-10.0f64..10.0, 0.05f64..1.0), 2..8).prop_filter_map(
                "needs spread",
                |atoms| DiscreteMeasure::normalized(atoms).ok().and_then(|m| ArmDistribution::discrete(m).ok()),
            ),
        ];
        (leaf, 0.01f64..100.0, -100.0f64..100.0, any::<bool>()).prop_map(|(d, a, b, wrap)| {
            if wrap {
                ArmDistribution::affine(d, a, b).unwrap()
            } else {
                d
            }
        })
    }

    proptest! {
        #[test]
        fn skewness_bound_everywhere(d in any_distribution()) {
            prop_assert!(d.kurtosis() >= 1.0 - 1e-12);
            prop_assert!(skewness_bound_holds(&d));
        }

        #[test]
        fn affine_keeps_kurtosis(d in any_distribution(), a in 0.01f64..100.0, b in -1e3f64..1e3) {
            let w = ArmDistribution::affine(d.clone(), a, b).unwrap();
            prop_assert_eq!(w.kurtosis(), d.kurtosis());
            prop_assert_eq!(w.mean(), a * d.mean() + b);
            prop_assert_eq!(w.variance(), a * a * d.variance());
        }
    }
}
