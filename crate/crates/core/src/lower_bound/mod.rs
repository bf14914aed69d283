//! Exact discrete-measure laboratory for the KL lower-bound constructions.

pub mod measure;
pub mod perturb;

pub use measure::{chi_squared, kl_divergence, DiscreteMeasure, MeasureError};
pub use perturb::{
    bernoulli_outlier, kl_inf, tilt, tilt_limit, Branch, Check, KlInf, OutlierResult,
    PerturbError, TiltResult,
};
