//! Reward distributions, bandit instances and seeded reward streams.

mod distribution;
mod instance;
mod normal;

pub use distribution::{
    kurtosis_of_sum, open_unit, skewness_bound_holds, ArmDistribution, DistributionError,
    DistributionSpec,
};
pub use instance::{arm_stream, BanditInstance, InstanceConfig, InstanceError};
pub use normal::standard_normal_quantile;
