//! Ordinal-decomposition advantage estimation for discrete rewards.
//!
//! A discrete reward `r` on an ordered scale `R_1 < … < R_K` is rewritten as a
//! stack of binary success indicators `1{r ≥ R_k}`. Each indicator column is
//! normalized independently inside a rollout group and the per-bin advantages
//! are accumulated (optionally weighted). The crate contains:
//!
//! - [`reward`]: reward scales, rollout groups and the ordinal decomposition,
//! - [`estimators`]: GRPO, MaxRL and ordinal (binned and continuous) advantages,
//! - [`weighting`]: unit, Gini and Gini-Median bin weights,
//! - [`theory`]: leave-one-out advantage fields, curl residuals, exact
//!   multinomial expectations and the arcsin objective,
//! - [`rater`]: a synthetic stochastic judge plus concordance statistics,
//! - [`trainer`]: a toy categorical policy-gradient loop (exact and sampled).

pub mod error;
pub mod estimators;
pub mod rater;
pub mod reward;
pub mod seed;
pub mod special;
pub mod theory;
pub mod trainer;
pub mod weighting;

mod sum;

pub use error::{OdrpoError, Result};
pub use estimators::{
    batch_normalize, grpo_advantage, maxrl_advantage, odrpo_advantage, odrpo_continuous,
    AdvantageVector, Estimator, NormalizationKind, EPS,
};
pub use reward::{
    bin_stats, decompose, group_moments, BinStats, OrdinalIndicatorMatrix, RewardScale,
    RolloutGroup,
};
pub use weighting::{WeightScheme, WeightVector};
