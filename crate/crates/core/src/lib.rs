//! Selecting the best of n boxes when every box reports an unbiased but
//! noisy estimate of its reward.
//!
//! Reward laws and their order-statistic functionals live in [`dist`] and
//! [`functionals`]; the Gaussian-noise posterior in [`posterior`]; the
//! selection rules in [`policies`]; regime classification and the two
//! adversarial noise profiles in [`regimes`]; Monte Carlo evaluation,
//! separation experiments and inequality checks in [`simlab`].

pub mod config;
pub mod dist;
pub mod error;
pub mod functionals;
pub mod normal;
pub mod policies;
pub mod posterior;
pub mod quad;
pub mod regimes;
pub mod simlab;

pub use dist::{MaxLaw, NoiseProfile, RewardDistribution, RewardLaw, Truncated};
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
