//! Gaussian random tensors and Monte-Carlo checks of closed-form expectations.

mod identities;
mod mc;
mod rng;

pub use identities::{verify_identity, Identity, IdentityReport, IDENTITY_NAMES, Z_THRESHOLD};
pub use mc::{mc_expectation, mc_samples, McEstimate, RandomSpec};
pub use rng::{gaussian_tensor, uniform_tensor, KeyedGaussian};
