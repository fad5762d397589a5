//! Bayesian Causal Forests with propensity-score ablation variants.
//!
//! The crate is organized bottom-up:
//!
//! - [`forest`]: regression trees, forests, cutpoint grids and the
//!   grow/prune/change Metropolis-Hastings proposals.
//! - [`bart`]: backfitting MCMC for sum-of-trees models, with a continuous
//!   outcome sampler and a probit (latent-variable) sampler for binary outcomes.
//! - [`bcf`]: the causal forest outcome model `y = mu(x, pi) + tau(x) z + e`,
//!   its three propensity variants, and ATE/CATE posterior summaries.
//! - [`dgp`]: the nine synthetic targeted-selection designs.
//! - [`metrics`]: point and interval accuracy metrics for one replicate.
//! - [`hypothesis`]: rank and dispersion tests plus the variance-gated
//!   location-test selection rule.
//! - [`harness`]: the replication grid, per-replicate records, summaries,
//!   p-value tables and timing reports.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bart;
pub mod bcf;
pub mod data;
pub mod dgp;
mod error;
pub mod forest;
pub mod harness;
pub mod hypothesis;
pub mod metrics;
pub mod stats;

pub use error::{Error, Result};
