//! Bayes-oracle multiple testing and modified-BIC model selection for sparse
//! two-groups mixtures.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: normal cdf/quantile with log tails, adaptive quadrature, root finding
//! * [`model`]: effect-size priors and the two-groups mixture
//! * [`oracle`]: exact and asymptotic Bayes-oracle thresholds and risks
//! * [`rules`]: Bonferroni, BFDR, GW, Benjamini-Hochberg step-up and step-down
//! * [`regression`]: Hadamard designs and mBIC-family model selection
//! * [`experiment`]: the seeded Monte-Carlo harness, sweeps and CSV output
//! * [`verify`]: property suites exposed through the command line

pub mod error;
pub mod experiment;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod regression;
pub mod rules;
pub mod verify;

pub use error::{Error, Result};
