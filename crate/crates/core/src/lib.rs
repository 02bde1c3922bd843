//! Locally differentially private estimation of discrete distributions with
//! the k-subset mechanism, k-ary randomized response and k-RAPPOR.
//!
//! The crate provides the mechanisms (probabilities, samplers, explicit
//! channel matrices and privacy audits), the unbiased empirical estimators,
//! closed-form risks with upper and minimax lower bounds, a seeded Monte Carlo
//! harness, and brute-force oracles that cross-check the closed forms.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod mechanisms;
pub mod montecarlo;
pub mod numfmt;
pub mod reference;
pub mod risk;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use estimation::{CountVector, Estimator};
pub use mechanisms::{MechanismSpec, Scheme};
pub use simplex::{EstimateVector, LossKind, PrivacyBudget, ProbabilityVector};
