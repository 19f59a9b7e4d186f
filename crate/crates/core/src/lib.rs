//! Numerical core for locally differentially private estimation.
//!
//! Builds staircase (extremal) patterns, factorizes arbitrary finite α-LDP
//! channels through them, computes the Fisher information of privatized
//! models and its maximum, evaluates continuous-model information bounds, and
//! runs the uniform-range estimation study.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the multi-threaded simulation driver live in the `ldp-std` crate.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod continuous;
pub mod error;
pub mod factorize;
pub mod finite_fisher;
pub mod math;
pub mod quadrature;
pub mod rng;
pub mod simplex;
pub mod staircase;
pub mod uniform;

pub use channel::{Channel, LdpCertificate, Witness};
pub use error::{Error, Result};
pub use factorize::{factorize, DecompositionMode, ExtremalFactorization};
pub use finite_fisher::{FiniteModel, MaxInfoResult, UtilityVector};
pub use staircase::{PatternIndex, StaircaseMatrix, StaircasePattern};

/// Row-sum tolerance for channel kernels.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Slack allowed on the likelihood-ratio bound when certifying α-LDP.
pub const LDP_SLACK: f64 = 1e-10;
/// Default tolerance on likelihood ratios when testing extremality.
pub const EXTREMAL_TOL: f64 = 1e-8;
