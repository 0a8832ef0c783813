//! Semantic rate-distortion analysis over ground Datalog knowledge bases.
//!
//! The crate is organised bottom-up:
//!
//! * [`datalog`] parses programs and evaluates closures and derivation depths.
//! * [`core`] extracts irredundant cores, depth strata and δ-filtrations.
//! * [`distortion`] computes single-letter distortions and set fidelities.
//! * [`channel`] holds kernels, capacity, invariants and Fano bounds.
//! * [`ratedist`] holds rate-distortion, rate-delay and blocklength results.
//! * [`multiagent`] analyses sender/receiver overlap and simulates codes.
//! * [`harness`] generates supply-chain instances and runs experiments.
//!
//! Numerical types are generic over [`Scalar`]; the `*64` and `*32` aliases
//! below fix the precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod core;
pub mod datalog;
pub mod distortion;
mod error;
pub mod harness;
pub mod multiagent;
pub mod ratedist;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Kernel64 = channel::Kernel<f64>;
pub type Kernel32 = channel::Kernel<f32>;
pub type Distribution64 = channel::Distribution<f64>;
pub type Distribution32 = channel::Distribution<f32>;
pub type DistortionMatrix64 = distortion::DistortionMatrix<f64>;
pub type DistortionMatrix32 = distortion::DistortionMatrix<f32>;
pub type RdCurve64 = ratedist::RdCurve<f64>;
pub type RateDelayProfile64 = ratedist::RateDelayProfile<f64>;
pub type LeverageReport64 = ratedist::LeverageReport<f64>;
