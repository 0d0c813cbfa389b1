//! Continuous-time white Gaussian multiuser channels in the Brownian-motion
//! formulation `Y(t) = ∫_0^t X(s) ds + B(t)`.
//!
//! * [`grid`], [`seed`], [`paths`]: sampling grids, reproducible random
//!   streams, exact Brownian / Ornstein–Uhlenbeck sample paths.
//! * [`filter`]: Riccati equation and Kalman filtering/smoothing for OU
//!   inputs.
//! * [`mi`]: mutual information via Duncan's formula, exact Gaussian
//!   log-determinants and innovations; bandwidth-limit capacities.
//! * [`regions`]: capacity regions of MAC/IC/BC channels as polytopes.
//! * [`coding`]: random OU codebooks, joint-typicality decoding and error
//!   experiments.
//!
//! All information quantities are in nats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coding;
pub mod error;
pub mod filter;
pub mod grid;
pub mod linalg;
pub mod mi;
pub mod paths;
pub mod regions;
pub mod seed;

pub use error::{Error, Result};
pub use grid::SamplingGrid;
pub use paths::{OuParams, Path};
pub use seed::RngSeed;
