//! Random OU codebooks, joint-typicality decoding and Monte Carlo error
//! experiments.
//!
//! Codewords are never stored: codeword `i` of a book is drawn on demand
//! from the child stream `i` of the book seed, so a book of `e^{RT}` paths
//! costs nothing until it is scanned.

mod codebook;
mod experiments;
mod typicality;

pub use codebook::{codebook_size, expurgate, Codebook, DEFAULT_CODEBOOK_GUARD};
pub use experiments::{
    bc_composite_power, bc_power_sharing_rates, bc_power_sharing_transmit, bc_time_sharing_transmit,
    bc_time_sharing_user_mi, ic_treat_as_noise_experiment, ic_treat_as_noise_rates, mac_error_experiment,
    point_to_point_experiment, typicality_fraction, BcTransmission, CompositePower, ErrorClasses, ErrorStats,
    IcExperimentConfig, MacExperimentConfig, PointToPointConfig, TimeSharingMi, TypicalityFraction, MAX_TRIALS,
};
pub use typicality::{log_rn_derivatives, typicality_decode, DecodeOutcome, MacModel, SingleUserModel, TypicalityTest};
