//! Remote entanglement of two dispersively coupled qubits by joint
//! heterodyne measurement through a phase-preserving amplifier.
//!
//! Modules:
//! - [`ampnet`]: amplifier gain, time-local transform, heterodyne increments
//! - [`slh`]: SLH triplets, network products and compilation to SME generators
//! - [`cavity`]: qubit-conditioned cavity amplitudes and drive synthesis
//! - [`sme`]: reduced two-qubit and full qubit-cavity stochastic master equations
//! - [`filter`]: closed-form quantum filter, concurrence, outcome statistics
//! - [`harness`]: configuration, runs, ensembles, sweeps and file output
//!
//! Rates are angular frequencies in rad/μs and times are in μs.

pub mod ampnet;
pub mod cavity;
pub mod error;
pub mod filter;
pub mod harness;
pub mod linalg;
pub mod sme;
pub mod slh;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Converts a frequency quoted as x/2π in MHz to rad/μs.
pub fn mhz_to_rad_per_us(x_over_2pi_mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * x_over_2pi_mhz
}

/// Converts rad/μs to x/2π in MHz.
pub fn rad_per_us_to_mhz(rate: f64) -> f64 {
    rate / (2.0 * std::f64::consts::PI)
}
