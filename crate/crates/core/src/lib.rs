//! Link-level simulation and analysis of 2D linearly-precoded OFDM with
//! spread-pilot channel estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`precode`]: Walsh-Hadamard precoding, power allocation and the 2D chip mapping.
//! - [`channel`]: WSSUS tapped-delay-line channel with Jakes-correlated taps.
//! - [`estimator`]: the spread-pilot estimator, per-subset equalization and the
//!   closed-form MSE of the estimate.
//! - [`fec`]: convolutional code, Viterbi decoder, interleavers and Gray mapping.
//! - [`harness`]: seeded Monte-Carlo experiments and CSV output, driven by the CLI.

pub mod bessel;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod fec;
pub mod harness;
pub mod precode;

pub use error::{Error, Result};
pub use num_complex::Complex64;
