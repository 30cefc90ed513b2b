//! Specific emitter identification by sequential voting.
//!
//! A signal is identified by drawing short random windows from it, turning
//! each window into a colorized bispectrum image, classifying every image
//! into a vote, and accumulating votes until a cumulative-Beta certainty
//! reaches any prescribed error threshold.
//!
//! - [`signal`]: I/Q signals, Hilbert transform, synthetic emitters, windows
//! - [`bispectrum`]: third-order spectra and feature images
//! - [`voting`]: Beta/Dirichlet certainty and stopping rules
//! - [`classifier`]: vote producers
//! - [`experiments`]: datasets and Monte Carlo sweeps
//! - [`app`]: configuration and command implementations

pub mod app;
pub mod bispectrum;
pub mod classifier;
pub mod error;
pub mod experiments;
pub(crate) mod fft;
pub mod rng;
pub mod signal;
pub mod voting;

pub use error::{Error, Result};
