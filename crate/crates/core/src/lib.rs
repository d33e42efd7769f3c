//! End-to-end learned radar system: a transmit waveform generator and a
//! detector, both small feedforward networks, trained jointly against a
//! stochastic clutter-plus-noise environment.
//!
//! The crate is organized bottom-up:
//!
//! - [`complex`]: complex vector/matrix primitives (packing, covariances,
//!   Cholesky, spectra, shifting).
//! - [`nn`]: a minimal MLP engine with ELU/sigmoid/linear layers, reverse-mode
//!   gradients, and Adam/SGD updates.
//! - [`env`]: the stochastic radar channel (Rayleigh target, Weibull clutter,
//!   colored noise) and dataset assembly.
//! - [`tx`] / [`rx`]: the waveform generator with its Gaussian exploration
//!   policy, and the detector with its cross-entropy loss.
//! - [`constraints`]: peak-to-average-power and spectral-compatibility
//!   penalties with closed-form waveform gradients.
//! - [`training`]: alternating, simultaneous, and known-channel training
//!   loops built from the gradient estimators.
//! - [`eval`]: Monte Carlo ROC estimation, the square-law baseline, waveform
//!   reports, and the gradient-identity verification harness.
//! - [`config`]: flat `key = value` experiment configuration files.
//!
//! Everything is deterministic under a fixed seed: random draws are derived
//! from explicit [`rng::StreamKey`] paths, so results do not depend on worker
//! count or scheduling.

pub mod complex;
pub mod config;
pub mod constraints;
pub mod env;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod rx;
pub mod training;
pub mod tx;

pub use complex::{Complex64, FrequencyBand, HermitianMatrix, RealPacked, Waveform};
pub use error::{Error, Result};
