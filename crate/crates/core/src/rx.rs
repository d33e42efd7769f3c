//! Detector network and its cross-entropy loss.
//!
//! The detector maps a packed received vector through a sigmoid MLP to a
//! scalar `p` interpreted as the posterior probability of a target being
//! present; decisions compare `p` against a hard threshold.

use crate::complex::{pack, Waveform};
use crate::error::{Error, Result};
use crate::nn::{net_forward, Activation, ForwardCache, NetParams, NetSpec};

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` before any logarithm so
/// saturated sigmoids cannot produce infinities.
pub const CLAMP: f64 = 1e-12;

/// Detector configuration; the network must end in a single output.
#[derive(Debug, Clone)]
pub struct RxConfig {
    pub params: NetParams,
}

impl RxConfig {
    pub fn new(params: NetParams) -> Result<Self> {
        if params.spec().output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: params.spec().output_dim(),
                context: "receiver output layer",
            });
        }
        Ok(RxConfig { params })
    }

    /// The conventional layout: `2K -> M -> M -> 1`, all sigmoid.
    pub fn default_spec(k: usize, hidden: usize) -> NetSpec {
        NetSpec::new(
            vec![2 * k, hidden, hidden, 1],
            vec![Activation::Sigmoid, Activation::Sigmoid, Activation::Sigmoid],
        )
        .unwrap()
    }
}

/// Evaluate the detector on a received vector.
pub fn rx_forward(cfg: &RxConfig, z: &Waveform) -> Result<(f64, ForwardCache)> {
    let input = pack(z);
    let (out, cache) = net_forward(&cfg.params, input.as_slice())?;
    Ok((out[0], cache))
}

/// Instantaneous binary cross-entropy `-i ln p - (1-i) ln(1-p)`.
pub fn bce_loss(p: f64, target: bool) -> f64 {
    let p = p.clamp(CLAMP, 1.0 - CLAMP);
    if target {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of [`bce_loss`] with respect to `p`.
pub fn bce_grad(p: f64, target: bool) -> f64 {
    let p = p.clamp(CLAMP, 1.0 - CLAMP);
    if target {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

/// Hard decision: declare a target present iff `p > threshold`. Ties go to
/// the no-target side, which is conservative for false alarms.
pub fn decide(p: f64, threshold: f64) -> bool {
    p > threshold
}
