//! Deterministic waveform generator and the Gaussian exploration policy.
//!
//! The generator packs a complex seed waveform into reals, runs it through an
//! MLP, unpacks, and projects onto the unit sphere so the transmitted power
//! is always one. Exploration samples come from a complex Gaussian centered
//! on a shrunk copy of the generated waveform; its score function is the
//! kernel of the policy-gradient estimator.

use crate::complex::{pack, unpack, Complex64, RealPacked, Waveform};
use crate::error::{Error, Result};
use crate::nn::{net_backward, net_forward, Activation, ForwardCache, NetParams, NetSpec};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Waveform generator: network parameters plus the fixed seed waveform fed
/// to the input layer. Input and output widths must both be `2K`.
#[derive(Debug, Clone)]
pub struct TxConfig {
    pub params: NetParams,
    pub init_waveform: Waveform,
}

impl TxConfig {
    pub fn new(params: NetParams, init_waveform: Waveform) -> Result<Self> {
        let want = 2 * init_waveform.len();
        if params.spec().input_dim() != want || params.spec().output_dim() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: params.spec().input_dim(),
                context: "transmitter net width",
            });
        }
        Ok(TxConfig { params, init_waveform })
    }

    /// The conventional layout: `2K -> M -> M -> 2K` with ELU hidden layers
    /// and a linear output.
    pub fn default_spec(k: usize, hidden: usize) -> NetSpec {
        NetSpec::new(
            vec![2 * k, hidden, hidden, 2 * k],
            vec![Activation::Elu, Activation::Elu, Activation::Linear],
        )
        .unwrap()
    }
}

/// Exploration variance of the Gaussian policy, in (0, 1).
#[derive(Debug, Clone, Copy)]
pub struct PolicyConfig {
    sigma_p2: f64,
}

impl PolicyConfig {
    pub fn new(sigma_p2: f64) -> Result<Self> {
        if !(sigma_p2 > 0.0 && sigma_p2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "policy variance {sigma_p2} must lie in (0, 1)"
            )));
        }
        Ok(PolicyConfig { sigma_p2 })
    }

    pub fn sigma_p2(&self) -> f64 {
        self.sigma_p2
    }

    /// Mean shrink factor `sqrt(1 - sigma_p2)`.
    pub fn shrink(&self) -> f64 {
        (1.0 - self.sigma_p2).sqrt()
    }
}

/// Intermediates of one generator evaluation, retained for backprop.
#[derive(Debug, Clone)]
pub struct TxCache {
    net: ForwardCache,
    /// Norm of the packed network output before unit normalization; together
    /// with `y_packed` this reconstructs the pre-normalization vector.
    norm: f64,
    y_packed: RealPacked,
}

impl TxCache {
    /// Packed network output before unit normalization.
    pub fn pre_norm(&self) -> Vec<f64> {
        self.y_packed.as_slice().iter().map(|v| v * self.norm).collect()
    }
}

/// Linear-FM seed waveform: chip k has phase `pi * rate * (k / sample_rate)^2`,
/// scaled so the total energy is one.
pub fn chirp_init(k: usize, chirp_rate: f64, sample_rate: f64) -> Result<Waveform> {
    if k == 0 {
        return Err(Error::InvalidParameter("chirp needs K >= 1".into()));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate} must be positive"
        )));
    }
    let amp = 1.0 / (k as f64).sqrt();
    Ok(Waveform::from_fn(k, |i| {
        let t = i as f64 / sample_rate;
        let phase = PI * chirp_rate * t * t;
        Complex64::new(0.0, phase).exp() * amp
    }))
}

/// Run the generator: returns the unit-power waveform and the cache used by
/// the parameter-space gradients.
pub fn tx_forward(cfg: &TxConfig) -> Result<(Waveform, TxCache)> {
    let input = pack(&cfg.init_waveform);
    let (out, net) = net_forward(&cfg.params, input.as_slice())?;
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidParameter(
            "generator produced a zero or non-finite pre-normalization vector".into(),
        ));
    }
    let y_packed = RealPacked::new(out.iter().map(|v| v / norm).collect())?;
    let y = unpack(&y_packed);
    Ok((
        y,
        TxCache {
            net,
            norm,
            y_packed,
        },
    ))
}

/// Chain a waveform-space gradient (with respect to the packed, normalized
/// waveform) through the unit-normalization Jacobian `(I - y y^T)/|v|` and
/// the network, yielding a parameter-space gradient.
pub fn chain_to_params(cfg: &TxConfig, cache: &TxCache, wave_grad: &RealPacked) -> Result<NetParams> {
    if wave_grad.len() != cache.y_packed.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.y_packed.len(),
            got: wave_grad.len(),
            context: "chain_to_params",
        });
    }
    let y = cache.y_packed.as_slice();
    let g = wave_grad.as_slice();
    let proj: f64 = y.iter().zip(g).map(|(a, b)| a * b).sum();
    let cot: Vec<f64> = y
        .iter()
        .zip(g)
        .map(|(yi, gi)| (gi - yi * proj) / cache.norm)
        .collect();
    let (grads, _) = net_backward(&cfg.params, &cache.net, &cot)?;
    Ok(grads)
}

/// Draw one exploration waveform `a = sqrt(1 - s2) y + w` with `w` circular
/// complex Gaussian of per-chip variance `s2 / K`.
pub fn policy_sample(y: &Waveform, pol: &PolicyConfig, rng: &mut impl Rng) -> Waveform {
    let k = y.len();
    let shrink = pol.shrink();
    let std = (pol.sigma_p2 / (2.0 * k as f64)).sqrt();
    Waveform::from_fn(k, |i| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        y.chips()[i] * shrink + Complex64::new(re * std, im * std)
    })
}

/// Log-density of the policy at `a`, including the normalization constant
/// `-K ln(pi sigma_p2 / K)`.
pub fn policy_logpdf(a: &Waveform, y: &Waveform, pol: &PolicyConfig) -> f64 {
    let k = a.len() as f64;
    let shrink = pol.shrink();
    let dist2: f64 = a
        .chips()
        .iter()
        .zip(y.chips())
        .map(|(ai, yi)| (ai - yi * shrink).norm_sqr())
        .sum();
    -k * (PI * pol.sigma_p2 / k).ln() - (k / pol.sigma_p2) * dist2
}

/// Gradient of [`policy_logpdf`] with respect to the packed waveform:
/// `(2K sqrt(1 - s2) / s2) * pack(a - sqrt(1 - s2) y)`.
pub fn policy_score_wrt_waveform(a: &Waveform, y: &Waveform, pol: &PolicyConfig) -> RealPacked {
    let k = a.len() as f64;
    let shrink = pol.shrink();
    let scale = 2.0 * k * shrink / pol.sigma_p2;
    let diff = Waveform::from_fn(a.len(), |i| a.chips()[i] - y.chips()[i] * shrink);
    pack(&diff).scale(scale)
}

/// Parameter-space score `d ln pi(a | y_theta) / d theta`, the chain of
/// [`policy_score_wrt_waveform`] through the generator.
pub fn tx_score_grad(
    cfg: &TxConfig,
    cache: &TxCache,
    a: &Waveform,
    pol: &PolicyConfig,
) -> Result<NetParams> {
    let y = unpack(&cache.y_packed);
    let g = policy_score_wrt_waveform(a, &y, pol);
    chain_to_params(cfg, cache, &g)
}
