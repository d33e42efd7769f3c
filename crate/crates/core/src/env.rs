//! The stochastic radar channel and dataset assembly.
//!
//! A received vector is `z = i * alpha * a + c + n`: a Rayleigh-amplitude
//! target return when `i = 1`, clutter synthesized as a superposition of
//! shifted copies of the transmitted waveform weighted by Weibull-magnitude
//! scattering coefficients, and colored circular Gaussian noise.
//!
//! Determinism contract: every sample of a dataset is generated from
//! [`StreamKey`] substreams derived from `(seed, item index, channel tag)`,
//! so the same seed yields the same dataset for any worker count, H0 samples
//! consume the same draws as H1 samples (changing the target power never
//! perturbs H0 data), and policy-on datasets stay aligned with fixed-waveform
//! datasets item by item.

use crate::complex::{build_noise_cov, CholeskyFactor, Complex64, HermitianMatrix, Waveform};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::tx::{policy_sample, PolicyConfig};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

/// Weibull shape mixture for clutter scattering magnitudes. Shape 2 is the
/// Gaussian special case.
#[derive(Debug, Clone)]
pub struct ClutterMix {
    shapes: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ClutterMix {
    pub fn new(shapes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if shapes.is_empty() || shapes.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "clutter mixture needs matching, nonempty shapes and weights".into(),
            ));
        }
        for &b in &shapes {
            if !(0.25..=2.0).contains(&b) {
                return Err(Error::InvalidParameter(format!(
                    "clutter shape {b} outside the nominal range [0.25, 2]"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidParameter(
                "clutter mixture weights must be nonnegative with positive sum".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(ClutterMix {
            shapes,
            weights,
            cumulative,
        })
    }

    pub fn gaussian() -> Self {
        ClutterMix::new(vec![2.0], vec![1.0]).unwrap()
    }

    pub fn single(beta: f64) -> Result<Self> {
        ClutterMix::new(vec![beta], vec![1.0])
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The single Gaussian shape, if that is all the mixture contains.
    pub fn as_single_gaussian(&self) -> Option<f64> {
        if self.shapes.len() == 1 && self.shapes[0] == 2.0 {
            Some(2.0)
        } else {
            None
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.shapes.len() - 1);
        self.shapes[idx]
    }
}

/// Full stochastic environment description, all powers on a linear scale.
#[derive(Debug, Clone)]
pub struct EnvModel {
    pub k: usize,
    /// Target power E|alpha|^2.
    pub sigma_alpha2: f64,
    /// Noise power per chip.
    pub sigma_n2: f64,
    /// One-lag noise correlation in [0, 1).
    pub rho: f64,
    /// Per-cell clutter scattering power, uniform across the 2K-1 cells.
    pub sigma_gamma2: f64,
    pub clutter: ClutterMix,
    /// P(target present); P(absent) = 1 - prior_h1.
    pub prior_h1: f64,
}

impl EnvModel {
    pub fn new(
        k: usize,
        sigma_alpha2: f64,
        sigma_n2: f64,
        rho: f64,
        sigma_gamma2: f64,
        clutter: ClutterMix,
        prior_h1: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        if !(sigma_alpha2 > 0.0) || !(sigma_n2 > 0.0) {
            return Err(Error::InvalidParameter(
                "target and noise powers must be positive".into(),
            ));
        }
        if sigma_gamma2 < 0.0 {
            return Err(Error::InvalidParameter("clutter power must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "one-lag correlation {rho} must lie in [0, 1)"
            )));
        }
        if !(0.0..=1.0).contains(&prior_h1) {
            return Err(Error::InvalidParameter(format!(
                "prior {prior_h1} must lie in [0, 1]"
            )));
        }
        Ok(EnvModel {
            k,
            sigma_alpha2,
            sigma_n2,
            rho,
            sigma_gamma2,
            clutter,
            prior_h1,
        })
    }

    pub fn noise_cov(&self) -> HermitianMatrix {
        build_noise_cov(self.sigma_n2, self.rho, self.k).expect("validated at construction")
    }

    pub fn noise_cholesky(&self) -> CholeskyFactor {
        self.noise_cov()
            .cholesky()
            .expect("Toeplitz noise covariance with rho < 1 is positive definite")
    }

    /// Error unless the clutter is the single Gaussian shape; closed-form
    /// likelihoods exist only there.
    pub fn require_gaussian(&self) -> Result<()> {
        if self.clutter.as_single_gaussian().is_some() {
            Ok(())
        } else {
            Err(Error::NonGaussianEnv(format!(
                "shapes {:?}",
                self.clutter.shapes()
            )))
        }
    }
}

/// One labeled channel observation along with the waveform realization that
/// produced it.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub z: Waveform,
    pub label: bool,
    pub a: Waveform,
}

/// How transmitted waveforms are produced during dataset generation.
#[derive(Debug, Clone)]
pub enum WaveformSource {
    /// Exploration off: every sample uses this waveform.
    Fixed(Waveform),
    /// Exploration on: each sample draws from the Gaussian policy around the
    /// mean waveform.
    Policy { mean: Waveform, policy: PolicyConfig },
}

/// Weibull scale giving the requested scattering power:
/// `nu = sqrt(p * beta / (2 Gamma(2/beta)))`.
pub fn weibull_scale_from_power(sigma_gamma2: f64, beta: f64) -> f64 {
    debug_assert!(sigma_gamma2 > 0.0 && beta > 0.0);
    (sigma_gamma2 * beta / (2.0 * gamma(2.0 / beta))).sqrt()
}

/// Inverse-CDF magnitude transform `nu * (-ln u)^(1/beta)`.
pub fn weibull_magnitude(nu: f64, beta: f64, u: f64) -> f64 {
    nu * (-u.ln()).powf(1.0 / beta)
}

/// Draw the 2K-1 complex scattering coefficients for one pulse: Weibull
/// magnitudes with uniform phases, independent across range cells.
pub fn sample_clutter_coeffs(
    k: usize,
    sigma_gamma2: f64,
    beta: f64,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    if sigma_gamma2 == 0.0 {
        // burn the same number of draws so streams stay aligned
        for _ in 0..(2 * k - 1) {
            let _: f64 = rng.gen();
            let _: f64 = rng.gen();
        }
        return vec![Complex64::new(0.0, 0.0); 2 * k - 1];
    }
    let nu = weibull_scale_from_power(sigma_gamma2, beta);
    (0..(2 * k - 1))
        .map(|_| {
            let u: f64 = rng.gen();
            let mag = weibull_magnitude(nu, beta, u);
            let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(mag, phase)
        })
        .collect()
}

/// Clutter synthesis `c = sum_g gamma_g J_g a` over cells `g = -K+1 .. K-1`.
pub fn synth_clutter(gamma: &[Complex64], a: &Waveform) -> Result<Waveform> {
    let k = a.len();
    if gamma.len() != 2 * k - 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * k - 1,
            got: gamma.len(),
            context: "clutter coefficients",
        });
    }
    let mut c = vec![Complex64::new(0.0, 0.0); k];
    for (cell, &g_coef) in gamma.iter().enumerate() {
        let g = cell as i64 - (k as i64 - 1);
        if g_coef == Complex64::new(0.0, 0.0) {
            continue;
        }
        // shifted copy: c[v] += gamma_g * a[v - g]
        for v in 0..k {
            let src = v as i64 - g;
            if (0..k as i64).contains(&src) {
                c[v] += g_coef * a.chips()[src as usize];
            }
        }
    }
    Waveform::new(c)
}

/// Colored noise `n = L g` with `g` circular complex Gaussian of unit
/// covariance.
pub fn sample_noise(l: &CholeskyFactor, rng: &mut impl Rng) -> Waveform {
    let k = l.dim();
    let g: Vec<Complex64> = (0..k)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) / 2f64.sqrt()
        })
        .collect();
    Waveform::new(l.mul(&g)).expect("finite by construction")
}

/// Rayleigh-envelope target amplitude `alpha ~ CN(0, sigma_alpha2)`.
pub fn sample_target(sigma_alpha2: f64, rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (sigma_alpha2 / 2.0).sqrt()
}

/// One channel use: `z = i * alpha * a + c + n`.
///
/// The target amplitude is drawn (and discarded under H0) before clutter and
/// noise, so H0 and H1 consume identical randomness and H0 outputs are
/// invariant to the target power.
pub fn channel(
    a: &Waveform,
    target_present: bool,
    env: &EnvModel,
    beta: f64,
    rng: &mut impl Rng,
) -> Result<Waveform> {
    let noise_l = env.noise_cholesky();
    channel_with(a, target_present, env, beta, &noise_l, rng)
}

/// [`channel`] with a precomputed noise Cholesky factor; draw order and
/// results are identical.
pub fn channel_with(
    a: &Waveform,
    target_present: bool,
    env: &EnvModel,
    beta: f64,
    noise_l: &CholeskyFactor,
    rng: &mut impl Rng,
) -> Result<Waveform> {
    if a.len() != env.k {
        return Err(Error::DimensionMismatch {
            expected: env.k,
            got: a.len(),
            context: "channel input waveform",
        });
    }
    let alpha = sample_target(env.sigma_alpha2, rng);
    let gamma = sample_clutter_coeffs(env.k, env.sigma_gamma2, beta, rng);
    let c = synth_clutter(&gamma, a)?;
    let n = sample_noise(noise_l, rng);
    let mut z = c.add(&n);
    if target_present {
        z = z.add(&a.scale(alpha));
    }
    Ok(z)
}

const TAG_LABEL: u64 = 0;
const TAG_POLICY: u64 = 1;
const TAG_CHANNEL: u64 = 2;

/// Generate `q` i.i.d. labeled samples.
///
/// Labels follow the environment prior; the clutter shape is drawn per item
/// from the mixture; the transmitted waveform comes from `source`. Items are
/// generated in parallel from per-item substreams of `key`, so the result is
/// a pure function of `(key, env, source, q)`.
pub fn gen_dataset(
    q: usize,
    env: &EnvModel,
    source: &WaveformSource,
    key: StreamKey,
) -> Result<Vec<LabeledSample>> {
    if q == 0 {
        return Err(Error::InvalidParameter("dataset size must be >= 1".into()));
    }
    let noise_l = env.noise_cholesky();
    (0..q)
        .into_par_iter()
        .map(|item| {
            let item_key = key.child(item as u64);
            let mut meta_rng = item_key.child(TAG_LABEL).rng();
            let label = meta_rng.gen::<f64>() < env.prior_h1;
            let beta = env.clutter.draw(&mut meta_rng);
            let a = match source {
                WaveformSource::Fixed(w) => w.clone(),
                WaveformSource::Policy { mean, policy } => {
                    let mut pol_rng = item_key.child(TAG_POLICY).rng();
                    policy_sample(mean, policy, &mut pol_rng)
                }
            };
            let mut chan_rng = item_key.child(TAG_CHANNEL).rng();
            let z = channel_with(&a, label, env, beta, &noise_l, &mut chan_rng)?;
            Ok(LabeledSample { z, label, a })
        })
        .collect()
}

/// Received-vector covariance under one hypothesis, valid when the clutter
/// scattering is Gaussian (shape 2):
/// `Sigma_i(y) = i sigma_alpha2 y y^H + Sigma_c(y) + Omega_n`.
pub fn hypothesis_cov(y: &Waveform, env: &EnvModel, target_present: bool) -> HermitianMatrix {
    let mut cov = clutter_covariance(y, env);
    cov.axpy(1.0, &env.noise_cov());
    if target_present {
        cov.add_outer(env.sigma_alpha2, y.chips());
    }
    cov
}

/// Clutter covariance for a fixed waveform:
/// `Sigma_c(y) = sum_g sigma_gamma2 (J_g y)(J_g y)^H`.
pub fn clutter_covariance(y: &Waveform, env: &EnvModel) -> HermitianMatrix {
    let k = y.len();
    let mut cov = HermitianMatrix::zeros(k);
    if env.sigma_gamma2 == 0.0 {
        return cov;
    }
    for g in -(k as i64 - 1)..=(k as i64 - 1) {
        let shifted = crate::complex::shift_apply(y, g).expect("|g| < K by construction");
        cov.add_outer(env.sigma_gamma2, shifted.chips());
    }
    cov
}
