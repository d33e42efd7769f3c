//! Waveform penalty functions and their gradients.
//!
//! Two penalties are supported: peak-to-average-power ratio
//! `J_par = K max_k |y_k|^2 / |y|^2` and spectral compatibility
//! `J_spec = y^H Omega y` for a weighted sum of band matrices. Waveform-space
//! gradients are closed form; parameter-space gradients chain them through
//! the generator's normalization Jacobian and network.

use crate::complex::{build_interference_cov, pack, FrequencyBand, HermitianMatrix, RealPacked, Waveform};
use crate::error::{Error, Result};
use crate::nn::NetParams;
use crate::tx::{chain_to_params, TxCache, TxConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    None,
    Par,
    Spectrum,
}

/// Penalty selection with its weight and, for the spectral penalty, the
/// protected bands.
#[derive(Debug, Clone)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub bands: Vec<FrequencyBand>,
}

impl PenaltyConfig {
    pub fn none() -> Self {
        PenaltyConfig {
            kind: PenaltyKind::None,
            lambda: 0.0,
            bands: Vec::new(),
        }
    }

    pub fn par(lambda: f64) -> Result<Self> {
        Self::validate_lambda(lambda)?;
        Ok(PenaltyConfig {
            kind: PenaltyKind::Par,
            lambda,
            bands: Vec::new(),
        })
    }

    pub fn spectrum(lambda: f64, bands: Vec<FrequencyBand>) -> Result<Self> {
        Self::validate_lambda(lambda)?;
        if bands.is_empty() {
            return Err(Error::InvalidParameter(
                "spectrum penalty needs at least one band".into(),
            ));
        }
        Ok(PenaltyConfig {
            kind: PenaltyKind::Spectrum,
            lambda,
            bands,
        })
    }

    fn validate_lambda(lambda: f64) -> Result<()> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty weight {lambda} must be finite and nonnegative"
            )));
        }
        Ok(())
    }

    /// Interference covariance for the spectral penalty, if applicable.
    pub fn omega(&self, k: usize) -> Result<Option<HermitianMatrix>> {
        match self.kind {
            PenaltyKind::Spectrum => Ok(Some(build_interference_cov(&self.bands, k)?)),
            _ => Ok(None),
        }
    }
}

/// Peak-to-average-power ratio, in `[1, K]`.
pub fn par_value(y: &Waveform) -> Result<f64> {
    let total = y.norm_sqr();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("PAR of the zero waveform".into()));
    }
    let peak = y
        .chips()
        .iter()
        .map(|c| c.norm_sqr())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(y.len() as f64 * peak / total)
}

fn argmax_modulus(y: &Waveform) -> usize {
    // ties resolved to the lowest index; they are measure-zero under training
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, c) in y.chips().iter().enumerate() {
        let v = c.norm_sqr();
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// Gradient of the PAR penalty with respect to the packed waveform, assuming
/// unit power: `2K Re(y_max)` at the argmax real slot and `2K Im(y_max)` at
/// its imaginary slot, zero elsewhere.
pub fn par_grad_wrt_waveform(y: &Waveform) -> Result<RealPacked> {
    if y.norm_sqr() <= 0.0 {
        return Err(Error::InvalidParameter("PAR gradient of the zero waveform".into()));
    }
    let k = y.len();
    let idx = argmax_modulus(y);
    let mut g = RealPacked::zeros(k);
    let scale = 2.0 * k as f64;
    g.as_mut_slice()[idx] = scale * y.chips()[idx].re;
    g.as_mut_slice()[k + idx] = scale * y.chips()[idx].im;
    Ok(g)
}

/// Interfering energy `y^H Omega y`.
pub fn spectral_value(y: &Waveform, omega: &HermitianMatrix) -> Result<f64> {
    crate::complex::quad_form(y, omega)
}

/// Gradient of the spectral penalty with respect to the packed waveform:
/// `[2 Re(Omega y); 2 Im(Omega y)]`.
pub fn spectral_grad_wrt_waveform(y: &Waveform, omega: &HermitianMatrix) -> Result<RealPacked> {
    if y.len() != omega.dim() {
        return Err(Error::DimensionMismatch {
            expected: omega.dim(),
            got: y.len(),
            context: "spectral_grad",
        });
    }
    let oy = omega.matvec(y.chips());
    let oy = Waveform::new(oy)?;
    Ok(pack(&oy).scale(2.0))
}

/// `lambda * d J / d theta`: the configured penalty's waveform gradient
/// chained through the generator. `PenaltyKind::None` or `lambda = 0` give an
/// exact zero gradient.
pub fn penalty_param_grad(
    cfg: &TxConfig,
    cache: &TxCache,
    y: &Waveform,
    pen: &PenaltyConfig,
) -> Result<NetParams> {
    if pen.kind == PenaltyKind::None || pen.lambda == 0.0 {
        return Ok(NetParams::zeros(cfg.params.spec()));
    }
    let wave_grad = match pen.kind {
        PenaltyKind::Par => par_grad_wrt_waveform(y)?,
        PenaltyKind::Spectrum => {
            let omega = build_interference_cov(&pen.bands, y.len())?;
            spectral_grad_wrt_waveform(y, &omega)?
        }
        PenaltyKind::None => unreachable!(),
    };
    let mut g = chain_to_params(cfg, cache, &wave_grad)?;
    g.scale(pen.lambda);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_band_matrix, Complex64};
    use crate::nn::NetParams;
    use crate::rng::StreamKey;
    use crate::tx::{chirp_init, tx_forward};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn par_bounds_and_direct_value() {
        let chirp = chirp_init(8, 2.5e9, 200e3).unwrap();
        assert_abs_diff_eq!(par_value(&chirp).unwrap(), 1.0, epsilon = 1e-12);
        let e1 = Waveform::unit(5, 0);
        assert_abs_diff_eq!(par_value(&e1).unwrap(), 5.0);
        let y = Waveform::new(vec![
            Complex64::new(0.8f64.sqrt(), 0.0),
            Complex64::new(0.2f64.sqrt(), 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(par_value(&y).unwrap(), 1.6, epsilon = 1e-12);
        assert!(par_value(&Waveform::zeros(3)).is_err());
    }

    #[test]
    fn par_grad_direct_value() {
        let y = Waveform::new(vec![
            Complex64::new(0.8f64.sqrt(), 0.0),
            Complex64::new(0.2f64.sqrt(), 0.0),
        ])
        .unwrap();
        let g = par_grad_wrt_waveform(&y).unwrap();
        let expect = 4.0 * 0.8f64.sqrt();
        assert_abs_diff_eq!(g.as_slice()[0], expect, epsilon = 1e-12);
        assert_eq!(&g.as_slice()[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn par_grad_imaginary_peak() {
        let y = Waveform::new(vec![
            Complex64::new(0.2f64.sqrt(), 0.0),
            Complex64::new(0.0, -(0.8f64.sqrt())),
        ])
        .unwrap();
        let g = par_grad_wrt_waveform(&y).unwrap();
        assert_eq!(g.as_slice()[0], 0.0);
        assert_eq!(g.as_slice()[1], 0.0);
        assert_eq!(g.as_slice()[2], 0.0);
        assert_abs_diff_eq!(g.as_slice()[3], -4.0 * 0.8f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spectral_value_cases() {
        let band = FrequencyBand::new(0.0, 0.5, 1.0).unwrap();
        let omega = build_band_matrix(&band, 2);
        let e1 = Waveform::unit(2, 0);
        assert_abs_diff_eq!(spectral_value(&e1, &omega).unwrap(), 0.5, epsilon = 1e-12);
        let zero = HermitianMatrix::zeros(2);
        assert_abs_diff_eq!(spectral_value(&e1, &zero).unwrap(), 0.0);
    }

    #[test]
    fn spectral_grad_hand_value() {
        let band = FrequencyBand::new(0.0, 0.5, 1.0).unwrap();
        let omega = build_band_matrix(&band, 2);
        let y = Waveform::unit(2, 0);
        let g = spectral_grad_wrt_waveform(&y, &omega).unwrap();
        assert_abs_diff_eq!(g.as_slice()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.as_slice()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.as_slice()[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.as_slice()[3], 2.0 / std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn spectral_grad_identity_omega() {
        let y = chirp_init(4, 2.5e9, 200e3).unwrap();
        let id = HermitianMatrix::identity(4);
        let g = spectral_grad_wrt_waveform(&y, &id).unwrap();
        let expect = pack(&y).scale(2.0);
        for (a, b) in g.as_slice().iter().zip(expect.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectral_grad_matches_finite_differences() {
        let band = FrequencyBand::new(0.3, 0.35, 1.0).unwrap();
        let k = 6;
        let omega = build_band_matrix(&band, k);
        let mut rng = StreamKey::root(3).rng();
        let y = Waveform::from_fn(k, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let g = spectral_grad_wrt_waveform(&y, &omega).unwrap();
        let packed = pack(&y);
        let step = 1e-6;
        for j in 0..2 * k {
            let mut up = packed.clone();
            up.as_mut_slice()[j] += step;
            let mut dn = packed.clone();
            dn.as_mut_slice()[j] -= step;
            let fd = (spectral_value(&up.unpack(), &omega).unwrap()
                - spectral_value(&dn.unpack(), &omega).unwrap())
                / (2.0 * step);
            let rel = (g.as_slice()[j] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel <= 1e-6, "coord {j}");
        }
    }

    fn random_tx(k: usize, seed: u64) -> TxConfig {
        let spec = TxConfig::default_spec(k, 10);
        let params = NetParams::init(&spec, &mut StreamKey::root(seed).rng());
        TxConfig::new(params, chirp_init(k, 2.5e9, 200e3).unwrap()).unwrap()
    }

    #[test]
    fn penalty_param_grad_zero_for_none_and_zero_lambda() {
        let cfg = random_tx(4, 5);
        let (y, cache) = tx_forward(&cfg).unwrap();
        let g = penalty_param_grad(&cfg, &cache, &y, &PenaltyConfig::none()).unwrap();
        assert_eq!(g.norm(), 0.0);
        let g2 = penalty_param_grad(&cfg, &cache, &y, &PenaltyConfig::par(0.0).unwrap()).unwrap();
        assert_eq!(g2.norm(), 0.0);
    }

    /// Finite differences of `theta -> lambda * J(f_theta(s))` at sampled
    /// coordinates, the oracle for the chained penalty gradient.
    fn check_penalty_fd(pen: &PenaltyConfig, value: impl Fn(&Waveform) -> f64, tol: f64) {
        let cfg = random_tx(4, 6);
        let (y, cache) = tx_forward(&cfg).unwrap();
        // keep away from modulus ties for the PAR penalty
        if pen.kind == PenaltyKind::Par {
            let mut mods: Vec<f64> = y.chips().iter().map(|c| c.norm_sqr()).collect();
            mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(mods[0] - mods[1] > 1e-6, "test waveform too close to a tie");
        }
        let g = penalty_param_grad(&cfg, &cache, &y, pen).unwrap();
        let step = 1e-6;
        let n = cfg.params.flat_len();
        let mut rng = StreamKey::root(7).rng();
        for _ in 0..20 {
            let j = rng.gen_range(0..n);
            let eval = |delta: f64| {
                let mut c2 = cfg.clone();
                c2.params.set_flat(j, cfg.params.get_flat(j) + delta);
                let (y2, _) = tx_forward(&c2).unwrap();
                pen.lambda * value(&y2)
            };
            let fd = (eval(step) - eval(-step)) / (2.0 * step);
            let rel = (g.get_flat(j) - fd).abs() / fd.abs().max(1e-5);
            assert!(rel <= tol, "coord {j}: {} vs {fd}", g.get_flat(j));
        }
    }

    #[test]
    fn par_param_grad_matches_finite_differences() {
        let pen = PenaltyConfig::par(0.7).unwrap();
        check_penalty_fd(&pen, |y| par_value(y).unwrap(), 1e-4);
    }

    #[test]
    fn spectral_param_grad_matches_finite_differences() {
        let bands = vec![
            FrequencyBand::new(0.3, 0.35, 1.0).unwrap(),
            FrequencyBand::new(0.5, 0.6, 1.0).unwrap(),
        ];
        let pen = PenaltyConfig::spectrum(0.4, bands.clone()).unwrap();
        let omega = build_interference_cov(&bands, 4).unwrap();
        check_penalty_fd(&pen, move |y| spectral_value(y, &omega).unwrap(), 1e-5);
    }

    #[test]
    fn par_stays_in_bounds_on_generated_waveforms() {
        for seed in 0..20 {
            let cfg = random_tx(8, 100 + seed);
            let (y, _) = tx_forward(&cfg).unwrap();
            let v = par_value(&y).unwrap();
            assert!((1.0..=8.0 + 1e-9).contains(&v), "par {v}");
        }
    }
}
