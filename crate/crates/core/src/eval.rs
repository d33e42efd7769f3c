//! Monte Carlo ROC estimation, the square-law model-based baseline, waveform
//! reports, and the statistical verification harness for the gradient
//! identities.

use crate::complex::{esd, CholeskyFactor, Complex64, FrequencyBand, Waveform};
use crate::constraints::{par_value, spectral_value, PenaltyConfig};
use crate::env::{clutter_covariance, gen_dataset, EnvModel, WaveformSource};
use crate::error::{Error, Result};
use crate::nn::{NetParams};
use crate::rng::StreamKey;
use crate::rx::{rx_forward, RxConfig};
use crate::training::{dataset_losses, known_channel_tx_grad, rx_grad_estimate, tx_rl_grad_estimate};
use crate::tx::{chirp_init, policy_logpdf, policy_sample, policy_score_wrt_waveform, tx_forward, tx_score_grad, PolicyConfig, TxConfig};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Log-density of a zero-mean circular complex Gaussian with covariance
/// `L L^H`: `-K ln pi - ln det - |L^{-1} z|^2`.
pub fn gaussian_loglik(z: &Waveform, chol: &CholeskyFactor) -> f64 {
    let k = z.len() as f64;
    let x = chol.solve_lower(z.chips());
    let quad: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    -k * PI.ln() - chol.logdet() - quad
}

/// One operating point of an ROC sweep.
#[derive(Debug, Clone, Copy)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

/// Empirical ROC: every achievable operating point of a detector statistic,
/// thresholds ascending (so `pfa` and `pd` are nonincreasing).
#[derive(Debug, Clone)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub q0: usize,
    pub q1: usize,
}

impl RocCurve {
    /// Build the sweep from raw statistic samples under each hypothesis.
    pub fn from_stats(mut h0: Vec<f64>, mut h1: Vec<f64>) -> Self {
        let (q0, q1) = (h0.len(), h1.len());
        h0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        h1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut thresholds: Vec<f64> = Vec::with_capacity(q0 + q1 + 1);
        let lowest = h0
            .first()
            .copied()
            .unwrap_or(0.0)
            .min(h1.first().copied().unwrap_or(0.0));
        thresholds.push(lowest - 1.0); // sentinel: everything detected
        thresholds.extend(h0.iter().copied());
        thresholds.extend(h1.iter().copied());
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thresholds.dedup();

        let frac_above = |sorted: &[f64], t: f64| -> f64 {
            // strict inequality: count of samples > t
            let idx = sorted.partition_point(|&v| v <= t);
            (sorted.len() - idx) as f64 / sorted.len() as f64
        };
        let points = thresholds
            .iter()
            .map(|&t| RocPoint {
                threshold: t,
                pfa: frac_above(&h0, t),
                pd: frac_above(&h1, t),
            })
            .collect();
        RocCurve { points, q0, q1 }
    }

    /// Evaluate at explicit thresholds instead of the full sweep.
    pub fn at_thresholds(h0: &[f64], h1: &[f64], thresholds: &[f64]) -> Self {
        let frac_above =
            |s: &[f64], t: f64| s.iter().filter(|&&v| v > t).count() as f64 / s.len() as f64;
        let points = thresholds
            .iter()
            .map(|&t| RocPoint {
                threshold: t,
                pfa: frac_above(h0, t),
                pd: frac_above(h1, t),
            })
            .collect();
        RocCurve {
            points,
            q0: h0.len(),
            q1: h1.len(),
        }
    }

    /// Linear interpolation of detection probability at a false-alarm rate.
    pub fn pd_at_pfa(&self, pfa: f64) -> f64 {
        self.interp(pfa).0
    }

    /// Linear interpolation of the threshold achieving a false-alarm rate.
    pub fn threshold_at_pfa(&self, pfa: f64) -> f64 {
        self.interp(pfa).1
    }

    fn interp(&self, pfa: f64) -> (f64, f64) {
        // points are ordered with pfa nonincreasing
        let pts = &self.points;
        if pfa >= pts[0].pfa {
            return (pts[0].pd, pts[0].threshold);
        }
        for w in pts.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            if pfa <= hi.pfa && pfa >= lo.pfa {
                if hi.pfa == lo.pfa {
                    return (lo.pd, lo.threshold);
                }
                let t = (pfa - lo.pfa) / (hi.pfa - lo.pfa);
                return (
                    lo.pd + t * (hi.pd - lo.pd),
                    lo.threshold + t * (hi.threshold - lo.threshold),
                );
            }
        }
        let last = pts.last().unwrap();
        (last.pd, last.threshold)
    }

    /// CSV `threshold,pfa,pd` interpolated onto a fixed false-alarm grid so
    /// curves from different detectors share identical pfa columns.
    pub fn to_csv_interpolated(&self, pfa_grid: &[f64]) -> String {
        let mut out = String::from("threshold,pfa,pd\n");
        for &pfa in pfa_grid {
            let (pd, t) = self.interp(pfa);
            out.push_str(&format!("{},{:.6},{:.6}\n", t, pfa, pd));
        }
        out
    }
}

/// Descending log-spaced false-alarm grid shared by ROC CSV outputs.
pub fn default_pfa_grid() -> Vec<f64> {
    (0..=40)
        .map(|i| 10f64.powf(-(i as f64) / 10.0))
        .collect()
}

/// Draw detector statistics under both hypotheses with exploration off.
///
/// Item draws come from per-item substreams of `key`, so curves for
/// different detectors produced from the same key see identical channel
/// realizations.
pub fn detector_statistics<F>(
    stat: &F,
    y: &Waveform,
    env: &EnvModel,
    q0: usize,
    q1: usize,
    key: StreamKey,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&Waveform) -> f64 + Sync,
{
    let noise_l = env.noise_cholesky();
    let run = |label: bool, q: usize| -> Result<Vec<f64>> {
        let branch = key.child(label as u64);
        (0..q)
            .into_par_iter()
            .map(|item| {
                let item_key = branch.child(item as u64);
                let beta = env.clutter.draw(&mut item_key.child(0).rng());
                let mut chan_rng = item_key.child(1).rng();
                let z = crate::env::channel_with(y, label, env, beta, &noise_l, &mut chan_rng)?;
                Ok(stat(&z))
            })
            .collect()
    };
    Ok((run(false, q0)?, run(true, q1)?))
}

/// Monte Carlo ROC of a detector statistic at a fixed waveform. With
/// `thresholds = None` the curve contains every achievable operating point.
pub fn estimate_roc<F>(
    stat: &F,
    y: &Waveform,
    env: &EnvModel,
    q0: usize,
    q1: usize,
    thresholds: Option<&[f64]>,
    key: StreamKey,
) -> Result<RocCurve>
where
    F: Fn(&Waveform) -> f64 + Sync,
{
    if q0 == 0 || q1 == 0 {
        return Err(Error::InvalidParameter("ROC needs Q0, Q1 >= 1".into()));
    }
    let (h0, h1) = detector_statistics(stat, y, env, q0, q1, key)?;
    Ok(match thresholds {
        Some(ts) => RocCurve::at_thresholds(&h0, &h1, ts),
        None => RocCurve::from_stats(h0, h1),
    })
}

/// Whitened-matched-filter square-law statistic `T(z) = |y^H Sigma^{-1} z|^2`
/// with `Sigma = Sigma_c(y) + Omega_n`.
///
/// This is the optimal test for a Rayleigh-amplitude target in Gaussian
/// interference; under non-Gaussian clutter it serves as the model-mismatched
/// baseline (the covariance only involves second moments, which exist for
/// every shape).
#[derive(Debug, Clone)]
pub struct SquareLawDetector {
    w: Vec<Complex64>,
}

impl SquareLawDetector {
    pub fn statistic(&self, z: &Waveform) -> f64 {
        let dot: Complex64 = self
            .w
            .iter()
            .zip(z.chips())
            .map(|(wi, zi)| wi.conj() * zi)
            .sum();
        dot.norm_sqr()
    }
}

pub fn square_law_statistic(y: &Waveform, env: &EnvModel) -> Result<SquareLawDetector> {
    let mut sigma = clutter_covariance(y, env);
    sigma.axpy(1.0, &env.noise_cov());
    let chol = sigma.cholesky()?;
    let w = chol.solve(y.chips());
    Ok(SquareLawDetector { w })
}

/// Detector-output statistic of a trained receiver.
pub fn rx_statistic(rx: &RxConfig) -> impl Fn(&Waveform) -> f64 + Sync + '_ {
    move |z: &Waveform| rx_forward(rx, z).map(|(p, _)| p).unwrap_or(f64::NAN)
}

/// Scalar quality numbers for one waveform.
#[derive(Debug, Clone)]
pub struct WaveformReport {
    pub par_db: f64,
    /// Interfering energy over the bands with unit weights, in dB;
    /// NaN when no bands are given.
    pub interf_db: f64,
    pub esd: Vec<(f64, f64)>,
}

pub fn waveform_report(y: &Waveform, bands: &[FrequencyBand], esd_grid: usize) -> Result<WaveformReport> {
    let par_db = 10.0 * par_value(y)?.log10();
    let interf_db = if bands.is_empty() {
        f64::NAN
    } else {
        let unit: Vec<FrequencyBand> = bands
            .iter()
            .map(|b| FrequencyBand::new(b.f_low, b.f_high, 1.0).unwrap())
            .collect();
        let omega = crate::complex::build_interference_cov(&unit, y.len())?;
        10.0 * spectral_value(y, &omega)?.log10()
    };
    Ok(WaveformReport {
        par_db,
        interf_db,
        esd: esd(y, esd_grid),
    })
}

/// CSV `name,par_db,interf_db` with dB values to 4 decimals.
pub fn report_csv(rows: &[(&str, &WaveformReport)]) -> String {
    let mut out = String::from("name,par_db,interf_db\n");
    for (name, r) in rows {
        out.push_str(&format!("{},{:.4},{:.4}\n", name, r.par_db, r.interf_db));
    }
    out
}

/// Result of the fixed-vs-policy receiver-gradient comparison.
#[derive(Debug, Clone)]
pub struct Prop1Report {
    pub max_abs_z: f64,
    pub reps: usize,
    pub pass: bool,
}

/// Compare the receiver gradient estimated from fixed-waveform data against
/// the one estimated from policy-sampled data. The two means must agree: for
/// each parameter the z-score across `reps` repetitions stays within 4.
pub fn prop1_test(
    rx: &RxConfig,
    tx: &TxConfig,
    env: &EnvModel,
    pol: &PolicyConfig,
    q: usize,
    reps: usize,
    key: StreamKey,
) -> Result<Prop1Report> {
    let (y, _) = tx_forward(tx)?;
    let pairs: Vec<(NetParams, NetParams)> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<(NetParams, NetParams)> {
            let rep_key = key.child(rep as u64);
            let fixed = gen_dataset(q, env, &WaveformSource::Fixed(y.clone()), rep_key.child(0))?;
            let g_fixed = rx_grad_estimate(rx, &fixed)?;
            let policy = gen_dataset(
                q,
                env,
                &WaveformSource::Policy { mean: y.clone(), policy: *pol },
                rep_key.child(1),
            )?;
            let g_policy = rx_grad_estimate(rx, &policy)?;
            Ok((g_fixed, g_policy))
        })
        .collect::<Result<_>>()?;

    let n = rx.params.flat_len();
    let m = reps as f64;
    let mut max_abs_z = 0.0f64;
    for j in 0..n {
        let (mut s1, mut s2, mut ss1, mut ss2) = (0.0, 0.0, 0.0, 0.0);
        for (a, b) in &pairs {
            let va = a.get_flat(j);
            let vb = b.get_flat(j);
            s1 += va;
            s2 += vb;
            ss1 += va * va;
            ss2 += vb * vb;
        }
        let m1 = s1 / m;
        let m2 = s2 / m;
        let v1 = (ss1 / m - m1 * m1).max(0.0) * m / (m - 1.0);
        let v2 = (ss2 / m - m2 * m2).max(0.0) * m / (m - 1.0);
        let se = ((v1 + v2) / m).sqrt();
        let z = if se > 0.0 {
            (m1 - m2).abs() / se
        } else if (m1 - m2).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z);
    }
    Ok(Prop1Report {
        max_abs_z,
        reps,
        pass: max_abs_z <= 4.0,
    })
}

/// Result of the RL-vs-known-channel transmitter-gradient comparison.
#[derive(Debug, Clone)]
pub struct Prop2Report {
    pub cosine: f64,
    pub control_cosine: f64,
    /// True when either gradient is numerically zero and the cosine is
    /// meaningless (e.g. a constant-output detector).
    pub uninformative: bool,
    pub pass: bool,
}

fn cosine(a: &NetParams, b: &NetParams) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

/// Compare the score-function transmitter gradient against the known-channel
/// gradient on a Gaussian environment: their means must align (cosine at
/// least 0.9), while a loss-shuffled control must not (at most 0.2).
pub fn prop2_test(
    rx: &RxConfig,
    tx: &TxConfig,
    env: &EnvModel,
    pol: &PolicyConfig,
    q: usize,
    key: StreamKey,
) -> Result<Prop2Report> {
    env.require_gaussian()?;
    let (y, cache) = tx_forward(tx)?;
    let data = gen_dataset(
        q,
        env,
        &WaveformSource::Policy { mean: y.clone(), policy: *pol },
        key.child(0),
    )?;
    let losses = dataset_losses(rx, &data)?;
    let g_rl = crate::training::tx_rl_grad_with(tx, &y, &cache, &data, &losses, pol)?;
    let g_kc = known_channel_tx_grad(rx, tx, env, q, key.child(1))?;

    // negative control: permuting the losses against the scores destroys the
    // pairing, leaving only zero-mean noise
    let mut shuffled = losses.clone();
    let mut rng = key.child(2).rng();
    for i in (1..shuffled.len()).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }
    let g_control = crate::training::tx_rl_grad_with(tx, &y, &cache, &data, &shuffled, pol)?;

    // a detector whose loss never varies (e.g. all-zero weights) carries no
    // information about the waveform: both gradients are estimator noise
    // around zero and the cosine is meaningless
    let mean_l = losses.iter().sum::<f64>() / losses.len() as f64;
    let var_l = losses.iter().map(|l| (l - mean_l).powi(2)).sum::<f64>() / losses.len() as f64;
    let uninformative = var_l.sqrt() <= 1e-9 * mean_l.abs().max(1e-9)
        || g_rl.norm() < 1e-12
        || g_kc.norm() < 1e-12;
    let cos = cosine(&g_rl, &g_kc);
    let control = cosine(&g_control, &g_kc);
    Ok(Prop2Report {
        cosine: cos,
        control_cosine: control,
        uninformative,
        pass: !uninformative && cos >= 0.9 && control.abs() <= 0.2,
    })
}

/// One row of the verification table.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Inputs for [`run_verification`].
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub env: EnvModel,
    pub hidden: usize,
    pub policy: PolicyConfig,
    pub bands: Vec<FrequencyBand>,
    pub chirp_rate: f64,
    pub sample_rate: f64,
    /// Samples per gradient estimate in the statistical checks.
    pub q: usize,
    /// Repetitions for the fixed-vs-policy comparison.
    pub reps: usize,
    pub seed: u64,
}

fn fd_check_penalty(
    tx: &TxConfig,
    pen: &PenaltyConfig,
    value: &dyn Fn(&Waveform) -> Result<f64>,
    coords: usize,
    seed: u64,
) -> Result<f64> {
    let (y, cache) = tx_forward(tx)?;
    let g = crate::constraints::penalty_param_grad(tx, &cache, &y, pen)?;
    let step = 1e-6;
    let n = tx.params.flat_len();
    let mut rng = StreamKey::root(seed).rng();
    let mut worst = 0.0f64;
    for _ in 0..coords {
        let j = rng.gen_range(0..n);
        let eval = |delta: f64| -> Result<f64> {
            let mut c2 = tx.clone();
            c2.params.set_flat(j, tx.params.get_flat(j) + delta);
            let (y2, _) = tx_forward(&c2)?;
            Ok(pen.lambda * value(&y2)?)
        };
        let fd = (eval(step)? - eval(-step)?) / (2.0 * step);
        let rel = (g.get_flat(j) - fd).abs() / fd.abs().max(1e-5);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Run the named verification checks (all of them when `only` is `None`):
/// the closed-form penalty gradients, the policy score function, the two
/// gradient identities, and the sampler moments.
pub fn run_verification(v: &VerifyConfig, only: Option<&str>) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let wants = |name: &str| only.map_or(true, |o| o == name);
    let k = v.env.k;
    let key = StreamKey::root(v.seed);

    let tx = TxConfig::new(
        NetParams::init(&TxConfig::default_spec(k, v.hidden), &mut key.child(1).rng()),
        chirp_init(k, v.chirp_rate, v.sample_rate)?,
    )?;
    let rx = RxConfig::new(NetParams::init(
        &RxConfig::default_spec(k, v.hidden),
        &mut key.child(2).rng(),
    ))?;

    if wants("par_grad") {
        let pen = PenaltyConfig::par(0.5)?;
        let worst = fd_check_penalty(&tx, &pen, &|y| par_value(y), 20, v.seed + 10)?;
        results.push(CheckResult {
            name: "par_grad",
            pass: worst <= 1e-4,
            detail: format!("max rel err {worst:.2e} (tol 1e-4)"),
        });
    }
    if wants("spectral_grad") {
        let bands = if v.bands.is_empty() {
            vec![
                FrequencyBand::new(0.3, 0.35, 1.0)?,
                FrequencyBand::new(0.5, 0.6, 1.0)?,
            ]
        } else {
            v.bands.clone()
        };
        let pen = PenaltyConfig::spectrum(0.5, bands.clone())?;
        let omega = crate::complex::build_interference_cov(&bands, k)?;
        let worst = fd_check_penalty(&tx, &pen, &|y| spectral_value(y, &omega), 20, v.seed + 11)?;
        results.push(CheckResult {
            name: "spectral_grad",
            pass: worst <= 1e-5,
            detail: format!("max rel err {worst:.2e} (tol 1e-5)"),
        });
    }
    if wants("score_grad") {
        let (y, cache) = tx_forward(&tx)?;
        let a = policy_sample(&y, &v.policy, &mut key.child(3).rng());
        let g = tx_score_grad(&tx, &cache, &a, &v.policy)?;
        let step = 1e-6;
        let mut rng = key.child(4).rng();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let j = rng.gen_range(0..tx.params.flat_len());
            let eval = |delta: f64| -> Result<f64> {
                let mut c2 = tx.clone();
                c2.params.set_flat(j, tx.params.get_flat(j) + delta);
                let (y2, _) = tx_forward(&c2)?;
                Ok(policy_logpdf(&a, &y2, &v.policy))
            };
            let fd = (eval(step)? - eval(-step)?) / (2.0 * step);
            let rel = (g.get_flat(j) - fd).abs() / fd.abs().max(1e-4);
            worst = worst.max(rel);
        }
        results.push(CheckResult {
            name: "score_grad",
            pass: worst <= 1e-5,
            detail: format!("max rel err {worst:.2e} (tol 1e-5)"),
        });
    }
    if wants("score_mean") {
        let (y, _) = tx_forward(&tx)?;
        let n = 1_000_000usize;
        let dim = 2 * k;
        let chunk = 4096;
        let blocks = n / chunk;
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = key.child(5).child(b as u64).rng();
                let mut sum = vec![0.0; dim];
                let mut sumsq = vec![0.0; dim];
                for _ in 0..chunk {
                    let a = policy_sample(&y, &v.policy, &mut rng);
                    let g = policy_score_wrt_waveform(&a, &y, &v.policy);
                    for (j, val) in g.as_slice().iter().enumerate() {
                        sum[j] += val;
                        sumsq[j] += val * val;
                    }
                }
                (sum, sumsq)
            })
            .collect();
        let total = (blocks * chunk) as f64;
        let mut worst = 0.0f64;
        for j in 0..dim {
            let s: f64 = partials.iter().map(|(a, _)| a[j]).sum();
            let ss: f64 = partials.iter().map(|(_, b)| b[j]).sum();
            let mean = s / total;
            let var = ss / total - mean * mean;
            let se = (var / total).sqrt();
            worst = worst.max(mean.abs() / se);
        }
        results.push(CheckResult {
            name: "score_mean",
            pass: worst <= 4.0,
            detail: format!("max |mean|/se {worst:.2} over {} draws (tol 4)", blocks * chunk),
        });
    }
    if wants("prop1") {
        let report = prop1_test(&rx, &tx, &v.env, &v.policy, v.q, v.reps, key.child(6))?;
        results.push(CheckResult {
            name: "prop1",
            pass: report.pass,
            detail: format!(
                "max |z| {:.2} over {} reps of Q={} (tol 4)",
                report.max_abs_z, report.reps, v.q
            ),
        });
    }
    if wants("prop2") {
        // closed-form likelihoods exist only for the Gaussian shape; the
        // check runs on a K=2 copy of the environment
        let env2 = EnvModel::new(
            2,
            v.env.sigma_alpha2,
            v.env.sigma_n2,
            v.env.rho,
            v.env.sigma_gamma2,
            crate::env::ClutterMix::gaussian(),
            v.env.prior_h1,
        )?;
        let tx2 = TxConfig::new(
            NetParams::init(&TxConfig::default_spec(2, v.hidden), &mut key.child(7).rng()),
            chirp_init(2, v.chirp_rate, v.sample_rate)?,
        )?;
        let rx2 = RxConfig::new(NetParams::init(
            &RxConfig::default_spec(2, v.hidden),
            &mut key.child(8).rng(),
        ))?;
        let report = prop2_test(&rx2, &tx2, &env2, &v.policy, v.q, key.child(9))?;
        results.push(CheckResult {
            name: "prop2",
            pass: report.pass,
            detail: format!(
                "cosine {:.3} (min 0.9), shuffled control {:.3} (max 0.2){}",
                report.cosine,
                report.control_cosine,
                if report.uninformative { ", UNINFORMATIVE" } else { "" }
            ),
        });
    }
    if wants("weibull_power") {
        let n = 1_000_000usize;
        let target = v.env.sigma_gamma2.max(1e-3);
        let mut rng = key.child(10).rng();
        let mean: f64 = (0..n)
            .map(|_| crate::env::sample_clutter_coeffs(1, target, 2.0, &mut rng)[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        let rel = (mean - target).abs() / target;
        results.push(CheckResult {
            name: "weibull_power",
            pass: rel <= 0.01,
            detail: format!("rel power err {rel:.4} at beta=2, 1e6 draws (tol 0.01)"),
        });
    }
    if wants("noise_cov") {
        let l = v.env.noise_cholesky();
        let mut rng = key.child(11).rng();
        let n = 1_000_000usize;
        let mut lag0 = 0.0;
        let mut lag1 = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let w = crate::env::sample_noise(&l, &mut rng);
            lag0 += w.chips()[0].norm_sqr();
            if k > 1 {
                lag1 += w.chips()[1] * w.chips()[0].conj();
            }
        }
        lag0 /= n as f64;
        lag1 /= n as f64;
        let e0 = (lag0 - v.env.sigma_n2).abs() / v.env.sigma_n2;
        let e1 = if k > 1 {
            (lag1.re - v.env.rho * v.env.sigma_n2).abs() / v.env.sigma_n2
        } else {
            0.0
        };
        let worst = e0.max(e1);
        results.push(CheckResult {
            name: "noise_cov",
            pass: worst <= 0.02,
            detail: format!("lag-0/lag-1 rel err {worst:.4} at 1e6 draws (tol 0.02)"),
        });
    }
    if wants("target_rayleigh") {
        let mut rng = key.child(12).rng();
        let n = 1_000_000usize;
        let mut mags: Vec<f64> = (0..n)
            .map(|_| crate::env::sample_target(v.env.sigma_alpha2, &mut rng).norm())
            .collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &m) in mags.iter().enumerate() {
            let cdf = 1.0 - (-m * m / v.env.sigma_alpha2).exp();
            ks = ks
                .max((cdf - (i + 1) as f64 / n as f64).abs())
                .max((cdf - i as f64 / n as f64).abs());
        }
        results.push(CheckResult {
            name: "target_rayleigh",
            pass: ks <= 0.01,
            detail: format!("KS distance {ks:.5} at 1e6 draws (tol 0.01)"),
        });
    }
    if results.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no verification check named '{}'",
            only.unwrap_or("")
        )));
    }
    Ok(results)
}
