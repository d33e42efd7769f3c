//! Training procedures: alternating receiver/transmitter updates,
//! simultaneous updates from a shared dataset, and the known-channel
//! reference that differentiates the closed-form Gaussian likelihood instead
//! of exploring with a policy.
//!
//! Gradient estimators are per-iteration sample means; every iteration draws
//! fresh data (reusing samples would bias the score-function estimator).
//! Per-sample work fans out over fixed-size blocks and is reduced in block
//! order, so results are reproducible for any worker count.

use crate::complex::{pack, unpack, RealPacked, Waveform};
use crate::constraints::{par_value, penalty_param_grad, spectral_value, PenaltyConfig, PenaltyKind};
use crate::env::{gen_dataset, hypothesis_cov, EnvModel, LabeledSample, WaveformSource};
use crate::error::{Error, Result};
use crate::eval::gaussian_loglik;
use crate::nn::{net_backward, sgd_step, AdamState, NetParams};
use crate::rng::StreamKey;
use crate::rx::{bce_grad, bce_loss, rx_forward, RxConfig};
use crate::tx::{chain_to_params, policy_score_wrt_waveform, tx_forward, PolicyConfig, TxCache, TxConfig};
use rayon::prelude::*;
use std::time::Instant;

/// Fixed reduction block size; independent of worker count so that summation
/// order (and therefore every bit of the result) is schedule-invariant.
const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Alternating,
    Simultaneous,
    KnownChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Adam,
    Sgd,
}

/// Windowed early-stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct Patience {
    pub window: usize,
    pub min_decrease: f64,
}

/// Everything one training run needs besides the environment and the
/// initial networks.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Samples per gradient estimate.
    pub q: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub policy: PolicyConfig,
    pub penalty: PenaltyConfig,
    pub max_iters: usize,
    pub patience: Option<Patience>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParameter("Q must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    /// Empirical cross-entropy over the iteration's transmitter dataset.
    pub loss: f64,
    /// Raw penalty value J(y) for the configured penalty (0 when none).
    pub penalty: f64,
    pub par_db: f64,
    pub interf_db: f64,
    /// Wall time of the iteration. Informational only: this is the one
    /// nondeterministic column of the log.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub records: Vec<IterRecord>,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// CSV with header `iter,loss,penalty,par_db,interf_db,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,loss,penalty,par_db,interf_db,seconds\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.4},{:.4},{:.3}\n",
                r.iter, r.loss, r.penalty, r.par_db, r.interf_db, r.seconds
            ));
        }
        out
    }
}

/// Final networks plus the per-iteration log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub rx: RxConfig,
    pub tx: TxConfig,
    pub history: TrainHistory,
}

/// Detector outputs and losses for a dataset, in dataset order.
pub fn dataset_losses(rx: &RxConfig, data: &[LabeledSample]) -> Result<Vec<f64>> {
    data.par_iter()
        .map(|s| {
            let (p, _) = rx_forward(rx, &s.z)?;
            Ok(bce_loss(p, s.label))
        })
        .collect()
}

/// Mean cross-entropy gradient with respect to the detector parameters:
/// `(1/Q) sum_q d l(f(z_q), i_q) / d theta_R`.
pub fn rx_grad_estimate(rx: &RxConfig, data: &[LabeledSample]) -> Result<NetParams> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    let partials: Vec<Result<NetParams>> = data
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut acc = NetParams::zeros(rx.params.spec());
            for s in chunk {
                let (p, cache) = rx_forward(rx, &s.z)?;
                let dl = bce_grad(p, s.label);
                let (g, _) = net_backward(&rx.params, &cache, &[dl])?;
                acc.axpy(1.0, &g);
            }
            Ok(acc)
        })
        .collect();
    let mut total = NetParams::zeros(rx.params.spec());
    for p in partials {
        total.axpy(1.0, &p?);
    }
    total.scale(1.0 / data.len() as f64);
    Ok(total)
}

/// Loss-weighted mean of the policy score in waveform space:
/// `(1/Q) sum_q l_q * d ln pi(a_q | y) / d y_packed`.
fn mean_weighted_score(
    y: &Waveform,
    data: &[LabeledSample],
    losses: &[f64],
    pol: &PolicyConfig,
) -> RealPacked {
    let k = y.len();
    let partials: Vec<RealPacked> = data
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut acc = RealPacked::zeros(k);
            for (i, s) in chunk.iter().enumerate() {
                let l = losses[ci * BLOCK + i];
                let g = policy_score_wrt_waveform(&s.a, y, pol);
                for (a, b) in acc.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *a += l * b;
                }
            }
            acc
        })
        .collect();
    let mut total = RealPacked::zeros(k);
    for p in partials {
        total = total.add(&p);
    }
    total.scale(1.0 / data.len() as f64)
}

fn require_policy_samples(data: &[LabeledSample], y: &Waveform) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    if data[0].a.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: data[0].a.len(),
            context: "dataset waveform realizations",
        });
    }
    Ok(())
}

/// Score-function estimate of the transmitter gradient:
/// `(1/Q) sum_q l(f(z_q), i_q) * d ln pi(a_q | y_theta) / d theta_T`.
///
/// The score is linear in its waveform-space factor, so the loss-weighted
/// scores are averaged first and chained through the generator once.
pub fn tx_rl_grad_estimate(
    rx: &RxConfig,
    tx: &TxConfig,
    data: &[LabeledSample],
    pol: &PolicyConfig,
) -> Result<NetParams> {
    let (y, cache) = tx_forward(tx)?;
    let losses = dataset_losses(rx, data)?;
    tx_rl_grad_with(tx, &y, &cache, data, &losses, pol)
}

pub(crate) fn tx_rl_grad_with(
    tx: &TxConfig,
    y: &Waveform,
    cache: &TxCache,
    data: &[LabeledSample],
    losses: &[f64],
    pol: &PolicyConfig,
) -> Result<NetParams> {
    require_policy_samples(data, y)?;
    let weighted = mean_weighted_score(y, data, losses, pol);
    chain_to_params(tx, cache, &weighted)
}

/// RL gradient plus the penalty gradient `lambda * dJ/d theta`.
pub fn tx_constrained_grad(
    rx: &RxConfig,
    tx: &TxConfig,
    data: &[LabeledSample],
    pol: &PolicyConfig,
    pen: &PenaltyConfig,
) -> Result<NetParams> {
    let (y, cache) = tx_forward(tx)?;
    let losses = dataset_losses(rx, data)?;
    let mut g = tx_rl_grad_with(tx, &y, &cache, data, &losses, pol)?;
    let gp = penalty_param_grad(tx, &cache, &y, pen)?;
    g.axpy(1.0, &gp);
    Ok(g)
}

/// Transmitter gradient under a known Gaussian channel:
/// `(1/Q) sum_q l_q * d ln p(z_q | y_theta, H_{i_q}) / d theta_T`,
/// with data generated at the deterministic waveform (exploration off).
///
/// The log-likelihood gradient with respect to the packed waveform is
/// computed by central finite differences of the closed-form Gaussian
/// log-density (step 1e-5) and chained through the generator by reverse
/// mode, avoiding hand-derived matrix calculus.
pub fn known_channel_tx_grad(
    rx: &RxConfig,
    tx: &TxConfig,
    env: &EnvModel,
    q: usize,
    key: StreamKey,
) -> Result<NetParams> {
    env.require_gaussian()?;
    let (y, cache) = tx_forward(tx)?;
    let data = gen_dataset(q, env, &WaveformSource::Fixed(y.clone()), key)?;
    let losses = dataset_losses(rx, &data)?;
    known_channel_grad_on(tx, &y, &cache, env, &data, &losses)
}

pub(crate) fn known_channel_grad_on(
    tx: &TxConfig,
    y: &Waveform,
    cache: &TxCache,
    env: &EnvModel,
    data: &[LabeledSample],
    losses: &[f64],
) -> Result<NetParams> {
    let packed = pack(y);
    let dim = packed.len();
    let step = 1e-5;
    // d/d y_packed of (1/Q) sum_q l_q ln p(z_q | y, H_{i_q})
    let grad_vals: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let eval = |delta: f64| -> Result<f64> {
                let mut p = packed.clone();
                p.as_mut_slice()[j] += delta;
                let yp = unpack(&p);
                let chol0 = hypothesis_cov(&yp, env, false).cholesky()?;
                let chol1 = hypothesis_cov(&yp, env, true).cholesky()?;
                let mut acc = 0.0;
                for (s, &l) in data.iter().zip(losses) {
                    let chol = if s.label { &chol1 } else { &chol0 };
                    acc += l * gaussian_loglik(&s.z, chol);
                }
                Ok(acc / data.len() as f64)
            };
            Ok((eval(step)? - eval(-step)?) / (2.0 * step))
        })
        .collect::<Result<_>>()?;
    let grad = RealPacked::new(grad_vals)?;
    chain_to_params(tx, cache, &grad)
}

/// True once the trailing window-mean loss has stopped decreasing by at
/// least `min_decrease` relative to the window before it. Histories shorter
/// than two windows never stop.
pub fn stopping_check(losses: &[f64], patience: &Patience) -> bool {
    let w = patience.window;
    if w == 0 || losses.len() < 2 * w {
        return false;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = mean(&losses[losses.len() - w..]);
    let prev = mean(&losses[losses.len() - 2 * w..losses.len() - w]);
    (prev - last) < patience.min_decrease
}

enum OptState {
    Adam(AdamState),
    Sgd,
}

impl OptState {
    fn new(opt: Optimizer, params: &NetParams) -> Self {
        match opt {
            Optimizer::Adam => OptState::Adam(AdamState::new(params.spec())),
            Optimizer::Sgd => OptState::Sgd,
        }
    }

    fn step(&mut self, params: &mut NetParams, grads: &NetParams, lr: f64) {
        match self {
            OptState::Adam(state) => state.step(params, grads, lr),
            OptState::Sgd => sgd_step(params, grads, lr),
        }
    }
}

const PHASE_RX: u64 = 0;
const PHASE_TX: u64 = 1;

fn record_iter(
    iter: usize,
    loss: f64,
    y: &Waveform,
    pen: &PenaltyConfig,
    started: Instant,
) -> Result<IterRecord> {
    if !loss.is_finite() {
        return Err(Error::Diverged { iter, loss });
    }
    let par = par_value(y)?;
    let (pen_value, interf_db) = match pen.kind {
        PenaltyKind::Spectrum => {
            let omega = pen.omega(y.len())?.expect("spectrum kind has bands");
            let e = spectral_value(y, &omega)?;
            (e, 10.0 * e.log10())
        }
        PenaltyKind::Par => (par, f64::NAN),
        PenaltyKind::None => (0.0, f64::NAN),
    };
    Ok(IterRecord {
        iter,
        loss,
        penalty: pen_value,
        par_db: 10.0 * par.log10(),
        interf_db,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Observer invoked after every completed iteration; the CLI hooks periodic
/// checkpoints through this.
pub type IterObserver<'a> = &'a mut dyn FnMut(&IterRecord, &RxConfig, &TxConfig);

/// Alternating training: each iteration first updates the detector on a
/// fixed-waveform dataset (exploration off), then updates the transmitter on
/// a fresh policy-on dataset scored by the just-updated detector.
pub fn train_alternating(
    cfg: &TrainConfig,
    env: &EnvModel,
    rx0: RxConfig,
    tx0: TxConfig,
    observer: Option<IterObserver>,
) -> Result<TrainOutcome> {
    run_loop(cfg, env, rx0, tx0, observer, Mode::Alternating)
}

/// Simultaneous training: one policy-on dataset per iteration feeds both the
/// detector gradient and the transmitter gradient, and both parameter
/// vectors step together.
pub fn train_simultaneous(
    cfg: &TrainConfig,
    env: &EnvModel,
    rx0: RxConfig,
    tx0: TxConfig,
    observer: Option<IterObserver>,
) -> Result<TrainOutcome> {
    run_loop(cfg, env, rx0, tx0, observer, Mode::Simultaneous)
}

/// Known-channel reference training: exploration off; the transmitter
/// follows the gradient of the closed-form Gaussian likelihood. Requires a
/// single Gaussian clutter shape.
pub fn train_known_channel(
    cfg: &TrainConfig,
    env: &EnvModel,
    rx0: RxConfig,
    tx0: TxConfig,
    observer: Option<IterObserver>,
) -> Result<TrainOutcome> {
    env.require_gaussian()?;
    run_loop(cfg, env, rx0, tx0, observer, Mode::KnownChannel)
}

/// Dispatch on [`TrainConfig::algorithm`].
pub fn train(
    cfg: &TrainConfig,
    env: &EnvModel,
    rx0: RxConfig,
    tx0: TxConfig,
    observer: Option<IterObserver>,
) -> Result<TrainOutcome> {
    match cfg.algorithm {
        Algorithm::Alternating => train_alternating(cfg, env, rx0, tx0, observer),
        Algorithm::Simultaneous => train_simultaneous(cfg, env, rx0, tx0, observer),
        Algorithm::KnownChannel => train_known_channel(cfg, env, rx0, tx0, observer),
    }
}

/// Supervised training of the detector alone against a fixed waveform
/// (exploration off, transmitter frozen). This is the receiver-only baseline
/// and also the cheapest way to obtain a detector informative enough for the
/// gradient-identity checks.
pub fn train_receiver_only(
    cfg: &TrainConfig,
    env: &EnvModel,
    mut rx: RxConfig,
    y: &Waveform,
) -> Result<(RxConfig, TrainHistory)> {
    cfg.validate()?;
    let mut opt = OptState::new(cfg.optimizer, &rx.params);
    let root = StreamKey::root(cfg.seed);
    let mut history = TrainHistory::default();
    let mut losses = Vec::new();
    for n in 0..cfg.max_iters {
        let started = Instant::now();
        let data = gen_dataset(
            cfg.q,
            env,
            &WaveformSource::Fixed(y.clone()),
            root.child(n as u64).child(PHASE_RX),
        )?;
        let g = rx_grad_estimate(&rx, &data)?;
        let d_losses = dataset_losses(&rx, &data)?;
        opt.step(&mut rx.params, &g, cfg.lr);
        let loss = d_losses.iter().sum::<f64>() / d_losses.len() as f64;
        let record = record_iter(n, loss, y, &PenaltyConfig::none(), started)?;
        history.records.push(record);
        losses.push(loss);
        if let Some(p) = &cfg.patience {
            if stopping_check(&losses, p) {
                break;
            }
        }
    }
    Ok((rx, history))
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Alternating,
    Simultaneous,
    KnownChannel,
}

fn run_loop(
    cfg: &TrainConfig,
    env: &EnvModel,
    rx0: RxConfig,
    tx0: TxConfig,
    mut observer: Option<IterObserver>,
    mode: Mode,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rx = rx0;
    let mut tx = tx0;
    let mut opt_rx = OptState::new(cfg.optimizer, &rx.params);
    let mut opt_tx = OptState::new(cfg.optimizer, &tx.params);
    let root = StreamKey::root(cfg.seed);
    let mut history = TrainHistory::default();
    let mut losses = Vec::new();

    for n in 0..cfg.max_iters {
        let started = Instant::now();
        let iter_key = root.child(n as u64);
        let (y, cache) = tx_forward(&tx)?;

        let loss = match mode {
            Mode::Alternating => {
                // receiver phase: exploration off
                let d_r = gen_dataset(
                    cfg.q,
                    env,
                    &WaveformSource::Fixed(y.clone()),
                    iter_key.child(PHASE_RX),
                )?;
                let g_r = rx_grad_estimate(&rx, &d_r)?;
                opt_rx.step(&mut rx.params, &g_r, cfg.lr);

                // transmitter phase: exploration on, scored by the updated detector
                let d_t = gen_dataset(
                    cfg.q,
                    env,
                    &WaveformSource::Policy { mean: y.clone(), policy: cfg.policy },
                    iter_key.child(PHASE_TX),
                )?;
                let tx_losses = dataset_losses(&rx, &d_t)?;
                let mut g_t = tx_rl_grad_with(&tx, &y, &cache, &d_t, &tx_losses, &cfg.policy)?;
                g_t.axpy(1.0, &penalty_param_grad(&tx, &cache, &y, &cfg.penalty)?);
                opt_tx.step(&mut tx.params, &g_t, cfg.lr);
                tx_losses.iter().sum::<f64>() / tx_losses.len() as f64
            }
            Mode::Simultaneous => {
                let d = gen_dataset(
                    cfg.q,
                    env,
                    &WaveformSource::Policy { mean: y.clone(), policy: cfg.policy },
                    iter_key.child(PHASE_TX),
                )?;
                // both gradients from the same dataset and the same parameters
                let g_r = rx_grad_estimate(&rx, &d)?;
                let d_losses = dataset_losses(&rx, &d)?;
                let mut g_t = tx_rl_grad_with(&tx, &y, &cache, &d, &d_losses, &cfg.policy)?;
                g_t.axpy(1.0, &penalty_param_grad(&tx, &cache, &y, &cfg.penalty)?);
                opt_rx.step(&mut rx.params, &g_r, cfg.lr);
                opt_tx.step(&mut tx.params, &g_t, cfg.lr);
                d_losses.iter().sum::<f64>() / d_losses.len() as f64
            }
            Mode::KnownChannel => {
                let d = gen_dataset(
                    cfg.q,
                    env,
                    &WaveformSource::Fixed(y.clone()),
                    iter_key.child(PHASE_RX),
                )?;
                let g_r = rx_grad_estimate(&rx, &d)?;
                let d_losses = dataset_losses(&rx, &d)?;
                let mut g_t = known_channel_grad_on(&tx, &y, &cache, env, &d, &d_losses)?;
                g_t.axpy(1.0, &penalty_param_grad(&tx, &cache, &y, &cfg.penalty)?);
                opt_rx.step(&mut rx.params, &g_r, cfg.lr);
                opt_tx.step(&mut tx.params, &g_t, cfg.lr);
                d_losses.iter().sum::<f64>() / d_losses.len() as f64
            }
        };

        let record = record_iter(n, loss, &y, &cfg.penalty, started)?;
        if let Some(obs) = observer.as_mut() {
            obs(&record, &rx, &tx);
        }
        history.records.push(record);
        losses.push(loss);
        if let Some(p) = &cfg.patience {
            if stopping_check(&losses, p) {
                break;
            }
        }
    }
    Ok(TrainOutcome { rx, tx, history })
}
