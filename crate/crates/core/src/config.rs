//! Experiment configuration: a flat `key = value` text format with dotted
//! section prefixes (`env.rho`, `train.lr`). Comments start with `#` or `;`.
//! Unknown keys are rejected and parse errors carry line numbers.
//!
//! dB-to-linear conversions happen here and only here; everything behind
//! this boundary works on linear powers.

use crate::complex::FrequencyBand;
use crate::constraints::{PenaltyConfig, PenaltyKind};
use crate::env::{ClutterMix, EnvModel};
use crate::error::{Error, Result};
use crate::eval::VerifyConfig;
use crate::training::{Algorithm, Optimizer, Patience, TrainConfig};
use crate::tx::PolicyConfig;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// All tunables of one experiment, as written in the config file (dB scale
/// where applicable). Typed builders produce the module-level structs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub k: usize,
    pub snr_db: f64,
    pub noise_power_db: f64,
    pub rho: f64,
    pub clutter_cell_power_db: f64,
    pub clutter_shapes: Vec<f64>,
    pub clutter_shape_weights: Vec<f64>,
    pub prior_h1: f64,

    pub hidden: usize,
    pub chirp_rate: f64,
    pub sample_rate: f64,

    pub algorithm: Algorithm,
    pub q: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub sigma_p2: f64,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub bands: Vec<(f64, f64)>,
    pub band_weights: Vec<f64>,
    pub max_iters: usize,
    pub patience_window: usize,
    pub patience_min_decrease: f64,
    pub seed: u64,
    pub checkpoint_every: usize,

    pub eval_q0: usize,
    pub eval_q1: usize,
    pub eval_trials: usize,
    pub esd_grid: usize,
    pub esd_db: bool,

    pub verify_q: usize,
    pub verify_reps: usize,

    pub out_dir: Option<String>,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

struct Raw {
    entries: HashMap<String, (String, usize)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find(['#', ';']) {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Raw { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(String, usize)> {
        self.take(key).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("missing required key '{key}'"),
        })
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self
            .entries
            .iter()
            .min_by_key(|(_, (_, line))| *line)
            .map(|(k, v)| (k.clone(), v.clone()))
        {
            return Err(Error::Config {
                line,
                msg: format!("unknown key '{key}'"),
            });
        }
        Ok(())
    }
}

fn parse_scalar<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config {
        line,
        msg: format!("cannot parse value '{value}' for '{key}'"),
    })
}

fn parse_list(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|t| parse_scalar::<f64>(t, line, key))
        .collect()
}

fn parse_bands(value: &str, line: usize) -> Result<Vec<(f64, f64)>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|pair| {
            let (lo, hi) = pair.split_once(':').ok_or_else(|| Error::Config {
                line,
                msg: format!("band '{pair}' must be 'low:high'"),
            })?;
            Ok((
                parse_scalar::<f64>(lo, line, "train.bands")?,
                parse_scalar::<f64>(hi, line, "train.bands")?,
            ))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut raw = Raw::parse(text)?;

        macro_rules! opt {
            ($key:expr, $default:expr, $ty:ty) => {
                match raw.take($key) {
                    Some((v, line)) => parse_scalar::<$ty>(&v, line, $key)?,
                    None => $default,
                }
            };
        }

        let (k_str, k_line) = raw.required("env.k")?;
        let k: usize = parse_scalar(&k_str, k_line, "env.k")?;
        if k == 0 {
            return Err(Error::Config { line: k_line, msg: "env.k must be >= 1".into() });
        }

        let (snr_str, snr_line) = raw.required("env.snr_db")?;
        let snr_db: f64 = parse_scalar(&snr_str, snr_line, "env.snr_db")?;

        let (rho_str, rho_line) = raw.required("env.rho")?;
        let rho: f64 = parse_scalar(&rho_str, rho_line, "env.rho")?;
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Config {
                line: rho_line,
                msg: format!("env.rho = {rho} must lie in [0, 1)"),
            });
        }

        let (cl_str, cl_line) = raw.required("env.clutter_cell_power_db")?;
        let clutter_cell_power_db: f64 = parse_scalar(&cl_str, cl_line, "env.clutter_cell_power_db")?;

        let clutter_shapes = match raw.take("env.clutter_shapes") {
            Some((v, line)) => parse_list(&v, line, "env.clutter_shapes")?,
            None => vec![2.0],
        };
        let clutter_shape_weights = match raw.take("env.clutter_shape_weights") {
            Some((v, line)) => parse_list(&v, line, "env.clutter_shape_weights")?,
            None => vec![1.0; clutter_shapes.len()],
        };

        let prior_h1 = opt!("env.prior_h1", 0.5, f64);
        let noise_power_db = opt!("env.noise_power_db", 0.0, f64);

        let hidden = opt!("net.hidden", 24, usize);
        let chirp_rate = opt!("tx.chirp_rate", 100e3 / 40e-6, f64);
        let sample_rate = opt!("tx.sample_rate", 200e3, f64);

        let algorithm = match raw.take("train.algorithm") {
            Some((v, line)) => match v.as_str() {
                "alternating" => Algorithm::Alternating,
                "simultaneous" => Algorithm::Simultaneous,
                "known_channel" => Algorithm::KnownChannel,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown algorithm '{other}'"),
                    })
                }
            },
            None => Algorithm::Simultaneous,
        };
        let optimizer = match raw.take("train.optimizer") {
            Some((v, line)) => match v.as_str() {
                "adam" => Optimizer::Adam,
                "sgd" => Optimizer::Sgd,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown optimizer '{other}'"),
                    })
                }
            },
            None => Optimizer::Adam,
        };
        let penalty = match raw.take("train.penalty") {
            Some((v, line)) => match v.as_str() {
                "none" => PenaltyKind::None,
                "par" => PenaltyKind::Par,
                "spectrum" => PenaltyKind::Spectrum,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown penalty '{other}'"),
                    })
                }
            },
            None => PenaltyKind::None,
        };

        let q = opt!("train.q", 8192, usize);
        let lr = opt!("train.lr", 0.005, f64);
        let sigma_p2 = opt!("train.sigma_p2", 10f64.powf(-1.5), f64);
        let lambda = opt!("train.lambda", 0.0, f64);
        let bands = match raw.take("train.bands") {
            Some((v, line)) => parse_bands(&v, line)?,
            None => Vec::new(),
        };
        let band_weights = match raw.take("train.band_weights") {
            Some((v, line)) => parse_list(&v, line, "train.band_weights")?,
            None => vec![1.0; bands.len()],
        };
        let max_iters = opt!("train.max_iters", 1000, usize);
        let patience_window = opt!("train.patience_window", 50, usize);
        let patience_min_decrease = opt!("train.patience_min_decrease", 1e-4, f64);
        let seed = opt!("train.seed", 1, u64);
        let checkpoint_every = opt!("train.checkpoint_every", 0, usize);

        let eval_q0 = opt!("eval.q0", 200_000, usize);
        let eval_q1 = opt!("eval.q1", 50_000, usize);
        let eval_trials = opt!("eval.trials", 5, usize);
        let esd_grid = opt!("eval.esd_grid", 1024, usize);
        let esd_db = match raw.take("eval.esd_db") {
            Some((v, line)) => match v.as_str() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("eval.esd_db must be true or false, got '{other}'"),
                    })
                }
            },
            None => false,
        };

        let verify_q = opt!("verify.q", 1 << 16, usize);
        let verify_reps = opt!("verify.reps", 32, usize);

        let out_dir = raw.take("out.dir").map(|(v, _)| v);

        raw.finish()?;

        let cfg = ExperimentConfig {
            k,
            snr_db,
            noise_power_db,
            rho,
            clutter_cell_power_db,
            clutter_shapes,
            clutter_shape_weights,
            prior_h1,
            hidden,
            chirp_rate,
            sample_rate,
            algorithm,
            q,
            lr,
            optimizer,
            sigma_p2,
            penalty,
            lambda,
            bands,
            band_weights,
            max_iters,
            patience_window,
            patience_min_decrease,
            seed,
            checkpoint_every,
            eval_q0,
            eval_q1,
            eval_trials,
            esd_grid,
            esd_db,
            verify_q,
            verify_reps,
            out_dir,
        };
        // re-validate the module invariants eagerly so a bad file fails at
        // load time, not mid-run
        cfg.env_model()?;
        cfg.policy_config()?;
        cfg.penalty_config()?;
        Ok(cfg)
    }

    pub fn env_model(&self) -> Result<EnvModel> {
        EnvModel::new(
            self.k,
            db_to_linear(self.noise_power_db) * db_to_linear(self.snr_db),
            db_to_linear(self.noise_power_db),
            self.rho,
            db_to_linear(self.clutter_cell_power_db),
            ClutterMix::new(self.clutter_shapes.clone(), self.clutter_shape_weights.clone())?,
            self.prior_h1,
        )
    }

    pub fn policy_config(&self) -> Result<PolicyConfig> {
        PolicyConfig::new(self.sigma_p2)
    }

    pub fn frequency_bands(&self) -> Result<Vec<FrequencyBand>> {
        if self.bands.len() != self.band_weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} bands but {} band weights",
                self.bands.len(),
                self.band_weights.len()
            )));
        }
        self.bands
            .iter()
            .zip(&self.band_weights)
            .map(|(&(lo, hi), &w)| FrequencyBand::new(lo, hi, w))
            .collect()
    }

    pub fn penalty_config(&self) -> Result<PenaltyConfig> {
        match self.penalty {
            PenaltyKind::None => Ok(PenaltyConfig::none()),
            PenaltyKind::Par => PenaltyConfig::par(self.lambda),
            PenaltyKind::Spectrum => PenaltyConfig::spectrum(self.lambda, self.frequency_bands()?),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            algorithm: self.algorithm,
            q: self.q,
            lr: self.lr,
            optimizer: self.optimizer,
            policy: self.policy_config()?,
            penalty: self.penalty_config()?,
            max_iters: self.max_iters,
            patience: if self.patience_window > 0 {
                Some(Patience {
                    window: self.patience_window,
                    min_decrease: self.patience_min_decrease,
                })
            } else {
                None
            },
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn verify_config(&self) -> Result<VerifyConfig> {
        Ok(VerifyConfig {
            env: self.env_model()?,
            hidden: self.hidden,
            policy: self.policy_config()?,
            bands: self.frequency_bands()?,
            chirp_rate: self.chirp_rate,
            sample_rate: self.sample_rate,
            q: self.verify_q,
            reps: self.verify_reps,
            seed: self.seed,
        })
    }

    /// The effective configuration (defaults filled in), re-loadable by
    /// [`ExperimentConfig::parse_str`].
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let algorithm = match self.algorithm {
            Algorithm::Alternating => "alternating",
            Algorithm::Simultaneous => "simultaneous",
            Algorithm::KnownChannel => "known_channel",
        };
        let optimizer = match self.optimizer {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
        };
        let penalty = match self.penalty {
            PenaltyKind::None => "none",
            PenaltyKind::Par => "par",
            PenaltyKind::Spectrum => "spectrum",
        };
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(s, "env.k = {}", self.k).unwrap();
        writeln!(s, "env.snr_db = {}", self.snr_db).unwrap();
        writeln!(s, "env.noise_power_db = {}", self.noise_power_db).unwrap();
        writeln!(s, "env.rho = {}", self.rho).unwrap();
        writeln!(s, "env.clutter_cell_power_db = {}", self.clutter_cell_power_db).unwrap();
        writeln!(s, "env.clutter_shapes = {}", list(&self.clutter_shapes)).unwrap();
        writeln!(s, "env.clutter_shape_weights = {}", list(&self.clutter_shape_weights)).unwrap();
        writeln!(s, "env.prior_h1 = {}", self.prior_h1).unwrap();
        writeln!(s, "net.hidden = {}", self.hidden).unwrap();
        writeln!(s, "tx.chirp_rate = {}", self.chirp_rate).unwrap();
        writeln!(s, "tx.sample_rate = {}", self.sample_rate).unwrap();
        writeln!(s, "train.algorithm = {algorithm}").unwrap();
        writeln!(s, "train.q = {}", self.q).unwrap();
        writeln!(s, "train.lr = {}", self.lr).unwrap();
        writeln!(s, "train.optimizer = {optimizer}").unwrap();
        writeln!(s, "train.sigma_p2 = {}", self.sigma_p2).unwrap();
        writeln!(s, "train.penalty = {penalty}").unwrap();
        writeln!(s, "train.lambda = {}", self.lambda).unwrap();
        let bands = self
            .bands
            .iter()
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(s, "train.bands = {bands}").unwrap();
        writeln!(s, "train.band_weights = {}", list(&self.band_weights)).unwrap();
        writeln!(s, "train.max_iters = {}", self.max_iters).unwrap();
        writeln!(s, "train.patience_window = {}", self.patience_window).unwrap();
        writeln!(s, "train.patience_min_decrease = {}", self.patience_min_decrease).unwrap();
        writeln!(s, "train.seed = {}", self.seed).unwrap();
        writeln!(s, "train.checkpoint_every = {}", self.checkpoint_every).unwrap();
        writeln!(s, "eval.q0 = {}", self.eval_q0).unwrap();
        writeln!(s, "eval.q1 = {}", self.eval_q1).unwrap();
        writeln!(s, "eval.trials = {}", self.eval_trials).unwrap();
        writeln!(s, "eval.esd_grid = {}", self.esd_grid).unwrap();
        writeln!(s, "eval.esd_db = {}", self.esd_db).unwrap();
        writeln!(s, "verify.q = {}", self.verify_q).unwrap();
        writeln!(s, "verify.reps = {}", self.verify_reps).unwrap();
        if let Some(dir) = &self.out_dir {
            writeln!(s, "out.dir = {dir}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
env.k = 8
env.snr_db = 12.5
env.rho = 0.7
env.clutter_cell_power_db = -11.7
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.hidden, 24);
        assert_eq!(cfg.q, 8192);
        assert!((cfg.sigma_p2 - 10f64.powf(-1.5)).abs() < 1e-15);
        let env = cfg.env_model().unwrap();
        assert!((env.sigma_alpha2 - 10f64.powf(1.25)).abs() < 1e-10);
        assert!((env.sigma_gamma2 - 10f64.powf(-1.17)).abs() < 1e-12);
    }

    #[test]
    fn missing_required_key_is_named() {
        let text = MINIMAL.replace("env.k = 8\n", "");
        match ExperimentConfig::parse_str(&text) {
            Err(Error::Config { msg, .. }) => assert!(msg.contains("env.k"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = format!("{MINIMAL}bogus.key = 3\n");
        match ExperimentConfig::parse_str(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("bogus.key"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn rho_one_rejected() {
        let text = MINIMAL.replace("env.rho = 0.7", "env.rho = 1.0");
        match ExperimentConfig::parse_str(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("rho"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = format!("# header\n\n{MINIMAL}; trailing\nnet.hidden = 12 # inline\n");
        let cfg = ExperimentConfig::parse_str(&text).unwrap();
        assert_eq!(cfg.hidden, 12);
    }

    #[test]
    fn bands_parse_and_validate() {
        let text = format!(
            "{MINIMAL}train.penalty = spectrum\ntrain.lambda = 0.2\ntrain.bands = 0.3:0.35,0.5:0.6\n"
        );
        let cfg = ExperimentConfig::parse_str(&text).unwrap();
        let pen = cfg.penalty_config().unwrap();
        assert_eq!(pen.bands.len(), 2);
        assert_eq!(pen.bands[1].f_high, 0.6);
    }

    #[test]
    fn effective_config_roundtrips() {
        let text = format!("{MINIMAL}train.penalty = par\ntrain.lambda = 0.1\ntrain.seed = 9\n");
        let cfg = ExperimentConfig::parse_str(&text).unwrap();
        let echoed = cfg.to_ini_string();
        let cfg2 = ExperimentConfig::parse_str(&echoed).unwrap();
        assert_eq!(cfg2.seed, 9);
        assert_eq!(cfg2.lambda, 0.1);
        assert_eq!(cfg2.k, cfg.k);
        assert_eq!(cfg2.to_ini_string(), echoed);
    }
}
