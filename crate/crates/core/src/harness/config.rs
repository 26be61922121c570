//! Experiment configuration and its flat key-value file format.
//!
//! ```toml
//! R = 10
//! alpha0 = 100.0
//! p = 40
//! kappa = 4.5
//! kind = "ma_gaussian"
//! l_x = 15
//! n_samples = 10000
//! ```
//!
//! Every key is optional and defaults to the experiment-1 setup. When `p` is
//! given without `h0` or `L_s`, they follow it (`h0 = [1, 0, ..., 0]`, `L_s = p`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blind::AdcConfig;
use crate::error::{Error, Result};
use crate::modcore::DitherMode;
use crate::signals::{InterfererSpec, SignalRegistry, SignalSpec};

/// Everything needed to reproduce one run or a Monte Carlo batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub adc: AdcConfig,
    pub signal: SignalSpec,
    pub n_samples: usize,
    /// Registry name of the decoder, `blind` or `oracle`.
    pub decoder: String,
    pub trials: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            adc: AdcConfig::default(),
            signal: SignalSpec::default(),
            n_samples: 10_000,
            decoder: "blind".into(),
            trials: 1,
            out_dir: None,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatConfig {
    #[serde(rename = "R")]
    bits: Option<u32>,
    alpha0: Option<f64>,
    p: Option<usize>,
    h0: Option<Vec<f64>>,
    kappa: Option<f64>,
    #[serde(rename = "L_s")]
    stabilization_len: Option<usize>,
    #[serde(rename = "N_s")]
    detector_warmup: Option<usize>,
    eps_mu: Option<f64>,
    delta_alpha: Option<f64>,
    beta: Option<f64>,
    seed: Option<u64>,
    steady_state_detector: Option<bool>,
    adapt_mu: Option<bool>,
    dither: Option<DitherMode>,
    kind: Option<String>,
    signal_seed: Option<u64>,
    l_x: Option<usize>,
    passband_edge: Option<f64>,
    stopband_edge: Option<f64>,
    stopband_atten_db: Option<f64>,
    interferer_gain: Option<Vec<f64>>,
    interferer_omega: Option<Vec<f64>>,
    interferer_tau: Option<Vec<u64>>,
    interferer_phase_seed: Option<Vec<u64>>,
    n_samples: Option<usize>,
    decoder: Option<String>,
    trials: Option<usize>,
    out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.adc.validate()?;
        if self.n_samples <= self.adc.order + 1 {
            return Err(Error::config(
                "n_samples",
                format!("must exceed p + 1 = {}", self.adc.order + 1),
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let limit = i64::MAX as u64;
        if self.adc.seed > limit || self.signal.seed > limit {
            return Err(Error::config(
                "seed",
                "seeds must fit in a signed 64-bit integer",
            ));
        }
        if self.signal.interferers.iter().any(|i| i.phase_seed > limit) {
            return Err(Error::config(
                "interferer_phase_seed",
                "seeds must fit in a signed 64-bit integer",
            ));
        }
        SignalRegistry::with_builtins().build(&self.signal)?;
        super::DecoderRegistry::with_builtins().get(&self.decoder)?;
        Ok(())
    }

    /// Parses the flat format; `origin` names the source in diagnostics.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let flat: FlatConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            if let Some(key) = message
                .strip_prefix("unknown field `")
                .and_then(|m| m.split('`').next())
            {
                let line = text
                    .lines()
                    .position(|l| l.trim_start().split(['=', ' ']).next() == Some(key))
                    .map_or(0, |i| i + 1);
                Error::config(key, format!("{origin} line {line}: unknown key"))
            } else {
                let line = e.span().map_or(0, |s| {
                    text[..s.start.min(text.len())].lines().count().max(1)
                });
                Error::Parse {
                    path: origin.to_string(),
                    line,
                    message,
                }
            }
        })?;
        let cfg = Self::from_flat(flat)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Writes every key explicitly, so the file reproduces the run on its own.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&self.to_flat()).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    fn from_flat(f: FlatConfig) -> Result<Self> {
        let mut cfg = Self::default();
        let p = f.p.unwrap_or(cfg.adc.order);
        let mut adc = AdcConfig::with_order(p);
        adc.bits = f.bits.unwrap_or(adc.bits);
        adc.alpha0 = f.alpha0.unwrap_or(adc.alpha0);
        adc.h0 = f.h0.unwrap_or(adc.h0);
        adc.kappa = f.kappa.unwrap_or(adc.kappa);
        adc.stabilization_len = f.stabilization_len.unwrap_or(adc.stabilization_len);
        adc.detector_warmup = f.detector_warmup.unwrap_or(adc.detector_warmup);
        adc.eps_mu = f.eps_mu.unwrap_or(adc.eps_mu);
        adc.delta_alpha = f.delta_alpha.unwrap_or(adc.delta_alpha);
        adc.beta = f.beta.unwrap_or(adc.beta);
        adc.seed = f.seed.unwrap_or(adc.seed);
        adc.steady_state_detector = f.steady_state_detector.unwrap_or(adc.steady_state_detector);
        adc.adapt_mu = f.adapt_mu.unwrap_or(adc.adapt_mu);
        adc.dither = f.dither.unwrap_or(adc.dither);
        cfg.adc = adc;

        let s = &mut cfg.signal;
        s.kind = f.kind.unwrap_or_else(|| s.kind.clone());
        s.seed = f.signal_seed.unwrap_or(s.seed);
        s.l_x = f.l_x.unwrap_or(s.l_x);
        s.passband_edge = f.passband_edge.unwrap_or(s.passband_edge);
        s.stopband_edge = f.stopband_edge.unwrap_or(s.stopband_edge);
        s.stopband_atten_db = f.stopband_atten_db.unwrap_or(s.stopband_atten_db);
        s.interferers = zip_interferers(
            f.interferer_gain.unwrap_or_default(),
            f.interferer_omega.unwrap_or_default(),
            f.interferer_tau.unwrap_or_default(),
            f.interferer_phase_seed.unwrap_or_default(),
        )?;

        cfg.n_samples = f.n_samples.unwrap_or(cfg.n_samples);
        cfg.decoder = f.decoder.unwrap_or(cfg.decoder);
        cfg.trials = f.trials.unwrap_or(cfg.trials);
        cfg.out_dir = f.out_dir;
        Ok(cfg)
    }

    fn to_flat(&self) -> FlatConfig {
        let a = &self.adc;
        let s = &self.signal;
        let column = |f: fn(&InterfererSpec) -> f64| s.interferers.iter().map(f).collect();
        FlatConfig {
            bits: Some(a.bits),
            alpha0: Some(a.alpha0),
            p: Some(a.order),
            h0: Some(a.h0.clone()),
            kappa: Some(a.kappa),
            stabilization_len: Some(a.stabilization_len),
            detector_warmup: Some(a.detector_warmup),
            eps_mu: Some(a.eps_mu),
            delta_alpha: Some(a.delta_alpha),
            beta: Some(a.beta),
            seed: Some(a.seed),
            steady_state_detector: Some(a.steady_state_detector),
            adapt_mu: Some(a.adapt_mu),
            dither: Some(a.dither),
            kind: Some(s.kind.clone()),
            signal_seed: Some(s.seed),
            l_x: Some(s.l_x),
            passband_edge: Some(s.passband_edge),
            stopband_edge: Some(s.stopband_edge),
            stopband_atten_db: Some(s.stopband_atten_db),
            interferer_gain: Some(column(|i| i.gain)),
            interferer_omega: Some(column(|i| i.omega)),
            interferer_tau: Some(s.interferers.iter().map(|i| i.tau).collect()),
            interferer_phase_seed: Some(s.interferers.iter().map(|i| i.phase_seed).collect()),
            n_samples: Some(self.n_samples),
            decoder: Some(self.decoder.clone()),
            trials: Some(self.trials),
            out_dir: self.out_dir.clone(),
        }
    }
}

fn zip_interferers(
    gain: Vec<f64>,
    omega: Vec<f64>,
    tau: Vec<u64>,
    phase_seed: Vec<u64>,
) -> Result<Vec<InterfererSpec>> {
    let n = gain.len();
    for (name, len) in [
        ("interferer_omega", omega.len()),
        ("interferer_tau", tau.len()),
        ("interferer_phase_seed", phase_seed.len()),
    ] {
        if len != n {
            return Err(Error::config(
                name,
                format!("has {len} entries but interferer_gain has {n}"),
            ));
        }
    }
    Ok((0..n)
        .map(|i| InterfererSpec {
            gain: gain[i],
            omega: omega[i],
            tau: tau[i],
            phase_seed: phase_seed[i],
        })
        .collect())
}
