//! Seedable input processes and autocorrelation helpers.
//!
//! Generators live behind the [`SignalSource`] trait and are looked up by
//! name in a [`SignalRegistry`], so an experiment config only has to name
//! the process it wants (`kind = "ma_gaussian"`) plus its parameters.

mod interferers;
mod ma;
mod rademacher;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use interferers::{add_interferers, three_tone_interferers, InterfererSpec};
pub use ma::{gen_ma_gaussian, theoretical_autocorr_ma, MaGaussian, MaGaussianSpec};
pub use rademacher::{
    design_lowpass, gen_bandlimited_rademacher, BandlimitedRademacher, BandlimitedRademacherSpec,
    LowpassDesign,
};

/// A stationary discrete-time input process.
pub trait SignalSource: Send + Sync {
    fn name(&self) -> &'static str;

    /// Generates `n_samples` stationary samples. Identical calls give identical output.
    fn generate(&self, n_samples: usize) -> Result<Vec<f64>>;

    /// Closed-form autocorrelation `R_x[lag]`, when the process has one.
    fn autocorr(&self, _lag: usize) -> Option<f64> {
        None
    }
}

/// Declarative description of an input process, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Registry name of the base generator.
    pub kind: String,
    pub seed: u64,
    /// One-sided autocorrelation support of the MA process.
    pub l_x: usize,
    pub passband_edge: f64,
    pub stopband_edge: f64,
    pub stopband_atten_db: f64,
    pub interferers: Vec<InterfererSpec>,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            kind: MaGaussian::NAME.to_string(),
            seed: 0,
            l_x: 15,
            passband_edge: 0.2,
            stopband_edge: 0.3,
            stopband_atten_db: 60.0,
            interferers: Vec::new(),
        }
    }
}

impl SignalSpec {
    pub fn ma_gaussian(l_x: usize, seed: u64) -> Self {
        Self {
            kind: MaGaussian::NAME.into(),
            seed,
            l_x,
            ..Self::default()
        }
    }

    pub fn bandlimited_rademacher(seed: u64) -> Self {
        Self {
            kind: BandlimitedRademacher::NAME.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn with_interferers(mut self, interferers: Vec<InterfererSpec>) -> Self {
        self.interferers = interferers;
        self
    }

    /// Builds the base generator from the default registry.
    pub fn source(&self) -> Result<Box<dyn SignalSource>> {
        SignalRegistry::with_builtins().build(self)
    }

    /// Base process plus any interferers.
    pub fn generate(&self, n_samples: usize) -> Result<Vec<f64>> {
        let base = self.source()?.generate(n_samples)?;
        Ok(add_interferers(&base, &self.interferers))
    }
}

type Builder = fn(&SignalSpec) -> Result<Box<dyn SignalSource>>;

/// Name-keyed table of signal generators.
pub struct SignalRegistry {
    builders: BTreeMap<&'static str, Builder>,
}

impl SignalRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(MaGaussian::NAME, |s| {
            Ok(Box::new(MaGaussian::new(MaGaussianSpec {
                l_x: s.l_x,
                seed: s.seed,
            })?))
        });
        reg.register("white_gaussian", |s| {
            Ok(Box::new(MaGaussian::new(MaGaussianSpec {
                l_x: 1,
                seed: s.seed,
            })?))
        });
        reg.register(BandlimitedRademacher::NAME, |s| {
            Ok(Box::new(BandlimitedRademacher::new(
                BandlimitedRademacherSpec {
                    passband_edge: s.passband_edge,
                    stopband_edge: s.stopband_edge,
                    stopband_atten_db: s.stopband_atten_db,
                    seed: s.seed,
                },
            )?))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, builder: Builder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    pub fn build(&self, spec: &SignalSpec) -> Result<Box<dyn SignalSource>> {
        let builder = self.builders.get(spec.kind.as_str()).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::config(
                "kind",
                format!(
                    "unknown signal kind {:?} (known: {})",
                    spec.kind,
                    known.join(", ")
                ),
            )
        })?;
        builder(spec)
    }
}

/// Biased sample autocorrelation `(1/N) sum_n x_n x_{n-lag}` for lags `0..=max_lag`.
pub fn sample_autocorr(signal: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if max_lag >= n {
        return Err(Error::Domain(format!(
            "sample_autocorr: max_lag {max_lag} must be below the signal length {n}"
        )));
    }
    Ok((0..=max_lag)
        .map(|lag| {
            signal[lag..]
                .iter()
                .zip(signal)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect())
}
