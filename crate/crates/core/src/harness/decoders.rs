use std::collections::BTreeMap;
use std::sync::Arc;

use crate::blind::run_codec;
use crate::error::{Error, Result};
use crate::modcore::DitherSource;
use crate::oracle::{lmmse_filter, run_oracle};
use crate::signals::SignalRegistry;
use crate::trace::TraceRecord;

use super::ExperimentConfig;

/// Turns an input signal into a decoded trace under a given configuration.
pub trait Decoder: Send + Sync {
    fn name(&self) -> &'static str;

    fn decode(&self, signal: &[f64], cfg: &ExperimentConfig) -> Result<Vec<TraceRecord>>;
}

/// The adaptive decoder with resolution control.
pub struct BlindDecoder;

impl Decoder for BlindDecoder {
    fn name(&self) -> &'static str {
        "blind"
    }

    fn decode(&self, signal: &[f64], cfg: &ExperimentConfig) -> Result<Vec<TraceRecord>> {
        run_codec(signal, &cfg.adc)
    }
}

/// The informed decoder at fixed resolution `alpha0`, using the base
/// process's closed-form autocorrelation. Interferers are not modelled.
pub struct OracleDecoder;

impl Decoder for OracleDecoder {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn decode(&self, signal: &[f64], cfg: &ExperimentConfig) -> Result<Vec<TraceRecord>> {
        let source = SignalRegistry::with_builtins().build(&cfg.signal)?;
        if source.autocorr(0).is_none() {
            return Err(Error::config(
                "decoder",
                format!(
                    "signal kind {:?} has no closed-form autocorrelation",
                    cfg.signal.kind
                ),
            ));
        }
        let sol = lmmse_filter(
            |l| source.autocorr(l).unwrap_or(0.0),
            cfg.adc.alpha0,
            cfg.adc.order,
        )?;
        let range = cfg.adc.range()?;
        let mut dither = DitherSource::new(cfg.adc.dither, cfg.adc.seed);
        run_oracle(signal, &sol, range, &mut dither)
    }
}

/// Name-keyed table of decoders.
#[derive(Clone)]
pub struct DecoderRegistry {
    decoders: BTreeMap<&'static str, Arc<dyn Decoder>>,
}

impl DecoderRegistry {
    pub fn empty() -> Self {
        Self {
            decoders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(BlindDecoder));
        reg.register(Arc::new(OracleDecoder));
        reg
    }

    pub fn register(&mut self, decoder: Arc<dyn Decoder>) {
        self.decoders.insert(decoder.name(), decoder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.decoders.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Decoder>> {
        self.decoders.get(name).cloned().ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::config(
                "decoder",
                format!("unknown decoder {name:?} (known: {})", known.join(", ")),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered() {
        let reg = DecoderRegistry::with_builtins();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["blind", "oracle"]);
        assert!(reg.get("nope").is_err());
    }

    #[test]
    fn oracle_decoder_at_low_resolution_is_exact() {
        let mut cfg = ExperimentConfig::default();
        cfg.decoder = "oracle".into();
        cfg.adc.alpha0 = 60.0;
        let x = cfg.signal.generate(5_000).unwrap();
        let trace = DecoderRegistry::with_builtins()
            .get("oracle")
            .unwrap()
            .decode(&x, &cfg)
            .unwrap();
        assert!(trace.iter().all(|r| (r.v_hat - r.v).abs() < 1e-9));
    }
}
