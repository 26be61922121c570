//! Experiment reproduction, Monte Carlo batches, sweeps and output files.
//!
//! A single run writes four files into its output directory:
//! `trace.csv`, `truth.csv`, `summary.json` and `config.echo`. The last one is
//! a complete config file, so `verify` can recompute the summary from the
//! other three.

mod config;
mod decoders;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;
pub use decoders::{BlindDecoder, Decoder, DecoderRegistry, OracleDecoder};

use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, RunSummary};
use crate::modcore::ModuloRange;
use crate::signals::{three_tone_interferers, SignalSpec};
use crate::trace::{emit_trace, emit_truth, load_trace, load_truth, TraceRecord};

pub const TRACE_FILE: &str = "trace.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_ECHO_FILE: &str = "config.echo";

/// A finished single run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub trace: Vec<TraceRecord>,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        emit_trace(&self.trace, &dir.join(TRACE_FILE))?;
        emit_truth(&self.trace, &dir.join(TRUTH_FILE))?;
        write_json(&dir.join(SUMMARY_FILE), &self.summary)?;
        self.config.save(&dir.join(CONFIG_ECHO_FILE))
    }
}

/// Gaussian MA input with `L_x = 15` and the default system parameters.
pub fn experiment1_config(
    kappa: Option<f64>,
    seed: u64,
    n_samples: Option<usize>,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal = SignalSpec::ma_gaussian(15, seed);
    cfg.adc.seed = seed;
    if let Some(k) = kappa {
        cfg.adc.kappa = k;
    }
    if let Some(n) = n_samples {
        cfg.n_samples = n;
    }
    cfg
}

pub fn run_experiment1(
    kappa: Option<f64>,
    seed: u64,
    n_samples: Option<usize>,
) -> Result<RunOutput> {
    run_single(&experiment1_config(kappa, seed, n_samples))
}

/// Filtered Rademacher input plus three tones switched on at 2e4, 4e4 and
/// 7e4, over 1e5 samples, with the steady-state detector off.
pub fn experiment2_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal =
        SignalSpec::bandlimited_rademacher(seed).with_interferers(three_tone_interferers(seed));
    cfg.adc.seed = seed;
    cfg.adc.steady_state_detector = false;
    cfg.n_samples = 100_000;
    cfg
}

pub fn run_experiment2(seed: u64) -> Result<RunOutput> {
    run_single(&experiment2_config(seed))
}

/// Runs the configured decoder once, ignoring `trials`.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let x = cfg.signal.generate(cfg.n_samples)?;
    let trace = DecoderRegistry::with_builtins()
        .get(&cfg.decoder)?
        .decode(&x, cfg)?;
    let truth: Vec<f64> = trace.iter().map(|r| r.v).collect();
    let summary = compute_metrics(&trace, &truth, cfg.adc.kappa)?;
    Ok(RunOutput {
        config: cfg.clone(),
        trace,
        summary,
    })
}

/// Mean and sample standard deviation of one summary field across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    /// Trials in which the field was defined.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub fields: BTreeMap<String, Stat>,
}

impl Aggregate {
    /// Aggregates every numeric field of the summaries; undefined values are skipped.
    pub fn from_summaries(summaries: &[RunSummary]) -> Result<Self> {
        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for s in summaries {
            let value = serde_json::to_value(s).map_err(|e| Error::State(e.to_string()))?;
            if let serde_json::Value::Object(map) = value {
                for (k, v) in map {
                    if let Some(x) = v.as_f64() {
                        columns.entry(k).or_default().push(x);
                    }
                }
            }
        }
        let fields = columns
            .into_iter()
            .map(|(k, xs)| {
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = if xs.len() > 1 {
                    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                let count = xs.len();
                (
                    k,
                    Stat {
                        mean,
                        std: var.sqrt(),
                        count,
                    },
                )
            })
            .collect();
        Ok(Self {
            trials: summaries.len(),
            fields,
        })
    }

    pub fn mean(&self, field: &str) -> Option<f64> {
        self.fields.get(field).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub aggregate: Aggregate,
    pub trials: Vec<RunSummary>,
}

/// Seeds for trial `trial`: trial 0 keeps the configured seeds, later
/// trials draw fresh ones from a ChaCha stream keyed by the base seed.
pub fn trial_config(cfg: &ExperimentConfig, trial: u64) -> ExperimentConfig {
    let mut out = cfg.clone();
    if trial == 0 {
        return out;
    }
    out.adc.seed = derive_seed(cfg.adc.seed, trial, 0);
    out.signal.seed = derive_seed(cfg.signal.seed, trial, 1);
    for (k, i) in out.signal.interferers.iter_mut().enumerate() {
        i.phase_seed = derive_seed(i.phase_seed, trial, 2 + k as u64);
    }
    out
}

fn derive_seed(base: u64, trial: u64, lane: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(trial);
    rng.set_word_pos(u128::from(lane) * 2);
    rng.random::<u64>() >> 1
}

/// Runs `cfg.trials` independent trials in parallel.
pub fn run_generic(cfg: &ExperimentConfig) -> Result<MonteCarlo> {
    cfg.validate()?;
    let trials = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_single(&trial_config(cfg, t)).map(|o| o.summary))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarlo {
        aggregate: Aggregate::from_summaries(&trials)?,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Kappa,
    DeltaAlpha,
    Bits,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(Self::Kappa),
            "delta_alpha" => Ok(Self::DeltaAlpha),
            "R" => Ok(Self::Bits),
            other => Err(Error::config(
                "param",
                format!("cannot sweep {other:?}; expected kappa, delta_alpha or R"),
            )),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kappa => "kappa",
            Self::DeltaAlpha => "delta_alpha",
            Self::Bits => "R",
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            Self::Kappa => cfg.adc.kappa = value,
            Self::DeltaAlpha => cfg.adc.delta_alpha = value,
            Self::Bits => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::config(
                        "R",
                        format!("must be a positive integer, got {value}"),
                    ));
                }
                let bits = value as u32;
                ModuloRange::new(bits).map_err(|e| Error::config("R", e.to_string()))?;
                cfg.adc.bits = bits;
            }
        }
        Ok(())
    }
}

/// Parses a comma-separated list such as `3.5,4,4.5`.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    let values = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::config("values", format!("{v:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::config("values", "empty list"));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub aggregate: Aggregate,
}

pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            param.apply(&mut c, value)?;
            Ok(SweepPoint {
                value,
                aggregate: run_generic(&c)?.aggregate,
            })
        })
        .collect()
}

/// One row per swept value with `<field>_mean` and `<field>_std` columns.
pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let fields: Vec<&String> = points
        .first()
        .map(|p| p.aggregate.fields.keys().collect())
        .unwrap_or_default();
    let mut out = format!("{},trials", param.name());
    for f in &fields {
        let _ = write!(out, ",{f}_mean,{f}_std");
    }
    out.push('\n');
    for p in points {
        let _ = write!(out, "{},{}", p.value, p.aggregate.trials);
        for f in &fields {
            match p.aggregate.fields.get(*f) {
                Some(s) => {
                    let _ = write!(out, ",{},{}", s.mean, s.std);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: usize,
    pub fields: usize,
}

/// Recomputes `summary.json` from the trace and ground truth in `dir`.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_ECHO_FILE))?;
    let trace = load_trace(&dir.join(TRACE_FILE))?;
    let truth = load_truth(&dir.join(TRUTH_FILE))?;
    if trace.len() != truth.len() {
        return Err(Error::Verification(format!(
            "{TRACE_FILE} has {} rows, {TRUTH_FILE} has {}",
            trace.len(),
            truth.len()
        )));
    }
    if let Some((r, t)) = trace.iter().zip(&truth).find(|(r, t)| {
        r.n != t.n || r.x.to_bits() != t.x.to_bits() || r.v.to_bits() != t.v.to_bits()
    }) {
        return Err(Error::Verification(format!(
            "row n = {} of {TRACE_FILE} disagrees with {TRUTH_FILE} (n = {})",
            r.n, t.n
        )));
    }
    let summary_path = dir.join(SUMMARY_FILE);
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary_path)?)
        .map_err(|e| Error::Parse {
            path: summary_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
    let truth_v: Vec<f64> = truth.iter().map(|t| t.v).collect();
    let recomputed = compute_metrics(&trace, &truth_v, cfg.adc.kappa)?;
    let fresh = serde_json::to_value(&recomputed).map_err(|e| Error::State(e.to_string()))?;
    let (fresh, stored) = match (fresh, stored) {
        (serde_json::Value::Object(f), serde_json::Value::Object(s)) => (f, s),
        _ => {
            return Err(Error::Verification(format!(
                "{SUMMARY_FILE} is not an object"
            )))
        }
    };
    let mismatched: Vec<&String> = fresh
        .iter()
        .filter(|(k, v)| stored.get(*k) != Some(v))
        .map(|(k, _)| k)
        .chain(stored.keys().filter(|k| !fresh.contains_key(*k)))
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::Verification(format!(
            "{SUMMARY_FILE} fields differ from the recomputed values: {mismatched:?}"
        )));
    }
    Ok(VerifyReport {
        rows: trace.len(),
        fields: fresh.len(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::State(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        experiment1_config(None, 3, Some(2_000))
    }

    #[test]
    fn single_trial_equals_single_run() {
        let cfg = small();
        let mc = run_generic(&cfg).unwrap();
        let one = run_single(&cfg).unwrap();
        assert_eq!(mc.trials, vec![one.summary.clone()]);
        let agg = &mc.aggregate;
        assert_eq!(
            agg.mean("n_error_events"),
            Some(one.summary.n_error_events as f64)
        );
        assert_eq!(agg.fields["tail_mean_M"].std, 0.0);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_averages() {
        let mut cfg = small();
        cfg.trials = 4;
        let a = run_generic(&cfg).unwrap();
        let b = run_generic(&cfg).unwrap();
        assert_eq!(a, b);
        let mean_pe = a.trials.iter().map(|s| s.empirical_error_prob).sum::<f64>() / 4.0;
        assert!((a.aggregate.mean("empirical_error_prob").unwrap() - mean_pe).abs() < 1e-15);
        let seeds: std::collections::BTreeSet<u64> =
            (0..4).map(|t| trial_config(&cfg, t).signal.seed).collect();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn outputs_verify_and_tampering_is_caught() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_single(&small()).unwrap();
        out.write(dir.path()).unwrap();
        let report = verify(dir.path()).unwrap();
        assert_eq!(report.rows, 2_000);

        let path = dir.path().join(SUMMARY_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("\"n_error_events\": ", "\"n_error_events\": 1");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(verify(dir.path()), Err(Error::Verification(_))));
    }

    #[test]
    fn sweep_over_bits() {
        let mut cfg = small();
        cfg.n_samples = 500;
        let points = sweep(&cfg, SweepParam::Bits, &[8.0, 10.0]).unwrap();
        assert_eq!(points.len(), 2);
        let csv = sweep_csv(SweepParam::Bits, &points);
        assert!(csv.starts_with("R,trials,"));
        assert_eq!(csv.lines().count(), 3);
        assert!(SweepParam::Bits.apply(&mut cfg, 9.5).is_err());
        assert!("gain".parse::<SweepParam>().is_err());
        assert!(parse_values("1,x").is_err());
        assert_eq!(parse_values(" 3.5, 4").unwrap(), vec![3.5, 4.0]);
    }

    #[test]
    fn experiment2_setup() {
        let cfg = experiment2_config(1);
        assert!(!cfg.adc.steady_state_detector);
        assert_eq!(cfg.n_samples, 100_000);
        assert_eq!(cfg.signal.interferers.len(), 3);
        cfg.validate().unwrap();
    }
}
