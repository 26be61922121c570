//! Lowpass-filtered Rademacher noise.
//!
//! The FIR is a Kaiser-windowed sinc. The tap count starts from Kaiser's
//! order estimate and grows until the measured stopband attenuation meets
//! the target.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SignalSource;
use crate::error::{Error, Result};

const MAX_TAPS: usize = 4096;
const RESPONSE_GRID: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandlimitedRademacherSpec {
    /// Passband edge, normalized so Nyquist is 1.
    pub passband_edge: f64,
    pub stopband_edge: f64,
    pub stopband_atten_db: f64,
    pub seed: u64,
}

impl Default for BandlimitedRademacherSpec {
    fn default() -> Self {
        Self {
            passband_edge: 0.2,
            stopband_edge: 0.3,
            stopband_atten_db: 60.0,
            seed: 0,
        }
    }
}

/// A designed lowpass and its measured stopband attenuation.
#[derive(Debug, Clone)]
pub struct LowpassDesign {
    pub taps: Vec<f64>,
    pub measured_atten_db: f64,
}

#[derive(Debug, Clone)]
pub struct BandlimitedRademacher {
    spec: BandlimitedRademacherSpec,
    design: LowpassDesign,
}

impl BandlimitedRademacher {
    pub const NAME: &'static str = "bandlimited_rademacher";

    pub fn new(spec: BandlimitedRademacherSpec) -> Result<Self> {
        let design = design_lowpass(
            spec.passband_edge,
            spec.stopband_edge,
            spec.stopband_atten_db,
        )?;
        Ok(Self { spec, design })
    }

    pub fn design(&self) -> &LowpassDesign {
        &self.design
    }
}

impl SignalSource for BandlimitedRademacher {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn generate(&self, n_samples: usize) -> Result<Vec<f64>> {
        filter_and_normalize(&self.design.taps, self.spec.seed, n_samples)
    }

    /// Autocorrelation of the filtered process, normalized by the filter energy.
    fn autocorr(&self, lag: usize) -> Option<f64> {
        let h = &self.design.taps;
        let energy: f64 = h.iter().map(|v| v * v).sum();
        if lag >= h.len() {
            return Some(0.0);
        }
        Some(h[lag..].iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / energy)
    }
}

pub fn gen_bandlimited_rademacher(
    spec: BandlimitedRademacherSpec,
    n_samples: usize,
) -> Result<Vec<f64>> {
    BandlimitedRademacher::new(spec)?.generate(n_samples)
}

fn filter_and_normalize(taps: &[f64], seed: u64, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // taps.len() - 1 extra driver samples: every output sees a full filter
    let driver: Vec<f64> = (0..n_samples + taps.len() - 1)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut out: Vec<f64> = driver
        .windows(taps.len())
        .map(|w| w.iter().rev().zip(taps).map(|(x, h)| x * h).sum())
        .collect();
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        let scale = var.sqrt().recip();
        out.iter_mut().for_each(|v| *v = (*v - mean) * scale);
    }
    Ok(out)
}

/// Designs a linear-phase lowpass meeting `atten_db` beyond `stopband_edge`.
pub fn design_lowpass(
    passband_edge: f64,
    stopband_edge: f64,
    atten_db: f64,
) -> Result<LowpassDesign> {
    if !(0.0 < passband_edge && passband_edge < stopband_edge && stopband_edge < 1.0) {
        return Err(Error::Design(format!(
            "band edges must satisfy 0 < {passband_edge} < {stopband_edge} < 1"
        )));
    }
    if !(atten_db > 0.0) {
        return Err(Error::Design(format!(
            "attenuation must be positive, got {atten_db}"
        )));
    }
    let transition = PI * (stopband_edge - passband_edge);
    let cutoff = 0.5 * (passband_edge + stopband_edge);
    let beta = kaiser_beta(atten_db);
    let estimate = ((atten_db - 7.95) / (2.285 * transition)).ceil().max(2.0) as usize + 1;
    let mut n_taps = estimate | 1;
    while n_taps <= MAX_TAPS {
        let taps = windowed_sinc(n_taps, cutoff, beta);
        let measured = stopband_attenuation(&taps, stopband_edge);
        if measured >= atten_db {
            return Ok(LowpassDesign {
                taps,
                measured_atten_db: measured,
            });
        }
        n_taps += 2;
    }
    Err(Error::Design(format!(
        "cannot reach {atten_db} dB with edges ({passband_edge}, {stopband_edge}) within {MAX_TAPS} taps"
    )))
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Zeroth-order modified Bessel function of the first kind, by power series.
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn windowed_sinc(n_taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let m = (n_taps - 1) as f64;
    let i0_beta = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            let t = i as f64 - 0.5 * m;
            let ideal = if t == 0.0 {
                cutoff
            } else {
                (PI * cutoff * t).sin() / (PI * t)
            };
            let r = 2.0 * i as f64 / m - 1.0;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            ideal * w
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|h| *h /= dc);
    taps
}

fn magnitude(taps: &[f64], omega: f64) -> f64 {
    let (re, im) = taps
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (k, h)| {
            let ph = omega * k as f64;
            (re + h * ph.cos(), im - h * ph.sin())
        });
    re.hypot(im)
}

/// Worst-case attenuation in dB over `[stopband_edge, 1]`, relative to DC.
fn stopband_attenuation(taps: &[f64], stopband_edge: f64) -> f64 {
    let dc = magnitude(taps, 0.0);
    let peak = (0..=RESPONSE_GRID)
        .map(|i| {
            let f = stopband_edge + (1.0 - stopband_edge) * i as f64 / RESPONSE_GRID as f64;
            magnitude(taps, PI * f)
        })
        .fold(0.0f64, f64::max);
    20.0 * (dc / peak).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // I0(1), I0(5) from tables
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_45).abs() < 1e-11);
    }

    #[test]
    fn default_design_meets_attenuation() {
        let d = design_lowpass(0.2, 0.3, 60.0).unwrap();
        assert!(d.measured_atten_db >= 60.0);
        assert!(d.taps.len() % 2 == 1 && d.taps.len() < 200);
        // linear phase
        let n = d.taps.len();
        for i in 0..n / 2 {
            assert!((d.taps[i] - d.taps[n - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn infeasible_or_invalid_edges() {
        assert!(matches!(
            design_lowpass(0.3, 0.2, 60.0),
            Err(Error::Design(_))
        ));
        assert!(matches!(
            design_lowpass(0.2, 1.2, 60.0),
            Err(Error::Design(_))
        ));
        assert!(matches!(
            design_lowpass(0.3, 0.300_001, 60.0),
            Err(Error::Design(_))
        ));
    }

    #[test]
    fn output_normalized() {
        let x = gen_bandlimited_rademacher(BandlimitedRademacherSpec::default(), 100_000).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((0.99..=1.01).contains(&var));
    }

    #[test]
    fn driver_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 1_000_000;
        let s: f64 = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .sum();
        assert!((s / n as f64).abs() <= 0.004);
    }

    #[test]
    fn autocorr_starts_at_one() {
        let g = BandlimitedRademacher::new(BandlimitedRademacherSpec::default()).unwrap();
        assert!((g.autocorr(0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.autocorr(10_000), Some(0.0));
    }
}
