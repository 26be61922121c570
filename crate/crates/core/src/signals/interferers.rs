use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Narrowband tone `g * sin(phi + omega n)` switched on for `n > tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererSpec {
    pub gain: f64,
    /// Angular frequency in `(0, pi)`.
    pub omega: f64,
    pub tau: u64,
    /// Seeds the phase draw `phi ~ Unif((0, 2 pi])`.
    pub phase_seed: u64,
}

impl InterfererSpec {
    pub fn phase(&self) -> f64 {
        let u: f64 = ChaCha8Rng::seed_from_u64(self.phase_seed).random();
        2.0 * PI * (1.0 - u)
    }
}

/// The three interferers of the bandlimited experiment, with phase seeds derived from `seed`.
pub fn three_tone_interferers(seed: u64) -> Vec<InterfererSpec> {
    let omegas = [PI / 4.0, 4.0 * PI / 5.0, 2f64.sqrt() * PI / 3.0];
    let taus = [20_000, 40_000, 70_000];
    omegas
        .iter()
        .zip(taus)
        .enumerate()
        .map(|(i, (&omega, tau))| InterfererSpec {
            gain: 2.0,
            omega,
            tau,
            // kept below 2^63 so the seed survives a round trip through config files
            phase_seed: seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64 + 1)
                >> 1,
        })
        .collect()
}

/// Adds every interferer to `signal`. Element `i` is time index `n = i + 1`.
pub fn add_interferers(signal: &[f64], specs: &[InterfererSpec]) -> Vec<f64> {
    let mut out = signal.to_vec();
    for spec in specs {
        let phi = spec.phase();
        for (i, x) in out.iter_mut().enumerate() {
            let n = i as u64 + 1;
            if n > spec.tau {
                *x += spec.gain * (phi + spec.omega * n as f64).sin();
            }
        }
    }
    out
}
