use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SignalSource;
use crate::error::{Error, Result};

/// Moving average of `l_x` i.i.d. standard Gaussians, scaled to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaGaussianSpec {
    pub l_x: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct MaGaussian {
    spec: MaGaussianSpec,
}

impl MaGaussian {
    pub const NAME: &'static str = "ma_gaussian";

    pub fn new(spec: MaGaussianSpec) -> Result<Self> {
        if spec.l_x == 0 {
            return Err(Error::config("L_x", "must be a positive integer"));
        }
        Ok(Self { spec })
    }
}

impl SignalSource for MaGaussian {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn generate(&self, n_samples: usize) -> Result<Vec<f64>> {
        gen_ma_gaussian(self.spec, n_samples)
    }

    fn autocorr(&self, lag: usize) -> Option<f64> {
        Some(theoretical_autocorr_ma(self.spec.l_x, lag as i64))
    }
}

/// `x_n = (1/sqrt(L)) sum_{l<L} xi_{n-l}`, with `L-1` warm-up draws so `x_1` is stationary.
pub fn gen_ma_gaussian(spec: MaGaussianSpec, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    if spec.l_x == 0 {
        return Err(Error::Domain("L_x must be positive".into()));
    }
    let l = spec.l_x;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let xi: Vec<f64> = (0..n_samples + l - 1)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let scale = 1.0 / (l as f64).sqrt();
    Ok(xi
        .windows(l)
        .map(|w| w.iter().sum::<f64>() * scale)
        .collect())
}

/// `R_x[lag] = (1 - |lag|/L) * 1{|lag| < L}`.
pub fn theoretical_autocorr_ma(l_x: usize, lag: i64) -> f64 {
    let l = l_x as f64;
    let a = lag.unsigned_abs() as f64;
    if a < l {
        1.0 - a / l
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::sample_autocorr;

    #[test]
    fn theoretical_values() {
        assert_eq!(theoretical_autocorr_ma(15, 0), 1.0);
        assert_eq!(theoretical_autocorr_ma(15, 15), 0.0);
        assert_eq!(theoretical_autocorr_ma(2, 1), 0.5);
        assert_eq!(theoretical_autocorr_ma(2, -1), 0.5);
    }

    #[test]
    fn l1_is_white_gaussian() {
        let x = gen_ma_gaussian(MaGaussianSpec { l_x: 1, seed: 4 }, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in x {
            let xi: f64 = StandardNormal.sample(&mut rng);
            assert_eq!(v, xi);
        }
    }

    #[test]
    fn ma15_moments() {
        let n = 100_000;
        let x = gen_ma_gaussian(MaGaussianSpec { l_x: 15, seed: 11 }, n).unwrap();
        let r = sample_autocorr(&x, 25).unwrap();
        assert!((0.97..=1.03).contains(&r[0]), "var {}", r[0]);
        assert!(r[15].abs() <= 0.02, "R[15] {}", r[15]);
        for (lag, &rl) in r.iter().enumerate().take(21) {
            let th = theoretical_autocorr_ma(15, lag as i64);
            assert!((rl - th).abs() < 0.03, "lag {lag}: {rl} vs {th}");
        }
        // stationarity tolerance 5 * N^-1/2 * 3 up to L_x + 5
        let tol = 15.0 / (n as f64).sqrt();
        for (lag, &rl) in r.iter().enumerate().take(21) {
            assert!((rl - theoretical_autocorr_ma(15, lag as i64)).abs() < tol);
        }
    }

    #[test]
    fn reproducible() {
        let spec = MaGaussianSpec { l_x: 7, seed: 99 };
        let a = gen_ma_gaussian(spec, 500).unwrap();
        let b = gen_ma_gaussian(spec, 500).unwrap();
        assert_eq!(a, b);
        assert!(gen_ma_gaussian(spec, 0).is_err());
    }
}
