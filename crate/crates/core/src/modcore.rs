//! Modulo arithmetic and the dithered folding quantizer.
//!
//! The front-end of an `(R, alpha)` modulo ADC scales the input by `alpha`,
//! adds the quantization error `z` and folds the result into `[0, 2^R)`.
//! Everything the decoders do rests on [`center_shift`] undoing that fold
//! whenever the residual being folded is smaller than half the range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest magnitude for which `floor` on an f64 still resolves integers.
const MAX_EXACT: f64 = 4_503_599_627_370_496.0; // 2^52

/// Fixed modulo range `Delta = 2^R` of an `R`-bit converter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuloRange {
    bits: u32,
    delta: f64,
}

impl ModuloRange {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=62).contains(&bits) {
            return Err(Error::Domain(format!("R must lie in [1, 62], got {bits}")));
        }
        Ok(Self {
            bits,
            delta: (1u64 << bits) as f64,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn half(&self) -> f64 {
        0.5 * self.delta
    }
}

/// Unchecked `[x] mod delta`, normalized so the result is never `delta` or `-0.0`.
#[inline]
pub(crate) fn wrap(x: f64, delta: f64) -> f64 {
    let r = x - delta * (x / delta).floor();
    if r >= delta || r == 0.0 {
        0.0
    } else if r < 0.0 {
        // x/delta rounded up across an integer boundary
        let r = r + delta;
        if r >= delta {
            0.0
        } else {
            r
        }
    } else {
        r
    }
}

/// Unchecked centered shift of a folded value into `[-delta/2, delta/2)`.
#[inline]
pub(crate) fn center(y: f64, delta: f64) -> f64 {
    let h = 0.5 * delta;
    let c = wrap(y + h, delta) - h;
    if c >= h {
        -h
    } else {
        c
    }
}

/// `[x] mod delta = x - delta * floor(x / delta)`, in `[0, delta)`.
pub fn mod_reduce(x: f64, delta: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("mod_reduce: non-finite input {x}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "mod_reduce: delta must be positive, got {delta}"
        )));
    }
    Ok(wrap(x, delta))
}

/// Maps a folded value `y in [0, delta)` to `([y + delta/2] mod delta) - delta/2`.
pub fn center_shift(y: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "center_shift: delta must be positive, got {delta}"
        )));
    }
    if !(0.0..delta).contains(&y) {
        return Err(Error::Domain(format!(
            "center_shift: y = {y} outside [0, {delta})"
        )));
    }
    Ok(center(y, delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DitherMode {
    /// i.i.d. `z ~ Unif((-1, 0])`, the additive-noise channel model.
    #[default]
    Random,
    /// `z = floor(alpha x) - alpha x`, the hard quantizer.
    Deterministic,
}

/// Source of the quantization error `z` added before folding.
#[derive(Debug, Clone)]
pub struct DitherSource {
    rng: ChaCha8Rng,
    mode: DitherMode,
}

impl DitherSource {
    pub fn new(mode: DitherMode, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            mode,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self::new(DitherMode::Random, seed)
    }

    pub fn deterministic() -> Self {
        Self::new(DitherMode::Deterministic, 0)
    }

    pub fn mode(&self) -> DitherMode {
        self.mode
    }

    /// Draws the error for the scaled sample `alpha * x`.
    pub fn draw(&mut self, scaled: f64) -> f64 {
        match self.mode {
            // gen::<f64>() is in [0, 1), so the negation lies in (-1, 0]
            DitherMode::Random => {
                let u: f64 = self.rng.random();
                if u == 0.0 {
                    0.0
                } else {
                    -u
                }
            }
            DitherMode::Deterministic => scaled.floor() - scaled,
        }
    }
}

/// One converter output together with the unfolded value it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedSample {
    /// Folded output `[v] mod 2^R`.
    pub y: f64,
    /// Unfolded quantized value `alpha x + z`.
    pub v: f64,
    pub z: f64,
}

/// Folds `alpha * x + z` for an explicitly supplied quantization error `z`.
pub fn fold_with_error(x: f64, alpha: f64, range: ModuloRange, z: f64) -> Result<FoldedSample> {
    let scaled = checked_scale(x, alpha)?;
    let v = scaled + z;
    Ok(FoldedSample {
        y: wrap(v, range.delta()),
        v,
        z,
    })
}

/// Models the `(R, alpha)` modulo ADC as a channel: `v = alpha x + z`, `y = [v] mod 2^R`.
pub fn fold_quantize(
    x: f64,
    alpha: f64,
    range: ModuloRange,
    dither: &mut DitherSource,
) -> Result<FoldedSample> {
    let scaled = checked_scale(x, alpha)?;
    let z = dither.draw(scaled);
    let v = match dither.mode() {
        // floor(alpha x) exactly, no rounding from the subtraction round trip
        DitherMode::Deterministic => scaled.floor(),
        DitherMode::Random => scaled + z,
    };
    Ok(FoldedSample {
        y: wrap(v, range.delta()),
        v,
        z,
    })
}

fn checked_scale(x: f64, alpha: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite input sample {x}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "resolution alpha must be positive, got {alpha}"
        )));
    }
    let scaled = alpha * x;
    if scaled.abs() > MAX_EXACT {
        return Err(Error::Precision(scaled));
    }
    Ok(scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mod_reduce_examples() {
        assert_eq!(mod_reduce(7.5, 4.0).unwrap(), 3.5);
        assert!((mod_reduce(-0.3, 1.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(mod_reduce(8.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn mod_reduce_negative_multiple_is_positive_zero() {
        let r = mod_reduce(-8.0, 4.0).unwrap();
        assert_eq!(r, 0.0);
        assert!(r.is_sign_positive());
        // tiny negative input rounds to delta, must come back as 0
        let r = mod_reduce(-1e-20, 1.0).unwrap();
        assert!((0.0..1.0).contains(&r));
    }

    #[test]
    fn mod_reduce_rejects_bad_input() {
        assert!(matches!(mod_reduce(f64::NAN, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            mod_reduce(f64::INFINITY, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(mod_reduce(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(mod_reduce(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn center_shift_examples() {
        assert_eq!(center_shift(3.0, 4.0).unwrap(), -1.0);
        assert_eq!(center_shift(1.0, 4.0).unwrap(), 1.0);
        assert_eq!(center_shift(2.0, 4.0).unwrap(), -2.0);
        assert!(center_shift(4.0, 4.0).is_err());
        assert!(center_shift(-0.1, 4.0).is_err());
    }

    #[test]
    fn range_construction() {
        let r = ModuloRange::new(10).unwrap();
        assert_eq!(r.delta(), 1024.0);
        assert_eq!(ModuloRange::new(62).unwrap().delta(), 2f64.powi(62));
        assert!(ModuloRange::new(0).is_err());
        assert!(ModuloRange::new(63).is_err());
    }

    #[test]
    fn fold_quantize_examples() {
        let r2 = ModuloRange::new(2).unwrap();
        let mut d = DitherSource::deterministic();
        let s = fold_quantize(5.7, 1.0, r2, &mut d).unwrap();
        assert!((s.z + 0.7).abs() < 1e-12);
        assert_eq!(s.v, 5.0);
        assert_eq!(s.y, 1.0);

        let r10 = ModuloRange::new(10).unwrap();
        let s = fold_with_error(0.0, 100.0, r10, -0.25).unwrap();
        assert_eq!(s.v, -0.25);
        assert_eq!(s.y, 1023.75);
    }

    #[test]
    fn fold_rejects_precision_loss() {
        let r = ModuloRange::new(10).unwrap();
        let mut d = DitherSource::random(1);
        assert!(matches!(
            fold_quantize(1e40, 1e20, r, &mut d),
            Err(Error::Precision(_))
        ));
        assert!(fold_quantize(1.0, 0.0, r, &mut d).is_err());
    }

    #[test]
    fn random_dither_moments() {
        let mut d = DitherSource::random(42);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = d.draw(0.0);
            assert!(z > -1.0 && z <= 0.0);
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((mean + 0.5).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn same_seed_same_dither() {
        let mut a = DitherSource::random(9);
        let mut b = DitherSource::random(9);
        for _ in 0..1000 {
            assert_eq!(a.draw(0.0).to_bits(), b.draw(0.0).to_bits());
        }
    }

    #[test]
    fn deterministic_mode_matches_integer_quantizer() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d = DitherSource::deterministic();
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-1e3..1e3);
            let alpha: f64 = rng.random_range(0.01..1e3);
            let bits: u32 = rng.random_range(1..20);
            let range = ModuloRange::new(bits).unwrap();
            let s = fold_quantize(x, alpha, range, &mut d).unwrap();
            // independent integer route: floor as i64, Euclidean remainder
            let k = (alpha * x).floor() as i64;
            let code = k.rem_euclid(1i64 << bits);
            assert_eq!(s.y, code as f64);
            assert!(s.z > -1.0 && s.z <= 0.0);
        }
    }

    proptest! {
        #[test]
        fn periodicity(x in -1e6f64..1e6, k in -1_000_000i64..1_000_000, bits in 1u32..12) {
            let delta = (1u64 << bits) as f64;
            let shifted = x + k as f64 * delta;
            let a = mod_reduce(shifted, delta).unwrap();
            let b = mod_reduce(x, delta).unwrap();
            // the shift itself rounds at the scale of |x + k delta|
            let tol = 4.0 * f64::EPSILON * (shifted.abs() + x.abs()) + 1e-12;
            let d = (a - b).abs();
            prop_assert!(d < tol || (delta - d) < tol, "a={} b={}", a, b);
        }

        #[test]
        fn unfolding_identity(frac in -0.999_999f64..0.999_999, bits in 1u32..20) {
            let delta = (1u64 << bits) as f64;
            let e = frac * delta / 2.0;
            let back = center_shift(mod_reduce(e, delta).unwrap(), delta).unwrap();
            prop_assert!((back - e).abs() <= 1e-9, "e={} back={}", e, back);
        }

        #[test]
        fn folded_offset_is_multiple_of_range(x in -1e4f64..1e4, alpha in 0.01f64..100.0, seed in 0u64..1000) {
            let range = ModuloRange::new(8).unwrap();
            let mut d = DitherSource::random(seed);
            let s = fold_quantize(x, alpha, range, &mut d).unwrap();
            let k = (s.v - s.y) / range.delta();
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!((0.0..range.delta()).contains(&s.y));
        }
    }
}
