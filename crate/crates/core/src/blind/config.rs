use crate::error::{Error, Result};
use crate::modcore::{DitherMode, ModuloRange};

/// User-set system parameters of the blind encoder/decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcConfig {
    /// Bits per sample `R`; the modulo range is `2^R`.
    pub bits: u32,
    /// Initial (and reset) resolution; must keep `alpha0 * x` well inside `2^R / 2`.
    pub alpha0: f64,
    /// Predictor length `p`.
    pub order: usize,
    /// Initial filter, length `p`.
    pub h0: Vec<f64>,
    /// Confidence margin: resolution grows while `kappa * sigma_p < 2^R / 2`.
    pub kappa: f64,
    /// `L_s`: residual window length and minimum hold between resolution updates.
    pub stabilization_len: usize,
    /// `N_s`: samples before the logarithmic overload threshold takes over.
    pub detector_warmup: usize,
    pub eps_mu: f64,
    /// Multiplicative resolution step in `(0, 1)`.
    pub delta_alpha: f64,
    /// Early-epoch overload threshold in standard deviations.
    pub beta: f64,
    pub seed: u64,
    pub steady_state_detector: bool,
    /// Recompute the LMS step size from the running variance at every sample.
    pub adapt_mu: bool,
    pub dither: DitherMode,
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self::with_order(40)
    }
}

impl AdcConfig {
    /// Default parameters (`R = 10`, `alpha0 = 100`, ..., `beta = 5`) for predictor length `p`.
    pub fn with_order(p: usize) -> Self {
        let mut h0 = vec![0.0; p];
        if let Some(first) = h0.first_mut() {
            *first = 1.0;
        }
        Self {
            bits: 10,
            alpha0: 100.0,
            order: p,
            h0,
            kappa: 4.5,
            stabilization_len: p,
            detector_warmup: 500,
            eps_mu: 1e-2,
            delta_alpha: 0.9,
            beta: 5.0,
            seed: 0,
            steady_state_detector: true,
            adapt_mu: false,
            dither: DitherMode::Random,
        }
    }

    pub fn range(&self) -> Result<ModuloRange> {
        ModuloRange::new(self.bits).map_err(|e| Error::config("R", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.range()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        positive("alpha0", self.alpha0)?;
        positive("kappa", self.kappa)?;
        positive("eps_mu", self.eps_mu)?;
        positive("beta", self.beta)?;
        if self.order == 0 {
            return Err(Error::config("p", "must be a positive integer"));
        }
        if self.h0.len() != self.order {
            return Err(Error::config(
                "h0",
                format!("length {} does not match p = {}", self.h0.len(), self.order),
            ));
        }
        if self.h0.iter().any(|h| !h.is_finite()) {
            return Err(Error::config("h0", "entries must be finite"));
        }
        if self.stabilization_len == 0 {
            return Err(Error::config("L_s", "must be a positive integer"));
        }
        if self.detector_warmup == 0 {
            return Err(Error::config("N_s", "must be a positive integer"));
        }
        if !(self.delta_alpha > 0.0 && self.delta_alpha < 1.0) {
            return Err(Error::config(
                "delta_alpha",
                format!("must lie in (0, 1), got {}", self.delta_alpha),
            ));
        }
        Ok(())
    }

    /// Initial effective modulo range `2^R / alpha0`.
    pub fn m0(&self) -> f64 {
        (1u64 << self.bits.min(62)) as f64 / self.alpha0
    }
}
