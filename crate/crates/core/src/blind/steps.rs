//! Building blocks of the blind loop: unfolding, LMS, estimators and detectors.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::modcore::ModuloRange;
use crate::oracle::unfold_residual;

/// Unfolds `y_n` with the adaptive filter.
///
/// Returns `(v_hat, v_hat_p)` where `v_hat_p = h^T vbar_window - 1/2` and
/// `v_hat = v_hat_p + center_shift([y - v_hat_p] mod 2^R)`.
pub fn blind_unfold_step(y: f64, vbar_window: &[f64], h: &[f64], range: ModuloRange) -> (f64, f64) {
    let v_hat_p = h.iter().zip(vbar_window).map(|(a, b)| a * b).sum::<f64>() - 0.5;
    (v_hat_p + unfold_residual(y, v_hat_p, range), v_hat_p)
}

/// `h + mu * window * e_hat`.
pub fn lms_update(h: &[f64], mu: f64, vbar_window: &[f64], e_hat: f64) -> Vec<f64> {
    let mut out = h.to_vec();
    lms_update_in_place(&mut out, mu, vbar_window, e_hat);
    out
}

#[inline]
pub(crate) fn lms_update_in_place(h: &mut [f64], mu: f64, vbar_window: &[f64], e_hat: f64) {
    let g = mu * e_hat;
    for (hk, wk) in h.iter_mut().zip(vbar_window) {
        *hk += g * wk;
    }
}

/// `eps_mu / (p * sigma2_vbar)`.
pub fn select_learning_rate(sigma2_vbar_hat: f64, p: usize, eps_mu: f64) -> Result<f64> {
    if !(sigma2_vbar_hat > 0.0) {
        return Err(Error::State(format!(
            "learning rate needs a positive variance estimate, got {sigma2_vbar_hat}"
        )));
    }
    Ok(eps_mu / (p as f64 * sigma2_vbar_hat))
}

/// Mean square of the residual window and its root.
pub fn update_sigma_p(residuals: &[f64]) -> Result<(f64, f64)> {
    if residuals.is_empty() {
        return Err(Error::State("residual window is empty".into()));
    }
    let s2 = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    Ok((s2, s2.sqrt()))
}

/// `1` iff `kappa * sigma_p < delta / 2`; a tie does not raise the resolution.
pub fn resolution_decision(sigma_p_hat: f64, kappa: f64, delta: f64) -> bool {
    kappa * sigma_p_hat < 0.5 * delta
}

/// Flags a suspected unwrapping failure from the magnitude of `vbar_hat`.
///
/// From `N_s` samples into the epoch the threshold is `sqrt(2 sigma^2 log n)`;
/// before that it is `beta * sigma`.
pub fn overload_detect(
    vbar_hat: f64,
    sigma2_vbar_hat: f64,
    n_epoch: usize,
    n_s: usize,
    beta: f64,
) -> Result<bool> {
    if !(sigma2_vbar_hat > 0.0) {
        return Err(Error::State(format!(
            "overload detector needs a positive variance, got {sigma2_vbar_hat}"
        )));
    }
    if n_epoch == 0 {
        return Err(Error::State("epoch sample index starts at 1".into()));
    }
    let threshold = if n_epoch >= n_s {
        (2.0 * sigma2_vbar_hat * (n_epoch as f64).ln()).sqrt()
    } else {
        beta * sigma2_vbar_hat.sqrt()
    };
    Ok(vbar_hat.abs() > threshold)
}

/// `1` iff the long-term residual deviation exceeds `M_n / (2 kappa)`.
pub fn steady_state_detect(longterm_sigma_bar: f64, m_n: f64, kappa: f64) -> bool {
    longterm_sigma_bar > m_n / (2.0 * kappa)
}

/// Limits implied by the equilibrium `kappa * sigma = 2^R / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub alpha_inf: f64,
    pub m_inf: f64,
    /// `alpha_inf * sigma_bar`, the prediction RMSE in converter units.
    pub sigma_lmmse: f64,
    /// Excess rate `log2(kappa / sqrt 3)` over `log2(12 sigma_lmmse^2) / 2`.
    pub excess_rate: f64,
    /// `log2(12 sigma_lmmse^2) / 2 + excess_rate`; equals `R` by construction.
    pub rate: f64,
}

pub fn predict_asymptotics(kappa: f64, bits: u32, sigma_bar_inf: f64) -> Asymptotics {
    let half_range = 0.5 * (1u64 << bits) as f64;
    let alpha_inf = half_range / (kappa * sigma_bar_inf);
    let m_inf = 2.0 * kappa * sigma_bar_inf;
    let sigma_lmmse = alpha_inf * sigma_bar_inf;
    let excess_rate = (kappa / 3f64.sqrt()).log2();
    let rate = 0.5 * (12.0 * sigma_lmmse * sigma_lmmse).log2() + excess_rate;
    Asymptotics {
        alpha_inf,
        m_inf,
        sigma_lmmse,
        excess_rate,
        rate,
    }
}

/// Running mean of squares via `s_n = ((n-1)/n) s_{n-1} + x_n^2 / n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningMeanSquare {
    value: f64,
    count: u64,
}

impl RunningMeanSquare {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let n = self.count as f64;
        self.value = (n - 1.0) / n * self.value + x * x / n;
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// The last `L_s` residuals `v_hat - v_hat_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualWindow {
    buf: VecDeque<f64>,
    cap: usize,
}

impl ResidualWindow {
    pub fn new(cap: usize) -> Self {
        Self {
            buf: VecDeque::with_capacity(cap),
            cap,
        }
    }

    pub fn push(&mut self, e: f64) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    /// Uses every stored residual while fewer than `L_s` are available.
    pub fn sigma_p(&mut self) -> Result<(f64, f64)> {
        update_sigma_p(self.buf.make_contiguous())
    }
}

/// Epoch-long mean of squared standardized residuals `(vbar_hat - vbar_hat_p)^2`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LongTermResidual {
    sum_sq: f64,
    count: u64,
}

impl LongTermResidual {
    pub fn push(&mut self, standardized_residual: f64) {
        self.sum_sq += standardized_residual * standardized_residual;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sigma_bar_sq(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_sq / self.count as f64
        }
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_bar_sq().sqrt()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}
