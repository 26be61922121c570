//! The adaptive blind decoder loop with resolution control and overload recovery.

use std::collections::VecDeque;

use super::config::AdcConfig;
use super::steps::{
    blind_unfold_step, lms_update_in_place, overload_detect, resolution_decision,
    select_learning_rate, steady_state_detect, LongTermResidual, ResidualWindow, RunningMeanSquare,
};
use crate::error::{Error, Result};
use crate::modcore::{center, fold_quantize, DitherSource, ModuloRange};
use crate::oracle::unfold_residual;
use crate::trace::TraceRecord;

/// Read-only view of the decoder state between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecState {
    pub n: u64,
    /// Resolution steps above `alpha0`; `alpha = alpha0 * delta_alpha^(-level)`.
    pub level: i32,
    pub alpha: f64,
    pub h: Vec<f64>,
    /// Filter per unit resolution, `h = alpha * g`.
    pub g: Vec<f64>,
    pub mu: f64,
    /// Samples since the last reset, the current one included.
    pub n_epoch: usize,
    /// Samples since the last resolution update.
    pub c_alpha: usize,
    pub steady: bool,
    /// Remaining samples of the current (re)initialization.
    pub accumulating: usize,
    pub sigma2_vbar: f64,
    pub sigma_bar: f64,
}

impl CodecState {
    pub fn m(&self, range: ModuloRange) -> f64 {
        range.delta() / self.alpha
    }
}

/// Sample-by-sample blind converter and decoder.
#[derive(Debug, Clone)]
pub struct BlindCodec {
    cfg: AdcConfig,
    range: ModuloRange,
    dither: DitherSource,
    n: u64,
    /// `alpha = alpha0 * delta_alpha^(-level)`; an integer level keeps
    /// up and down steps exact inverses.
    level: i32,
    alpha: f64,
    /// Filter per unit resolution, `h = alpha * g`. Scaling `alpha` rescales
    /// `h` with it and leaves `g` untouched.
    g: Vec<f64>,
    mu: f64,
    /// `[vbar_{n-1}, ..., vbar_{n-p}]`.
    window: VecDeque<f64>,
    variance: RunningMeanSquare,
    residuals: ResidualWindow,
    longterm: LongTermResidual,
    n_epoch: usize,
    c_alpha: usize,
    steady: bool,
    accumulating: usize,
}

impl BlindCodec {
    pub fn new(cfg: AdcConfig) -> Result<Self> {
        cfg.validate()?;
        let range = cfg.range()?;
        let p = cfg.order;
        Ok(Self {
            range,
            dither: DitherSource::new(cfg.dither, cfg.seed),
            n: 0,
            level: 0,
            alpha: cfg.alpha0,
            g: cfg.h0.iter().map(|h| h / cfg.alpha0).collect(),
            mu: 0.0,
            window: VecDeque::with_capacity(p + 1),
            variance: RunningMeanSquare::default(),
            residuals: ResidualWindow::new(cfg.stabilization_len),
            longterm: LongTermResidual::default(),
            n_epoch: 0,
            c_alpha: 0,
            steady: false,
            accumulating: p,
            cfg,
        })
    }

    pub fn config(&self) -> &AdcConfig {
        &self.cfg
    }

    pub fn range(&self) -> ModuloRange {
        self.range
    }

    pub fn state(&self) -> CodecState {
        CodecState {
            n: self.n,
            level: self.level,
            alpha: self.alpha,
            h: self.h(),
            g: self.g.clone(),
            mu: self.mu,
            n_epoch: self.n_epoch,
            c_alpha: self.c_alpha,
            steady: self.steady,
            accumulating: self.accumulating,
            sigma2_vbar: self.variance.value(),
            sigma_bar: self.longterm.sigma_bar(),
        }
    }

    /// Converts and decodes one input sample.
    pub fn step(&mut self, x: f64) -> Result<TraceRecord> {
        self.n += 1;
        self.n_epoch += 1;
        let alpha = self.alpha;
        let m = self.range.delta() / alpha;
        let folded = fold_quantize(x, alpha, self.range, &mut self.dither)?;
        let mut rec = TraceRecord {
            n: self.n,
            x,
            v: folded.v,
            y: folded.y,
            v_hat: f64::NAN,
            v_hat_p: f64::NAN,
            e_hat: f64::NAN,
            alpha,
            m,
            flag_error: 0,
            flag_res_up: 0,
            flag_res_down: 0,
            flag_steady: 0,
            flag_reinit: 0,
        };

        if self.accumulating > 0 {
            let v_hat = center(folded.y, self.range.delta());
            let vbar = (v_hat + 0.5) / alpha;
            self.variance.push(vbar);
            self.push_window(vbar);
            self.accumulating -= 1;
            if self.accumulating == 0 {
                self.mu =
                    select_learning_rate(self.variance.value(), self.cfg.order, self.cfg.eps_mu)?;
            }
            rec.v_hat = v_hat;
            rec.flag_reinit = 1;
            return Ok(rec);
        }

        let window = self.window.make_contiguous();
        let v_hat_p = alpha * window.iter().zip(&self.g).map(|(w, g)| w * g).sum::<f64>() - 0.5;
        let e_hat = unfold_residual(folded.y, v_hat_p, self.range);
        let v_hat = v_hat_p + e_hat;
        let vbar = (v_hat + 0.5) / alpha;
        rec.v_hat = v_hat;
        rec.v_hat_p = v_hat_p;
        rec.e_hat = e_hat;

        let overload = overload_detect(
            vbar,
            self.variance.value(),
            self.n_epoch,
            self.cfg.detector_warmup,
            self.cfg.beta,
        )?;
        if overload {
            rec.flag_error = 1;
            self.reset();
            return Ok(rec);
        }

        self.residuals.push(e_hat);
        let (_, sigma_p) = self.residuals.sigma_p()?;
        if self.cfg.adapt_mu {
            self.mu = select_learning_rate(self.variance.value(), self.cfg.order, self.cfg.eps_mu)?;
        }
        lms_update_in_place(&mut self.g, self.mu / alpha, window, e_hat);
        self.longterm.push(e_hat / alpha);
        self.variance.push(vbar);
        self.c_alpha += 1;

        if self.c_alpha > self.cfg.stabilization_len && !self.steady {
            let up = resolution_decision(sigma_p, self.cfg.kappa, self.range.delta());
            let settled = self.cfg.steady_state_detector
                && self.n_epoch >= self.cfg.detector_warmup
                && steady_state_detect(self.longterm.sigma_bar(), m, self.cfg.kappa);
            if up {
                rec.flag_res_up = 1;
            } else {
                rec.flag_res_down = 1;
            }
            self.step_resolution(up);
            if settled && up {
                self.steady = true;
            }
        }
        self.push_window(vbar);
        rec.flag_steady = u8::from(self.steady);
        if !self.alpha.is_finite() || self.g.iter().any(|g| !g.is_finite()) {
            return Err(Error::State(format!(
                "resolution or filter diverged at n = {}",
                self.n
            )));
        }
        Ok(rec)
    }

    /// Current filter `h` over the standardized window.
    pub fn h(&self) -> Vec<f64> {
        self.g.iter().map(|g| self.alpha * g).collect()
    }

    fn step_resolution(&mut self, up: bool) {
        self.level += if up { 1 } else { -1 };
        self.alpha = resolution_at(&self.cfg, self.level);
        self.c_alpha = 0;
    }

    fn push_window(&mut self, vbar: f64) {
        self.window.push_front(vbar);
        self.window.truncate(self.cfg.order);
    }

    fn reset(&mut self) {
        self.level = 0;
        self.alpha = self.cfg.alpha0;
        self.window.clear();
        self.variance.reset();
        self.residuals.clear();
        self.longterm.reset();
        self.n_epoch = 0;
        self.c_alpha = 0;
        self.steady = false;
        self.accumulating = self.cfg.order;
    }
}

fn resolution_at(cfg: &AdcConfig, level: i32) -> f64 {
    cfg.alpha0 * cfg.delta_alpha.powi(-level)
}

/// One multiplicative resolution step applied to a state snapshot, with the
/// filter rescaled alongside. An increase followed by a decrease restores
/// `alpha` and `h` bit for bit.
///
/// Fails unless more than `L_s` samples have passed since the last update
/// and the steady state has not been declared.
pub fn apply_resolution_update(
    state: &CodecState,
    increase: bool,
    cfg: &AdcConfig,
) -> Result<CodecState> {
    if state.c_alpha <= cfg.stabilization_len {
        return Err(Error::State(format!(
            "resolution updated {} samples ago, need more than {}",
            state.c_alpha, cfg.stabilization_len
        )));
    }
    if state.steady {
        return Err(Error::State("resolution is frozen in steady state".into()));
    }
    let mut next = state.clone();
    next.level += if increase { 1 } else { -1 };
    next.alpha = resolution_at(cfg, next.level);
    next.h = next.g.iter().map(|g| next.alpha * g).collect();
    next.c_alpha = 0;
    Ok(next)
}

/// Runs the blind codec over a whole signal.
pub fn run_codec(signal: &[f64], cfg: &AdcConfig) -> Result<Vec<TraceRecord>> {
    if signal.len() <= cfg.order + 1 {
        return Err(Error::Domain(format!(
            "signal of length {} is too short for p = {}",
            signal.len(),
            cfg.order
        )));
    }
    let mut codec = BlindCodec::new(cfg.clone())?;
    signal.iter().map(|&x| codec.step(x)).collect()
}

/// LMS at a fixed resolution: no resolution control and no overload handling.
///
/// The first `warmup` samples (at least `p`) are unfolded by centering alone
/// and set the variance estimate behind the learning rate. Returns the filter
/// after the last sample and the number of samples whose blind estimate
/// differed from the true `v`.
pub fn lms_fixed_resolution(
    signal: &[f64],
    alpha: f64,
    h0: &[f64],
    eps_mu: f64,
    warmup: usize,
    range: ModuloRange,
    dither: &mut DitherSource,
) -> Result<(Vec<f64>, usize)> {
    let p = h0.len();
    let warmup = warmup.max(p);
    if p == 0 || signal.len() <= warmup {
        return Err(Error::Domain(format!(
            "need p >= 1 and more than {warmup} samples, got p = {p}, n = {}",
            signal.len()
        )));
    }
    let mut h = h0.to_vec();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(p + 1);
    let mut variance = RunningMeanSquare::default();
    let mut mu = 0.0;
    let mut errors = 0;
    for (i, &x) in signal.iter().enumerate() {
        let folded = fold_quantize(x, alpha, range, dither)?;
        let v_hat = if i < warmup {
            center(folded.y, range.delta())
        } else {
            let w = window.make_contiguous();
            let (v_hat, v_hat_p) = blind_unfold_step(folded.y, w, &h, range);
            lms_update_in_place(&mut h, mu, w, v_hat - v_hat_p);
            v_hat
        };
        if (v_hat - folded.v).abs() > 1e-6 {
            errors += 1;
        }
        let vbar = (v_hat + 0.5) / alpha;
        variance.push(vbar);
        window.push_front(vbar);
        window.truncate(p);
        if i + 1 == warmup {
            mu = select_learning_rate(variance.value(), p, eps_mu)?;
        }
    }
    Ok((h, errors))
}
