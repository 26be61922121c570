//! The informed decoder.
//!
//! With the input autocorrelation known, the optimal length-`p` predictor
//! of `v_n` follows from the normal equations. The filter acts on the
//! standardized window `vbar = (v + 1/2) / alpha`, the same convention the
//! blind decoder uses, so both share one unfolding rule.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::modcore::{center, fold_quantize, wrap, DitherSource, ModuloRange};
use crate::trace::TraceRecord;

/// Optimal predictor of `v_n` from the previous `p` standardized samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmseSolution {
    /// Filter over `[vbar_{n-1}, ..., vbar_{n-p}]`.
    pub h_opt: Vec<f64>,
    /// Prediction MSE of `v_n`.
    pub sigma2_lmmse: f64,
    /// Resolution the solution was computed for.
    pub alpha: f64,
}

impl LmmseSolution {
    /// `h^T vbar - 1/2`, the prediction of `v_n` in converter units.
    pub fn predict_standardized(&self, vbar_window: &[f64]) -> f64 {
        dot(&self.h_opt, vbar_window) - 0.5
    }

    /// Prediction from raw past values `[v_{n-1}, ..., v_{n-p}]`.
    pub fn predict(&self, v_window: &[f64]) -> f64 {
        let inv = 1.0 / self.alpha;
        self.h_opt
            .iter()
            .zip(v_window)
            .map(|(h, v)| h * (v + 0.5) * inv)
            .sum::<f64>()
            - 0.5
    }
}

/// Solves the normal equations `R_vbar h = alpha r` with
/// `R_vbar[l] = R_x[l] + 1{l=0} / (12 alpha^2)` and `r = [R_x[1..=p]]`.
pub fn lmmse_filter(
    autocorr: impl Fn(usize) -> f64,
    alpha: f64,
    p: usize,
) -> Result<LmmseSolution> {
    if p == 0 {
        return Err(Error::Domain("predictor order p must be at least 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let rx: Vec<f64> = (0..=p).map(&autocorr).collect();
    let quant = 1.0 / (12.0 * alpha * alpha);
    let cov: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| rx[i.abs_diff(j)] + if i == j { quant } else { 0.0 })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = rx[1..].iter().map(|r| alpha * r).collect();
    let h_opt = cholesky_solve(&cov, &rhs)?;
    let explained: f64 = dot(&h_opt, &rhs);
    let sigma2 = alpha * alpha * rx[0] + 1.0 / 12.0 - explained;
    Ok(LmmseSolution {
        h_opt,
        sigma2_lmmse: sigma2.max(0.0),
        alpha,
    })
}

/// Solves `A x = b` for symmetric positive-definite `A`.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return Err(Error::Solver(format!(
                        "covariance not positive definite at pivot {i} ({d:e})"
                    )));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

/// Unfolds `y_n` given the true previous `p` values `[v_{n-1}, ..., v_{n-p}]`.
///
/// Exact whenever `|v_n - prediction| < 2^R / 2`; otherwise the result is off
/// by a nonzero multiple of `2^R`.
pub fn oracle_unfold_step(
    y: f64,
    v_window: &[f64],
    sol: &LmmseSolution,
    range: ModuloRange,
) -> f64 {
    let prediction = sol.predict(v_window);
    prediction + unfold_residual(y, prediction, range)
}

/// `center_shift([y - prediction] mod 2^R)`: the residual estimate shared by both decoders.
#[inline]
pub(crate) fn unfold_residual(y: f64, prediction: f64, range: ModuloRange) -> f64 {
    let delta = range.delta();
    center(wrap(y - prediction, delta), delta)
}

/// Converts and decodes a whole signal at the fixed resolution `sol.alpha`.
///
/// The first `p` samples are unfolded by centering alone; afterwards each
/// prediction uses the decoder's own previous outputs.
pub fn run_oracle(
    signal: &[f64],
    sol: &LmmseSolution,
    range: ModuloRange,
    dither: &mut DitherSource,
) -> Result<Vec<TraceRecord>> {
    let p = sol.h_opt.len();
    let alpha = sol.alpha;
    let m = range.delta() / alpha;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(p + 1);
    let mut out = Vec::with_capacity(signal.len());
    for (i, &x) in signal.iter().enumerate() {
        let folded = fold_quantize(x, alpha, range, dither)?;
        let mut rec = TraceRecord {
            n: i as u64 + 1,
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
        if window.len() < p {
            rec.v_hat = center(folded.y, range.delta());
            rec.flag_reinit = 1;
        } else {
            let prediction = sol.predict(window.make_contiguous());
            rec.e_hat = unfold_residual(folded.y, prediction, range);
            rec.v_hat_p = prediction;
            rec.v_hat = prediction + rec.e_hat;
        }
        window.push_front(rec.v_hat);
        window.truncate(p);
        out.push(rec);
    }
    Ok(out)
}

/// Counts overload events `|v_n - prediction| >= 2^R / 2` when every
/// prediction is formed from the true past values.
///
/// Returns the count and the number of predicted samples.
pub fn count_overloads(
    signal: &[f64],
    sol: &LmmseSolution,
    range: ModuloRange,
    dither: &mut DitherSource,
) -> Result<(u64, u64)> {
    let p = sol.h_opt.len();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(p + 1);
    let (mut overloads, mut total) = (0u64, 0u64);
    for &x in signal {
        let folded = fold_quantize(x, sol.alpha, range, dither)?;
        if window.len() == p {
            total += 1;
            if (folded.v - sol.predict(window.make_contiguous())).abs() >= range.half() {
                overloads += 1;
            }
        }
        window.push_front(folded.v);
        window.truncate(p);
    }
    Ok((overloads, total))
}

/// `2 exp{-(3/2) 2^{2(R - log2(12 sigma^2)/2)}}`, clamped to `[0, 1]`.
pub fn overload_bound(bits: u32, sigma2_lmmse: f64) -> f64 {
    // 2^{2R} / (12 sigma^2), computed in the log domain
    let exponent = 2.0 * bits as f64 - (12.0 * sigma2_lmmse).log2();
    (2.0 * (-1.5 * exponent.exp2()).exp()).clamp(0.0, 1.0)
}

/// Conditional MSE bound `1 / (12 alpha^2 (1 - p_overload))`.
pub fn distortion_bound(alpha: f64, p_overload: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_overload) {
        return Err(Error::Domain(format!(
            "overload probability must lie in [0, 1), got {p_overload}"
        )));
    }
    Ok(1.0 / (12.0 * alpha * alpha * (1.0 - p_overload)))
}

/// Gaussian upper tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
