//! Figures of merit for a decoded trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::TraceRecord;

/// An unfolded sample counts as wrong when it misses `v` by more than this.
pub const UNFOLD_TOLERANCE: f64 = 1e-6;

/// Fraction of the run averaged for the tail statistics.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_samples: usize,
    /// Samples with `|v_hat - v| > 1e-6`, over all samples.
    pub empirical_error_prob: f64,
    pub n_unfold_errors: usize,
    /// Mean of `(v_hat - v)^2`.
    pub mean_sq_v_error: f64,
    /// Mean of `(x_hat - x)^2`.
    pub mean_sq_x_error: f64,
    /// Mean effective range over the final fifth of the run.
    #[serde(rename = "tail_mean_M")]
    pub tail_mean_m: f64,
    /// Mean effective range from the steady-state latch to the next error or the end.
    #[serde(rename = "steady_mean_M")]
    pub steady_mean_m: Option<f64>,
    pub n_error_events: usize,
    pub n_resolution_ups: usize,
    pub n_resolution_downs: usize,
    /// First sample with the steady-state flag raised.
    pub steady_state_index: Option<u64>,
    /// RMS of `e_hat / alpha` over the prediction steps of the final epoch,
    /// the long-term residual estimate the decoder holds at the end of the run.
    pub sigma_bar: Option<f64>,
    /// `2 kappa sigma_bar`.
    #[serde(rename = "predicted_M_inf")]
    pub predicted_m_inf: Option<f64>,
}

/// Summarizes a trace against the true unfolded values `truth_v`.
pub fn compute_metrics(trace: &[TraceRecord], truth_v: &[f64], kappa: f64) -> Result<RunSummary> {
    if trace.is_empty() {
        return Err(Error::Domain("cannot summarize an empty trace".into()));
    }
    if trace.len() != truth_v.len() {
        return Err(Error::Domain(format!(
            "trace has {} rows but ground truth has {}",
            trace.len(),
            truth_v.len()
        )));
    }
    let n = trace.len();
    let nf = n as f64;
    let dv: Vec<f64> = trace
        .iter()
        .zip(truth_v)
        .map(|(r, v)| r.v_hat - v)
        .collect();
    let n_unfold_errors = dv.iter().filter(|d| d.abs() > UNFOLD_TOLERANCE).count();
    let mean_sq_v_error = dv.iter().map(|d| d * d).sum::<f64>() / nf;
    let mean_sq_x_error = trace.iter().map(|r| (r.x_hat() - r.x).powi(2)).sum::<f64>() / nf;

    let tail_start = n - ((n as f64 * TAIL_FRACTION).ceil() as usize).clamp(1, n);
    let tail = &trace[tail_start..];
    let tail_mean_m = mean(tail.iter().map(|r| r.m));

    let steady_pos = trace.iter().position(|r| r.flag_steady == 1);
    let steady_span = steady_pos.map(|s| {
        let end = trace[s..]
            .iter()
            .position(|r| r.flag_error == 1)
            .map_or(n, |k| s + k);
        &trace[s..end]
    });
    let steady_mean_m = steady_span.map(|span| mean(span.iter().map(|r| r.m)));
    let epoch_start = trace
        .iter()
        .rposition(|r| !r.is_prediction_step())
        .map_or(0, |k| k + 1);
    let normalized: Vec<f64> = trace[epoch_start..]
        .iter()
        .filter(|r| r.flag_error == 0)
        .map(|r| r.e_hat / r.alpha)
        .collect();
    let sigma_bar = (!normalized.is_empty()).then(|| mean(normalized.iter().map(|e| e * e)).sqrt());

    let count = |f: fn(&TraceRecord) -> u8| trace.iter().filter(|r| f(r) == 1).count();
    Ok(RunSummary {
        n_samples: n,
        empirical_error_prob: n_unfold_errors as f64 / nf,
        n_unfold_errors,
        mean_sq_v_error,
        mean_sq_x_error,
        tail_mean_m,
        steady_mean_m,
        n_error_events: count(|r| r.flag_error),
        n_resolution_ups: count(|r| r.flag_res_up),
        n_resolution_downs: count(|r| r.flag_res_down),
        steady_state_index: steady_pos.map(|s| trace[s].n),
        sigma_bar,
        predicted_m_inf: sigma_bar.map(|s| 2.0 * kappa * s),
    })
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    s / c as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64, v: f64, v_hat: f64, m: f64) -> TraceRecord {
        TraceRecord {
            n,
            x: 0.0,
            v,
            y: 0.0,
            v_hat,
            v_hat_p: v_hat,
            e_hat: 0.1,
            alpha: 1024.0 / m,
            m,
            flag_error: 0,
            flag_res_up: 0,
            flag_res_down: 0,
            flag_steady: 0,
            flag_reinit: 0,
        }
    }

    #[test]
    fn counts_and_means() {
        let mut t: Vec<TraceRecord> = (1..=10).map(|n| row(n, 1.0, 1.0, 10.0)).collect();
        t[3].v_hat = 1.0 + 1024.0;
        t[3].flag_error = 1;
        t[8].flag_steady = 1;
        t[9].flag_steady = 1;
        t[8].m = 4.0;
        t[9].m = 6.0;
        let s = compute_metrics(&t, &vec![1.0; 10], 4.5).unwrap();
        assert_eq!(s.n_unfold_errors, 1);
        assert!((s.empirical_error_prob - 0.1).abs() < 1e-15);
        assert!((s.mean_sq_v_error - 1024.0 * 1024.0 / 10.0).abs() < 1e-9);
        assert_eq!(s.n_error_events, 1);
        assert_eq!(s.steady_state_index, Some(9));
        assert_eq!(s.tail_mean_m, 5.0);
        assert_eq!(s.steady_mean_m, Some(5.0));
    }

    #[test]
    fn sub_tolerance_deviation_is_not_an_error() {
        let t: Vec<TraceRecord> = (1..=5).map(|n| row(n, 1.0, 1.0 + 5e-7, 10.0)).collect();
        let s = compute_metrics(&t, &[1.0; 5], 4.5).unwrap();
        assert_eq!(s.n_unfold_errors, 0);
        assert_eq!(s.steady_state_index, None);
    }

    #[test]
    fn empty_or_mismatched() {
        assert!(compute_metrics(&[], &[], 4.5).is_err());
        let t = vec![row(1, 1.0, 1.0, 10.0)];
        assert!(matches!(
            compute_metrics(&t, &[1.0, 2.0], 4.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn one_wrong_in_thousand() {
        let mut t: Vec<TraceRecord> = (1..=1000).map(|n| row(n, 0.0, 0.0, 7.0)).collect();
        t[500].v_hat = 16.0;
        let s = compute_metrics(&t, &vec![0.0; 1000], 4.5).unwrap();
        assert!((s.empirical_error_prob - 1e-3).abs() < 1e-15);
        assert_eq!(s.tail_mean_m, 7.0);
    }
}
