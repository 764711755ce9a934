use serde::Serialize;

use super::TrajectoryLog;
use crate::error::{Error, Result};
use crate::math::BoundaryLayer;

/// Steady-state statistics use the final quarter of the horizon.
pub const STEADY_WINDOW_FRACTION: f64 = 0.25;
/// `|s| ≤ 2η` must hold this long to count as reached.
pub const REACH_HOLD_SECONDS: f64 = 0.5;

/// Summary of one run. `theorem2_satisfied` is filled in by callers that
/// know the theorem parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    /// First time `|s| ≤ 2η` starts holding for [`REACH_HOLD_SECONDS`].
    pub reach_time_to_band: Option<f64>,
    pub steady_band_mean: f64,
    pub steady_band_max: f64,
    /// Total variation of `u` per second over the steady window.
    pub chattering_index: f64,
    pub max_gain: f64,
    pub theorem2_satisfied: Option<bool>,
    /// Largest `|s|` after the first entry into `|s| < η`.
    pub overshoot_into_sprime: Option<f64>,
}

pub fn compute_metrics(log: &TrajectoryLog, phi: f64) -> Result<RunMetrics> {
    let eta = BoundaryLayer::new(phi)?.eta();
    let n = log.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "metrics need at least 2 rows, got {n}"
        )));
    }
    let t_end = log.t_end();
    let start = log
        .t
        .partition_point(|&t| t < (1.0 - STEADY_WINDOW_FRACTION) * t_end);
    if n - start < 2 {
        return Err(Error::InsufficientData(format!(
            "steady window [{}, {t_end}] holds fewer than 2 samples",
            (1.0 - STEADY_WINDOW_FRACTION) * t_end
        )));
    }

    let window = start..n;
    let duration = log.t[n - 1] - log.t[start];
    let band = &log.s[window.clone()];
    let steady_band_max = band.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let steady_band_mean = band.iter().map(|s| s.abs()).sum::<f64>() / band.len() as f64;
    let variation: f64 = log.u[window].windows(2).map(|w| (w[1] - w[0]).abs()).sum();

    Ok(RunMetrics {
        reach_time_to_band: reach_time(log, 2.0 * eta),
        steady_band_mean,
        steady_band_max,
        chattering_index: variation / duration,
        max_gain: log.gain.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        theorem2_satisfied: None,
        overshoot_into_sprime: log
            .s
            .iter()
            .position(|s| s.abs() < eta)
            .map(|i| log.s[i..].iter().fold(0.0f64, |m, s| m.max(s.abs()))),
    })
}

fn reach_time(log: &TrajectoryLog, band: f64) -> Option<f64> {
    let mut run_start: Option<usize> = None;
    for (i, s) in log.s.iter().enumerate() {
        if s.abs() <= band {
            let j = *run_start.get_or_insert(i);
            if log.t[i] - log.t[j] >= REACH_HOLD_SECONDS - 1e-9 {
                return Some(log.t[j]);
            }
        } else {
            run_start = None;
        }
    }
    None
}
