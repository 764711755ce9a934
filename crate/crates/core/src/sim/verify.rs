use serde::Serialize;

use super::{lyapunov_value, rk4_step, Rk4Workspace, TrajectoryLog};
use crate::error::{Error, Result};
use crate::math::{sigma, worst_case_solution, BoundaryLayer, OvershootBound, TheoremBounds};

/// Relative tolerance on the ultimate level `b` and the overshoot bound `δ`.
pub const THEOREM_TOLERANCE: f64 = 0.05;

/// Absolute floor of the Lyapunov slack.
const SLACK_FLOOR: f64 = 1e-9;
/// Multiplier on the per-row truncation estimate.
const SLACK_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovRow {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    /// Central-difference estimate of `V̇`.
    pub v_dot: f64,
    /// `−k|s|Ψ(s)`.
    pub bound: f64,
    pub slack: f64,
    /// True when `|s| ≥ η`, where the decrease condition applies.
    pub checked: bool,
    pub satisfied: bool,
    /// `|s| − η` changes sign within one sample of this row.
    pub near_crossing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovTrace {
    pub rows: Vec<LyapunovRow>,
}

impl LyapunovTrace {
    pub fn checked(&self) -> usize {
        self.rows.iter().filter(|r| r.checked).count()
    }

    pub fn violations(&self) -> impl Iterator<Item = &LyapunovRow> {
        self.rows.iter().filter(|r| r.checked && !r.satisfied)
    }

    /// Fraction of checked rows that satisfy the decrease condition.
    pub fn satisfied_fraction(&self) -> f64 {
        let checked = self.checked();
        if checked == 0 {
            return 1.0;
        }
        1.0 - self.violations().count() as f64 / checked as f64
    }

    /// Violations that are not next to a band-boundary crossing.
    pub fn unexplained_violations(&self) -> usize {
        self.violations().filter(|r| !r.near_crossing).count()
    }
}

/// Evaluates `V` per row and compares its discrete derivative with
/// `−k|s|Ψ(s)` on rows outside the band `|s| < η`.
///
/// The slack is ten times half the disagreement between the forward and
/// backward differences at the row, plus `1e-9`.
pub fn lyapunov_trace(
    log: &TrajectoryLog,
    mu: f64,
    rho: f64,
    phi: f64,
    k: f64,
) -> Result<LyapunovTrace> {
    let n = log.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "Lyapunov trace needs at least 3 rows, got {n}"
        )));
    }
    let layer = BoundaryLayer::new(phi)?;
    let eta = layer.eta();
    let v: Vec<f64> = (0..n)
        .map(|i| lyapunov_value(&layer, log.s[i], log.gain[i], mu, rho))
        .collect();
    let side = |i: usize| log.s[i].abs() >= eta;

    let rows = (1..n - 1)
        .map(|i| {
            let s = log.s[i];
            let fwd = (v[i + 1] - v[i]) / (log.t[i + 1] - log.t[i]);
            let bwd = (v[i] - v[i - 1]) / (log.t[i] - log.t[i - 1]);
            let v_dot = (v[i + 1] - v[i - 1]) / (log.t[i + 1] - log.t[i - 1]);
            let slack = SLACK_FACTOR * 0.5 * (fwd - bwd).abs() + SLACK_FLOOR;
            let bound = -k * s.abs() * layer.psi(s);
            let checked = side(i);
            LyapunovRow {
                t: log.t[i],
                s,
                v: v[i],
                v_dot,
                bound,
                slack,
                checked,
                satisfied: !checked || v_dot <= bound + slack,
                near_crossing: side(i - 1) != checked || side(i + 1) != checked,
            }
        })
        .collect();
    Ok(LyapunovTrace { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Theorem2Report {
    NotApplicable {
        reason: String,
    },
    Checked {
        sigma: f64,
        b: f64,
        v0p: f64,
        /// `T`, after which `V′ ≤ b` must hold.
        reach_time: f64,
        max_vprime_after: f64,
        satisfied: bool,
        first_violation: Option<f64>,
    },
}

impl Theorem2Report {
    pub fn satisfied(&self) -> Option<bool> {
        match self {
            Theorem2Report::NotApplicable { .. } => None,
            Theorem2Report::Checked { satisfied, .. } => Some(*satisfied),
        }
    }
}

/// Checks `|s| + μ̂/k ≤ b·(1 + tol)` for every logged `t ≥ T`.
///
/// `b` defaults to the midpoint of `(σ/k, V′₀)`. A `b` outside
/// `(σ/k, V′₀]` is a caller error.
pub fn verify_theorem2(
    log: &TrajectoryLog,
    k: f64,
    rho: f64,
    mu: f64,
    b: Option<f64>,
) -> Result<Theorem2Report> {
    if log.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    if k == 0.0 {
        return Ok(Theorem2Report::NotApplicable {
            reason: "k = 0 leaves sigma undefined".into(),
        });
    }
    let sg = sigma(mu, k, rho)?;
    let vprime = |i: usize| log.s[i].abs() + log.gain[i] / k;
    let v0p = vprime(0);
    if !(v0p > sg / k) {
        return Ok(Theorem2Report::NotApplicable {
            reason: format!("initial V' = {v0p} does not exceed sigma/k = {}", sg / k),
        });
    }
    let bounds = TheoremBounds::compute(v0p, k, rho, mu, 1.0, b)?;
    let reach = bounds.reach.expect("reach bound exists when V'0 > sigma/k");
    let limit = reach.b * (1.0 + THEOREM_TOLERANCE);

    let mut max_after = f64::NEG_INFINITY;
    let mut first_violation = None;
    for i in log.t.partition_point(|&t| t < reach.time)..log.len() {
        let vp = vprime(i);
        max_after = max_after.max(vp);
        if vp > limit && first_violation.is_none() {
            first_violation = Some(log.t[i]);
        }
    }
    Ok(Theorem2Report::Checked {
        sigma: sg,
        b: reach.b,
        v0p,
        reach_time: reach.time,
        max_vprime_after: max_after,
        satisfied: first_violation.is_none(),
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Theorem3Report {
    NotApplicable {
        reason: String,
    },
    Infeasible,
    Checked {
        /// First time `|s| < η`.
        entry_time: f64,
        m: f64,
        delta: f64,
        max_excursion: f64,
        satisfied: bool,
    },
}

impl Theorem3Report {
    pub fn satisfied(&self) -> Option<bool> {
        match self {
            Theorem3Report::Checked { satisfied, .. } => Some(*satisfied),
            _ => None,
        }
    }
}

/// Checks `max |s(t)| < δ·(1 + tol)` after the first entry into `|s| < η`.
pub fn verify_theorem3(log: &TrajectoryLog, bounds: &TheoremBounds) -> Theorem3Report {
    let OvershootBound::Feasible { m, delta } = bounds.overshoot else {
        return Theorem3Report::Infeasible;
    };
    let Some(entry) = log.s.iter().position(|s| s.abs() < bounds.eta) else {
        return Theorem3Report::NotApplicable {
            reason: format!(
                "|s| never drops below eta = {} within the horizon",
                bounds.eta
            ),
        };
    };
    let max_excursion = log.s[entry..].iter().fold(0.0f64, |a, s| a.max(s.abs()));
    Theorem3Report::Checked {
        entry_time: log.t[entry],
        m,
        delta,
        max_excursion,
        satisfied: max_excursion < delta * (1.0 + THEOREM_TOLERANCE),
    }
}

/// Setup of the affine worst-case system `ṡ = μ − μ̂`, `μ̂̇ = m(s − anchor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub mu: f64,
    pub mu_hat0: f64,
    pub s0: f64,
    pub m: f64,
    pub eta: f64,
    /// Affine offset of the gain law. The closed form is exact for `anchor = −η`.
    pub anchor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSample {
    pub t: f64,
    pub s: f64,
    pub mu_hat: f64,
    /// `worst_case_solution` at the same time.
    pub closed_form: f64,
}

/// Integrates the worst-case system with RK4 and pairs each sample with
/// the closed-form response.
pub fn worst_case_oscillator(wc: &WorstCase, dt: f64, t_end: f64) -> Result<Vec<OscillatorSample>> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::param(
            "dt",
            format!("need dt > 0 and t_end > 0, got {dt}, {t_end}"),
        ));
    }
    let n = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut y = [wc.s0, wc.mu_hat0];
    let mut ws = Rk4Workspace::new(2);
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * dt;
        out.push(OscillatorSample {
            t,
            s: y[0],
            mu_hat: y[1],
            closed_form: worst_case_solution(t, wc.s0, wc.mu, wc.mu_hat0, wc.m, wc.eta)?,
        });
        if i < n {
            rk4_step(&mut y, t, dt, &mut ws, |_, y, dy| {
                dy[0] = wc.mu - y[1];
                dy[1] = wc.m * (y[0] - wc.anchor);
                Ok(())
            })?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::overshoot_bound;
    use crate::sim::LogRow;
    use std::f64::consts::PI;

    fn log_from(ss: &[f64], gains: &[f64], dt: f64) -> TrajectoryLog {
        let mut log = TrajectoryLog::with_capacity(1, dt, ss.len());
        for (i, (&s, &g)) in ss.iter().zip(gains).enumerate() {
            log.push(
                &[s],
                LogRow {
                    t: i as f64 * dt,
                    s,
                    u: 0.0,
                    gain: g,
                    gain_rate: 0.0,
                    delta_f: 0.0,
                    v: 0.0,
                    vprime: 0.0,
                },
            );
        }
        log
    }

    #[test]
    fn lyapunov_bound_vanishes_on_band_edge() {
        let eta = BoundaryLayer::new(0.01).unwrap().eta();
        let log = log_from(&[eta; 3], &[0.5; 3], 0.01);
        let tr = lyapunov_trace(&log, 0.5, 1.0, 0.01, 2.0).unwrap();
        assert_eq!(tr.rows[0].bound, 0.0);
        assert!(tr.rows[0].checked);
        assert!(
            lyapunov_trace(&log_from(&[0.0; 2], &[0.0; 2], 0.01), 0.5, 1.0, 0.01, 2.0).is_err()
        );
    }

    #[test]
    fn lyapunov_flags_increase_outside_band() {
        let ss: Vec<f64> = (0..10).map(|i| 0.1 + 0.01 * i as f64).collect();
        let log = log_from(&ss, &[0.5; 10], 0.01);
        let tr = lyapunov_trace(&log, 0.5, 1.0, 0.01, 2.0).unwrap();
        assert_eq!(tr.violations().count(), 8);
        assert_eq!(tr.satisfied_fraction(), 0.0);
    }

    #[test]
    fn theorem2_trivial_and_guarded() {
        let log = log_from(&[1.0, 0.5, 0.3], &[0.001, 0.0015, 0.002], 0.1);
        let v0p = 1.0 + 0.001 / 2.0;
        match verify_theorem2(&log, 2.0, 1.0, 0.5, Some(v0p)).unwrap() {
            Theorem2Report::Checked {
                reach_time,
                satisfied,
                ..
            } => {
                assert_eq!(reach_time, 0.0);
                assert!(satisfied);
            }
            r => panic!("{r:?}"),
        }
        assert!(matches!(
            verify_theorem2(&log, 0.0, 1.0, 0.5, None).unwrap(),
            Theorem2Report::NotApplicable { .. }
        ));
        // σ/k = (0.5 + 1/(0.2·1))/0.2 ≫ V′₀
        assert!(matches!(
            verify_theorem2(&log, 0.2, 1.0, 0.5, None).unwrap(),
            Theorem2Report::NotApplicable { .. }
        ));
        assert!(verify_theorem2(&log, 2.0, 1.0, 0.5, Some(2.0)).is_err());
    }

    #[test]
    fn theorem3_measures_excursion_after_entry() {
        let phi = 0.01;
        let bounds = TheoremBounds::compute(1.0, 2.0, 1.0, 0.5, phi, None).unwrap();
        let eta = bounds.eta;
        let log = log_from(&[1.0, 0.5, 0.5 * eta, 2.0 * eta, -eta], &[0.0; 5], 0.1);
        match verify_theorem3(&log, &bounds) {
            Theorem3Report::Checked {
                entry_time,
                max_excursion,
                satisfied,
                ..
            } => {
                assert_eq!(entry_time, 0.2);
                assert_eq!(max_excursion, 2.0 * eta);
                assert!(satisfied);
            }
            r => panic!("{r:?}"),
        }
        let never = log_from(&[1.0; 5], &[0.0; 5], 0.1);
        assert!(matches!(
            verify_theorem3(&never, &bounds),
            Theorem3Report::NotApplicable { .. }
        ));
    }

    #[test]
    fn zero_disturbance_stays_on_eta_scale() {
        let bounds = TheoremBounds::compute(1.0, 2.0, 1.0, 0.0, 0.01, None).unwrap();
        let OvershootBound::Feasible { delta, .. } = overshoot_bound(0.0, 1.0, 0.01).unwrap()
        else {
            panic!()
        };
        assert!((delta - bounds.eta).abs() < 1e-15);
    }

    #[test]
    fn oscillator_matches_closed_form_for_its_own_anchor() {
        let eta = BoundaryLayer::new(0.01).unwrap().eta();
        let m = 100.0;
        let wc = WorstCase {
            mu: 0.5,
            mu_hat0: 0.0,
            s0: eta,
            m,
            eta,
            anchor: -eta,
        };
        let period = 2.0 * PI / m.sqrt();
        let run = worst_case_oscillator(&wc, 1e-4, period).unwrap();
        let scale = run.iter().fold(0.0f64, |a, r| a.max(r.closed_form.abs()));
        let err = run
            .iter()
            .fold(0.0f64, |a, r| a.max((r.s - r.closed_form).abs()));
        assert!(err / scale < 1e-6, "{}", err / scale);
    }

    #[test]
    fn oscillator_with_stated_anchor_peaks_at_eta_plus_amplitude() {
        let eta = BoundaryLayer::new(0.01).unwrap().eta();
        let (mu, m) = (0.5, 100.0);
        let wc = WorstCase {
            mu,
            mu_hat0: 0.0,
            s0: eta,
            m,
            eta,
            anchor: eta,
        };
        let run = worst_case_oscillator(&wc, 1e-4, 2.0 * PI / m.sqrt()).unwrap();
        let peak = run.iter().fold(0.0f64, |a, r| a.max(r.s));
        assert!((peak - (eta + mu / m.sqrt())).abs() < 1e-6);
    }
}
