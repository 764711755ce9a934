//! Fixed-step closed-loop simulation with zero-order-hold control.
//!
//! Each sample evaluates the surface, steps the controller once and holds
//! `u` while the plant advances by RK4 substeps.

mod integrator;
mod log;
mod metrics;
mod verify;

use serde::{Deserialize, Serialize};

pub use integrator::{rk4_step, Rk4Workspace};
pub use log::{LogRow, TrajectoryLog, CSV_SIGNIFICANT_DIGITS};
pub use metrics::{compute_metrics, RunMetrics, REACH_HOLD_SECONDS, STEADY_WINDOW_FRACTION};
pub use verify::{
    lyapunov_trace, verify_theorem2, verify_theorem3, worst_case_oscillator, LyapunovRow,
    LyapunovTrace, OscillatorSample, Theorem2Report, Theorem3Report, WorstCase, THEOREM_TOLERANCE,
};

use crate::controllers::{Controller, ControllerSpec};
use crate::error::{Error, Result};
use crate::math::BoundaryLayer;
use crate::plants::{eval_uncertainty, Plant, UncertaintyKind, UncertaintySignal};

/// Minimum samples per crossing of the band `|s| < η`.
pub const SAMPLES_PER_CROSSING: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    /// Controller sample period.
    pub dt: f64,
    /// RK4 substeps per sample.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    pub t_end: f64,
}

fn default_substeps() -> usize {
    1
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            substeps: 1,
            t_end: 30.0,
        }
    }
}

impl IntegrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(
                "dt",
                format!("must be a finite value > 0, got {}", self.dt),
            ));
        }
        if self.substeps == 0 {
            return Err(Error::param("substeps", "must be at least 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(
                "t_end",
                format!("must be a finite value > 0, got {}", self.t_end),
            ));
        }
        Ok(())
    }

    /// Index of the last sample, `floor(t_end/dt)`, tolerant of the
    /// rounding in quotients such as `30 / 1e-4`.
    pub fn last_index(&self) -> usize {
        (self.t_end / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    pub fn rows(&self) -> usize {
        self.last_index() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub plant: Plant,
    pub controller: ControllerSpec,
    pub uncertainty: UncertaintySignal,
    pub integration: IntegrationSettings,
    pub x0: Vec<f64>,
}

impl Scenario {
    /// Cheap structural checks that every run repeats.
    fn check_structure(&self) -> Result<()> {
        self.integration.validate()?;
        self.plant.validate()?;
        self.plant.check_uncertainty(&self.uncertainty)?;
        if self.x0.len() != self.plant.dim() {
            return Err(Error::param(
                "x0",
                format!(
                    "{} plant has {} states, got {}",
                    self.plant.name(),
                    self.plant.dim(),
                    self.x0.len()
                ),
            ));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("x0", "initial state must be finite"));
        }
        Ok(())
    }

    /// Full load-time validation including the dense uncertainty bound
    /// check. Returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.check_structure()?;
        let mut warnings = self.controller.validate()?;
        self.uncertainty.validate()?;
        self.uncertainty.check_bound(self.integration.t_end)?;
        warnings.extend(self.sampling_warning());
        warnings.extend(self.alignment_warning());
        Ok(warnings)
    }

    /// Estimated samples per crossing of the band `|s| < η`.
    ///
    /// Inside the band `|ṡ| ≤ μ + kη + μ̂`, and `μ̂` settles near `μ`, so
    /// the crossing speed is taken as `2μ + kη`.
    pub fn samples_per_crossing(&self) -> Option<f64> {
        let ControllerSpec::NewAdaptive(p) = &self.controller else {
            return None;
        };
        let eta = BoundaryLayer::new(p.phi).ok()?.eta();
        let speed = 2.0 * self.uncertainty.true_bound_mu + p.k * eta;
        if speed <= 0.0 {
            return None;
        }
        Some(2.0 * eta / (speed * self.integration.dt))
    }

    fn sampling_warning(&self) -> Option<String> {
        let n = self.samples_per_crossing()?;
        (n < SAMPLES_PER_CROSSING).then(|| {
            format!(
                "dt = {} gives about {n:.2} samples per crossing of |s| < eta (want >= {SAMPLES_PER_CROSSING}); reduce dt",
                self.integration.dt
            )
        })
    }

    fn alignment_warning(&self) -> Option<String> {
        let UncertaintyKind::SquareSequence(sq) = &self.uncertainty.kind else {
            return None;
        };
        let dt = self.integration.dt;
        let off = sq
            .switch_times(self.integration.t_end)
            .into_iter()
            .find(|t| ((t / dt) - (t / dt).round()).abs() > 1e-6)?;
        Some(format!(
            "square-wave switch at t = {off} is not on the sample grid (dt = {dt}); its effect is smeared over one step"
        ))
    }
}

/// `V = sgn(s)·s_Δ + ½ρ(μ − μ̂)²`.
pub fn lyapunov_value(layer: &BoundaryLayer, s: f64, mu_hat: f64, mu: f64, rho: f64) -> f64 {
    let sign = if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    };
    sign * layer.delta_surface(s) + 0.5 * rho * (mu - mu_hat).powi(2)
}

/// `V′ = |s| + μ̂/k`; 0 when `k = 0`.
pub fn reach_functional(s: f64, mu_hat: f64, k: f64) -> f64 {
    if k > 0.0 {
        s.abs() + mu_hat / k
    } else {
        0.0
    }
}

/// Runs the closed loop from `x0` over `[0, t_end]`.
pub fn run_scenario(scenario: &Scenario) -> Result<TrajectoryLog> {
    scenario.check_structure()?;
    scenario.controller.validate()?;

    let settings = scenario.integration;
    let plant = scenario.plant;
    let unc = &scenario.uncertainty;
    let mu = unc.true_bound_mu;
    let dt = settings.dt;
    let h = dt / settings.substeps as f64;
    let last = settings.last_index();
    // piecewise-constant disturbances are read at the start of each substep
    // so a switch on a grid point never leaks into the preceding step
    let hold_disturbance = matches!(unc.kind, UncertaintyKind::SquareSequence(_));
    let diagnostics = match scenario.controller {
        ControllerSpec::NewAdaptive(p) => Some((p.layer()?, p.rho, p.k)),
        _ => None,
    };

    let mut controller: Controller = scenario.controller.instantiate();
    let mut x = scenario.x0.clone();
    let mut ws = Rk4Workspace::new(x.len());
    let mut log = TrajectoryLog::with_capacity(x.len(), dt, last + 1);

    for i in 0..=last {
        let t = i as f64 * dt;
        let ev = plant.surface(&x, t);
        if ev.g == 0.0 {
            return Err(Error::Controllability { t: Some(t) });
        }
        let cs = controller.step(ev.s, ev.h, ev.g, dt).map_err(|e| match e {
            Error::Controllability { .. } => Error::Controllability { t: Some(t) },
            Error::Domain(d) => Error::BlowUp { t, detail: d },
            other => other,
        })?;
        let (v, vprime) = match diagnostics {
            Some((layer, rho, k)) => (
                lyapunov_value(&layer, ev.s, cs.gain_snapshot, mu, rho),
                reach_functional(ev.s, cs.gain_snapshot, k),
            ),
            None => (0.0, 0.0),
        };
        log.push(
            &x,
            LogRow {
                t,
                s: ev.s,
                u: cs.u,
                gain: cs.gain_snapshot,
                gain_rate: cs.gain_rate,
                delta_f: eval_uncertainty(unc, &x, t)?,
                v,
                vprime,
            },
        );
        if i == last {
            break;
        }

        for j in 0..settings.substeps {
            let t0 = t + j as f64 * h;
            rk4_step(&mut x, t0, h, &mut ws, |ts, y, dy| {
                let tu = if hold_disturbance { t0 } else { ts };
                plant.deriv(y, tu, cs.u, unc, dy)
            })?;
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                t: (i + 1) as f64 * dt,
                detail: format!("state x{bad} became {}", x[bad]),
            });
        }
    }
    Ok(log)
}
