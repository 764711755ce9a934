//! Discrete-time sliding-mode controllers.
//!
//! Every controller is stepped once per sample with the current sliding
//! variable. The returned control is computed from the gain *before* the
//! adaptive update, and is held constant until the next sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{sat, sgn, BoundaryLayer};

/// One controller output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub u: f64,
    /// Current switching gain (K or μ̂).
    pub gain_snapshot: f64,
    /// Current gain derivative (K̇ or μ̂̇).
    pub gain_rate: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "dt",
            format!("sample period must be > 0, got {dt}"),
        ))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be a finite value > 0, got {v}"),
        ))
    }
}

fn finite(sample: ControlSample) -> Result<ControlSample> {
    if sample.u.is_finite() && sample.gain_snapshot.is_finite() && sample.gain_rate.is_finite() {
        Ok(sample)
    } else {
        Err(Error::Domain(format!(
            "non-finite controller output {sample:?}"
        )))
    }
}

/// `u = −K·sgn(s)`.
pub fn classical_smc_step(s: f64, gain: f64) -> Result<ControlSample> {
    check_positive("gain", gain)?;
    finite(ControlSample {
        u: -gain * f64::from(sgn(s)?),
        gain_snapshot: gain,
        gain_rate: 0.0,
    })
}

/// `u = −K·sat(s/φ)`.
pub fn boundary_layer_step(s: f64, gain: f64, phi: f64) -> Result<ControlSample> {
    check_positive("gain", gain)?;
    finite(ControlSample {
        u: -gain * sat(s, phi)?,
        gain_snapshot: gain,
        gain_rate: 0.0,
    })
}

/// Equivalent-control gain adaptation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtkinParams {
    /// Filter time constant τ.
    pub tau: f64,
    pub alpha: f64,
    pub nu: f64,
    /// Barrier magnitude M.
    pub big_m: f64,
    /// Upper gain level K⁺.
    pub k_plus: f64,
    /// Minimal gain ε.
    pub epsilon: f64,
    pub k0: f64,
}

impl UtkinParams {
    /// Fills the gaps left by the inequality-only constraints:
    /// α = 0.95, τ = 10·dt, ε = 0.01, ν = 1, K⁺ = 10μ, M = 2νK⁺, K₀ = ε.
    pub fn with_defaults(dt: f64, mu: f64) -> Self {
        let nu = 1.0;
        let k_plus = 10.0 * mu;
        let epsilon = 0.01;
        Self {
            tau: 10.0 * dt,
            alpha: 0.95,
            nu,
            big_m: 2.0 * nu * k_plus,
            k_plus,
            epsilon,
            k0: epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("tau", self.tau)?;
        check_positive("nu", self.nu)?;
        check_positive("big_m", self.big_m)?;
        check_positive("k_plus", self.k_plus)?;
        check_positive("epsilon", self.epsilon)?;
        check_positive("k0", self.k0)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if !(self.big_m > self.nu * self.k_plus) {
            return Err(Error::param(
                "big_m",
                format!(
                    "need M > ν·K⁺ = {}, got {}",
                    self.nu * self.k_plus,
                    self.big_m
                ),
            ));
        }
        if !(self.epsilon < self.k_plus) {
            return Err(Error::param(
                "epsilon",
                format!("need ε < K⁺ = {}, got {}", self.k_plus, self.epsilon),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtkinState {
    /// Low-pass filtered switching signal.
    pub z: f64,
    pub gain: f64,
}

impl UtkinState {
    pub fn new(params: &UtkinParams) -> Self {
        Self {
            z: 0.0,
            gain: params.k0,
        }
    }
}

/// `[x]₊` as an indicator: 1 when `x ≥ 0`.
fn indicator(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Filter `τż + z = sgn(s)` (implicit Euler), then
/// `K̇ = νK·sgn(|z| − α) − M[K − K⁺]₊ + M[ε − K]₊` (explicit Euler).
pub fn utkin_step(
    s: f64,
    dt: f64,
    state: &mut UtkinState,
    params: &UtkinParams,
) -> Result<ControlSample> {
    check_dt(dt)?;
    check_positive("gain", state.gain)?;
    let sw = f64::from(sgn(s)?);
    let gain = state.gain;
    let u = -gain * sw;

    let r = dt / params.tau;
    state.z = (state.z + r * sw) / (1.0 + r);
    let delta = state.z.abs() - params.alpha;
    let rate = params.nu * gain * f64::from(sgn(delta)?)
        - params.big_m * indicator(gain - params.k_plus)
        + params.big_m * indicator(params.epsilon - gain);
    state.gain = gain + dt * rate;

    finite(ControlSample {
        u,
        gain_snapshot: gain,
        gain_rate: rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlestanParams {
    /// Adaptation gain K̄.
    pub k_bar: f64,
    /// Accuracy threshold ε on |s|.
    pub epsilon: f64,
    /// Gain floor κ.
    pub kappa: f64,
    pub k0: f64,
}

impl PlestanParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("k_bar", self.k_bar)?;
        check_positive("epsilon", self.epsilon)?;
        check_positive("kappa", self.kappa)?;
        check_positive("k0", self.k0)?;
        if !(self.k0 > self.kappa) {
            return Err(Error::param(
                "k0",
                format!(
                    "initial gain must exceed κ = {}, got {}",
                    self.kappa, self.k0
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlestanState {
    pub gain: f64,
}

/// `K̇ = K̄|s|·sgn(|s| − ε)` while `K > κ`, else 0; `K` never drops below κ.
pub fn plestan_step(
    s: f64,
    dt: f64,
    state: &mut PlestanState,
    params: &PlestanParams,
) -> Result<ControlSample> {
    check_dt(dt)?;
    let gain = state.gain;
    let u = -gain * f64::from(sgn(s)?);
    let rate = if gain > params.kappa {
        params.k_bar * s.abs() * f64::from(sgn(s.abs() - params.epsilon)?)
    } else {
        0.0
    };
    state.gain = (gain + dt * rate).max(params.kappa);
    finite(ControlSample {
        u,
        gain_snapshot: gain,
        gain_rate: rate,
    })
}

/// Parameters of the boundary-layer adaptive law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewAdaptiveParams {
    pub phi: f64,
    /// Adaptation gain; the learning rate is bounded by 1/ρ.
    pub rho: f64,
    /// Linear feedback gain.
    pub k: f64,
    /// Initial guess of the switching gain.
    pub mu_hat0: f64,
}

impl NewAdaptiveParams {
    /// Checks hard invariants and returns soft tuning warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let layer = BoundaryLayer::new(self.phi)?;
        check_positive("rho", self.rho)?;
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::param(
                "k",
                format!("feedback gain must be >= 0, got {}", self.k),
            ));
        }
        check_positive("mu_hat0", self.mu_hat0)?;
        let mut warnings = Vec::new();
        let k_max = 1.0 / layer.eta();
        if self.k > k_max {
            warnings.push(format!(
                "k = {} exceeds 1/eta = {k_max:.6}; trajectories may be confined inside the band and the gain decays to zero",
                self.k
            ));
        }
        Ok(warnings)
    }

    pub fn layer(&self) -> Result<BoundaryLayer> {
        BoundaryLayer::new(self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewAdaptiveState {
    pub mu_hat: f64,
}

/// `u = −(1/g)[h + ks + μ̂·sgn(s)]` with `μ̂̇ = Ψ(s)/ρ` while `μ̂ ≥ 0`.
///
/// After the Euler step μ̂ is projected onto `[0, ∞)`.
pub fn new_adaptive_step(
    s: f64,
    h: f64,
    g: f64,
    dt: f64,
    state: &mut NewAdaptiveState,
    params: &NewAdaptiveParams,
) -> Result<ControlSample> {
    check_dt(dt)?;
    if g == 0.0 {
        return Err(Error::Controllability { t: None });
    }
    let layer = params.layer()?;
    let mu_hat = state.mu_hat;
    let rate = if mu_hat >= 0.0 {
        layer.psi(s) / params.rho
    } else {
        0.0
    };
    let u = -(h + params.k * s + mu_hat * f64::from(sgn(s)?)) / g;
    state.mu_hat = (mu_hat + dt * rate).max(0.0);
    finite(ControlSample {
        u,
        gain_snapshot: mu_hat,
        gain_rate: rate,
    })
}

/// Controller selection and fixed parameters, before any state exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Classical { gain: f64 },
    BoundaryLayer { gain: f64, phi: f64 },
    Utkin(UtkinParams),
    Plestan(PlestanParams),
    NewAdaptive(NewAdaptiveParams),
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::Classical { .. } => "classical_smc",
            ControllerSpec::BoundaryLayer { .. } => "boundary_layer",
            ControllerSpec::Utkin(_) => "utkin_eq",
            ControllerSpec::Plestan(_) => "plestan",
            ControllerSpec::NewAdaptive(_) => "new_adaptive",
        }
    }

    /// Validates parameters; returns tuning warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        match self {
            ControllerSpec::Classical { gain } => {
                check_positive("gain", *gain)?;
                Ok(vec![])
            }
            ControllerSpec::BoundaryLayer { gain, phi } => {
                check_positive("gain", *gain)?;
                BoundaryLayer::new(*phi)?;
                Ok(vec![])
            }
            ControllerSpec::Utkin(p) => p.validate().map(|_| vec![]),
            ControllerSpec::Plestan(p) => p.validate().map(|_| vec![]),
            ControllerSpec::NewAdaptive(p) => p.validate(),
        }
    }

    pub fn instantiate(&self) -> Controller {
        match *self {
            ControllerSpec::Classical { gain } => Controller::Classical { gain },
            ControllerSpec::BoundaryLayer { gain, phi } => Controller::BoundaryLayer { gain, phi },
            ControllerSpec::Utkin(params) => Controller::Utkin {
                params,
                state: UtkinState::new(&params),
            },
            ControllerSpec::Plestan(params) => Controller::Plestan {
                params,
                state: PlestanState { gain: params.k0 },
            },
            ControllerSpec::NewAdaptive(params) => Controller::NewAdaptive {
                params,
                state: NewAdaptiveState {
                    mu_hat: params.mu_hat0,
                },
            },
        }
    }
}

/// A running controller: parameters plus adaptive state.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Classical {
        gain: f64,
    },
    BoundaryLayer {
        gain: f64,
        phi: f64,
    },
    Utkin {
        params: UtkinParams,
        state: UtkinState,
    },
    Plestan {
        params: PlestanParams,
        state: PlestanState,
    },
    NewAdaptive {
        params: NewAdaptiveParams,
        state: NewAdaptiveState,
    },
}

impl Controller {
    /// Advances one sample. Only the new adaptive law uses the nominal
    /// `h` and `g`; the baselines act on `s` alone.
    pub fn step(&mut self, s: f64, h: f64, g: f64, dt: f64) -> Result<ControlSample> {
        match self {
            Controller::Classical { gain } => classical_smc_step(s, *gain),
            Controller::BoundaryLayer { gain, phi } => boundary_layer_step(s, *gain, *phi),
            Controller::Utkin { params, state } => utkin_step(s, dt, state, params),
            Controller::Plestan { params, state } => plestan_step(s, dt, state, params),
            Controller::NewAdaptive { params, state } => {
                new_adaptive_step(s, h, g, dt, state, params)
            }
        }
    }
}
