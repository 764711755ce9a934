//! Plant models, sliding surfaces and bounded uncertainty signals.

pub mod signals;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use signals::{
    MultiSine, SineTerm, SquareSequence, SquareStage, TableSignal, Waveform, BOUND_CHECK_POINTS,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl PlantState {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::param("x0", "state must have at least one entry"));
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(
                "x0",
                format!("state must be finite, got {x:?} at t = {t}"),
            ));
        }
        Ok(Self { x, t })
    }
}

/// Sliding variable with its nominal dynamics `ṡ = h + g·u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceEval {
    pub s: f64,
    pub h: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyKind {
    SmoothMultiSine(MultiSine),
    SquareSequence(SquareSequence),
    CustomTable(std::sync::Arc<TableSignal>),
    /// Parameter drift `Δx₁(t)` plus additive `d(t)` in the tracking plant.
    MultiplicativePlusAdditive {
        multiplicative: Waveform,
        additive: Waveform,
    },
}

impl UncertaintyKind {
    pub fn name(&self) -> &'static str {
        match self {
            UncertaintyKind::SmoothMultiSine(_) => "smooth_multi_sine",
            UncertaintyKind::SquareSequence(_) => "square_sequence",
            UncertaintyKind::CustomTable(_) => "custom_table",
            UncertaintyKind::MultiplicativePlusAdditive { .. } => "multiplicative_plus_additive",
        }
    }
}

/// A disturbance together with the bound μ only the simulator knows.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySignal {
    pub kind: UncertaintyKind,
    pub true_bound_mu: f64,
}

impl UncertaintySignal {
    pub fn none() -> Self {
        Self {
            kind: UncertaintyKind::SmoothMultiSine(MultiSine {
                offset: 0.0,
                terms: vec![],
            }),
            true_bound_mu: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.true_bound_mu >= 0.0 && self.true_bound_mu.is_finite()) {
            return Err(Error::param(
                "true_bound_mu",
                format!("must be a finite value >= 0, got {}", self.true_bound_mu),
            ));
        }
        match &self.kind {
            UncertaintyKind::SmoothMultiSine(w) => w.validate(),
            UncertaintyKind::SquareSequence(w) => w.validate(),
            UncertaintyKind::CustomTable(_) => Ok(()),
            UncertaintyKind::MultiplicativePlusAdditive {
                multiplicative,
                additive,
            } => {
                multiplicative.validate()?;
                additive.validate()
            }
        }
    }

    /// `(Δx₁(t), d(t))`. Purely additive kinds report `Δx₁ = 1`.
    pub fn components(&self, t: f64) -> Result<(f64, f64)> {
        match &self.kind {
            UncertaintyKind::SmoothMultiSine(w) => Ok((1.0, w.eval(t))),
            UncertaintyKind::SquareSequence(w) => Ok((1.0, w.eval(t))),
            UncertaintyKind::CustomTable(w) => Ok((1.0, w.eval(t)?)),
            UncertaintyKind::MultiplicativePlusAdditive {
                multiplicative,
                additive,
            } => Ok((multiplicative.eval(t)?, additive.eval(t)?)),
        }
    }

    /// Dense-sampling check of `|Δf| ≤ μ` over `[0, t_end]`; returns the sampled peak.
    ///
    /// For the multiplicative kind Δf depends on the state, so only the
    /// additive part is bounded here and the drift is checked for finiteness.
    pub fn check_bound(&self, t_end: f64) -> Result<f64> {
        let additive = match &self.kind {
            UncertaintyKind::SmoothMultiSine(w) => Waveform::MultiSine(w.clone()),
            UncertaintyKind::SquareSequence(w) => Waveform::Square(w.clone()),
            UncertaintyKind::CustomTable(w) => Waveform::Table(w.clone()),
            UncertaintyKind::MultiplicativePlusAdditive {
                multiplicative,
                additive,
            } => {
                multiplicative.sampled_max(t_end, BOUND_CHECK_POINTS)?;
                additive.clone()
            }
        };
        let peak = additive.sampled_max(t_end, BOUND_CHECK_POINTS)?;
        if peak > self.true_bound_mu {
            return Err(Error::param(
                "true_bound_mu",
                format!(
                    "declared bound {} is below the sampled peak |Δf| = {peak} over [0, {t_end}]",
                    self.true_bound_mu
                ),
            ));
        }
        Ok(peak)
    }
}

/// Lumped matched uncertainty Δf at `(x, t)`.
///
/// For the multiplicative kind this is the tracking plant's
/// `x₁Δx₁x₂ + sin(x₁Δx₁) + d − x₁x₂ − sin x₁`.
pub fn eval_uncertainty(unc: &UncertaintySignal, x: &[f64], t: f64) -> Result<f64> {
    match &unc.kind {
        UncertaintyKind::MultiplicativePlusAdditive { .. } => {
            let [x1, x2] = x else {
                return Err(Error::Domain(format!(
                    "multiplicative uncertainty needs a 2-state plant, got {} states",
                    x.len()
                )));
            };
            let (dx1, d) = unc.components(t)?;
            let a = x1 * dx1;
            Ok(a * x2 + a.sin() + d - x1 * x2 - x1.sin())
        }
        _ => Ok(unc.components(t)?.1),
    }
}

/// `ẋ = Δf(t) + u`.
pub fn regulation_plant(x: f64, t: f64, u: f64, unc: &UncertaintySignal) -> Result<f64> {
    Ok(eval_uncertainty(unc, &[x], t)? + u)
}

/// `s = x`, `h = 0`, `g = 1`.
pub fn regulation_surface(x: f64, _t: f64) -> SurfaceEval {
    SurfaceEval {
        s: x,
        h: 0.0,
        g: 1.0,
    }
}

fn tracking_rhs(x: [f64; 2], u: f64, dx1: f64, d: f64) -> [f64; 2] {
    let a = x[0] * dx1;
    [x[1], a * x[1] + a.sin() + d + u]
}

/// `ẋ₁ = x₂`, `ẋ₂ = x₁Δx₁(t)x₂ + sin(x₁Δx₁(t)) + d(t) + u`.
pub fn tracking_plant(
    x: [f64; 2],
    t: f64,
    u: f64,
    unc_mult: &Waveform,
    unc_add: &Waveform,
) -> Result<[f64; 2]> {
    Ok(tracking_rhs(x, u, unc_mult.eval(t)?, unc_add.eval(t)?))
}

/// `y_d = A sin(2πf t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineReference {
    pub amplitude: f64,
    pub frequency_hz: f64,
}

impl SineReference {
    /// `(y_d, ẏ_d, ÿ_d)` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let w = TAU * self.frequency_hz;
        let (sn, cs) = (w * t).sin_cos();
        (
            self.amplitude * sn,
            self.amplitude * w * cs,
            -self.amplitude * w * w * sn,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::param(
                "amplitude",
                format!("must be finite, got {}", self.amplitude),
            ));
        }
        if !(self.frequency_hz >= 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::param(
                "frequency_hz",
                format!("must be a finite value >= 0, got {}", self.frequency_hz),
            ));
        }
        Ok(())
    }
}

/// `s = ė + λe` with `e = x₁ − y_d`; `h` is the nominal `ṡ` without `u`, `g = 1`.
pub fn tracking_surface(
    x: [f64; 2],
    t: f64,
    reference: &SineReference,
    lambda: f64,
) -> SurfaceEval {
    let (yd, yd1, yd2) = reference.eval(t);
    let e = x[0] - yd;
    let e1 = x[1] - yd1;
    SurfaceEval {
        s: e1 + lambda * e,
        h: x[0] * x[1] + x[0].sin() - yd2 + lambda * e1,
        g: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plant {
    /// Scalar `ẋ = Δf + u` with `s = x`.
    Regulation,
    /// Second-order nonlinear plant following a sinusoidal reference.
    Tracking {
        lambda: f64,
        reference: SineReference,
    },
}

impl Plant {
    pub fn name(&self) -> &'static str {
        match self {
            Plant::Regulation => "regulation",
            Plant::Tracking { .. } => "tracking",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Plant::Regulation => 1,
            Plant::Tracking { .. } => 2,
        }
    }

    /// Index of the state whose derivative carries `u`; matched
    /// uncertainty may only enter there.
    pub fn actuated_state(&self) -> usize {
        self.dim() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if let Plant::Tracking { lambda, reference } = self {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::param(
                    "lambda",
                    format!("must be a finite value > 0, got {lambda}"),
                ));
            }
            reference.validate()?;
        }
        Ok(())
    }

    /// Rejects uncertainty kinds the plant cannot host.
    pub fn check_uncertainty(&self, unc: &UncertaintySignal) -> Result<()> {
        if matches!(self, Plant::Regulation)
            && matches!(unc.kind, UncertaintyKind::MultiplicativePlusAdditive { .. })
        {
            return Err(Error::param(
                "uncertainty.kind",
                "multiplicative_plus_additive needs the tracking plant",
            ));
        }
        Ok(())
    }

    pub fn surface(&self, x: &[f64], t: f64) -> SurfaceEval {
        match self {
            Plant::Regulation => regulation_surface(x[0], t),
            Plant::Tracking { lambda, reference } => {
                tracking_surface([x[0], x[1]], t, reference, *lambda)
            }
        }
    }

    /// Writes `dx/dt` into `out`.
    pub fn deriv(
        &self,
        x: &[f64],
        t: f64,
        u: f64,
        unc: &UncertaintySignal,
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            Plant::Regulation => out[0] = regulation_plant(x[0], t, u, unc)?,
            Plant::Tracking { .. } => {
                let (dx1, d) = unc.components(t)?;
                out.copy_from_slice(&tracking_rhs([x[0], x[1]], u, dx1, d));
            }
        }
        Ok(())
    }
}
