//! TOML scenario files.
//!
//! A file names the plant, controller, uncertainty and integration
//! settings. Loading validates every parameter and reports problems with
//! the file and line they come from.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerSpec, NewAdaptiveParams, PlestanParams, UtkinParams};
use crate::error::{Error, Result};
use crate::plants::{
    MultiSine, Plant, SineReference, SineTerm, SquareSequence, SquareStage, TableSignal,
    UncertaintyKind, UncertaintySignal, Waveform,
};
use crate::sim::{IntegrationSettings, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub uncertainty: UncertaintyConfig,
    pub integration: IntegrationSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    Regulation {
        x0: Vec<f64>,
    },
    Tracking {
        x0: Vec<f64>,
        lambda: f64,
        reference: SineReference,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    ClassicalSmc {
        gain: f64,
    },
    BoundaryLayer {
        gain: f64,
        phi: f64,
    },
    /// Unset fields take the documented defaults of [`UtkinParams::with_defaults`].
    UtkinEq {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        big_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_plus: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k0: Option<f64>,
    },
    Plestan {
        k_bar: f64,
        epsilon: f64,
        kappa: f64,
        k0: f64,
    },
    NewAdaptive {
        phi: f64,
        rho: f64,
        k: f64,
        mu_hat0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformConfig {
    MultiSine {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        terms: Vec<SineTerm>,
    },
    Square {
        period: f64,
        stages: Vec<SquareStage>,
    },
    Table {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncertaintyConfig {
    /// No disturbance.
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<usize>,
    },
    SmoothMultiSine {
        true_bound_mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<usize>,
        #[serde(default)]
        offset: f64,
        terms: Vec<SineTerm>,
    },
    SquareSequence {
        true_bound_mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<usize>,
        period: f64,
        stages: Vec<SquareStage>,
    },
    CustomTable {
        true_bound_mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<usize>,
        path: PathBuf,
    },
    MultiplicativePlusAdditive {
        true_bound_mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<usize>,
        multiplicative: WaveformConfig,
        additive: WaveformConfig,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for the CSV and metrics files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Boundary-layer width used for band metrics. Defaults to the
    /// controller's own `phi` when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

/// A parsed, validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    /// `phi` for [`crate::sim::compute_metrics`].
    pub metrics_phi: f64,
    pub warnings: Vec<String>,
}

impl LoadedScenario {
    /// New-adaptive parameters, if that is the controller.
    pub fn new_adaptive(&self) -> Option<NewAdaptiveParams> {
        match self.scenario.controller {
            ControllerSpec::NewAdaptive(p) => Some(p),
            _ => None,
        }
    }

    pub fn mu(&self) -> f64 {
        self.scenario.uncertainty.true_bound_mu
    }
}

/// Line (1-based) and column of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Best-effort line of `key = …` inside `[section]` (or any subtable of it).
fn find_key_line(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut fallback = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = h
                .trim_start_matches('[')
                .trim_end_matches(']')
                .trim()
                .to_string();
            continue;
        }
        let has_key = line
            .split_once('#')
            .map_or(line, |(code, _)| code)
            .match_indices(key)
            .any(|(i, _)| {
                let before = line[..i].chars().next_back();
                let after = line[i + key.len()..].trim_start();
                !before.is_some_and(|c| c.is_alphanumeric() || c == '_') && after.starts_with('=')
            });
        if has_key {
            if current == section || current.starts_with(&format!("{section}.")) {
                return Some(i + 1);
            }
            fallback.get_or_insert(i + 1);
        }
    }
    fallback
}

fn section_line(src: &str, section: &str) -> Option<usize> {
    src.lines()
        .position(|l| l.trim() == format!("[{section}]"))
        .map(|i| i + 1)
}

impl ScenarioFile {
    pub fn from_toml_str(src: &str, origin: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(src, span.start);
                    format!("{origin}:{l}:{c}")
                }
                None => origin.to_string(),
            };
            Error::Config {
                location,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            location: self.name.clone(),
            message: e.to_string(),
        })
    }

    /// Applies CLI overrides of the integration settings.
    pub fn override_integration(&mut self, dt: Option<f64>, t_end: Option<f64>) {
        if let Some(dt) = dt {
            self.integration.dt = dt;
        }
        if let Some(t_end) = t_end {
            self.integration.t_end = t_end;
        }
    }

    /// Builds and validates the runnable scenario. Relative table paths
    /// resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<LoadedScenario> {
        let (plant, x0) = match &self.plant {
            PlantConfig::Regulation { x0 } => (Plant::Regulation, x0.clone()),
            PlantConfig::Tracking {
                x0,
                lambda,
                reference,
            } => (
                Plant::Tracking {
                    lambda: *lambda,
                    reference: *reference,
                },
                x0.clone(),
            ),
        };
        let dt = self.integration.dt;
        let (uncertainty, channel) = self.uncertainty.build(base_dir)?;
        if let Some(ch) = channel {
            if ch != plant.actuated_state() {
                return Err(Error::param(
                    "channel",
                    format!(
                        "uncertainty must enter the actuated state x{} (matching condition), got x{ch}",
                        plant.actuated_state()
                    ),
                ));
            }
        }
        let controller = self.controller.build(dt, uncertainty.true_bound_mu);
        let metrics_phi = match (self.metrics.phi, &controller) {
            (Some(phi), _) => phi,
            (None, ControllerSpec::NewAdaptive(p)) => p.phi,
            (None, ControllerSpec::BoundaryLayer { phi, .. }) => *phi,
            (None, _) => {
                return Err(Error::param(
                    "phi",
                    format!(
                        "[metrics] phi is required for the {} controller",
                        controller.name()
                    ),
                ))
            }
        };
        crate::math::BoundaryLayer::new(metrics_phi)?;
        let scenario = Scenario {
            name: self.name.clone(),
            plant,
            controller,
            uncertainty,
            integration: self.integration,
            x0,
        };
        let warnings = scenario.validate()?;
        Ok(LoadedScenario {
            file: self.clone(),
            scenario,
            metrics_phi,
            warnings,
        })
    }

    /// Parses and builds, attaching a file and line to every failure.
    pub fn load_str(src: &str, origin: &str, base_dir: &Path) -> Result<LoadedScenario> {
        Self::from_toml_str(src, origin)?.build_located(src, origin, base_dir)
    }

    /// Like [`ScenarioFile::load_str`] but with overrides applied before validation.
    pub fn load_str_with(
        src: &str,
        origin: &str,
        base_dir: &Path,
        dt: Option<f64>,
        t_end: Option<f64>,
    ) -> Result<LoadedScenario> {
        let mut file = Self::from_toml_str(src, origin)?;
        file.override_integration(dt, t_end);
        file.build_located(src, origin, base_dir)
    }

    pub fn load(path: &Path) -> Result<LoadedScenario> {
        Self::load_with(path, None, None)
    }

    pub fn load_with(path: &Path, dt: Option<f64>, t_end: Option<f64>) -> Result<LoadedScenario> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::load_str_with(&src, &path.display().to_string(), base, dt, t_end)
    }

    fn build_located(&self, src: &str, origin: &str, base_dir: &Path) -> Result<LoadedScenario> {
        self.build(base_dir).map_err(|e| match e {
            Error::Parameter { name, reason } => {
                let section = self.section_of(name);
                let line = find_key_line(src, section, name).or_else(|| section_line(src, section));
                Error::Config {
                    location: match line {
                        Some(l) => format!("{origin}:{l}"),
                        None => origin.to_string(),
                    },
                    message: format!("[{section}] invalid `{name}`: {reason}"),
                }
            }
            e @ Error::Config { .. } => e,
            other => Error::Config {
                location: origin.to_string(),
                message: other.to_string(),
            },
        })
    }

    /// Section a parameter name most likely belongs to.
    fn section_of(&self, name: &str) -> &'static str {
        match name {
            "dt" | "substeps" | "t_end" => "integration",
            "x0" | "lambda" | "amplitude" | "frequency_hz" => "plant",
            "true_bound_mu" | "channel" | "period" | "stages" | "offset" | "omega" | "table"
            | "uncertainty.kind" => "uncertainty",
            "phi" if self.metrics.phi.is_some() || !self.controller.has_phi() => "metrics",
            _ => "controller",
        }
    }
}

impl ControllerConfig {
    fn has_phi(&self) -> bool {
        matches!(
            self,
            ControllerConfig::NewAdaptive { .. } | ControllerConfig::BoundaryLayer { .. }
        )
    }

    pub fn build(&self, dt: f64, mu: f64) -> ControllerSpec {
        match *self {
            ControllerConfig::ClassicalSmc { gain } => ControllerSpec::Classical { gain },
            ControllerConfig::BoundaryLayer { gain, phi } => {
                ControllerSpec::BoundaryLayer { gain, phi }
            }
            ControllerConfig::UtkinEq {
                tau,
                alpha,
                nu,
                big_m,
                k_plus,
                epsilon,
                k0,
            } => {
                let d = UtkinParams::with_defaults(dt, mu);
                let nu = nu.unwrap_or(d.nu);
                let k_plus = k_plus.unwrap_or(d.k_plus);
                let epsilon = epsilon.unwrap_or(d.epsilon);
                ControllerSpec::Utkin(UtkinParams {
                    tau: tau.unwrap_or(d.tau),
                    alpha: alpha.unwrap_or(d.alpha),
                    nu,
                    big_m: big_m.unwrap_or(2.0 * nu * k_plus),
                    k_plus,
                    epsilon,
                    k0: k0.unwrap_or(epsilon),
                })
            }
            ControllerConfig::Plestan {
                k_bar,
                epsilon,
                kappa,
                k0,
            } => ControllerSpec::Plestan(PlestanParams {
                k_bar,
                epsilon,
                kappa,
                k0,
            }),
            ControllerConfig::NewAdaptive {
                phi,
                rho,
                k,
                mu_hat0,
            } => ControllerSpec::NewAdaptive(NewAdaptiveParams {
                phi,
                rho,
                k,
                mu_hat0,
            }),
        }
    }
}

impl WaveformConfig {
    fn build(&self, base_dir: &Path) -> Result<Waveform> {
        Ok(match self {
            WaveformConfig::MultiSine { offset, terms } => Waveform::MultiSine(MultiSine {
                offset: *offset,
                terms: terms.clone(),
            }),
            WaveformConfig::Square { period, stages } => Waveform::Square(SquareSequence {
                period: *period,
                stages: stages.clone(),
            }),
            WaveformConfig::Table { path } => {
                Waveform::Table(Arc::new(TableSignal::from_csv(&base_dir.join(path))?))
            }
        })
    }
}

impl UncertaintyConfig {
    pub fn channel(&self) -> Option<usize> {
        match self {
            UncertaintyConfig::Zero { channel }
            | UncertaintyConfig::SmoothMultiSine { channel, .. }
            | UncertaintyConfig::SquareSequence { channel, .. }
            | UncertaintyConfig::CustomTable { channel, .. }
            | UncertaintyConfig::MultiplicativePlusAdditive { channel, .. } => *channel,
        }
    }

    fn build(&self, base_dir: &Path) -> Result<(UncertaintySignal, Option<usize>)> {
        let (kind, true_bound_mu) = match self {
            UncertaintyConfig::Zero { .. } => {
                return Ok((UncertaintySignal::none(), self.channel()))
            }
            UncertaintyConfig::SmoothMultiSine {
                true_bound_mu,
                offset,
                terms,
                ..
            } => (
                UncertaintyKind::SmoothMultiSine(MultiSine {
                    offset: *offset,
                    terms: terms.clone(),
                }),
                *true_bound_mu,
            ),
            UncertaintyConfig::SquareSequence {
                true_bound_mu,
                period,
                stages,
                ..
            } => (
                UncertaintyKind::SquareSequence(SquareSequence {
                    period: *period,
                    stages: stages.clone(),
                }),
                *true_bound_mu,
            ),
            UncertaintyConfig::CustomTable {
                true_bound_mu,
                path,
                ..
            } => (
                UncertaintyKind::CustomTable(Arc::new(TableSignal::from_csv(
                    &base_dir.join(path),
                )?)),
                *true_bound_mu,
            ),
            UncertaintyConfig::MultiplicativePlusAdditive {
                true_bound_mu,
                multiplicative,
                additive,
                ..
            } => (
                UncertaintyKind::MultiplicativePlusAdditive {
                    multiplicative: multiplicative.build(base_dir)?,
                    additive: additive.build(base_dir)?,
                },
                *true_bound_mu,
            ),
        };
        if !(true_bound_mu > 0.0 && true_bound_mu.is_finite()) {
            return Err(Error::param(
                "true_bound_mu",
                format!("must be a finite value > 0, got {true_bound_mu}"),
            ));
        }
        Ok((
            UncertaintySignal {
                kind,
                true_bound_mu,
            },
            self.channel(),
        ))
    }
}
