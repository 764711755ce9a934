//! Scenario files shipped with the crate.
//!
//! The TOML sources live in the repository's `presets/` directory and are
//! embedded at build time, so `run regulation-smooth` works from anywhere.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::{LoadedScenario, ScenarioFile};

macro_rules! preset {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!("../../../presets/", $name, ".toml")),
        )
    };
}

/// `(name, TOML source)` for every bundled preset.
pub const PRESETS: &[(&str, &str)] = &[
    preset!("regulation-smooth"),
    preset!("regulation-square"),
    preset!("tracking"),
    preset!("regulation-smooth-k0"),
    preset!("compare-plestan-3000"),
    preset!("compare-plestan-150"),
    preset!("compare-classical"),
    preset!("compare-boundary-layer"),
    preset!("compare-utkin"),
];

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Parses and validates a bundled preset.
pub fn load(name: &str) -> Result<LoadedScenario> {
    load_with(name, None, None)
}

pub fn load_with(name: &str, dt: Option<f64>, t_end: Option<f64>) -> Result<LoadedScenario> {
    let src = source(name).ok_or_else(|| Error::Config {
        location: name.to_string(),
        message: format!(
            "unknown preset; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ),
    })?;
    ScenarioFile::load_str_with(src, &format!("preset:{name}"), Path::new("."), dt, t_end)
}
