//! Deterministic waveform generators for disturbances and parameter drift.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of points used by the load-time bound check.
pub const BOUND_CHECK_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    /// Angular frequency in rad/s.
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `offset + Σ aᵢ sin(ωᵢ t + φᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSine {
    #[serde(default)]
    pub offset: f64,
    pub terms: Vec<SineTerm>,
}

impl MultiSine {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.offset, |acc, c| {
            acc + c.amplitude * (c.omega * t + c.phase).sin()
        })
    }

    /// Sum of absolute amplitudes plus |offset|.
    pub fn envelope(&self) -> f64 {
        self.offset.abs() + self.terms.iter().map(|c| c.amplitude.abs()).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.offset.is_finite() {
            return Err(Error::param(
                "offset",
                format!("must be finite, got {}", self.offset),
            ));
        }
        for c in &self.terms {
            for (name, v) in [
                ("amplitude", c.amplitude),
                ("omega", c.omega),
                ("phase", c.phase),
            ] {
                if !v.is_finite() {
                    return Err(Error::param(
                        name,
                        format!("sine term parameter must be finite, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareStage {
    /// Time at which this amplitude takes over.
    pub start: f64,
    pub amplitude: f64,
}

/// Square wave `+A` on the first half of each period and `−A` on the
/// second, where `A` is the amplitude of the latest stage with `start ≤ t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareSequence {
    pub period: f64,
    pub stages: Vec<SquareStage>,
}

impl SquareSequence {
    pub fn eval(&self, t: f64) -> f64 {
        let amplitude = self
            .stages
            .iter()
            .take_while(|st| st.start <= t)
            .last()
            .map_or(0.0, |st| st.amplitude);
        let half = (t / (0.5 * self.period)).floor() as i64;
        if half.rem_euclid(2) == 0 {
            amplitude
        } else {
            -amplitude
        }
    }

    /// Every value the wave can take.
    pub fn levels(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for st in &self.stages {
            out.extend([st.amplitude, -st.amplitude]);
        }
        out
    }

    pub fn envelope(&self) -> f64 {
        self.stages
            .iter()
            .map(|st| st.amplitude.abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::param(
                "period",
                format!("must be a finite value > 0, got {}", self.period),
            ));
        }
        if self.stages.is_empty() {
            return Err(Error::param(
                "stages",
                "square sequence needs at least one stage",
            ));
        }
        for w in self.stages.windows(2) {
            if !(w[1].start > w[0].start) {
                return Err(Error::param(
                    "stages",
                    "stage start times must be strictly increasing",
                ));
            }
        }
        for st in &self.stages {
            if !st.start.is_finite() || !st.amplitude.is_finite() {
                return Err(Error::param("stages", format!("non-finite stage {st:?}")));
            }
        }
        Ok(())
    }

    /// Times at which the wave jumps, up to `t_end`.
    pub fn switch_times(&self, t_end: f64) -> Vec<f64> {
        let half = 0.5 * self.period;
        let mut out: Vec<f64> = (1..)
            .map(|i| i as f64 * half)
            .take_while(|&t| t <= t_end)
            .collect();
        out.extend(
            self.stages
                .iter()
                .map(|st| st.start)
                .filter(|&t| t > 0.0 && t <= t_end),
        );
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Piecewise-linear signal through `(t, value)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSignal {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl TableSignal {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::param(
                "table",
                "time and value columns differ in length",
            ));
        }
        if t.len() < 2 {
            return Err(Error::param("table", "at least two samples are required"));
        }
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::param("table", "all samples must be finite"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param(
                "table",
                "time column must be strictly increasing",
            ));
        }
        Ok(Self { t, v })
    }

    /// Reads a two-column CSV. A non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Config {
                    location: format!("{}:{}", path.display(), i + 1),
                    message: format!("expected 2 columns (t, value), found {}", rec.len()),
                });
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    v.push(b);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Config {
                        location: format!("{}:{}", path.display(), i + 1),
                        message: format!(
                            "cannot parse row {:?} as numbers",
                            rec.iter().collect::<Vec<_>>()
                        ),
                    })
                }
            }
        }
        Self::new(t, v)
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (t0, t1) = self.horizon();
        if !(t >= t0 && t <= t1) {
            return Err(Error::Domain(format!(
                "t = {t} is outside the table horizon [{t0}, {t1}]"
            )));
        }
        let i = self
            .t
            .partition_point(|&x| x <= t)
            .clamp(1, self.t.len() - 1);
        let (ta, tb) = (self.t[i - 1], self.t[i]);
        let (va, vb) = (self.v[i - 1], self.v[i]);
        Ok(va + (vb - va) * (t - ta) / (tb - ta))
    }

    pub fn envelope(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    MultiSine(MultiSine),
    Square(SquareSequence),
    Table(Arc<TableSignal>),
}

impl Waveform {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Waveform::MultiSine(w) => Ok(w.eval(t)),
            Waveform::Square(w) => Ok(w.eval(t)),
            Waveform::Table(w) => w.eval(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Waveform::MultiSine(w) => w.validate(),
            Waveform::Square(w) => w.validate(),
            Waveform::Table(_) => Ok(()),
        }
    }

    /// Upper bound on |value| implied by the parameters alone.
    pub fn envelope(&self) -> f64 {
        match self {
            Waveform::MultiSine(w) => w.envelope(),
            Waveform::Square(w) => w.envelope(),
            Waveform::Table(w) => w.envelope(),
        }
    }

    /// Largest |value| over `n` uniform samples of `[0, t_end]`.
    pub fn sampled_max(&self, t_end: f64, n: usize) -> Result<f64> {
        let n = n.max(2);
        let mut peak = 0.0f64;
        for i in 0..n {
            let t = t_end * i as f64 / (n - 1) as f64;
            let v = self.eval(t)?;
            if !v.is_finite() {
                return Err(Error::Domain(format!("waveform is non-finite at t = {t}")));
            }
            peak = peak.max(v.abs());
        }
        Ok(peak)
    }
}
