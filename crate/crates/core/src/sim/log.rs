use std::io::Write;

use crate::error::{Error, Result};

/// Default significant digits in CSV output; enough to round-trip an `f64`.
pub const CSV_SIGNIFICANT_DIGITS: usize = 17;

/// One closed-loop run sampled on a uniform grid.
///
/// `x` is stored row-major with `n_states` entries per row. `v` and
/// `vprime` are only meaningful for the boundary-layer adaptive law and
/// hold 0 for every other controller.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub n_states: usize,
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub gain: Vec<f64>,
    pub gain_rate: Vec<f64>,
    pub delta_f: Vec<f64>,
    pub v: Vec<f64>,
    pub vprime: Vec<f64>,
}

/// Values of a single logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub s: f64,
    pub u: f64,
    pub gain: f64,
    pub gain_rate: f64,
    pub delta_f: f64,
    pub v: f64,
    pub vprime: f64,
}

impl TrajectoryLog {
    pub fn with_capacity(n_states: usize, dt: f64, rows: usize) -> Self {
        let col = || Vec::with_capacity(rows);
        Self {
            n_states,
            dt,
            t: col(),
            x: Vec::with_capacity(rows * n_states),
            s: col(),
            u: col(),
            gain: col(),
            gain_rate: col(),
            delta_f: col(),
            v: col(),
            vprime: col(),
        }
    }

    pub fn push(&mut self, x: &[f64], row: LogRow) {
        debug_assert_eq!(x.len(), self.n_states);
        self.t.push(row.t);
        self.x.extend_from_slice(x);
        self.s.push(row.s);
        self.u.push(row.u);
        self.gain.push(row.gain);
        self.gain_rate.push(row.gain_rate);
        self.delta_f.push(row.delta_f);
        self.v.push(row.v);
        self.vprime.push(row.vprime);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_states..(i + 1) * self.n_states]
    }

    pub fn t_end(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((0..self.n_states).map(|i| format!("x{i}")));
        h.extend(
            ["s", "u", "gain", "gain_rate", "delta_f", "V", "Vprime"]
                .iter()
                .map(|c| c.to_string()),
        );
        h
    }

    /// Writes a header row plus one row per sample, floats in scientific
    /// notation with `digits` significant digits.
    pub fn write_csv<W: Write>(&self, w: W, digits: usize) -> Result<()> {
        if digits == 0 {
            return Err(Error::param(
                "digits",
                "CSV precision must be at least 1 significant digit",
            ));
        }
        let prec = digits - 1;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        let mut rec = Vec::with_capacity(self.n_states + 8);
        for i in 0..self.len() {
            rec.clear();
            rec.push(self.t[i]);
            rec.extend_from_slice(self.state(i));
            rec.extend([
                self.s[i],
                self.u[i],
                self.gain[i],
                self.gain_rate[i],
                self.delta_f[i],
                self.v[i],
                self.vprime[i],
            ]);
            out.write_record(rec.iter().map(|v| format!("{v:.prec$e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, digits: usize) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, digits)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }
}
