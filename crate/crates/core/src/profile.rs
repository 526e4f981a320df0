//! Current demand profiles for time-domain simulation.
//!
//! A profile is a zero-order-hold signal: sample k's current applies from
//! its timestamp up to (not including) the next timestamp. The final sample
//! only marks the end of the profile; its current is never applied.
//! Positive current charges the cell, negative discharges.

use std::fmt::Write as _;
use std::path::Path;

use crate::{table, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub time_s: f64,
    pub current_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProfile {
    samples: Vec<ProfileSample>,
    pub temperature_c: Option<f64>,
}

impl CurrentProfile {
    pub fn new(
        samples: Vec<ProfileSample>,
        temperature_c: Option<f64>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("profile has no samples".into()));
        }
        if samples[0].time_s != 0.0 {
            return Err(Error::Validation(format!(
                "profile must start at time zero, starts at {}",
                samples[0].time_s
            )));
        }
        for s in &samples {
            if !s.time_s.is_finite() || !s.current_a.is_finite() {
                return Err(Error::Validation(
                    "profile contains a non-finite value".into(),
                ));
            }
        }
        for w in samples.windows(2) {
            if w[1].time_s <= w[0].time_s {
                return Err(Error::Validation(format!(
                    "profile times must be strictly increasing ({} then {})",
                    w[0].time_s, w[1].time_s
                )));
            }
        }
        Ok(Self {
            samples,
            temperature_c,
        })
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn duration_s(&self) -> f64 {
        self.samples[self.samples.len() - 1].time_s
    }

    /// Held current at time t: the value of the latest sample at or before t.
    /// Clamps outside the profile span.
    pub fn current_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.samples[0].current_a;
        }
        // Index of the last sample with time <= t.
        let idx = match self
            .samples
            .binary_search_by(|s| s.time_s.total_cmp(&t))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.samples[idx.min(self.samples.len().saturating_sub(2))].current_a
    }

    pub fn parse_csv(content: &str) -> Result<Self> {
        let t = table::parse(
            content,
            &["time_s", "current_a"],
            &["temp_c"],
            &[],
        )?;
        let ti = t.columns["time_s"];
        let ci = t.columns["current_a"];
        let samples = t
            .rows
            .iter()
            .map(|(_, r)| ProfileSample {
                time_s: r[ti],
                current_a: r[ci],
            })
            .collect();
        let temp = table::merge_meta(
            "temp_c",
            table::meta_f64(&t, "temp_c")?,
            table::constant_column(&t, "temp_c")?,
        )?;
        Self::new(samples, temp)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Self::parse_csv(&content).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(t) = self.temperature_c {
            let _ = writeln!(out, "# temp_c: {t}");
        }
        out.push_str("time_s,current_a\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{}", s.time_s, s.current_a);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
