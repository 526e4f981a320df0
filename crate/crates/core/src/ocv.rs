//! Open-circuit voltage curves measured by slow (quasi-equilibrium)
//! discharge.
//!
//! The charge column accumulates discharged amp-hours starting at full
//! charge, so state of charge is `1 - q / capacity`: zero charge removed
//! means full, the last row defines the usable capacity.

use std::fmt::Write as _;
use std::path::Path;

use crate::{table, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OcvCurve {
    /// Discharged charge in Ah, normalized to start at zero, strictly
    /// increasing.
    q_ah: Vec<f64>,
    /// Voltage at each charge sample.
    v: Vec<f64>,
    pub temperature_c: Option<f64>,
    pub cell_id: Option<String>,
}

pub const MIN_OCV_POINTS: usize = 4;

impl OcvCurve {
    pub fn new(
        samples: Vec<(f64, f64)>,
        temperature_c: Option<f64>,
        cell_id: Option<String>,
    ) -> Result<Self> {
        if samples.len() < MIN_OCV_POINTS {
            return Err(Error::Validation(format!(
                "voltage curve has {} samples, need at least {MIN_OCV_POINTS}",
                samples.len()
            )));
        }
        for &(q, v) in &samples {
            if !q.is_finite() || !v.is_finite() {
                return Err(Error::Validation(
                    "voltage curve contains a non-finite value".into(),
                ));
            }
        }
        let q0 = samples[0].0;
        let q_ah: Vec<f64> = samples.iter().map(|&(q, _)| q - q0).collect();
        let v: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
        for w in q_ah.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation(format!(
                    "discharged charge must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            q_ah,
            v,
            temperature_c,
            cell_id,
        })
    }

    /// Usable capacity: total charge removed over the sweep.
    pub fn capacity_ah(&self) -> f64 {
        *self.q_ah.last().unwrap()
    }

    /// (lowest, highest) voltage seen in the data.
    pub fn voltage_limits(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.v {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.q_ah.iter().zip(&self.v).map(|(&q, &v)| (q, v))
    }

    pub fn len(&self) -> usize {
        self.q_ah.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_ah.is_empty()
    }

    /// Linear interpolation of voltage at a state of charge, clamped to the
    /// measured range.
    pub fn voltage_at_soc(&self, soc: f64) -> f64 {
        let q = (1.0 - soc) * self.capacity_ah();
        crate::numeric::interp_clamped(&self.q_ah, &self.v, q)
    }

    /// Inverse lookup: state of charge at a voltage. Requires the curve to be
    /// strictly monotone in voltage so the inverse is well defined.
    pub fn soc_at_voltage(&self, voltage: f64) -> Result<f64> {
        for w in self.v.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Validation(format!(
                    "voltage curve is not strictly decreasing ({} then {}), \
                     cannot invert",
                    w[0], w[1]
                )));
            }
        }
        // v descends as q ascends; flip to ascending for interpolation.
        let v_asc: Vec<f64> = self.v.iter().rev().copied().collect();
        let q_rev: Vec<f64> = self.q_ah.iter().rev().copied().collect();
        let q = crate::numeric::interp_clamped(&v_asc, &q_rev, voltage);
        Ok(1.0 - q / self.capacity_ah())
    }

    pub fn parse_csv(content: &str) -> Result<Self> {
        let t = table::parse(
            content,
            &["capacity_ah", "voltage_v"],
            &["temp_c", "cell_id"],
            &["cell_id"],
        )?;
        let qi = t.columns["capacity_ah"];
        let vi = t.columns["voltage_v"];
        let samples = t.rows.iter().map(|(_, r)| (r[qi], r[vi])).collect();
        let temp = table::merge_meta(
            "temp_c",
            table::meta_f64(&t, "temp_c")?,
            table::constant_column(&t, "temp_c")?,
        )?;
        let cell_id = t.meta.get("cell_id").cloned();
        Self::new(samples, temp, cell_id)
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
        if let Some(id) = &self.cell_id {
            let _ = writeln!(out, "# cell_id: {id}");
        }
        if let Some(t) = self.temperature_c {
            let _ = writeln!(out, "# temp_c: {t}");
        }
        out.push_str("capacity_ah,voltage_v\n");
        for (q, v) in self.samples() {
            let _ = writeln!(out, "{q},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Averages repeat discharge curves onto a shared state-of-charge grid.
///
/// The grid is uniform on [0, 1] with as many samples as the densest input;
/// each curve is linearly interpolated onto it and the voltages averaged
/// pointwise. Capacity of the result is the mean input capacity.
pub fn average_ocv(curves: &[OcvCurve]) -> Result<OcvCurve> {
    if curves.len() < 2 {
        return Err(Error::Validation(
            "averaging needs at least two voltage curves".into(),
        ));
    }
    let first = &curves[0];
    for c in &curves[1..] {
        let same = match (c.temperature_c, first.temperature_c) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
            _ => false,
        };
        if !same {
            return Err(Error::Metadata(
                "cannot average voltage curves with different temperature".into(),
            ));
        }
    }
    let n = curves.iter().map(|c| c.len()).max().unwrap();
    let capacity = curves.iter().map(|c| c.capacity_ah()).sum::<f64>()
        / curves.len() as f64;
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        // Ascending charge, i.e. descending state of charge.
        let frac = j as f64 / (n - 1) as f64;
        let soc = 1.0 - frac;
        let v = curves.iter().map(|c| c.voltage_at_soc(soc)).sum::<f64>()
            / curves.len() as f64;
        samples.push((frac * capacity, v));
    }
    OcvCurve::new(samples, first.temperature_c, Some("averaged".into()))
}
