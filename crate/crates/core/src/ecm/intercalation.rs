//! Differential (intercalation) capacitance from a slow discharge curve.
//!
//! The bulk charge-storage branch behaves as a huge voltage-dependent
//! capacitor `C(V) = |dQ/dV|` with Q in coulombs. Flat regions of the
//! voltage curve blow the derivative up, so the curve is smoothed and the
//! result capped before it becomes a lookup table.

use serde::{Deserialize, Serialize};

use crate::numeric::interp_clamped;
use crate::ocv::OcvCurve;
use crate::{Error, Result};

/// Voltage-keyed capacitance table, ascending in voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdTable {
    pub voltage_v: Vec<f64>,
    pub capacitance_f: Vec<f64>,
}

impl CdTable {
    /// Interpolated capacitance, clamped to the table ends.
    pub fn lookup(&self, voltage: f64) -> f64 {
        interp_clamped(&self.voltage_v, &self.capacitance_f, voltage)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.voltage_v.len() != self.capacitance_f.len() || self.voltage_v.len() < 2 {
            return Err(Error::Schema(
                "capacitance table needs matching voltage/value columns, two rows up".into(),
            ));
        }
        if self.voltage_v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema(
                "capacitance table voltages must be strictly increasing".into(),
            ));
        }
        if self
            .capacitance_f
            .iter()
            .any(|c| !c.is_finite() || *c <= 0.0)
        {
            return Err(Error::Schema(
                "capacitance table values must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    /// Moving-average window as a fraction of total capacity.
    pub smoothing_fraction: f64,
    /// Cap = this factor times the 99th percentile of the raw values.
    pub cap_factor: f64,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            smoothing_fraction: 0.01,
            cap_factor: 10.0,
        }
    }
}

/// What got cleaned up on the way to the table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CdDiagnostics {
    /// Samples dropped to keep voltage strictly decreasing with charge.
    pub skipped_samples: usize,
    /// Derivatives clipped at the plateau cap.
    pub capped_points: usize,
}

/// Smoothed, strictly monotone (charge, voltage) samples of a discharge
/// curve, plus the number of samples dropped to get there. Shared between
/// the capacitance derivative and the model's invertible OCV table.
pub(crate) fn monotone_voltage_samples(
    curve: &OcvCurve,
    options: &CdOptions,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if !(options.smoothing_fraction >= 0.0 && options.smoothing_fraction < 1.0) {
        return Err(Error::Config(format!(
            "smoothing fraction must be in [0, 1), got {}",
            options.smoothing_fraction
        )));
    }
    if !(options.cap_factor > 0.0) {
        return Err(Error::Config(format!(
            "cap factor must be positive, got {}",
            options.cap_factor
        )));
    }
    let q: Vec<f64> = curve.samples().map(|(q, _)| q).collect();
    let v_raw: Vec<f64> = curve.samples().map(|(_, v)| v).collect();
    let capacity = curve.capacity_ah();

    // Moving average over a charge window, truncated symmetrically near the
    // ends so a linear curve passes through unchanged.
    let half = 0.5 * options.smoothing_fraction * capacity;
    let n = q.len();
    let mut v_smooth = Vec::with_capacity(n);
    for i in 0..n {
        let h = half.min(q[i] - q[0]).min(q[n - 1] - q[i]);
        let (mut sum, mut count) = (0.0, 0usize);
        for j in 0..n {
            if (q[j] - q[i]).abs() <= h + 1e-15 {
                sum += v_raw[j];
                count += 1;
            }
        }
        v_smooth.push(sum / count as f64);
    }

    // Discharge voltage must fall as charge is removed; drop samples that
    // break that so the derivative and the inverse lookup stay defined.
    let mut kept_q = vec![q[0]];
    let mut kept_v = vec![v_smooth[0]];
    let mut skipped = 0usize;
    for i in 1..n {
        if v_smooth[i] < *kept_v.last().unwrap() {
            kept_q.push(q[i]);
            kept_v.push(v_smooth[i]);
        } else {
            skipped += 1;
        }
    }
    if kept_q.len() < 4 {
        return Err(Error::Validation(format!(
            "only {} usable samples after monotonicity cleanup",
            kept_q.len()
        )));
    }
    Ok((kept_q, kept_v, skipped))
}

pub fn intercalation_capacitance(
    curve: &OcvCurve,
    options: &CdOptions,
) -> Result<(CdTable, CdDiagnostics)> {
    let (kept_q, mut kept_v, skipped) = monotone_voltage_samples(curve, options)?;
    let mut diag = CdDiagnostics {
        skipped_samples: skipped,
        capped_points: 0,
    };

    // C = |dQ/dV| in farads, centered differences inside, one-sided at the
    // ends. Charge converts from Ah to coulombs.
    let m = kept_q.len();
    let coul = 3600.0;
    let mut cap_f = Vec::with_capacity(m);
    for i in 0..m {
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == m - 1 => (m - 2, m - 1),
            _ => (i - 1, i + 1),
        };
        let dq = (kept_q[hi] - kept_q[lo]) * coul;
        let dv = kept_v[hi] - kept_v[lo];
        cap_f.push((dq / dv).abs());
    }

    // Plateaus produce huge but not infinite derivatives. Cap anything far
    // above the 99th percentile of the crowd.
    let mut sorted = cap_f.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let idx = ((0.99 * m as f64).ceil() as usize).clamp(1, m) - 1;
    let cap_limit = options.cap_factor * sorted[idx];
    for c in &mut cap_f {
        if *c > cap_limit {
            *c = cap_limit;
            diag.capped_points += 1;
        }
    }

    // Voltage falls along the kept samples; flip so the table ascends.
    kept_v.reverse();
    cap_f.reverse();
    let table = CdTable {
        voltage_v: kept_v,
        capacitance_f: cap_f,
    };
    table.validate()?;
    Ok((table, diag))
}
