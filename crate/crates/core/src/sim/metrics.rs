//! Voltage-error metrics between a simulated run and reference data.

use crate::sim::SimulationResult;
use crate::{table, Error, Result};

/// Width of the cell's usable voltage window; the percentage metric is
/// relative to it.
pub const DEFAULT_VOLTAGE_INTERVAL: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseReport {
    pub absolute_mv: f64,
    /// Percent of the voltage interval.
    pub percent: f64,
    /// Simulation samples that fell inside the overlapping time range.
    pub compared_points: usize,
}

/// Root-mean-square terminal-voltage error over the overlapping time span.
///
/// The reference series is resampled linearly onto the simulation grid, so
/// the two need not share timestamps, only overlap.
pub fn rmse(
    reference: &[(f64, f64)],
    simulated: &SimulationResult,
    voltage_interval: f64,
) -> Result<RmseReport> {
    if !(voltage_interval > 0.0) {
        return Err(Error::Config(format!(
            "voltage interval must be positive, got {voltage_interval}"
        )));
    }
    if reference.len() < 2 {
        return Err(Error::Validation(
            "reference series needs at least two samples".into(),
        ));
    }
    if reference.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Validation(
            "reference series times must be strictly increasing".into(),
        ));
    }
    if simulated.rows.is_empty() {
        return Err(Error::Validation("simulation produced no rows".into()));
    }
    let ref_t: Vec<f64> = reference.iter().map(|p| p.0).collect();
    let ref_v: Vec<f64> = reference.iter().map(|p| p.1).collect();
    let lo = ref_t[0].max(simulated.rows[0].time_s);
    let hi = ref_t[ref_t.len() - 1]
        .min(simulated.rows.last().unwrap().time_s);

    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for row in &simulated.rows {
        if row.time_s < lo - 1e-9 || row.time_s > hi + 1e-9 {
            continue;
        }
        let v_ref = crate::numeric::interp_clamped(&ref_t, &ref_v, row.time_s);
        let d = row.v_term_v - v_ref;
        sum_sq += d * d;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Alignment(format!(
            "no overlap between reference [{}, {}] s and simulation [{}, {}] s",
            ref_t[0],
            ref_t[ref_t.len() - 1],
            simulated.rows[0].time_s,
            simulated.rows.last().unwrap().time_s
        )));
    }
    let rms_v = (sum_sq / n as f64).sqrt();
    Ok(RmseReport {
        absolute_mv: rms_v * 1e3,
        percent: rms_v / voltage_interval * 100.0,
        compared_points: n,
    })
}

/// Parse a reference voltage series from CSV: `time_s` plus either
/// `v_term_v` (simulator output) or `voltage_v` (lab export).
pub fn parse_voltage_series(content: &str) -> Result<Vec<(f64, f64)>> {
    let t = table::parse(
        content,
        &["time_s"],
        &[
            "v_term_v",
            "voltage_v",
            "v_oc_v",
            "soc",
            "current_a",
            "temp_c",
        ],
        &[],
    )?;
    let ti = t.columns["time_s"];
    let vi = t
        .columns
        .get("v_term_v")
        .or_else(|| t.columns.get("voltage_v"))
        .copied()
        .ok_or_else(|| {
            Error::parse(1, "need a `v_term_v` or `voltage_v` column")
        })?;
    Ok(t.rows.iter().map(|(_, r)| (r[ti], r[vi])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{SimRow, SimulationResult, Termination};

    fn sim_from(rows: Vec<(f64, f64)>) -> SimulationResult {
        SimulationResult {
            rows: rows
                .into_iter()
                .map(|(t, v)| SimRow {
                    time_s: t,
                    v_term_v: v,
                    v_oc_v: v,
                    soc: 0.5,
                    current_a: 0.0,
                    temp_c: 20.0,
                })
                .collect(),
            termination: Termination::ProfileEnd,
            notes: Vec::new(),
        }
    }

    #[test]
    fn identical_series_score_zero() {
        let pts: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 3.7)).collect();
        let sim = sim_from(pts.clone());
        let r = rmse(&pts, &sim, DEFAULT_VOLTAGE_INTERVAL).unwrap();
        assert_eq!(r.absolute_mv, 0.0);
        assert_eq!(r.percent, 0.0);
        assert_eq!(r.compared_points, 50);
    }

    #[test]
    fn constant_offset_maps_to_interval_percent() {
        let reference: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 3.7)).collect();
        let sim = sim_from((0..100).map(|i| (i as f64, 3.712)).collect());
        let r = rmse(&reference, &sim, 1.2).unwrap();
        assert!((r.absolute_mv - 12.0).abs() < 1e-9);
        assert!((r.percent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seventeen_point_five_four_mv_is_one_point_four_six_percent() {
        let reference: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.7)).collect();
        let sim = sim_from((0..10).map(|i| (i as f64, 3.7 + 0.01754)).collect());
        let r = rmse(&reference, &sim, 1.2).unwrap();
        assert!((r.absolute_mv - 17.54).abs() < 1e-9);
        assert!((r.percent - 1.4617).abs() < 1e-3);
        assert_eq!(format!("{:.2}", r.percent), "1.46");
    }

    #[test]
    fn resampling_is_linear() {
        // Reference on a fine grid, simulation on a coarse offset grid;
        // both sample the same ramp, so the error is pure interpolation: zero.
        let reference: Vec<(f64, f64)> =
            (0..1001).map(|i| (0.1 * i as f64, 3.0 + 1e-3 * 0.1 * i as f64)).collect();
        let sim = sim_from(
            (0..20)
                .map(|i| {
                    let t = 2.5 + 5.0 * i as f64;
                    (t, 3.0 + 1e-3 * t)
                })
                .collect(),
        );
        let r = rmse(&reference, &sim, 1.2).unwrap();
        assert!(r.absolute_mv < 1e-9, "rmse {}", r.absolute_mv);
        assert_eq!(r.compared_points, 20);
    }

    #[test]
    fn disjoint_ranges_are_an_alignment_error() {
        let reference: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.7)).collect();
        let sim = sim_from((0..10).map(|i| (100.0 + i as f64, 3.7)).collect());
        let err = rmse(&reference, &sim, 1.2).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)), "{err}");
    }

    #[test]
    fn voltage_series_accepts_both_column_names() {
        let a = parse_voltage_series("time_s,v_term_v\n0,3.7\n1,3.6\n").unwrap();
        assert_eq!(a, vec![(0.0, 3.7), (1.0, 3.6)]);
        let b = parse_voltage_series("time_s,voltage_v\n0,3.7\n1,3.6\n").unwrap();
        assert_eq!(a, b);
        assert!(parse_voltage_series("time_s,volts\n0,3.7\n").is_err());
    }
}
