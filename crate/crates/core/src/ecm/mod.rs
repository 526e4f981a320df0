//! Equivalent-circuit model: assembly from per-condition extraction results,
//! JSON (de)serialization, and parameter evaluation at an operating point.
//!
//! A model is a set of voltage trends per characterized temperature. The
//! circuit itself is fixed: ohmic resistance, one RC branch per interfacial
//! process, and a bounded diffusion element realized as an RC ladder for
//! time-domain work or kept analytic in the frequency domain.

mod intercalation;
mod trend;
mod warburg;

pub use intercalation::{intercalation_capacitance, CdDiagnostics, CdOptions, CdTable};
pub use trend::{fit_trend, ParameterTrend, TrendFitKind};
pub use warburg::{
    ladder_impedance, warburg_impedance, warburg_ladder, DEFAULT_LADDER_SIZE,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::numeric::interp_clamped;
use crate::ocv::OcvCurve;
use crate::peaks::{Attribution, RcElement};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Equality tolerance when grouping conditions by temperature or SoC.
const CONDITION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    /// Interfacial RC branches (the diffusion branch is separate).
    pub n_rc: usize,
    /// RC pairs used when the diffusion element is expanded for simulation.
    pub ladder_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcTrend {
    pub resistance: ParameterTrend,
    pub capacitance: ParameterTrend,
}

/// Monotone state-of-charge to voltage table; both columns strictly
/// increasing, so it is invertible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcvTable {
    pub soc: Vec<f64>,
    pub voltage_v: Vec<f64>,
}

impl OcvTable {
    pub fn voltage_at(&self, soc: f64) -> f64 {
        interp_clamped(&self.soc, &self.voltage_v, soc)
    }

    pub fn soc_at(&self, voltage: f64) -> f64 {
        interp_clamped(&self.voltage_v, &self.soc, voltage)
    }

    fn validate(&self) -> Result<()> {
        if self.soc.len() != self.voltage_v.len() || self.soc.len() < 2 {
            return Err(Error::Schema(
                "state-of-charge table needs matching columns, two rows up".into(),
            ));
        }
        if self.soc.windows(2).any(|w| w[1] <= w[0])
            || self.voltage_v.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Schema(
                "state-of-charge table must be strictly increasing in both columns"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Everything the model knows at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEntry {
    pub temp_c: f64,
    pub capacity_ah: f64,
    pub r_ohmic: ParameterTrend,
    pub rc_branches: Vec<RcTrend>,
    pub r_diffusion: ParameterTrend,
    pub c_d_table: CdTable,
    pub ocv_soc: OcvTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcmModel {
    pub schema_version: u32,
    pub structure: Structure,
    /// Voltage window over which every temperature's trends are defined:
    /// the intersection of the per-temperature measured ranges.
    pub voltage_limits: [f64; 2],
    /// Sorted ascending by temperature.
    pub temperatures: Vec<TemperatureEntry>,
}

impl EcmModel {
    /// Independent scalar parameters at one operating point: ohmic
    /// resistance, R and C per interfacial branch, and the two diffusion
    /// parameters. The ladder expansion adds none.
    pub fn parameter_count(&self) -> usize {
        1 + 2 * self.structure.n_rc + 2
    }

    pub fn temperature_range(&self) -> (f64, f64) {
        (
            self.temperatures.first().map(|t| t.temp_c).unwrap_or(f64::NAN),
            self.temperatures.last().map(|t| t.temp_c).unwrap_or(f64::NAN),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                supported: SCHEMA_VERSION,
            });
        }
        if self.temperatures.is_empty() {
            return Err(Error::Schema("model has no temperature entries".into()));
        }
        if self
            .temperatures
            .windows(2)
            .any(|w| w[1].temp_c <= w[0].temp_c)
        {
            return Err(Error::Schema(
                "temperature entries must be sorted strictly ascending".into(),
            ));
        }
        if !(self.voltage_limits[0] < self.voltage_limits[1]) {
            return Err(Error::Schema(format!(
                "voltage limits [{}, {}] are not an interval",
                self.voltage_limits[0], self.voltage_limits[1]
            )));
        }
        for entry in &self.temperatures {
            if entry.rc_branches.len() != self.structure.n_rc {
                return Err(Error::Schema(format!(
                    "temperature {} degC has {} RC branches, structure says {}",
                    entry.temp_c,
                    entry.rc_branches.len(),
                    self.structure.n_rc
                )));
            }
            if !(entry.capacity_ah > 0.0) {
                return Err(Error::Schema(format!(
                    "temperature {} degC has non-positive capacity",
                    entry.temp_c
                )));
            }
            entry.r_ohmic.validate()?;
            entry.r_diffusion.validate()?;
            for b in &entry.rc_branches {
                b.resistance.validate()?;
                b.capacitance.validate()?;
            }
            entry.c_d_table.validate()?;
            entry.ocv_soc.validate()?;
        }
        if self.structure.ladder_size < 1 {
            return Err(Error::Schema("ladder size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("not valid JSON: {e}")))?;
        // Version gate before full decoding, so a future schema gets a
        // version error rather than a confusing missing-field one.
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Schema("missing field `schema_version`".into()))?;
        if found != SCHEMA_VERSION as u64 {
            return Err(Error::SchemaVersion {
                found: found.min(u32::MAX as u64) as u32,
                supported: SCHEMA_VERSION,
            });
        }
        let model: EcmModel = serde_json::from_value(value)
            .map_err(|e| Error::Schema(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Where on the OCV axis to evaluate the trends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    Soc(f64),
    Ocv(f64),
}

/// Concrete circuit values at one (operating point, temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub ocv: f64,
    pub soc: f64,
    pub r_ohmic: f64,
    pub rc: Vec<RcElement>,
    pub r_diffusion: f64,
    pub c_diffusion: f64,
    pub capacity_ah: f64,
}

impl ParameterSet {
    /// Frequency-domain impedance of the full circuit, diffusion kept
    /// analytic.
    pub fn impedance(&self, omega: f64) -> Complex64 {
        let mut z = Complex64::new(self.r_ohmic, 0.0);
        for b in &self.rc {
            let jwt = Complex64::new(0.0, omega * b.tau);
            z += b.resistance / (1.0 + jwt);
        }
        z + warburg_impedance(self.r_diffusion, self.c_diffusion, omega)
    }
}

/// Evaluate the model at an operating point and temperature.
///
/// Temperatures between characterized points interpolate every scalar
/// linearly; outside the characterized range evaluation is refused rather
/// than extrapolated. An explicit OCV outside the model's voltage limits is
/// refused the same way.
pub fn parameters_at(
    model: &EcmModel,
    point: OperatingPoint,
    temp_c: f64,
) -> Result<ParameterSet> {
    let (t_min, t_max) = model.temperature_range();
    if temp_c < t_min - CONDITION_TOL || temp_c > t_max + CONDITION_TOL {
        return Err(Error::TemperatureRange {
            requested: temp_c,
            min: t_min,
            max: t_max,
        });
    }
    match point {
        OperatingPoint::Ocv(v) => {
            if v < model.voltage_limits[0] - CONDITION_TOL
                || v > model.voltage_limits[1] + CONDITION_TOL
            {
                return Err(Error::VoltageRange {
                    requested: v,
                    min: model.voltage_limits[0],
                    max: model.voltage_limits[1],
                });
            }
        }
        OperatingPoint::Soc(s) => {
            if !(-CONDITION_TOL..=1.0 + CONDITION_TOL).contains(&s) {
                return Err(Error::Validation(format!(
                    "state of charge {s} outside [0, 1]"
                )));
            }
        }
    }

    // Bracketing entries; exact hit short-circuits the blend.
    let idx_hi = model
        .temperatures
        .iter()
        .position(|e| e.temp_c >= temp_c - CONDITION_TOL)
        .unwrap_or(model.temperatures.len() - 1);
    let hi = &model.temperatures[idx_hi];
    if (hi.temp_c - temp_c).abs() <= CONDITION_TOL || idx_hi == 0 {
        return Ok(evaluate_entry(hi, point));
    }
    let lo = &model.temperatures[idx_hi - 1];
    let w = (temp_c - lo.temp_c) / (hi.temp_c - lo.temp_c);
    let a = evaluate_entry(lo, point);
    let b = evaluate_entry(hi, point);
    let lerp = |x: f64, y: f64| x + w * (y - x);
    let rc = a
        .rc
        .iter()
        .zip(&b.rc)
        .map(|(p, q)| {
            let r = lerp(p.resistance, q.resistance);
            let c = lerp(p.capacitance, q.capacitance);
            RcElement {
                resistance: r,
                capacitance: c,
                tau: r * c,
            }
        })
        .collect();
    Ok(ParameterSet {
        ocv: lerp(a.ocv, b.ocv),
        soc: lerp(a.soc, b.soc),
        r_ohmic: lerp(a.r_ohmic, b.r_ohmic),
        rc,
        r_diffusion: lerp(a.r_diffusion, b.r_diffusion),
        c_diffusion: lerp(a.c_diffusion, b.c_diffusion),
        capacity_ah: lerp(a.capacity_ah, b.capacity_ah),
    })
}

fn evaluate_entry(entry: &TemperatureEntry, point: OperatingPoint) -> ParameterSet {
    let (ocv, soc) = match point {
        OperatingPoint::Ocv(v) => (v, entry.ocv_soc.soc_at(v)),
        OperatingPoint::Soc(s) => (entry.ocv_soc.voltage_at(s), s),
    };
    let rc = entry
        .rc_branches
        .iter()
        .map(|b| {
            let r = b.resistance.evaluate(ocv);
            let c = b.capacitance.evaluate(ocv);
            RcElement {
                resistance: r,
                capacitance: c,
                tau: r * c,
            }
        })
        .collect();
    ParameterSet {
        ocv,
        soc,
        r_ohmic: entry.r_ohmic.evaluate(ocv),
        rc,
        r_diffusion: entry.r_diffusion.evaluate(ocv),
        c_diffusion: entry.c_d_table.lookup(ocv),
        capacity_ah: entry.capacity_ah,
    }
}

/// Model impedance at a state of charge and temperature.
pub fn model_impedance(
    model: &EcmModel,
    soc: f64,
    temp_c: f64,
    omega: f64,
) -> Result<Complex64> {
    let params = parameters_at(model, OperatingPoint::Soc(soc), temp_c)?;
    Ok(params.impedance(omega))
}

/// One characterized (SoC, temperature) condition: the ohmic resistance and
/// attributed RC elements recovered from its spectrum.
#[derive(Debug, Clone)]
pub struct ConditionParameters {
    pub soc: f64,
    pub temp_c: f64,
    pub r_ohmic: f64,
    pub elements: Vec<(RcElement, Attribution)>,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub ladder_size: usize,
    pub ohmic_trend: TrendFitKind,
    pub rc_trend: TrendFitKind,
    pub diffusion_r_trend: TrendFitKind,
    pub cd: CdOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            ladder_size: DEFAULT_LADDER_SIZE,
            ohmic_trend: TrendFitKind::Linear,
            rc_trend: TrendFitKind::Auto,
            diffusion_r_trend: TrendFitKind::Quadratic,
            cd: CdOptions::default(),
        }
    }
}

#[derive(Debug)]
pub struct BuildReport {
    pub model: EcmModel,
    /// Human-readable notes: skipped OCV samples, capped capacitances.
    pub notes: Vec<String>,
}

/// Assemble a model from per-condition extraction results and slow
/// discharge curves.
///
/// Every condition must expose the same peak structure: identical counts in
/// each attribution band and exactly one diffusion element. Elements are
/// matched across conditions band by band in time-constant order.
pub fn build_model(
    conditions: &[ConditionParameters],
    ocv_curves: &[OcvCurve],
    options: &BuildOptions,
) -> Result<BuildReport> {
    if conditions.is_empty() {
        return Err(Error::Validation("no conditions to build from".into()));
    }
    if options.ladder_size < 1 {
        return Err(Error::Config("ladder size must be at least 1".into()));
    }

    // Group by temperature, each group sorted by SoC.
    let mut temps: Vec<f64> = Vec::new();
    for c in conditions {
        if !temps.iter().any(|t| (t - c.temp_c).abs() <= CONDITION_TOL) {
            temps.push(c.temp_c);
        }
    }
    temps.sort_by(f64::total_cmp);

    let structure_counts = band_counts(&conditions[0].elements);
    let n_rc: usize = structure_counts
        .iter()
        .filter(|(band, _)| *band != Attribution::Diffusion)
        .map(|(_, n)| n)
        .sum();
    let mut offenders = Vec::new();
    for c in conditions {
        if band_counts(&c.elements) != structure_counts {
            offenders.push(format!("(soc {}, {} degC)", c.soc, c.temp_c));
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Structural(format!(
            "peak structure differs across conditions at {}",
            offenders.join(", ")
        )));
    }
    if structure_counts
        .iter()
        .find(|(band, _)| *band == Attribution::Diffusion)
        .map(|(_, n)| *n)
        != Some(1)
    {
        return Err(Error::Structural(
            "expected exactly one diffusion peak per condition".into(),
        ));
    }

    let mut notes = Vec::new();
    let mut entries = Vec::with_capacity(temps.len());
    for &temp in &temps {
        let mut group: Vec<&ConditionParameters> = conditions
            .iter()
            .filter(|c| (c.temp_c - temp).abs() <= CONDITION_TOL)
            .collect();
        group.sort_by(|a, b| a.soc.total_cmp(&b.soc));
        for w in group.windows(2) {
            if (w[1].soc - w[0].soc).abs() <= CONDITION_TOL {
                return Err(Error::Structural(format!(
                    "duplicate condition at soc {} and {} degC; average repeats first",
                    w[0].soc, temp
                )));
            }
        }
        let curve = ocv_curves
            .iter()
            .find(|c| {
                c.temperature_c
                    .is_some_and(|t| (t - temp).abs() <= CONDITION_TOL)
            })
            .ok_or_else(|| {
                Error::Structural(format!("no voltage curve for {temp} degC"))
            })?;
        entries.push(build_entry(&group, curve, options, &mut notes)?);
    }

    let v_lo = entries
        .iter()
        .map(|e| e.ocv_soc.voltage_v[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let v_hi = entries
        .iter()
        .map(|e| *e.ocv_soc.voltage_v.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    if !(v_lo < v_hi) {
        return Err(Error::Structural(
            "voltage ranges of the temperature entries do not overlap".into(),
        ));
    }

    let model = EcmModel {
        schema_version: SCHEMA_VERSION,
        structure: Structure {
            n_rc,
            ladder_size: options.ladder_size,
        },
        voltage_limits: [v_lo, v_hi],
        temperatures: entries,
    };
    model.validate()?;
    Ok(BuildReport { model, notes })
}

/// Count elements per attribution band, keyed in band order.
fn band_counts(elements: &[(RcElement, Attribution)]) -> Vec<(Attribution, usize)> {
    let bands = [
        Attribution::ContactInterface,
        Attribution::SeiLayer,
        Attribution::ChargeTransfer,
        Attribution::Diffusion,
    ];
    bands
        .iter()
        .map(|&b| (b, elements.iter().filter(|(_, a)| *a == b).count()))
        .collect()
}

fn build_entry(
    group: &[&ConditionParameters],
    curve: &OcvCurve,
    options: &BuildOptions,
    notes: &mut Vec<String>,
) -> Result<TemperatureEntry> {
    let temp = group[0].temp_c;

    // Per-condition OCV coordinate for all trend fits.
    let ocvs: Vec<f64> = group
        .iter()
        .map(|c| curve.voltage_at_soc(c.soc))
        .collect();

    let ohmic_samples: Vec<(f64, f64)> = ocvs
        .iter()
        .zip(group)
        .map(|(&v, c)| (v, c.r_ohmic))
        .collect();
    let r_ohmic = fit_trend(&ohmic_samples, options.ohmic_trend)?;

    // Band-ordered interfacial slots: within a band, elements pair up across
    // conditions in time-constant order.
    let interfacial_bands = [
        Attribution::ContactInterface,
        Attribution::SeiLayer,
        Attribution::ChargeTransfer,
    ];
    let mut rc_branches = Vec::new();
    for band in interfacial_bands {
        let per_condition: Vec<Vec<&RcElement>> = group
            .iter()
            .map(|c| {
                let mut elems: Vec<&RcElement> = c
                    .elements
                    .iter()
                    .filter(|(_, a)| *a == band)
                    .map(|(e, _)| e)
                    .collect();
                elems.sort_by(|a, b| a.tau.total_cmp(&b.tau));
                elems
            })
            .collect();
        let slots = per_condition[0].len();
        for slot in 0..slots {
            let r_samples: Vec<(f64, f64)> = ocvs
                .iter()
                .zip(&per_condition)
                .map(|(&v, elems)| (v, elems[slot].resistance))
                .collect();
            let c_samples: Vec<(f64, f64)> = ocvs
                .iter()
                .zip(&per_condition)
                .map(|(&v, elems)| (v, elems[slot].capacitance))
                .collect();
            rc_branches.push(RcTrend {
                resistance: fit_trend(&r_samples, options.rc_trend)?,
                capacitance: fit_trend(&c_samples, options.rc_trend)?,
            });
        }
    }

    let rd_samples: Vec<(f64, f64)> = ocvs
        .iter()
        .zip(group)
        .map(|(&v, c)| {
            let rd = c
                .elements
                .iter()
                .find(|(_, a)| *a == Attribution::Diffusion)
                .map(|(e, _)| e.resistance)
                .expect("structure check guarantees a diffusion element");
            (v, rd)
        })
        .collect();
    let r_diffusion = fit_trend(&rd_samples, options.diffusion_r_trend)?;

    let (c_d_table, cd_diag) = intercalation_capacitance(curve, &options.cd)?;
    if cd_diag.skipped_samples > 0 {
        notes.push(format!(
            "{} degC: dropped {} non-monotone voltage samples",
            temp, cd_diag.skipped_samples
        ));
    }
    if cd_diag.capped_points > 0 {
        notes.push(format!(
            "{} degC: capped {} capacitance points on voltage plateaus",
            temp, cd_diag.capped_points
        ));
    }

    // Invertible OCV table from the same smoothed, monotone samples the
    // capacitance derivative used.
    let (kept_q, kept_v, _) = intercalation::monotone_voltage_samples(curve, &options.cd)?;
    let capacity = curve.capacity_ah();
    let mut soc: Vec<f64> = kept_q.iter().map(|q| 1.0 - q / capacity).collect();
    let mut voltage_v = kept_v;
    soc.reverse();
    voltage_v.reverse();

    Ok(TemperatureEntry {
        temp_c: temp,
        capacity_ah: capacity,
        r_ohmic,
        rc_branches,
        r_diffusion,
        c_d_table,
        ocv_soc: OcvTable { soc, voltage_v },
    })
}
