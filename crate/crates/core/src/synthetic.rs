//! A fully characterized reference cell and the measurement generator
//! built on it.
//!
//! The reference cell is a large prismatic NMC-style cell expressed
//! directly as a model: every trend is exactly representable (linear
//! resistances, constant capacitances, a parabolic diffusion resistance),
//! so pipeline output can be compared against ground truth without fit
//! slop in the truth itself. The generator evaluates the model at each
//! grid condition and writes sweep and voltage files in the same formats
//! the loaders read.
//!
//! Time constants are placed so each branch stays inside its attribution
//! band at every temperature and state of charge, including the resistance
//! scaling between 35 and -10 degC.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::CellDataset;
use crate::ecm::{
    parameters_at, CdTable, EcmModel, OcvTable, OperatingPoint,
    ParameterTrend, RcTrend, Structure, TemperatureEntry,
};
use crate::ocv::OcvCurve;
use crate::spectrum::{ImpedancePoint, ImpedanceSpectrum};
use crate::{Error, Result};

/// Characterized temperatures of the reference cell.
pub const TEMPERATURES_C: [f64; 4] = [-10.0, 5.0, 20.0, 35.0];

/// States of charge measured at each temperature.
pub const SOCS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Resistance multiplier per temperature: cold cells are slower.
const R_SCALES: [f64; 4] = [2.8, 1.6, 1.0, 0.8];

/// Discharge capacity per temperature, Ah.
const CAPACITIES_AH: [f64; 4] = [244.0, 264.0, 274.0, 280.0];

/// Interfacial branches as (r at 3.7 V in ohm, dr/dV in ohm/V, C in F).
/// Base time constants near 2e-4, 3e-3, 3e-2, 0.25 and 1.2 s.
const RC_BASE: [(f64, f64, f64); 5] = [
    (0.12e-3, 0.01e-3, 5.0 / 3.0),
    (0.25e-3, -0.03e-3, 12.0),
    (0.40e-3, -0.10e-3, 75.0),
    (0.55e-3, -0.12e-3, 450.0),
    (0.80e-3, -0.20e-3, 1500.0),
];

/// Ohmic resistance at 3.7 V and its voltage slope, ohm.
const R_OHMIC_BASE: (f64, f64) = (0.60e-3, 0.08e-3);

/// Diffusion resistance parabola: value at the 3.9 V vertex and the
/// curvature, ohm.
const R_DIFF_VERTEX: (f64, f64) = (0.45e-3, 0.50e-3);

/// Shunt used when a parallel-RL lead inductance is requested, ohm.
const INDUCTANCE_SHUNT_OHM: f64 = 0.5;

/// Open-circuit voltage, shared by all temperatures: a gentle quadratic
/// from 3.0 V empty to 4.2 V full.
pub fn ocv_voltage(soc: f64) -> f64 {
    3.0 + 1.2 * (0.92 * soc + 0.08 * soc * soc)
}

fn ocv_slope(soc: f64) -> f64 {
    1.2 * (0.92 + 0.16 * soc)
}

fn soc_of_voltage(v: f64) -> f64 {
    let u = (v - 3.0) / 1.2;
    (-0.92 + (0.92 * 0.92 + 0.32 * u).sqrt()) / 0.16
}

/// The ground-truth model every synthetic measurement is drawn from.
pub fn reference_model() -> EcmModel {
    let temperatures = TEMPERATURES_C
        .iter()
        .zip(R_SCALES)
        .zip(CAPACITIES_AH)
        .map(|((&temp_c, scale), capacity_ah)| {
            let linear_in_v = |value_at_37: f64, slope: f64| {
                ParameterTrend::Linear {
                    coefficients: [
                        (value_at_37 - slope * 3.7) * scale,
                        slope * scale,
                    ],
                }
            };
            let rc_branches = RC_BASE
                .iter()
                .map(|&(r, dr, c)| RcTrend {
                    resistance: linear_in_v(r, dr),
                    capacitance: ParameterTrend::Linear {
                        coefficients: [c, 0.0],
                    },
                })
                .collect();
            // (v0 + k(V - 3.9)^2) * scale, expanded to power-basis form.
            let (v0, k) = R_DIFF_VERTEX;
            let r_diffusion = ParameterTrend::Quadratic {
                coefficients: [
                    (v0 + k * 3.9 * 3.9) * scale,
                    -2.0 * k * 3.9 * scale,
                    k * scale,
                ],
            };
            let charge_c = capacity_ah * 3600.0;
            let voltage_v: Vec<f64> =
                (0..=60).map(|i| 3.0 + 1.2 * i as f64 / 60.0).collect();
            let capacitance_f = voltage_v
                .iter()
                .map(|&v| charge_c / ocv_slope(soc_of_voltage(v)))
                .collect();
            let soc: Vec<f64> =
                (0..=100).map(|i| i as f64 / 100.0).collect();
            let ocv = soc.iter().map(|&s| ocv_voltage(s)).collect();
            TemperatureEntry {
                temp_c,
                capacity_ah,
                r_ohmic: linear_in_v(R_OHMIC_BASE.0, R_OHMIC_BASE.1),
                rc_branches,
                r_diffusion,
                c_d_table: CdTable {
                    voltage_v,
                    capacitance_f,
                },
                ocv_soc: OcvTable {
                    soc,
                    voltage_v: ocv,
                },
            }
        })
        .collect();
    EcmModel {
        schema_version: crate::ecm::SCHEMA_VERSION,
        structure: Structure {
            n_rc: RC_BASE.len(),
            ladder_size: 5,
        },
        voltage_limits: [ocv_voltage(0.0), ocv_voltage(1.0)],
        temperatures,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    /// Multiplicative noise amplitude relative to |Z|, per point and part.
    pub noise_fraction: f64,
    pub seed: u64,
    /// Lead inductance added as L parallel to a fixed shunt; None leaves
    /// the sweeps purely capacitive.
    pub inductance_h: Option<f64>,
    /// Number of repeat cells; resistances spread a few percent around the
    /// reference so averaging has something to collapse.
    pub cells: usize,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            noise_fraction: 0.0,
            seed: 42,
            inductance_h: None,
            cells: 1,
        }
    }
}

/// Measurement frequencies: 10 mHz to 10 kHz at 10 points per decade.
pub fn measurement_frequencies() -> Vec<f64> {
    (0..=60).map(|k| 10f64.powf(-2.0 + k as f64 / 10.0)).collect()
}

/// Generate the full measurement campaign for the reference cell: one
/// sweep per (temperature, state of charge, cell) and one voltage curve
/// per temperature.
pub fn generate_dataset(options: &SyntheticOptions) -> Result<CellDataset> {
    if options.cells == 0 {
        return Err(Error::Config("need at least one cell".into()));
    }
    if !(options.noise_fraction >= 0.0) || options.noise_fraction >= 0.5 {
        return Err(Error::Config(format!(
            "noise fraction {} is outside [0, 0.5)",
            options.noise_fraction
        )));
    }
    let model = reference_model();
    let freqs = measurement_frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let spreads = [0.97, 1.0, 1.03];

    let mut spectra = Vec::new();
    for &temp_c in &TEMPERATURES_C {
        for &soc in &SOCS {
            let params =
                parameters_at(&model, OperatingPoint::Soc(soc), temp_c)?;
            for cell in 0..options.cells {
                let spread = if options.cells == 1 {
                    1.0
                } else {
                    spreads[cell % spreads.len()]
                };
                let points = freqs
                    .iter()
                    .map(|&f| {
                        let omega = 2.0 * std::f64::consts::PI * f;
                        let mut z = params.impedance(omega) * spread;
                        if let Some(l) = options.inductance_h {
                            let jwl = Complex64::new(0.0, omega * l);
                            z += jwl * INDUCTANCE_SHUNT_OHM
                                / (INDUCTANCE_SHUNT_OHM + jwl);
                        }
                        if options.noise_fraction > 0.0 {
                            let scale = options.noise_fraction * z.norm();
                            z.re += scale * rng.gen_range(-1.0..1.0);
                            z.im += scale * rng.gen_range(-1.0..1.0);
                        }
                        ImpedancePoint {
                            freq_hz: f,
                            z_re: z.re,
                            z_im: z.im,
                        }
                    })
                    .collect();
                let id = (b'a' + (cell % 26) as u8) as char;
                spectra.push(ImpedanceSpectrum::new(
                    points,
                    Some(soc),
                    Some(temp_c),
                    Some(format!("cell_{id}")),
                )?);
            }
        }
    }

    let mut ocv_curves = Vec::new();
    for (&temp_c, capacity_ah) in TEMPERATURES_C.iter().zip(CAPACITIES_AH) {
        let samples: Vec<(f64, f64)> = (0..=200)
            .map(|k| {
                let q = capacity_ah * k as f64 / 200.0;
                (q, ocv_voltage(1.0 - q / capacity_ah))
            })
            .collect();
        ocv_curves.push(OcvCurve::new(samples, Some(temp_c), None)?);
    }
    CellDataset::new(spectra, ocv_curves)
}

fn temp_tag(temp_c: f64) -> String {
    let t = temp_c.round() as i64;
    if t < 0 {
        format!("m{:02}", -t)
    } else {
        format!("p{t:02}")
    }
}

/// Write a dataset into `dir` using the `eis_*` / `ocv_*` names the
/// directory loader expects.
pub fn write_dataset(dataset: &CellDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in &dataset.spectra {
        let temp = temp_tag(s.temperature_c.unwrap_or(0.0));
        let soc = (s.soc.unwrap_or(0.0) * 100.0).round() as i64;
        let cell = s
            .cell_id
            .as_deref()
            .map(|c| format!("_{c}"))
            .unwrap_or_default();
        s.write_csv(&dir.join(format!("eis_t{temp}_soc{soc:03}{cell}.csv")))?;
    }
    for c in &dataset.ocv_curves {
        let temp = temp_tag(c.temperature_c.unwrap_or(0.0));
        c.write_csv(&dir.join(format!("ocv_t{temp}.csv")))?;
    }
    Ok(())
}
