//! Discrete-time simulation of a cell model under a current profile.
//!
//! State is one voltage per RC branch plus the bulk storage voltage. With
//! zero-order-hold current every branch update has a closed-form solution,
//! so the stepper is exact for piecewise-constant input; the only
//! approximations are holding the current and the parameters fixed across
//! each step.

pub mod metrics;
pub mod profiles;

pub use metrics::{
    parse_voltage_series, rmse, RmseReport, DEFAULT_VOLTAGE_INTERVAL,
};
pub use profiles::{
    generate_discharge_profile, generate_driving_profile,
    generate_dynamic_profile, parse_driving_blocks, DrivingBlock, ShapeSet,
    MAX_REPETITIONS,
};

use std::fmt::Write as _;

use crate::ecm::{
    parameters_at, warburg_ladder, EcmModel, OperatingPoint, ParameterSet,
};
use crate::peaks::RcElement;
use crate::profile::CurrentProfile;
use crate::{Error, Result};

/// Flattened circuit for stepping: interfacial RC branches followed by the
/// diffusion ladder, plus the bulk capacitance that integrates charge.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    pub r_ohmic: f64,
    pub branches: Vec<RcElement>,
    pub c_storage: f64,
}

/// Expand an evaluated parameter set into step form, realizing the
/// diffusion element as its RC ladder.
pub fn expand(params: &ParameterSet, ladder_size: usize) -> Result<StepParams> {
    let (ladder, c_storage) =
        warburg_ladder(params.r_diffusion, params.c_diffusion, ladder_size)?;
    let mut branches = params.rc.clone();
    branches.extend(ladder);
    Ok(StepParams {
        r_ohmic: params.r_ohmic,
        branches,
        c_storage,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time_s: f64,
    /// Bulk storage voltage; doubles as the open-circuit voltage.
    pub v_oc: f64,
    /// One voltage per branch, same order as [`StepParams::branches`].
    pub branch_voltages: Vec<f64>,
}

/// Advance one step under constant current `u` (positive charges).
///
/// Branch voltages decay toward their `u·R` asymptote along the exact
/// exponential; the storage voltage integrates the current.
pub fn step(state: &SimState, params: &StepParams, u: f64, ts: f64) -> SimState {
    let v_oc = state.v_oc + ts * u / params.c_storage;
    let branch_voltages = state
        .branch_voltages
        .iter()
        .zip(&params.branches)
        .map(|(&v, b)| {
            let a = (-ts / b.tau).exp();
            v * a + u * b.resistance * (1.0 - a)
        })
        .collect();
    SimState {
        time_s: state.time_s + ts,
        v_oc,
        branch_voltages,
    }
}

/// Terminal voltage at a state under current `u`: storage plus branch
/// voltages plus the instantaneous ohmic drop.
pub fn terminal_voltage(state: &SimState, params: &StepParams, u: f64) -> f64 {
    state.v_oc + state.branch_voltages.iter().sum::<f64>() + params.r_ohmic * u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Soc(f64),
    Ocv(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub timestep_s: f64,
    pub initial: InitialState,
    /// Simulation temperature; falls back to the profile's if unset.
    pub temperature_c: Option<f64>,
    /// Re-evaluate parameters every this many steps.
    pub refresh_every: usize,
    /// Terminal-voltage cutoffs; defaults to the model's voltage limits.
    pub cutoff_v: Option<[f64; 2]>,
    /// How far the storage voltage may leave the characterized window
    /// before the run halts.
    pub guard_band_v: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            timestep_s: 1.0,
            initial: InitialState::Soc(1.0),
            temperature_c: None,
            refresh_every: 1,
            cutoff_v: None,
            guard_band_v: 0.02,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ProfileEnd,
    VoltageCutoff { time_s: f64, voltage: f64 },
    /// Storage voltage left the characterized window beyond the guard band.
    SocBound { time_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub time_s: f64,
    pub v_term_v: f64,
    pub v_oc_v: f64,
    pub soc: f64,
    pub current_a: f64,
    pub temp_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub rows: Vec<SimRow>,
    pub termination: Termination,
    /// Non-fatal observations (e.g. a timestep coarser than the fastest
    /// branch).
    pub notes: Vec<String>,
}

impl SimulationResult {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("time_s,v_term_v,v_oc_v,soc,current_a,temp_c\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.time_s, r.v_term_v, r.v_oc_v, r.soc, r.current_a, r.temp_c
            );
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// State of charge implied by a storage voltage, interpolating between
/// characterized temperatures. Clamps to [0, 1] outside the tables.
pub fn soc_from_ocv(model: &EcmModel, v_oc: f64, temp_c: f64) -> Result<f64> {
    let (t_min, t_max) = model.temperature_range();
    if temp_c < t_min - 1e-6 || temp_c > t_max + 1e-6 {
        return Err(Error::TemperatureRange {
            requested: temp_c,
            min: t_min,
            max: t_max,
        });
    }
    let idx_hi = model
        .temperatures
        .iter()
        .position(|e| e.temp_c >= temp_c - 1e-6)
        .unwrap_or(model.temperatures.len() - 1);
    let hi = &model.temperatures[idx_hi];
    if (hi.temp_c - temp_c).abs() <= 1e-6 || idx_hi == 0 {
        return Ok(hi.ocv_soc.soc_at(v_oc));
    }
    let lo = &model.temperatures[idx_hi - 1];
    let w = (temp_c - lo.temp_c) / (hi.temp_c - lo.temp_c);
    let a = lo.ocv_soc.soc_at(v_oc);
    let b = hi.ocv_soc.soc_at(v_oc);
    Ok(a + w * (b - a))
}

/// Run a model under a current profile.
///
/// Current is sampled at the left edge of each step (zero-order hold);
/// parameters are refreshed from the previous step's storage voltage. The
/// run ends at the profile end, at a terminal-voltage cutoff, or when the
/// storage voltage leaves the characterized window.
pub fn simulate(
    model: &EcmModel,
    profile: &CurrentProfile,
    config: &SimConfig,
) -> Result<SimulationResult> {
    if !(config.timestep_s > 0.0) || !config.timestep_s.is_finite() {
        return Err(Error::Config(format!(
            "timestep must be positive, got {}",
            config.timestep_s
        )));
    }
    if config.refresh_every == 0 {
        return Err(Error::Config(
            "parameter refresh interval must be at least 1".into(),
        ));
    }
    if !(config.guard_band_v >= 0.0) {
        return Err(Error::Config(format!(
            "guard band must be non-negative, got {}",
            config.guard_band_v
        )));
    }
    let temp_c = config
        .temperature_c
        .or(profile.temperature_c)
        .ok_or_else(|| {
            Error::Config(
                "no temperature given by config or profile".into(),
            )
        })?;
    let [v_lo, v_hi] = model.voltage_limits;
    let cutoffs = config.cutoff_v.unwrap_or([v_lo, v_hi]);
    if !(cutoffs[0] < cutoffs[1]) {
        return Err(Error::Config(format!(
            "cutoff voltages [{}, {}] are not an interval",
            cutoffs[0], cutoffs[1]
        )));
    }

    let mut params = match config.initial {
        InitialState::Soc(s) => {
            parameters_at(model, OperatingPoint::Soc(s), temp_c)?
        }
        InitialState::Ocv(v) => {
            parameters_at(model, OperatingPoint::Ocv(v), temp_c)?
        }
    };
    let mut sp = expand(&params, model.structure.ladder_size)?;

    let mut notes = Vec::new();
    let min_tau = sp
        .branches
        .iter()
        .map(|b| b.tau)
        .fold(f64::INFINITY, f64::min);
    if config.timestep_s > min_tau / 2.0 {
        notes.push(format!(
            "timestep {} s is coarser than half the fastest branch \
             time constant ({:.3e} s); fast dynamics collapse to steps",
            config.timestep_s, min_tau
        ));
    }

    let ts = config.timestep_s;
    let n_steps = (profile.duration_s() / ts + 1e-9).floor() as usize;
    let mut state = SimState {
        time_s: 0.0,
        v_oc: params.ocv,
        branch_voltages: vec![0.0; sp.branches.len()],
    };

    let mut rows = Vec::with_capacity(n_steps + 1);
    let u0 = profile.current_at(0.0);
    rows.push(SimRow {
        time_s: 0.0,
        v_term_v: terminal_voltage(&state, &sp, u0),
        v_oc_v: state.v_oc,
        soc: params.soc,
        current_a: u0,
        temp_c,
    });

    let mut termination = Termination::ProfileEnd;
    for k in 1..=n_steps {
        if k > 1 && (k - 1) % config.refresh_every == 0 {
            let eval_v = state.v_oc.clamp(v_lo, v_hi);
            params = parameters_at(model, OperatingPoint::Ocv(eval_v), temp_c)
                .map_err(|e| {
                    Error::Pipeline(format!("at t = {} s: {e}", state.time_s))
                })?;
            sp = expand(&params, model.structure.ladder_size)?;
        }
        let u = profile.current_at(state.time_s);
        state = step(&state, &sp, u, ts);
        let v_term = terminal_voltage(&state, &sp, u);
        let soc = soc_from_ocv(model, state.v_oc, temp_c)?;
        rows.push(SimRow {
            time_s: state.time_s,
            v_term_v: v_term,
            v_oc_v: state.v_oc,
            soc,
            current_a: u,
            temp_c,
        });
        if v_term < cutoffs[0] || v_term > cutoffs[1] {
            termination = Termination::VoltageCutoff {
                time_s: state.time_s,
                voltage: v_term,
            };
            break;
        }
        if state.v_oc < v_lo - config.guard_band_v
            || state.v_oc > v_hi + config.guard_band_v
        {
            termination = Termination::SocBound {
                time_s: state.time_s,
            };
            break;
        }
    }
    Ok(SimulationResult {
        rows,
        termination,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecm::{
        CdTable, OcvTable, ParameterTrend, RcTrend, Structure,
        TemperatureEntry,
    };
    use crate::profile::ProfileSample;

    fn constant(value: f64) -> ParameterTrend {
        ParameterTrend::Linear {
            coefficients: [value, 0.0],
        }
    }

    /// One-temperature model with voltage-independent parameters and a
    /// linear OCV from 3.0 V (empty) to 4.2 V (full).
    fn flat_model(r_ohm: f64, r1: f64, c1: f64, r_d: f64, c_d: f64) -> EcmModel {
        EcmModel {
            schema_version: 1,
            structure: Structure {
                n_rc: 1,
                ladder_size: 5,
            },
            voltage_limits: [3.0, 4.2],
            temperatures: vec![TemperatureEntry {
                temp_c: 20.0,
                capacity_ah: 55.0,
                r_ohmic: constant(r_ohm),
                rc_branches: vec![RcTrend {
                    resistance: constant(r1),
                    capacitance: constant(c1),
                }],
                r_diffusion: constant(r_d),
                c_d_table: CdTable {
                    voltage_v: vec![3.0, 4.2],
                    capacitance_f: vec![c_d, c_d],
                },
                ocv_soc: OcvTable {
                    soc: vec![0.0, 1.0],
                    voltage_v: vec![3.0, 4.2],
                },
            }],
        }
    }

    fn constant_profile(current: f64, duration: f64, temp: f64) -> CurrentProfile {
        CurrentProfile::new(
            vec![
                ProfileSample {
                    time_s: 0.0,
                    current_a: current,
                },
                ProfileSample {
                    time_s: duration,
                    current_a: 0.0,
                },
            ],
            Some(temp),
        )
        .unwrap()
    }

    #[test]
    fn branch_decay_follows_the_exact_exponential() {
        let sp = StepParams {
            r_ohmic: 0.0,
            branches: vec![RcElement {
                resistance: 0.01,
                capacitance: 100.0,
                tau: 1.0,
            }],
            c_storage: 1e12,
        };
        let mut state = SimState {
            time_s: 0.0,
            v_oc: 3.7,
            branch_voltages: vec![0.5],
        };
        let ts = 0.125;
        for k in 1..=40 {
            state = step(&state, &sp, 0.0, ts);
            let expect = 0.5 * (-(k as f64) * ts).exp();
            assert!(
                (state.branch_voltages[0] - expect).abs() < 1e-12 * expect.max(1e-30),
                "k = {k}"
            );
        }
    }

    #[test]
    fn branch_approaches_ir_steady_state() {
        let sp = StepParams {
            r_ohmic: 0.0,
            branches: vec![RcElement {
                resistance: 0.01,
                capacitance: 100.0,
                tau: 1.0,
            }],
            c_storage: 1e12,
        };
        let mut state = SimState {
            time_s: 0.0,
            v_oc: 3.7,
            branch_voltages: vec![0.0],
        };
        for _ in 0..120 {
            state = step(&state, &sp, 2.0, 0.5);
        }
        assert!((state.branch_voltages[0] - 0.02).abs() < 1e-10);
    }

    #[test]
    fn storage_integration_is_bit_exact_for_dyadic_values() {
        let sp = StepParams {
            r_ohmic: 0.0,
            branches: vec![],
            c_storage: 1024.0,
        };
        let mut state = SimState {
            time_s: 0.0,
            v_oc: 3.5,
            branch_voltages: vec![],
        };
        for _ in 0..128 {
            state = step(&state, &sp, 0.5, 1.0);
        }
        for _ in 0..64 {
            state = step(&state, &sp, -0.25, 1.0);
        }
        // (128·0.5 − 64·0.25) / 1024 = 48/1024; every term is dyadic.
        assert_eq!(state.v_oc, 3.5 + 48.0 / 1024.0);
    }

    #[test]
    fn zero_current_holds_the_open_circuit_voltage() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e5);
        let profile = constant_profile(0.0, 600.0, 20.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.5),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        assert_eq!(out.termination, Termination::ProfileEnd);
        assert_eq!(out.rows.len(), 601);
        for row in &out.rows {
            assert_eq!(row.v_term_v, row.v_oc_v);
            assert!((row.v_oc_v - 3.6).abs() < 1e-12);
            assert!((row.soc - 0.5).abs() < 1e-12);
            assert_eq!(row.current_a, 0.0);
        }
    }

    #[test]
    fn single_rc_step_response_matches_the_closed_form() {
        // Diffusion shrunk to irrelevance; huge storage keeps OCV frozen.
        let (r_ohm, r1, c1) = (1e-3, 2e-3, 500.0);
        let model = flat_model(r_ohm, r1, c1, 1e-15, 1e15);
        let u = -5.0;
        let profile = constant_profile(u, 10.0, 20.0);
        let config = SimConfig {
            timestep_s: 0.25,
            initial: InitialState::Soc(0.5),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        assert_eq!(out.rows.len(), 41);
        let tau = r1 * c1;
        for row in &out.rows[1..] {
            let expect =
                3.6 + u * r_ohm + u * r1 * (1.0 - (-row.time_s / tau).exp());
            assert!(
                (row.v_term_v - expect).abs() < 1e-11,
                "t = {}: {} vs {expect}",
                row.time_s,
                row.v_term_v
            );
        }
    }

    #[test]
    fn charge_bookkeeping_telescopes_exactly() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1024.0);
        let samples = vec![
            ProfileSample { time_s: 0.0, current_a: 0.5 },
            ProfileSample { time_s: 128.0, current_a: -0.25 },
            ProfileSample { time_s: 192.0, current_a: 0.0 },
        ];
        let profile = CurrentProfile::new(samples, Some(20.0)).unwrap();
        let config = SimConfig {
            initial: InitialState::Ocv(3.5),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        assert_eq!(out.termination, Termination::ProfileEnd);
        let v_end = out.rows.last().unwrap().v_oc_v;
        assert_eq!(v_end, 3.5 + 48.0 / 1024.0);
    }

    #[test]
    fn discharge_hits_the_low_voltage_cutoff() {
        // Small storage so the OCV actually moves within seconds.
        let model = flat_model(0.01, 2e-3, 50.0, 1e-4, 1000.0);
        let profile = constant_profile(-5.0, 600.0, 20.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.5),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        match out.termination {
            Termination::VoltageCutoff { time_s, voltage } => {
                assert!(time_s < 600.0);
                assert!(voltage < 3.0);
                assert_eq!(out.rows.last().unwrap().time_s, time_s);
            }
            other => panic!("expected voltage cutoff, got {other:?}"),
        }
    }

    #[test]
    fn storage_leaving_the_window_halts_with_a_bound_event() {
        let model = flat_model(0.01, 2e-3, 50.0, 1e-4, 1000.0);
        let profile = constant_profile(5.0, 600.0, 20.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.5),
            // Cutoffs out of the way so the storage bound fires first.
            cutoff_v: Some([2.0, 5.0]),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        match out.termination {
            Termination::SocBound { time_s } => assert!(time_s < 600.0),
            other => panic!("expected storage bound, got {other:?}"),
        }
        let last = out.rows.last().unwrap();
        assert!(last.v_oc_v > 4.2 + 0.02);
        assert!((last.soc - 1.0).abs() < 1e-9); // clamped inverse lookup
    }

    #[test]
    fn response_is_linear_at_frozen_parameters() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-15, 1e15);
        let config = SimConfig {
            initial: InitialState::Ocv(3.6),
            ..SimConfig::default()
        };
        let p1 = constant_profile(-2.0, 100.0, 20.0);
        let p2 = constant_profile(-4.0, 100.0, 20.0);
        let out1 = simulate(&model, &p1, &config).unwrap();
        let out2 = simulate(&model, &p2, &config).unwrap();
        for (a, b) in out1.rows.iter().zip(&out2.rows) {
            let da = a.v_term_v - 3.6;
            let db = b.v_term_v - 3.6;
            assert!((db - 2.0 * da).abs() < 1e-12, "t = {}", a.time_s);
        }
    }

    #[test]
    fn branches_relax_after_rest() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e6);
        // 10 s pulse, then rest for 20x the slowest time constant (1 s).
        let samples = vec![
            ProfileSample { time_s: 0.0, current_a: -5.0 },
            ProfileSample { time_s: 10.0, current_a: 0.0 },
            ProfileSample { time_s: 40.0, current_a: 0.0 },
        ];
        let profile = CurrentProfile::new(samples, Some(20.0)).unwrap();
        let config = SimConfig {
            timestep_s: 0.5,
            initial: InitialState::Soc(0.5),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        let last = out.rows.last().unwrap();
        // Polarization = terminal minus storage voltage; at rest the ohmic
        // term is zero so only branch voltages remain.
        let pulse_pol = 5.0 * 3e-3;
        assert!(
            (last.v_term_v - last.v_oc_v).abs() < 1e-6 * pulse_pol,
            "residual polarization {}",
            last.v_term_v - last.v_oc_v
        );
    }

    #[test]
    fn coarse_timestep_is_flagged() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e5);
        let profile = constant_profile(-1.0, 60.0, 20.0);
        let coarse = SimConfig {
            timestep_s: 1.0,
            initial: InitialState::Soc(0.5),
            ..SimConfig::default()
        };
        // Fastest branch: fifth ladder rung, tau = 3·r_d·c_d/(25π²) ≈ 1.2 s.
        let out = simulate(&model, &profile, &coarse).unwrap();
        assert!(out.notes.iter().any(|n| n.contains("timestep")));
        let fine = SimConfig {
            timestep_s: 0.5,
            ..coarse
        };
        let out = simulate(&model, &profile, &fine).unwrap();
        assert!(out.notes.is_empty());
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        let profile = constant_profile(-5.0, 300.0, 20.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.8),
            ..SimConfig::default()
        };
        let a = simulate(&model, &profile, &config).unwrap();
        let b = simulate(&model, &profile, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_soc_and_ocv_forms_agree() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        let profile = constant_profile(-5.0, 60.0, 20.0);
        let by_soc = SimConfig {
            initial: InitialState::Soc(0.7),
            ..SimConfig::default()
        };
        let by_ocv = SimConfig {
            initial: InitialState::Ocv(3.0 + 1.2 * 0.7),
            ..SimConfig::default()
        };
        let a = simulate(&model, &profile, &by_soc).unwrap();
        let b = simulate(&model, &profile, &by_ocv).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.v_term_v - y.v_term_v).abs() < 1e-12);
        }
    }

    #[test]
    fn refresh_interval_is_irrelevant_for_flat_trends() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        let profile = constant_profile(-5.0, 120.0, 20.0);
        let every = SimConfig {
            initial: InitialState::Soc(0.8),
            ..SimConfig::default()
        };
        let sparse = SimConfig {
            refresh_every: 7,
            ..every.clone()
        };
        let a = simulate(&model, &profile, &every).unwrap();
        let b = simulate(&model, &profile, &sparse).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn temperature_outside_the_model_is_refused() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        let profile = constant_profile(-5.0, 60.0, 40.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.8),
            ..SimConfig::default()
        };
        let err = simulate(&model, &profile, &config).unwrap_err();
        assert!(matches!(err, Error::TemperatureRange { .. }), "{err}");
    }

    #[test]
    fn soc_from_ocv_inverts_the_table() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        assert!((soc_from_ocv(&model, 3.0, 20.0).unwrap() - 0.0).abs() < 1e-12);
        assert!((soc_from_ocv(&model, 4.2, 20.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((soc_from_ocv(&model, 3.6, 20.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(soc_from_ocv(&model, 3.6, 40.0).is_err());
    }

    #[test]
    fn csv_round_trips_through_the_series_parser() {
        let model = flat_model(1e-3, 2e-3, 500.0, 1e-3, 1e4);
        let profile = constant_profile(-5.0, 30.0, 20.0);
        let config = SimConfig {
            initial: InitialState::Soc(0.8),
            ..SimConfig::default()
        };
        let out = simulate(&model, &profile, &config).unwrap();
        let series = parse_voltage_series(&out.to_csv()).unwrap();
        assert_eq!(series.len(), out.rows.len());
        for (s, r) in series.iter().zip(&out.rows) {
            assert_eq!(s.0, r.time_s);
            assert_eq!(s.1, r.v_term_v);
        }
    }
}
