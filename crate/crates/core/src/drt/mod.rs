//! Distribution of relaxation times: turns a validated impedance spectrum
//! into a non-negative density over log time constants.
//!
//! The measured impedance is modelled as an ohmic resistance plus a
//! continuum of RC relaxations,
//! `Z(ω) = R_ohm + ∫ γ(ln τ) / (1 + jωτ) d ln τ`,
//! discretized with Gaussian basis functions on a log-spaced τ grid and
//! solved as a smoothness-regularized non-negative least-squares problem.

pub mod grid;
pub mod lcurve;
pub mod solve;
pub mod system;

pub use grid::{build_tau_grid, TauGrid};
pub use lcurve::{default_lambda_grid, select_lambda_lcurve, LcurveOutcome};
pub use solve::{solve_regularized, DrtResult};
pub use system::{assemble_system, basis_mass, default_rbf_shape, DrtSystem};

use crate::kk::{is_valid, kk_fit};
use crate::preprocess::extract_r_ohmic;
use crate::spectrum::ImpedanceSpectrum;
use crate::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSelection {
    Fixed(f64),
    /// Pick λ at the corner of the L-curve over the configured grid.
    LCurve,
}

impl Default for LambdaSelection {
    fn default() -> Self {
        LambdaSelection::Fixed(DEFAULT_LAMBDA)
    }
}

#[derive(Debug, Clone)]
pub struct DrtConfig {
    pub lambda: LambdaSelection,
    pub points_per_decade: usize,
    pub extension_decades: (u32, u32),
    /// Basis shape factor μ; `None` applies the width rule tied to the grid
    /// spacing.
    pub rbf_shape: Option<f64>,
    pub kk_threshold: f64,
    pub kk_elements_per_decade: usize,
    /// Run without the consistency gate. For data already validated
    /// elsewhere.
    pub skip_kk: bool,
    /// Accept spectra with significant inductive content instead of
    /// demanding prior correction.
    pub allow_inductive: bool,
    /// λ values scanned in L-curve mode; `None` uses the default grid.
    pub lambda_grid: Option<Vec<f64>>,
}

impl Default for DrtConfig {
    fn default() -> Self {
        Self {
            lambda: LambdaSelection::default(),
            points_per_decade: grid::DEFAULT_POINTS_PER_DECADE,
            extension_decades: grid::DEFAULT_EXTENSION_DECADES,
            rbf_shape: None,
            kk_threshold: crate::kk::DEFAULT_KK_THRESHOLD,
            kk_elements_per_decade: crate::kk::DEFAULT_ELEMENTS_PER_DECADE,
            skip_kk: false,
            allow_inductive: false,
            lambda_grid: None,
        }
    }
}

/// Full single-spectrum analysis: consistency gate, ohmic extraction, grid
/// and system assembly, λ choice, constrained solve.
pub fn compute_drt(
    spectrum: &ImpedanceSpectrum,
    config: &DrtConfig,
) -> Result<DrtResult> {
    if !config.skip_kk {
        let report = kk_fit(spectrum, config.kk_elements_per_decade)?;
        if !is_valid(&report, config.kk_threshold) {
            return Err(Error::KkFailed {
                max_residual: report.max_abs_residual,
                threshold: config.kk_threshold,
            });
        }
    }
    if !config.allow_inductive && !spectrum.preprocessed {
        // The basis is purely capacitive; an uncorrected inductive branch
        // cannot be represented and would distort the whole fit.
        let worst = spectrum
            .points()
            .iter()
            .map(|p| p.z_im.max(0.0) / p.z().norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst > 0.01 {
            return Err(Error::Validation(format!(
                "spectrum has inductive content ({:.1}% of |Z| at worst); \
                 correct the inductance first or allow it explicitly",
                worst * 100.0
            )));
        }
    }

    let r_ohmic = extract_r_ohmic(spectrum)?.r_ohmic;
    let grid = build_tau_grid(
        spectrum,
        config.points_per_decade,
        config.extension_decades,
    )?;
    let shape = config.rbf_shape.unwrap_or_else(|| default_rbf_shape(&grid));
    let system = assemble_system(spectrum, &grid, shape, r_ohmic)?;
    let lambda = match config.lambda {
        LambdaSelection::Fixed(v) => v,
        LambdaSelection::LCurve => {
            let grid_values = config
                .lambda_grid
                .clone()
                .unwrap_or_else(default_lambda_grid);
            select_lambda_lcurve(&system, &grid_values)?.lambda
        }
    };
    solve_regularized(&system, lambda)
}
