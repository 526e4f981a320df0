//! Log-spaced relaxation-time grids.

use crate::spectrum::ImpedanceSpectrum;
use crate::{Error, Result};

pub const DEFAULT_POINTS_PER_DECADE: usize = 10;
pub const DEFAULT_EXTENSION_DECADES: (u32, u32) = (2, 2);

/// Discretization support for the relaxation-time distribution: uniform in
/// log10 τ, covering the measured window [1/ω_max, 1/ω_min] plus a number of
/// extension decades on each side so that mass just outside the window can
/// still be represented.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    tau_values: Vec<f64>,
    pub points_per_decade: usize,
    pub extension_decades: (u32, u32),
}

pub fn build_tau_grid(
    spectrum: &ImpedanceSpectrum,
    points_per_decade: usize,
    extension_decades: (u32, u32),
) -> Result<TauGrid> {
    if points_per_decade < 3 {
        return Err(Error::Config(format!(
            "points_per_decade is {points_per_decade}, need at least 3"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let lo = (1.0 / (two_pi * spectrum.f_max())).log10()
        - extension_decades.0 as f64;
    let hi = (1.0 / (two_pi * spectrum.f_min())).log10()
        + extension_decades.1 as f64;
    let span = hi - lo;
    // Inclusive endpoints; the epsilon keeps exact decade spans from picking
    // up a spurious extra point.
    let n = (span * points_per_decade as f64 - 1e-9).ceil() as usize + 1;
    let tau_values = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            10f64.powf(lo + t * span)
        })
        .collect();
    Ok(TauGrid {
        tau_values,
        points_per_decade,
        extension_decades,
    })
}

impl TauGrid {
    pub fn tau_values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn len(&self) -> usize {
        self.tau_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_values.is_empty()
    }

    /// Natural-log positions of the grid points; the solver's working
    /// coordinate.
    pub fn ln_taus(&self) -> Vec<f64> {
        self.tau_values.iter().map(|t| t.ln()).collect()
    }

    /// Natural-log spacing between adjacent points.
    pub fn step_ln(&self) -> f64 {
        (self.tau_values[1] / self.tau_values[0]).ln()
    }
}
