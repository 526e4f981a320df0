//! Regularization-strength selection by the corner of the L-curve.

use rayon::prelude::*;

use crate::drt::solve::solve_regularized;
use crate::drt::system::DrtSystem;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LcurveOutcome {
    pub lambda: f64,
    /// One point per grid value, ascending λ:
    /// (log10 ‖Ax−b‖, log10 √(xᵀMx)).
    pub curve: Vec<(f64, f64)>,
    /// Set when the penalty vanished everywhere and the smallest λ was
    /// returned as a fallback.
    pub degenerate: bool,
}

/// Log-spaced default grid: 17 values from 1e-8 to 1.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..17).map(|i| 10f64.powf(-8.0 + 0.5 * i as f64)).collect()
}

/// Solves along the grid and picks the λ of maximum curvature of the
/// (log residual, log penalty) curve, parameterized by log λ. Ties break
/// toward stronger smoothing.
pub fn select_lambda_lcurve(
    system: &DrtSystem,
    lambda_grid: &[f64],
) -> Result<LcurveOutcome> {
    let mut grid: Vec<f64> = lambda_grid.to_vec();
    if grid.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::Config(
            "λ grid values must be positive and finite".into(),
        ));
    }
    grid.sort_by(f64::total_cmp);
    if grid.len() < 8 {
        return Err(Error::Config(format!(
            "λ grid has {} values, need at least 8",
            grid.len()
        )));
    }
    let decades = (grid[grid.len() - 1] / grid[0]).log10();
    if decades < 4.0 - 1e-9 {
        return Err(Error::Config(format!(
            "λ grid spans {decades:.2} decades, need at least 4"
        )));
    }

    let solutions: Vec<_> = grid
        .par_iter()
        .map(|&lambda| solve_regularized(system, lambda))
        .collect::<Result<_>>()?;

    let max_penalty = solutions
        .iter()
        .map(|s| s.penalty_value)
        .fold(0.0, f64::max);
    if max_penalty <= 0.0 {
        // Nothing to trade off: every solve is penalty-free. Report the
        // residual branch of the curve with the penalty marked absent.
        let curve = solutions
            .iter()
            .map(|s| {
                (
                    s.residual_norm.max(f64::MIN_POSITIVE).log10(),
                    f64::NEG_INFINITY,
                )
            })
            .collect();
        return Ok(LcurveOutcome {
            lambda: grid[0],
            curve,
            degenerate: true,
        });
    }

    // Floors keep log10 finite when a solve fits exactly or smooths to a
    // straight line; such points sit far from the corner anyway.
    let res_floor = solutions
        .iter()
        .map(|s| s.residual_norm)
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min)
        * 1e-3;
    let pen_floor = max_penalty * 1e-30;
    let curve: Vec<(f64, f64)> = solutions
        .iter()
        .map(|s| {
            (
                s.residual_norm.max(res_floor).log10(),
                s.penalty_value.max(pen_floor).sqrt().log10(),
            )
        })
        .collect();

    // Three-point finite differences in t = log10 λ (uniform enough for a
    // corner search; spacing taken per-interval for safety).
    let k = grid.len();
    let mut best_idx = 0usize;
    let mut best_kappa = f64::NEG_INFINITY;
    for i in 1..k - 1 {
        let h1 = (grid[i] / grid[i - 1]).log10();
        let h2 = (grid[i + 1] / grid[i]).log10();
        let d = |f: &dyn Fn(usize) -> f64| {
            let first = (f(i + 1) - f(i - 1)) / (h1 + h2);
            let second =
                2.0 * (h1 * f(i + 1) - (h1 + h2) * f(i) + h2 * f(i - 1))
                    / (h1 * h2 * (h1 + h2));
            (first, second)
        };
        let (xp, xpp) = d(&|j| curve[j].0);
        let (yp, ypp) = d(&|j| curve[j].1);
        let denom = (xp * xp + yp * yp).powf(1.5);
        if denom == 0.0 {
            continue;
        }
        // With residual rising and penalty falling along λ, the corner bends
        // the curve clockwise: x'y'' − y'x'' is most negative there.
        let kappa = -(xp * ypp - yp * xpp) / denom;
        if kappa >= best_kappa {
            best_kappa = kappa;
            best_idx = i;
        }
    }

    Ok(LcurveOutcome {
        lambda: grid[best_idx],
        curve,
        degenerate: false,
    })
}
