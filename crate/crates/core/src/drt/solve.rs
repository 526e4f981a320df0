//! Regularized non-negative solve of the assembled system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::drt::system::{basis_mass, DrtSystem};
use crate::numeric::nnls::nnls;
use crate::{Error, Result};

/// Deconvolution output on the τ grid.
///
/// `gamma` is the distribution as a density in natural-log τ: its trapezoid
/// integral over ln τ is the polarization resistance, and the area under one
/// peak is that process's resistance.
#[derive(Debug, Clone)]
pub struct DrtResult {
    pub tau_s: Vec<f64>,
    /// Ω per unit ln τ, non-negative elementwise.
    pub gamma: Vec<f64>,
    /// Raw non-negative basis weights the solver produced.
    pub coefficients: Vec<f64>,
    pub r_ohmic: f64,
    /// Trapezoid integral of gamma over ln τ.
    pub r_pol: f64,
    pub lambda: f64,
    /// Data misfit ‖Ax − b‖ over the stacked real/imaginary rows.
    pub residual_norm: f64,
    /// Smoothness penalty value xᵀMx.
    pub penalty_value: f64,
    /// (frequency, impedance) of the model on the measured grid, including
    /// the ohmic resistance.
    pub reconstruction: Vec<(f64, Complex64)>,
    pub iterations: usize,
}

const KKT_REL_TOL: f64 = 1e-10;

pub fn solve_regularized(system: &DrtSystem, lambda: f64) -> Result<DrtResult> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Config(format!(
            "regularization strength must be finite and non-negative, got {lambda}"
        )));
    }
    let rows_data = system.matrix_a.nrows();
    let n = system.matrix_a.ncols();
    let rows_pen = system.penalty_root.nrows();

    // Augment: minimizing ‖Ax−b‖² + λ‖D₂x‖² over x ≥ 0 is the plain
    // non-negative least squares of the stacked system.
    let mut aug = DMatrix::zeros(rows_data + rows_pen, n);
    aug.view_mut((0, 0), (rows_data, n))
        .copy_from(&system.matrix_a);
    if lambda > 0.0 {
        let sq = lambda.sqrt();
        for r in 0..rows_pen {
            for c in 0..n {
                aug[(rows_data + r, c)] = sq * system.penalty_root[(r, c)];
            }
        }
    }
    let mut rhs = DVector::zeros(rows_data + rows_pen);
    rhs.rows_mut(0, rows_data).copy_from(&system.rhs_b);

    // Column scaling to unit norm; the solution is unscaled afterward and
    // the objective is unchanged.
    let mut scale = vec![1.0; n];
    for c in 0..n {
        let norm = aug.column(c).norm();
        if norm > 0.0 {
            scale[c] = norm;
            for r in 0..aug.nrows() {
                aug[(r, c)] /= norm;
            }
        }
    }

    let outcome = nnls(&aug, &rhs, KKT_REL_TOL);
    let x = DVector::from_fn(n, |i, _| outcome.x[i] / scale[i]);
    let result = package(system, lambda, &x, outcome.iterations);
    if !outcome.converged {
        return Err(Error::Convergence {
            message: format!(
                "non-negative solve hit the iteration cap ({} iterations)",
                outcome.iterations
            ),
            best: Some(Box::new(result)),
        });
    }
    Ok(result)
}

fn package(
    system: &DrtSystem,
    lambda: f64,
    x: &DVector<f64>,
    iterations: usize,
) -> DrtResult {
    let n = x.len();
    let m = system.omegas.len();
    let mass = basis_mass(system.rbf_shape);
    let step = system.grid.step_ln();
    // Basis weight -> density per ln τ: each weight carries `mass` ohms
    // spread over one grid cell.
    let gamma: Vec<f64> = (0..n).map(|k| x[k] * mass / step).collect();
    let ln_taus = system.grid.ln_taus();
    let r_pol = crate::numeric::trapezoid(&ln_taus, &gamma);

    let fit = &system.matrix_a * x;
    let residual_norm = (&fit - &system.rhs_b).norm();
    let penalty_value = (&system.penalty_root * x).norm_squared();
    let two_pi = 2.0 * std::f64::consts::PI;
    let reconstruction = (0..m)
        .map(|i| {
            (
                system.omegas[i] / two_pi,
                Complex64::new(system.r_ohmic + fit[i], fit[m + i]),
            )
        })
        .collect();

    DrtResult {
        tau_s: system.grid.tau_values().to_vec(),
        gamma,
        coefficients: x.iter().copied().collect(),
        r_ohmic: system.r_ohmic,
        r_pol,
        lambda,
        residual_norm,
        penalty_value,
        reconstruction,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drt::grid::build_tau_grid;
    use crate::drt::system::{assemble_system, default_rbf_shape};
    use crate::spectrum::{ImpedancePoint, ImpedanceSpectrum};

    fn rc_spectrum(r0: f64, rcs: &[(f64, f64)]) -> ImpedanceSpectrum {
        let points = (0..61)
            .map(|i| {
                let f = 10f64.powf(-2.0 + 6.0 * i as f64 / 60.0);
                let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
                let mut z = Complex64::new(r0, 0.0);
                for &(r, tau) in rcs {
                    z += r / (1.0 + jw * tau);
                }
                ImpedancePoint {
                    freq_hz: f,
                    z_re: z.re,
                    z_im: z.im,
                }
            })
            .collect();
        ImpedanceSpectrum::new(points, None, None, None).unwrap()
    }

    fn system_for(spectrum: &ImpedanceSpectrum, r_ohmic: f64) -> DrtSystem {
        let grid = build_tau_grid(spectrum, 10, (2, 2)).unwrap();
        assemble_system(spectrum, &grid, default_rbf_shape(&grid), r_ohmic).unwrap()
    }

    #[test]
    fn zero_rhs_gives_exactly_zero() {
        let s = rc_spectrum(0.7, &[]);
        let sys = system_for(&s, 0.7);
        let r = solve_regularized(&sys, 1e-5).unwrap();
        assert!(r.gamma.iter().all(|&g| g == 0.0));
        assert_eq!(r.r_pol, 0.0);
        assert_eq!(r.residual_norm, 0.0);
    }

    #[test]
    fn single_rc_mass_is_recovered() {
        let s = rc_spectrum(0.0, &[(1e-3, 0.01)]);
        let sys = system_for(&s, 0.0);
        let r = solve_regularized(&sys, 1e-5).unwrap();
        assert!(r.gamma.iter().all(|&g| g >= 0.0));
        assert!(
            (r.r_pol - 1e-3).abs() / 1e-3 < 0.02,
            "r_pol = {} Ω",
            r.r_pol
        );
        // The distribution concentrates at the true time constant.
        let peak_idx = (0..r.gamma.len())
            .max_by(|&a, &b| r.gamma[a].total_cmp(&r.gamma[b]))
            .unwrap();
        let dist = (r.tau_s[peak_idx] / 0.01_f64).ln().abs();
        assert!(
            dist <= 0.5 * sys.grid.step_ln() + 1e-12,
            "peak at {} s",
            r.tau_s[peak_idx]
        );
    }

    #[test]
    fn two_rc_system_reproduces_the_data() {
        let s = rc_spectrum(0.1, &[(0.5, 1e-3), (0.8, 0.5)]);
        let sys = system_for(&s, 0.1);
        let r = solve_regularized(&sys, 1e-5).unwrap();
        // Two ideal RC arcs are delta distributions; the smoothed basis fits
        // them to a few tenths of a percent at the working penalty weight
        // (the discretization floor itself sits near 4e-4).
        let rel = r.residual_norm / sys.rhs_b.norm();
        assert!(rel < 1e-2, "relative residual {rel}");
    }

    #[test]
    fn reconstruction_is_self_consistent() {
        let s = rc_spectrum(0.1, &[(0.5, 1e-3), (0.8, 0.5)]);
        let sys = system_for(&s, 0.1);
        let r = solve_regularized(&sys, 1e-5).unwrap();
        let x = DVector::from_vec(r.coefficients.clone());
        let fit = &sys.matrix_a * &x;
        let m = sys.omegas.len();
        for (i, &(f, z)) in r.reconstruction.iter().enumerate() {
            let expected = Complex64::new(0.1 + fit[i], fit[m + i]);
            assert!((z - expected).norm() < 1e-12);
            assert!((f - sys.omegas[i] / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_grows_with_regularization() {
        let s = rc_spectrum(0.0, &[(0.5, 1e-3), (0.8, 0.5)]);
        let sys = system_for(&s, 0.0);
        let mut prev = -1.0;
        for &lambda in &[1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e6] {
            let r = solve_regularized(&sys, lambda).unwrap();
            let slack = 1e-12 * sys.rhs_b.norm();
            assert!(
                r.residual_norm + slack >= prev,
                "residual fell from {prev} to {} at λ = {lambda}",
                r.residual_norm
            );
            prev = r.residual_norm;
        }
    }

    #[test]
    fn scaling_the_data_scales_the_distribution() {
        let s = rc_spectrum(0.0, &[(0.5, 1e-3), (0.8, 0.5)]);
        let sys = system_for(&s, 0.0);
        let base = solve_regularized(&sys, 1e-5).unwrap();

        let c = 1000.0;
        let scaled_points = s
            .points()
            .iter()
            .map(|p| ImpedancePoint {
                freq_hz: p.freq_hz,
                z_re: p.z_re * c,
                z_im: p.z_im * c,
            })
            .collect();
        let s2 = s.with_points(scaled_points).unwrap();
        let sys2 = system_for(&s2, 0.0);
        let scaled = solve_regularized(&sys2, 1e-5).unwrap();

        let norm: f64 = base.gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
        for (g1, g2) in base.gamma.iter().zip(&scaled.gamma) {
            assert!(
                (g2 - c * g1).abs() <= 1e-8 * c * norm,
                "gamma mismatch: {g2} vs {}",
                c * g1
            );
        }
        assert!((scaled.r_pol - c * base.r_pol).abs() / (c * base.r_pol) < 1e-8);
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let s = rc_spectrum(0.0, &[(0.5, 1e-3)]);
        let sys = system_for(&s, 0.0);
        assert!(matches!(
            solve_regularized(&sys, -1.0),
            Err(Error::Config(_))
        ));
    }
}
