//! Discretization of the deconvolution problem: Gaussian radial basis
//! functions on the log-τ grid, convolved with the RC kernel by quadrature.

use nalgebra::{DMatrix, DVector};

use crate::drt::grid::TauGrid;
use crate::numeric::GL10;
use crate::spectrum::ImpedanceSpectrum;
use crate::{Error, Result};

/// Shape factor from the width rule: the basis function's full width at half
/// maximum is half the grid spacing.
pub const FWHM_GRID_FRACTION: f64 = 0.5;

pub fn default_rbf_shape(grid: &TauGrid) -> f64 {
    let fwhm = FWHM_GRID_FRACTION * grid.step_ln();
    2.0 * (2f64.ln()).sqrt() / fwhm
}

/// Integral of one basis function over log τ. Converts basis weights into
/// resistance: a weight x_k contributes x_k times this mass to the total
/// polarization resistance.
pub fn basis_mass(rbf_shape: f64) -> f64 {
    std::f64::consts::PI.sqrt() / rbf_shape
}

#[derive(Debug, Clone)]
pub struct DrtSystem {
    /// 2m × n: response of each basis function at each frequency, real rows
    /// stacked above imaginary rows.
    pub matrix_a: DMatrix<f64>,
    /// Measured impedance minus the ohmic resistance, real over imaginary.
    pub rhs_b: DVector<f64>,
    /// Second-derivative smoothness form, symmetric positive semidefinite.
    pub penalty_m: DMatrix<f64>,
    /// Second-difference operator with ‖D₂x‖² = xᵀ penalty_m x; the solver
    /// augments with this square root instead of factoring penalty_m.
    pub(crate) penalty_root: DMatrix<f64>,
    pub rbf_shape: f64,
    pub grid: TauGrid,
    /// Angular frequencies of the measured points, spectrum order.
    pub omegas: Vec<f64>,
    pub r_ohmic: f64,
}

/// Plain second-difference stencil rows; end rows reuse the one-sided
/// difference at the boundary. Annihilates anything linear in log τ.
fn second_difference(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let c = i.clamp(1, n - 2);
        d[(i, c - 1)] = 1.0;
        d[(i, c)] = -2.0;
        d[(i, c + 1)] = 1.0;
    }
    d
}

pub fn assemble_system(
    spectrum: &ImpedanceSpectrum,
    grid: &TauGrid,
    rbf_shape: f64,
    r_ohmic: f64,
) -> Result<DrtSystem> {
    if !(rbf_shape > 0.0) || !rbf_shape.is_finite() {
        return Err(Error::Config(format!(
            "basis shape factor must be positive and finite, got {rbf_shape}"
        )));
    }
    let m = spectrum.len();
    let n = grid.len();
    let mu = rbf_shape;
    let ln_taus = grid.ln_taus();

    // Each basis function is integrated over the window where it is
    // nonzero to double precision: |y| <= sqrt(45)/mu, i.e. down to e^-45.
    // Five Gauss-Legendre panels resolve the Gaussian regardless of mu.
    let half_width = 45f64.sqrt() / mu;
    const PANELS: usize = 5;
    let panel_w = 2.0 * half_width / PANELS as f64;
    // Per basis function: quadrature offsets y_q and weights w_q·Φ(y_q).
    let mut offsets = Vec::with_capacity(PANELS * GL10.len());
    let mut weights = Vec::with_capacity(PANELS * GL10.len());
    for p in 0..PANELS {
        let a = -half_width + p as f64 * panel_w;
        let mid = a + 0.5 * panel_w;
        for &(node, w) in &GL10 {
            let y = mid + 0.5 * panel_w * node;
            offsets.push(y);
            weights.push(0.5 * panel_w * w * (-(mu * y) * (mu * y)).exp());
        }
    }

    let mut matrix_a = DMatrix::zeros(2 * m, n);
    for (k, &u_k) in ln_taus.iter().enumerate() {
        // τ at each quadrature node for this basis function.
        let taus_q: Vec<f64> = offsets.iter().map(|y| (u_k + y).exp()).collect();
        for (i, p) in spectrum.points().iter().enumerate() {
            let w_i = p.omega();
            let mut re = 0.0;
            let mut im = 0.0;
            for (q, &tau) in taus_q.iter().enumerate() {
                let wt = w_i * tau;
                let denom = 1.0 + wt * wt;
                re += weights[q] / denom;
                im -= weights[q] * wt / denom;
            }
            matrix_a[(i, k)] = re;
            matrix_a[(m + i, k)] = im;
        }
    }

    let mut rhs_b = DVector::zeros(2 * m);
    for (i, p) in spectrum.points().iter().enumerate() {
        rhs_b[i] = p.z_re - r_ohmic;
        rhs_b[m + i] = p.z_im;
    }

    let penalty_root = second_difference(n);
    let penalty_m = penalty_root.transpose() * &penalty_root;

    Ok(DrtSystem {
        matrix_a,
        rhs_b,
        penalty_m,
        penalty_root,
        rbf_shape: mu,
        grid: grid.clone(),
        omegas: spectrum.points().iter().map(|p| p.omega()).collect(),
        r_ohmic,
    })
}
